#pragma once

#include <istream>
#include <string>
#include <vector>

#include "ciu/models.hpp"
#include "ciu/types.hpp"

namespace ciu {

/// Integer codes assigned to a text column: code k stands for labels[k].
struct CategoryEncoding {
  std::string column;
  std::vector<std::string> labels;
};

struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<std::string> target_names;
  Matrix features;
  Matrix targets;
  /// True when the target was a class column expanded to one-hot outputs.
  bool classification = false;
  std::vector<std::size_t> categorical_features;
  std::vector<CategoryEncoding> encodings;

  std::size_t rows() const { return features.rows(); }

  /// Ranges from the data min/max; categorical features list their distinct values.
  std::vector<InputDescriptor> input_descriptors() const;
  /// Classification outputs get [0, 1]; regression outputs the target min/max.
  std::vector<OutputDescriptor> output_descriptors() const;
  TrainingSet training_set() const { return {features, targets}; }
};

/// Splits comma-separated text with one header row. Quoted fields may hold
/// commas, doubled quotes and line breaks.
std::vector<std::vector<std::string>> read_csv_records(std::istream& in);

/// `target_columns` name the outputs. A text target column becomes one
/// one-hot output per class (classes sorted). Text feature columns must be
/// listed in `categorical_columns` and are integer-encoded.
Dataset parse_csv(std::istream& in, const std::vector<std::string>& target_columns,
                  const std::vector<std::string>& categorical_columns = {});
Dataset load_csv(const std::string& path, const std::vector<std::string>& target_columns,
                 const std::vector<std::string>& categorical_columns = {});

}  // namespace ciu
