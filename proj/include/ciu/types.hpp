#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ciu {

/// Raised for every contract violation inside the library.
class CiuError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles. Rows are input (or output) vectors.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void append_row(std::span<const double> values);
  std::vector<double> column(std::size_t c) const;

  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// The explained black box: a deterministic map from an input vector to an
/// output vector. Implementations must not keep state between calls.
class BlackBoxModel {
 public:
  virtual ~BlackBoxModel() = default;

  virtual std::size_t input_count() const = 0;
  virtual std::size_t output_count() const = 0;
  virtual std::vector<double> eval(std::span<const double> x) const = 0;

  /// One call for a whole sample matrix. The default evaluates row by row.
  virtual Matrix eval_batch(const Matrix& rows) const;

  /// True when eval may be invoked from several threads at once.
  virtual bool concurrent_safe() const { return true; }

  /// Short identifier used in model files and logs.
  virtual std::string kind() const = 0;
};

using ModelPtr = std::shared_ptr<const BlackBoxModel>;

enum class FeatureKind { continuous, categorical, one_hot_member };

struct InputDescriptor {
  std::string name;
  std::size_t index = 0;
  FeatureKind kind = FeatureKind::continuous;
  double min_value = 0.0;
  double max_value = 1.0;
  std::vector<double> categories;  // required for categorical
  int group_id = -1;               // one-hot group, only for one_hot_member

  void validate() const;
  bool operator==(const InputDescriptor&) const = default;
};

struct OutputDescriptor {
  std::string name;
  std::size_t index = 0;
  double absmin = 0.0;
  double absmax = 1.0;

  void validate() const;
  bool operator==(const OutputDescriptor&) const = default;
};

/// Input values describing the situation being explained.
struct Context {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool operator==(const Context&) const = default;
};

/// Sorted set of distinct input indices; never empty.
class IndexSet {
 public:
  IndexSet() = default;
  explicit IndexSet(std::vector<std::size_t> indices);
  IndexSet(std::initializer_list<std::size_t> indices)
      : IndexSet(std::vector<std::size_t>(indices)) {}

  static IndexSet all(std::size_t input_count);

  const std::vector<std::size_t>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  bool contains(std::size_t index) const;
  bool is_subset_of(const IndexSet& other) const;
  void check_bounds(std::size_t input_count) const;

  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  bool operator==(const IndexSet&) const = default;

 private:
  std::vector<std::size_t> indices_;
};

/// [cmin, cmax] of one output over a sample set.
struct OutputRangeEstimate {
  double cmin = 0.0;
  double cmax = 0.0;
  std::size_t n_samples = 0;
  bool contains_context = false;
  /// Output at the anchor row; set whenever contains_context is true.
  std::optional<double> y_context;
  IndexSet studied;

  double width() const { return cmax - cmin; }
  bool operator==(const OutputRangeEstimate&) const = default;
};

struct CiuResult {
  std::string target;  // concept name, or feature names joined by " + "
  IndexSet indices;
  std::size_t output_index = 0;
  std::string output_name;
  double ci = 0.0;
  double cu = 0.0;
  double cmin = 0.0;
  double cmax = 0.0;
  double y_context = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  bool degenerate_range = false;  // cmax == cmin, cu set to 0.5
  bool overshoot = false;         // estimated range leaves [absmin, absmax]

  bool operator==(const CiuResult&) const = default;
};

/// Named Intermediate Concepts over the input features.
class ConceptVocabulary {
 public:
  struct Concept {
    std::string name;
    IndexSet indices;
    std::optional<std::string> parent;
    std::vector<std::string> synonyms;

    bool operator==(const Concept&) const = default;
  };

  void add(Concept entry);
  void add(std::string name, IndexSet indices,
           std::optional<std::string> parent = std::nullopt,
           std::vector<std::string> synonyms = {});

  bool contains(const std::string& name) const;
  const Concept& at(const std::string& name) const;
  const std::vector<Concept>& concepts() const { return concepts_; }
  std::vector<const Concept*> children_of(const std::string& name) const;
  std::vector<const Concept*> top_level() const;

  /// First registered synonym, or the name itself.
  std::string display_name(const std::string& name) const;

  /// Checks indices against the input count and parent links.
  void validate(std::size_t input_count) const;

  bool operator==(const ConceptVocabulary&) const = default;

 private:
  std::vector<Concept> concepts_;
};

/// Model plus its descriptors, checked against each other.
class Problem {
 public:
  Problem(ModelPtr model, std::vector<InputDescriptor> inputs,
          std::vector<OutputDescriptor> outputs);

  const BlackBoxModel& model() const { return *model_; }
  const ModelPtr& model_ptr() const { return model_; }
  const std::vector<InputDescriptor>& inputs() const { return inputs_; }
  const std::vector<OutputDescriptor>& outputs() const { return outputs_; }
  std::size_t input_count() const { return inputs_.size(); }
  std::size_t output_count() const { return outputs_.size(); }

  std::optional<std::size_t> find_output(const std::string& name) const;
  std::optional<std::size_t> find_input(const std::string& name) const;

  /// Arity check plus range warnings; returns one message per value outside
  /// its descriptor range.
  std::vector<std::string> check_context(const Context& context) const;

 private:
  ModelPtr model_;
  std::vector<InputDescriptor> inputs_;
  std::vector<OutputDescriptor> outputs_;
};

Problem validate_problem(ModelPtr model, std::vector<InputDescriptor> inputs,
                         std::vector<OutputDescriptor> outputs);

const char* to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& text);

}  // namespace ciu
