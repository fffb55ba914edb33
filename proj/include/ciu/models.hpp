#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ciu/json_io.hpp"
#include "ciu/types.hpp"

namespace ciu {

/// y = bias + sum_i w_i x_i
class LinearModel final : public BlackBoxModel {
 public:
  LinearModel(std::vector<double> weights, double bias = 0.0);

  std::size_t input_count() const override { return weights_.size(); }
  std::size_t output_count() const override { return 1; }
  std::vector<double> eval(std::span<const double> x) const override;
  std::string kind() const override { return "linear"; }

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }

 private:
  std::vector<double> weights_;
  double bias_;
};

/// Axis-aligned step function. Each input is cut by its sorted thresholds;
/// `levels` holds one output per grid cell, first input varying slowest.
/// A value equal to a threshold falls in the upper cell.
class RuleStepModel final : public BlackBoxModel {
 public:
  RuleStepModel(std::vector<std::vector<double>> thresholds, std::vector<double> levels);

  std::size_t input_count() const override { return thresholds_.size(); }
  std::size_t output_count() const override { return 1; }
  std::vector<double> eval(std::span<const double> x) const override;
  std::string kind() const override { return "rule"; }

  const std::vector<std::vector<double>>& thresholds() const { return thresholds_; }
  const std::vector<double>& levels() const { return levels_; }

 private:
  std::vector<std::vector<double>> thresholds_;
  std::vector<double> levels_;
};

/// y = (sqrt(x1) + x2^2) / 2 on [0,1]^2.
class NonlinearDemoModel final : public BlackBoxModel {
 public:
  std::size_t input_count() const override { return 2; }
  std::size_t output_count() const override { return 1; }
  std::vector<double> eval(std::span<const double> x) const override;
  std::string kind() const override { return "nonlinear"; }
};

/// Fully connected network with sigmoid units in every layer.
///
/// Inputs are scaled by (x - offset) * scale before the first layer. The
/// pre-activation is clamped to [-30, 30], so every output lies strictly
/// inside (0, 1) whatever the input.
class SmallMlp final : public BlackBoxModel {
 public:
  struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;  // out x in, row-major
    std::vector<double> bias;     // out
  };

  SmallMlp(std::vector<Layer> layers, std::vector<double> input_offset,
           std::vector<double> input_scale);

  /// Random weights uniform in [-0.5, 0.5] and identity input scaling.
  static SmallMlp random(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);

  std::size_t input_count() const override { return layers_.front().in; }
  std::size_t output_count() const override { return layers_.back().out; }
  std::vector<double> eval(std::span<const double> x) const override;
  std::string kind() const override { return "mlp"; }

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }
  const std::vector<double>& input_offset() const { return input_offset_; }
  const std::vector<double>& input_scale() const { return input_scale_; }

  /// Activations of every layer, input (scaled) first.
  std::vector<std::vector<double>> forward(std::span<const double> x) const;

 private:
  std::vector<Layer> layers_;
  std::vector<double> input_offset_;
  std::vector<double> input_scale_;
};

double sigmoid(double z);

struct TrainingSet {
  Matrix features;
  Matrix targets;
};

struct MlpTrainingOptions {
  std::vector<std::size_t> hidden = {8};
  std::size_t epochs = 2000;
  double learning_rate = 0.1;
  std::uint64_t seed = 1;
  /// Scale inputs to [0,1] by the feature min/max of the training set.
  bool normalize_inputs = true;
};

struct MlpTrainingReport {
  double final_mse = 0.0;
  /// Argmax agreement; only meaningful for one-hot targets.
  double accuracy = 0.0;
  std::size_t epochs = 0;
};

/// Online gradient descent on mean squared error, rows visited in a
/// seed-determined shuffled order each epoch.
SmallMlp train_mlp(const TrainingSet& data, const MlpTrainingOptions& options,
                   MlpTrainingReport* report = nullptr);

double classification_accuracy(const BlackBoxModel& model, const TrainingSet& data);

enum class KnnTask { regression, classification };

/// k nearest neighbours under range-normalized Euclidean distance. The
/// prediction is the mean target of the neighbours, which for one-hot targets
/// is the class-frequency vector. Distance ties go to the lower row index.
class KnnModel final : public BlackBoxModel {
 public:
  KnnModel(Matrix features, Matrix targets, std::size_t k, KnnTask task);

  std::size_t input_count() const override { return features_.cols(); }
  std::size_t output_count() const override { return targets_.cols(); }
  std::vector<double> eval(std::span<const double> x) const override;
  std::string kind() const override { return "knn"; }

  std::size_t k() const { return k_; }
  KnnTask task() const { return task_; }
  const Matrix& features() const { return features_; }
  const Matrix& targets() const { return targets_; }

 private:
  Matrix features_;
  Matrix targets_;
  std::size_t k_;
  KnnTask task_;
  std::vector<double> inv_span_;
};

/// A model file: the model, its descriptors and an optional vocabulary.
struct SavedModel {
  ModelPtr model;
  std::vector<InputDescriptor> inputs;
  std::vector<OutputDescriptor> outputs;
  ConceptVocabulary vocabulary;
};

json model_to_json(const BlackBoxModel& model);
ModelPtr model_from_json(const json& j);

/// {"format": "ciu-model", "version": 1, "model": {...}, "inputs": [...],
///  "outputs": [...], "vocabulary": [...]}
json saved_model_to_json(const SavedModel& saved);
SavedModel saved_model_from_json(const json& j);
void save_model(const std::string& path, const SavedModel& saved);
SavedModel load_model(const std::string& path);

/// Descriptors for the built-in demo models: inputs on [0,1], output abs range [0,1].
std::vector<InputDescriptor> unit_box_inputs(std::size_t count);
std::vector<OutputDescriptor> unit_outputs(std::size_t count);

}  // namespace ciu
