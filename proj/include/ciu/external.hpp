#pragma once

#include <chrono>
#include <string>

#include "ciu/types.hpp"

namespace ciu {

/// A shell command that acts as a model. Protocol: the command receives one
/// CSV row per input vector on stdin (no header, values printed with 17
/// significant digits) and must print exactly one CSV row of outputs per
/// input row on stdout, then exit 0.
struct ExternalCommand {
  std::string command;
  std::chrono::milliseconds timeout{30000};
};

/// Runs the command once for the whole matrix.
Matrix run_external_model(const ExternalCommand& command, const Matrix& inputs);

class ExternalModel final : public BlackBoxModel {
 public:
  ExternalModel(ExternalCommand command, std::size_t inputs, std::size_t outputs);

  std::size_t input_count() const override { return inputs_; }
  std::size_t output_count() const override { return outputs_; }
  std::vector<double> eval(std::span<const double> x) const override;
  Matrix eval_batch(const Matrix& rows) const override;
  bool concurrent_safe() const override { return false; }
  std::string kind() const override { return "external"; }

 private:
  ExternalCommand command_;
  std::size_t inputs_;
  std::size_t outputs_;
};

}  // namespace ciu
