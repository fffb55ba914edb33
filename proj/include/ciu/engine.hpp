#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ciu/sampling.hpp"
#include "ciu/types.hpp"

namespace ciu {

/// Reference range for CI: the output's pre-defined [absmin, absmax].
struct AbsoluteRange {
  bool operator==(const AbsoluteRange&) const = default;
};
/// Reference range for CI: the estimated range when all inputs vary.
struct AllInputs {
  bool operator==(const AllInputs&) const = default;
};
using ParentSpec = std::variant<AbsoluteRange, AllInputs, std::string>;

/// A studied feature set or the name of a vocabulary concept.
using Target = std::variant<IndexSet, std::string>;

struct ExplanationRequest {
  Context context;
  std::vector<Target> targets;
  std::size_t output_index = 0;
  ParentSpec parent = AbsoluteRange{};
  SamplingConfig sampling;
  /// Needed when sampling.filter_distance is set.
  std::optional<Matrix> training_data;
};

/// Evaluates the model on every row. Non-finite outputs and model exceptions
/// are reported with the offending row index.
Matrix evaluate_samples(const BlackBoxModel& model, const SampleMatrix& samples);

/// [cmin, cmax] of one output column of an evaluated sample matrix.
OutputRangeEstimate range_from_outputs(const Matrix& outputs, const SampleMatrix& samples,
                                       std::size_t output_index);

OutputRangeEstimate estimate_output_range(const BlackBoxModel& model, const SampleMatrix& samples,
                                          std::size_t output_index);

/// (cmax - cmin) / (absmax - absmin). Not clamped.
double contextual_importance(const OutputRangeEstimate& range, const OutputDescriptor& output);

/// (y - cmin) / (cmax - cmin), or 0.5 when the range is degenerate.
double contextual_utility(double y_context, const OutputRangeEstimate& range);

/// Child range width relative to a parent concept's range width.
double generalized_contextual_importance(const OutputRangeEstimate& child,
                                         const OutputRangeEstimate& parent);

/// Widens `range` to cover `other`. Both must come from the same context.
OutputRangeEstimate merge_ranges(OutputRangeEstimate range, const OutputRangeEstimate& other);

IndexSet resolve_target(const Target& target, const ConceptVocabulary& vocabulary,
                        std::size_t input_count);
std::string target_label(const Target& target, const std::vector<InputDescriptor>& inputs);

/// CI and CU for every requested target.
///
/// With an AbsoluteRange parent, CI uses [absmin, absmax]. With AllInputs or a
/// concept parent, CI is relative to that parent's estimated range; the parent
/// range is widened by the targets' ranges, since every row that perturbs a
/// subset of the parent's inputs is also a valid row for the parent.
std::vector<CiuResult> explain(const Problem& problem, const ExplanationRequest& request,
                               const ConceptVocabulary& vocabulary = {});

/// CIU of a concept's parts relative to the concept itself. Parts are the
/// concept's registered sub-concepts, or its member features when it has none.
/// The name "ALL" stands for all inputs, split into top-level concepts.
std::vector<CiuResult> explain_concept_decomposition(const Problem& problem,
                                                     const std::string& concept_name,
                                                     const Context& context,
                                                     std::size_t output_index,
                                                     const SamplingConfig& sampling,
                                                     const ConceptVocabulary& vocabulary);

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const CurvePoint&) const = default;
};

struct Curve {
  std::size_t input_index = 0;
  std::size_t output_index = 0;
  std::vector<CurvePoint> points;
  CurvePoint context_point;
};

/// Output as a function of one input over its descriptor range, other inputs
/// held at the context.
Curve input_output_curve(const Problem& problem, const Context& context, std::size_t input_index,
                         std::size_t output_index, std::size_t resolution);

}  // namespace ciu
