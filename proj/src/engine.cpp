#include "ciu/engine.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>

namespace ciu {

Matrix evaluate_samples(const BlackBoxModel& model, const SampleMatrix& samples) {
  Matrix outputs;
  try {
    outputs = model.eval_batch(samples.rows);
  } catch (const std::exception& batch_error) {
    // Find the row that breaks the model so the caller can see it.
    for (std::size_t r = 0; r < samples.rows.rows(); ++r) {
      try {
        (void)model.eval(samples.rows.row(r));
      } catch (const std::exception& e) {
        throw CiuError("model evaluation failed at sample row " + std::to_string(r) + ": " +
                       e.what());
      }
    }
    throw CiuError(std::string("model evaluation failed: ") + batch_error.what());
  }
  if (outputs.rows() != samples.rows.rows() || outputs.cols() != model.output_count())
    throw CiuError("model returned a " + std::to_string(outputs.rows()) + "x" +
                   std::to_string(outputs.cols()) + " output matrix for " +
                   std::to_string(samples.rows.rows()) + " sample rows");
  for (std::size_t r = 0; r < outputs.rows(); ++r) {
    for (double v : outputs.row(r)) {
      if (!std::isfinite(v))
        throw CiuError("model returned a non-finite output at sample row " + std::to_string(r));
    }
  }
  return outputs;
}

OutputRangeEstimate range_from_outputs(const Matrix& outputs, const SampleMatrix& samples,
                                       std::size_t output_index) {
  if (output_index >= outputs.cols())
    throw CiuError("output index " + std::to_string(output_index) + " out of range");
  if (outputs.rows() == 0) throw CiuError("cannot estimate a range from zero samples");
  OutputRangeEstimate range;
  range.cmin = range.cmax = outputs(0, output_index);
  for (std::size_t r = 1; r < outputs.rows(); ++r) {
    const double v = outputs(r, output_index);
    range.cmin = std::min(range.cmin, v);
    range.cmax = std::max(range.cmax, v);
  }
  range.n_samples = outputs.rows();
  range.studied = samples.studied;
  if (samples.anchor_row) {
    range.contains_context = true;
    range.y_context = outputs(*samples.anchor_row, output_index);
  }
  return range;
}

OutputRangeEstimate estimate_output_range(const BlackBoxModel& model, const SampleMatrix& samples,
                                          std::size_t output_index) {
  if (output_index >= model.output_count())
    throw CiuError("output index " + std::to_string(output_index) + " out of range for " +
                   std::to_string(model.output_count()) + " outputs");
  return range_from_outputs(evaluate_samples(model, samples), samples, output_index);
}

double contextual_importance(const OutputRangeEstimate& range, const OutputDescriptor& output) {
  if (!(output.absmax > output.absmin))
    throw CiuError("output '" + output.name + "' has an empty absolute range");
  return (range.cmax - range.cmin) / (output.absmax - output.absmin);
}

double contextual_utility(double y_context, const OutputRangeEstimate& range) {
  if (!range.contains_context)
    throw CiuError("contextual utility needs a range estimated with the context row");
  if (range.cmax == range.cmin) return 0.5;
  return (y_context - range.cmin) / (range.cmax - range.cmin);
}

double generalized_contextual_importance(const OutputRangeEstimate& child,
                                         const OutputRangeEstimate& parent) {
  if (!(parent.cmax > parent.cmin))
    throw CiuError("parent concept has a degenerate output range; its parts have no importance");
  if (!child.studied.empty() && !parent.studied.empty() && !child.studied.is_subset_of(parent.studied))
    throw CiuError("studied inputs are not a subset of the parent concept's inputs");
  return (child.cmax - child.cmin) / (parent.cmax - parent.cmin);
}

OutputRangeEstimate merge_ranges(OutputRangeEstimate range, const OutputRangeEstimate& other) {
  range.cmin = std::min(range.cmin, other.cmin);
  range.cmax = std::max(range.cmax, other.cmax);
  range.n_samples += other.n_samples;
  if (!range.contains_context && other.contains_context) {
    range.contains_context = true;
    range.y_context = other.y_context;
  }
  return range;
}

IndexSet resolve_target(const Target& target, const ConceptVocabulary& vocabulary,
                        std::size_t input_count) {
  IndexSet set = std::holds_alternative<IndexSet>(target)
                     ? std::get<IndexSet>(target)
                     : vocabulary.at(std::get<std::string>(target)).indices;
  set.check_bounds(input_count);
  return set;
}

std::string target_label(const Target& target, const std::vector<InputDescriptor>& inputs) {
  if (const auto* name = std::get_if<std::string>(&target)) return *name;
  std::string label;
  for (auto i : std::get<IndexSet>(target)) {
    if (!label.empty()) label += " + ";
    label += i < inputs.size() ? inputs[i].name : "x" + std::to_string(i);
  }
  return label;
}

namespace {

OutputRangeEstimate sampled_range(const Problem& problem, const ExplanationRequest& request,
                                  const IndexSet& studied) {
  auto samples = generate_samples(request.context, studied, problem.inputs(), request.sampling);
  if (touches_one_hot_group(studied, problem.inputs()))
    samples = correct_one_hot(std::move(samples), problem.inputs(), request.sampling.seed);
  if (request.sampling.filter_distance) {
    if (!request.training_data)
      throw CiuError("distance filtering needs training data");
    samples = filter_unrealistic(std::move(samples), *request.training_data,
                                 *request.sampling.filter_distance, problem.inputs());
  }
  return range_from_outputs(evaluate_samples(problem.model(), samples), samples,
                            request.output_index);
}

std::vector<OutputRangeEstimate> sampled_ranges(const Problem& problem,
                                                const ExplanationRequest& request,
                                                const std::vector<IndexSet>& sets) {
  std::vector<OutputRangeEstimate> ranges(sets.size());
  const std::size_t workers =
      std::min<std::size_t>(sets.size(), std::max(1u, std::thread::hardware_concurrency()));
  if (!problem.model().concurrent_safe() || workers <= 1) {
    for (std::size_t k = 0; k < sets.size(); ++k) ranges[k] = sampled_range(problem, request, sets[k]);
    return ranges;
  }
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t k = w; k < sets.size(); k += workers)
        ranges[k] = sampled_range(problem, request, sets[k]);
    }));
  }
  for (auto& job : jobs) job.get();
  return ranges;
}

}  // namespace

std::vector<CiuResult> explain(const Problem& problem, const ExplanationRequest& request,
                               const ConceptVocabulary& vocabulary) {
  request.sampling.validate();
  (void)problem.check_context(request.context);
  if (request.output_index >= problem.output_count())
    throw CiuError("output index " + std::to_string(request.output_index) + " out of range for " +
                   std::to_string(problem.output_count()) + " outputs");
  if (request.targets.empty()) throw CiuError("explanation request has no targets");
  vocabulary.validate(problem.input_count());

  std::vector<IndexSet> sets;
  for (const auto& t : request.targets) sets.push_back(resolve_target(t, vocabulary, problem.input_count()));

  std::optional<IndexSet> parent_set;
  if (std::holds_alternative<AllInputs>(request.parent)) {
    parent_set = IndexSet::all(problem.input_count());
  } else if (const auto* name = std::get_if<std::string>(&request.parent)) {
    parent_set = *name == "ALL" ? IndexSet::all(problem.input_count()) : vocabulary.at(*name).indices;
  }
  if (parent_set) {
    for (std::size_t k = 0; k < sets.size(); ++k) {
      if (!sets[k].is_subset_of(*parent_set))
        throw CiuError("target '" + target_label(request.targets[k], problem.inputs()) +
                       "' is not part of the parent concept");
    }
    sets.push_back(*parent_set);
  }

  auto ranges = sampled_ranges(problem, request, sets);
  std::optional<OutputRangeEstimate> parent_range;
  if (parent_set) {
    parent_range = ranges.back();
    ranges.pop_back();
    sets.pop_back();
    for (const auto& r : ranges) parent_range = merge_ranges(*parent_range, r);
  }

  const auto& output = problem.outputs()[request.output_index];
  // Anchor rows carry y(C); only re-evaluate when sampling left them out.
  const double y_context = ranges.front().y_context
                               ? *ranges.front().y_context
                               : problem.model().eval(request.context.values).at(request.output_index);

  std::vector<CiuResult> results;
  results.reserve(ranges.size());
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    const auto& range = ranges[k];
    CiuResult r;
    r.target = target_label(request.targets[k], problem.inputs());
    r.indices = sets[k];
    r.output_index = request.output_index;
    r.output_name = output.name;
    r.ci = parent_range ? generalized_contextual_importance(range, *parent_range)
                        : contextual_importance(range, output);
    r.cu = contextual_utility(range.y_context.value_or(y_context), range);
    r.cmin = range.cmin;
    r.cmax = range.cmax;
    r.y_context = y_context;
    r.n = request.sampling.n;
    r.seed = request.sampling.seed;
    r.degenerate_range = range.cmax == range.cmin;
    r.overshoot = range.cmin < output.absmin || range.cmax > output.absmax;
    results.push_back(std::move(r));
  }
  return results;
}

std::vector<CiuResult> explain_concept_decomposition(const Problem& problem,
                                                     const std::string& concept_name,
                                                     const Context& context,
                                                     std::size_t output_index,
                                                     const SamplingConfig& sampling,
                                                     const ConceptVocabulary& vocabulary) {
  ExplanationRequest request;
  request.context = context;
  request.output_index = output_index;
  request.sampling = sampling;

  IndexSet members;
  std::vector<const ConceptVocabulary::Concept*> parts;
  if (concept_name == "ALL") {
    members = IndexSet::all(problem.input_count());
    parts = vocabulary.top_level();
    request.parent = AllInputs{};
  } else {
    const auto& c = vocabulary.at(concept_name);
    members = c.indices;
    parts = vocabulary.children_of(concept_name);
    request.parent = concept_name;
  }
  if (members.size() < 2)
    throw CiuError("concept '" + concept_name + "' has a single input; decomposition is vacuous");

  if (parts.empty()) {
    for (auto i : members) request.targets.emplace_back(IndexSet{i});
  } else {
    for (const auto* p : parts) request.targets.emplace_back(p->name);
  }
  return explain(problem, request, vocabulary);
}

Curve input_output_curve(const Problem& problem, const Context& context, std::size_t input_index,
                         std::size_t output_index, std::size_t resolution) {
  if (resolution < 2) throw CiuError("curve resolution must be at least 2");
  if (input_index >= problem.input_count())
    throw CiuError("input index " + std::to_string(input_index) + " out of range");
  if (output_index >= problem.output_count())
    throw CiuError("output index " + std::to_string(output_index) + " out of range");
  (void)problem.check_context(context);

  const auto& d = problem.inputs()[input_index];
  SampleMatrix sweep;
  sweep.studied = IndexSet{input_index};
  sweep.base_context = context;
  sweep.rows = Matrix(0, context.size());
  std::vector<double> row = context.values;
  for (std::size_t k = 0; k < resolution; ++k) {
    row[input_index] = k + 1 == resolution
                           ? d.max_value
                           : d.min_value + (d.max_value - d.min_value) * static_cast<double>(k) /
                                               static_cast<double>(resolution - 1);
    sweep.rows.append_row(row);
  }
  sweep.rows.append_row(context.values);
  const auto outputs = evaluate_samples(problem.model(), sweep);

  Curve curve;
  curve.input_index = input_index;
  curve.output_index = output_index;
  for (std::size_t k = 0; k < resolution; ++k)
    curve.points.push_back({sweep.rows(k, input_index), outputs(k, output_index)});
  curve.context_point = {context.values[input_index], outputs(resolution, output_index)};
  return curve;
}

}  // namespace ciu
