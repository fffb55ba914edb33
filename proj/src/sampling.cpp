#include "ciu/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace ciu {

void SamplingConfig::validate() const {
  if (n < 1) throw CiuError("sample count N must be at least 1");
  if (filter_distance && !(*filter_distance > 0.0))
    throw CiuError("filter distance must be positive");
}

namespace {

std::map<int, std::vector<std::size_t>> one_hot_groups(const std::vector<InputDescriptor>& inputs) {
  std::map<int, std::vector<std::size_t>> groups;
  for (const auto& d : inputs) {
    if (d.kind == FeatureKind::one_hot_member) groups[d.group_id].push_back(d.index);
  }
  return groups;
}

}  // namespace

SampleMatrix generate_samples(const Context& context, const IndexSet& studied,
                              const std::vector<InputDescriptor>& inputs,
                              const SamplingConfig& config) {
  config.validate();
  if (studied.empty()) throw CiuError("studied index set must not be empty");
  if (context.size() != inputs.size())
    throw CiuError("context has " + std::to_string(context.size()) + " values but " +
                   std::to_string(inputs.size()) + " descriptors were given");
  for (auto i : studied) {
    if (i >= inputs.size())
      throw CiuError("no descriptor for studied input index " + std::to_string(i));
  }

  SampleMatrix out;
  out.studied = studied;
  out.base_context = context;
  const std::span<const double> base(context.values);

  if (config.include_context) {
    out.anchor_row = 0;
    out.rows.append_row(base);
  }
  if (out.rows.empty()) out.rows = Matrix(0, context.size());

  if (config.include_extremes) {
    std::vector<double> row(base.begin(), base.end());
    for (auto i : studied) {
      const auto& d = inputs[i];
      if (d.kind != FeatureKind::continuous) continue;
      for (double v : {d.min_value, d.max_value}) {
        row[i] = v;
        out.rows.append_row(row);
        ++out.n_extreme;
      }
      row[i] = base[i];
    }
  }

  SampleRng rng(config.seed);
  std::vector<double> row(base.begin(), base.end());
  for (std::size_t r = 0; r < config.n; ++r) {
    for (auto i : studied) {
      const auto& d = inputs[i];
      if (d.kind == FeatureKind::categorical) {
        row[i] = d.categories[rng.index(d.categories.size())];
      } else {
        row[i] = rng.uniform(d.min_value, d.max_value);
      }
    }
    out.rows.append_row(row);
  }
  out.n_random = config.n;
  return out;
}

bool touches_one_hot_group(const IndexSet& studied, const std::vector<InputDescriptor>& inputs) {
  return std::any_of(studied.begin(), studied.end(), [&](std::size_t i) {
    return i < inputs.size() && inputs[i].kind == FeatureKind::one_hot_member;
  });
}

SampleMatrix correct_one_hot(SampleMatrix samples, const std::vector<InputDescriptor>& inputs,
                             std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> studied_groups;
  for (const auto& [gid, members] : one_hot_groups(inputs)) {
    const auto inside = std::count_if(members.begin(), members.end(),
                                      [&](std::size_t i) { return samples.studied.contains(i); });
    if (inside == 0) continue;
    if (static_cast<std::size_t>(inside) != members.size())
      throw CiuError("one-hot group " + std::to_string(gid) +
                     " is only partially contained in the studied set");
    studied_groups.push_back(members);
  }
  if (studied_groups.empty())
    throw CiuError("no one-hot group intersects the studied set");

  // Separate stream from generate_samples so corrections do not repeat its draws.
  SampleRng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t r = 0; r < samples.rows.rows(); ++r) {
    if (samples.anchor_row && *samples.anchor_row == r) continue;
    auto row = samples.rows.row(r);
    for (const auto& members : studied_groups) {
      const auto hot = rng.index(members.size());
      for (std::size_t k = 0; k < members.size(); ++k) row[members[k]] = k == hot ? 1.0 : 0.0;
    }
  }
  return samples;
}

double nearest_training_distance(std::span<const double> row, const Matrix& training_data,
                                 const std::vector<InputDescriptor>& inputs) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < training_data.rows(); ++t) {
    double sum = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double span = inputs[c].max_value - inputs[c].min_value;
      if (span <= 0.0) continue;
      const double diff = (row[c] - training_data(t, c)) / span;
      sum += diff * diff;
    }
    best = std::min(best, sum);
  }
  return std::sqrt(best);
}

SampleMatrix filter_unrealistic(SampleMatrix samples, const Matrix& training_data,
                                double threshold, const std::vector<InputDescriptor>& inputs) {
  if (training_data.empty()) throw CiuError("training data for filtering is empty");
  if (!(threshold > 0.0)) throw CiuError("filter threshold must be positive");
  if (training_data.cols() != samples.rows.cols() || inputs.size() != samples.rows.cols())
    throw CiuError("training data width does not match the sample matrix");

  Matrix kept(0, samples.rows.cols());
  std::optional<std::size_t> anchor;
  std::size_t others = 0;
  for (std::size_t r = 0; r < samples.rows.rows(); ++r) {
    const bool is_anchor = samples.anchor_row && *samples.anchor_row == r;
    if (!is_anchor &&
        nearest_training_distance(samples.rows.row(r), training_data, inputs) > threshold)
      continue;
    if (is_anchor) anchor = kept.rows();
    else ++others;
    kept.append_row(samples.rows.row(r));
  }
  if (others == 0)
    throw CiuError("every perturbed row was filtered out; relax or disable --filter-distance");
  samples.rows = std::move(kept);
  samples.anchor_row = anchor;
  return samples;
}

}  // namespace ciu
