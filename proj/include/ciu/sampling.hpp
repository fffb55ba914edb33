#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "ciu/types.hpp"

namespace ciu {

struct SamplingConfig {
  std::size_t n = 1000;
  std::uint64_t seed = 42;
  /// Append the context itself as the anchor row so y(C) lies inside [cmin, cmax].
  bool include_context = true;
  /// Append rows with each studied continuous feature at its min and max.
  bool include_extremes = true;
  /// Drop rows farther than this (range-normalized Euclidean) from every
  /// training row. Off when unset.
  std::optional<double> filter_distance;

  void validate() const;
};

/// The set of representative input vectors for one studied index set.
///
/// Row layout: [anchor row][extreme rows][n random rows]. Rows that
/// filtering removes are dropped in place, so the layout counts below
/// describe the matrix before filtering.
struct SampleMatrix {
  Matrix rows;
  IndexSet studied;
  Context base_context;
  std::optional<std::size_t> anchor_row;
  std::size_t n_random = 0;
  std::size_t n_extreme = 0;

  std::size_t size() const { return rows.rows(); }
};

/// Uniform doubles in [0, 1) from a 64-bit Mersenne twister; the mapping is
/// fixed so streams are identical across standard libraries.
class SampleRng {
 public:
  explicit SampleRng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform01() * static_cast<double>(n));
  }

 private:
  std::mt19937_64 engine_;
};

SampleMatrix generate_samples(const Context& context, const IndexSet& studied,
                              const std::vector<InputDescriptor>& inputs,
                              const SamplingConfig& config);

/// Makes every studied one-hot group valid again: exactly one member set to 1,
/// picked uniformly. The anchor row is left untouched.
SampleMatrix correct_one_hot(SampleMatrix samples, const std::vector<InputDescriptor>& inputs,
                             std::uint64_t seed);

/// True when any one-hot group has a member inside `studied`.
bool touches_one_hot_group(const IndexSet& studied, const std::vector<InputDescriptor>& inputs);

/// Smallest range-normalized Euclidean distance from `row` to any training row.
double nearest_training_distance(std::span<const double> row, const Matrix& training_data,
                                 const std::vector<InputDescriptor>& inputs);

/// Keeps rows within `threshold` of some training row. The anchor row always stays.
SampleMatrix filter_unrealistic(SampleMatrix samples, const Matrix& training_data,
                                double threshold, const std::vector<InputDescriptor>& inputs);

}  // namespace ciu
