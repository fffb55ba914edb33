#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ciu/engine.hpp"
#include "ciu/json_io.hpp"
#include "ciu/types.hpp"

namespace ciu {

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  /// "#rrggbb", channels rounded to the nearest integer.
  std::string hex() const;
  bool operator==(const Rgb&) const = default;
};

/// Red-yellow-green scale for CU. Values below cu_neutral blend red to
/// yellow, values above blend yellow to dark green.
struct ColorSpec {
  double cu_neutral = 0.5;
  Rgb red{220, 50, 32};
  Rgb yellow{255, 200, 0};
  Rgb dark_green{0, 120, 40};

  void validate() const;
};

Rgb cu_color(double cu, const ColorSpec& spec = {});

enum class BarOrder { by_ci, input_order };

struct Bar {
  std::string label;
  double length = 0.0;
  double cu = 0.0;
  Rgb color;
};

struct BarPlotSpec {
  std::string title;
  std::vector<Bar> bars;
  double axis_max = 1.0;
};

/// Bar layout for a result list: one bar per result, stable-sorted by CI
/// (descending) when requested. The axis spans [0, max(1, max ci)].
BarPlotSpec make_barplot(const std::vector<CiuResult>& results, const ColorSpec& colors,
                         BarOrder order, std::string title = {},
                         const ConceptVocabulary* vocabulary = nullptr);

std::string render_barplot_svg(const BarPlotSpec& spec);

/// Shorthand for make_barplot followed by render_barplot_svg.
std::string render_barplot(const std::vector<CiuResult>& results, const ColorSpec& colors,
                           BarOrder order, const std::string& title = {});

std::string render_curve(const Curve& curve, const std::string& x_label = "x",
                         const std::string& y_label = "y", const std::string& title = {});

/// Ordered (upper bound, word) tables; a value takes the word of the first
/// bound it does not exceed.
struct WordTable {
  std::vector<std::pair<double, std::string>> ci;
  std::vector<std::pair<double, std::string>> cu;

  static WordTable defaults();
  void validate() const;
  const std::string& ci_word(double ci) const;
  const std::string& cu_word(double cu) const;
};

std::string textual_explanation(const std::vector<CiuResult>& results,
                                const ConceptVocabulary& vocabulary, const WordTable& words,
                                std::size_t top_k);

/// Array of result objects with the stable keys target, ci, cu, cmin, cmax,
/// y, n and seed (plus output, indices and flag fields).
json results_to_structured(const std::vector<CiuResult>& results);
std::vector<CiuResult> results_from_structured(const json& doc);

/// Versioned wrapper written by the CLI: {"schema": "ciu-results",
/// "version": 1, "results": [...]}.
json results_document(const std::vector<CiuResult>& results);

/// Render settings read from a config file:
///   {"cu_neutral": 0.5, "colors": {"red": [r,g,b], ...},
///    "words": {"ci": [[0.25, "..."], ...], "cu": [[...], ...]}}
struct RenderConfig {
  ColorSpec colors;
  WordTable words = WordTable::defaults();
};
RenderConfig render_config_from_json(const json& j);

}  // namespace ciu
