#include "ciu/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace ciu {

namespace {

// Fixed two-decimal formatting keeps SVG output byte-stable.
std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v == 0.0 ? 0.0 : v);
  return buf;
}

std::string num3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v == 0.0 ? 0.0 : v);
  return buf;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

Rgb blend(const Rgb& a, const Rgb& b, double t) {
  return {std::lerp(a.r, b.r, t), std::lerp(a.g, b.g, t), std::lerp(a.b, b.b, t)};
}

int channel(double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 255.0))); }

void svg_open(std::ostringstream& out, int width, int height) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"#ffffff\"/>\n";
}

}  // namespace

std::string Rgb::hex() const {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", channel(r), channel(g), channel(b));
  return buf;
}

void ColorSpec::validate() const {
  if (!(cu_neutral > 0.0 && cu_neutral < 1.0))
    throw CiuError("cu_neutral must lie strictly inside (0, 1)");
}

Rgb cu_color(double cu, const ColorSpec& spec) {
  spec.validate();
  if (!(cu >= 0.0 && cu <= 1.0)) throw CiuError("CU value " + num3(cu) + " outside [0, 1]");
  if (cu <= spec.cu_neutral) return blend(spec.red, spec.yellow, cu / spec.cu_neutral);
  return blend(spec.yellow, spec.dark_green, (cu - spec.cu_neutral) / (1.0 - spec.cu_neutral));
}

BarPlotSpec make_barplot(const std::vector<CiuResult>& results, const ColorSpec& colors,
                         BarOrder order, std::string title, const ConceptVocabulary* vocabulary) {
  if (results.empty()) throw CiuError("bar plot needs at least one result");
  std::vector<std::size_t> idx(results.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (order == BarOrder::by_ci) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return results[a].ci > results[b].ci; });
  }
  BarPlotSpec spec;
  spec.title = std::move(title);
  for (auto k : idx) {
    const auto& r = results[k];
    Bar bar;
    bar.label = vocabulary ? vocabulary->display_name(r.target) : r.target;
    bar.length = std::max(0.0, r.ci);
    bar.cu = r.cu;
    bar.color = cu_color(std::clamp(r.cu, 0.0, 1.0), colors);
    spec.axis_max = std::max(spec.axis_max, bar.length);
    spec.bars.push_back(std::move(bar));
  }
  return spec;
}

std::string render_barplot_svg(const BarPlotSpec& spec) {
  constexpr int width = 720, label_w = 220, plot_w = 440, bar_h = 22, gap = 10, top = 48;
  const int n = static_cast<int>(spec.bars.size());
  const int height = top + n * (bar_h + gap) + 40;
  const double scale = plot_w / spec.axis_max;

  std::ostringstream out;
  svg_open(out, width, height);
  if (!spec.title.empty()) {
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">"
        << xml_escape(spec.title) << "</text>\n";
  }
  const int axis_y = top + n * (bar_h + gap);
  for (int t = 0; t <= 4; ++t) {
    const double v = spec.axis_max * t / 4.0;
    const double x = label_w + v * scale;
    out << "<line x1=\"" << num(x) << "\" y1=\"" << top - 4 << "\" x2=\"" << num(x) << "\" y2=\""
        << axis_y << "\" stroke=\"#dddddd\"/>\n"
        << "<text x=\"" << num(x) << "\" y=\"" << axis_y + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(v)
        << "</text>\n";
  }
  for (int k = 0; k < n; ++k) {
    const auto& bar = spec.bars[static_cast<std::size_t>(k)];
    const int y = top + k * (bar_h + gap);
    out << "<text x=\"" << label_w - 8 << "\" y=\"" << y + bar_h / 2 + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
        << xml_escape(bar.label) << "</text>\n"
        << "<rect x=\"" << label_w << "\" y=\"" << y << "\" width=\"" << num(bar.length * scale)
        << "\" height=\"" << bar_h << "\" fill=\"" << bar.color.hex() << "\" stroke=\"#333333\">"
        << "<title>CI=" << num3(bar.length) << " CU=" << num3(bar.cu) << "</title></rect>\n";
  }
  out << "<line x1=\"" << label_w << "\" y1=\"" << axis_y << "\" x2=\"" << label_w + plot_w
      << "\" y2=\"" << axis_y << "\" stroke=\"#000000\"/>\n"
      << "<text x=\"" << label_w + plot_w / 2 << "\" y=\"" << axis_y + 32
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">CI</text>\n"
      << "</svg>\n";
  return out.str();
}

std::string render_barplot(const std::vector<CiuResult>& results, const ColorSpec& colors,
                           BarOrder order, const std::string& title) {
  return render_barplot_svg(make_barplot(results, colors, order, title));
}

std::string render_curve(const Curve& curve, const std::string& x_label,
                         const std::string& y_label, const std::string& title) {
  if (curve.points.size() < 2) throw CiuError("curve needs at least two points");
  constexpr int width = 560, height = 400, left = 60, right = 20, top = 40, bottom = 50;
  constexpr int plot_w = width - left - right, plot_h = height - top - bottom;

  double x_lo = curve.points.front().x, x_hi = curve.points.front().x;
  double y_lo = curve.points.front().y, y_hi = curve.points.front().y;
  for (const auto& p : curve.points) {
    x_lo = std::min(x_lo, p.x);
    x_hi = std::max(x_hi, p.x);
    y_lo = std::min(y_lo, p.y);
    y_hi = std::max(y_hi, p.y);
  }
  x_lo = std::min(x_lo, curve.context_point.x);
  x_hi = std::max(x_hi, curve.context_point.x);
  y_lo = std::min(y_lo, curve.context_point.y);
  y_hi = std::max(y_hi, curve.context_point.y);
  if (x_hi == x_lo) x_hi = x_lo + 1.0;
  if (y_hi == y_lo) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }
  auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) { return top + (y_hi - y) / (y_hi - y_lo) * plot_h; };

  std::ostringstream out;
  svg_open(out, width, height);
  if (!title.empty()) {
    out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"15\">"
        << xml_escape(title) << "</text>\n";
  }
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\""
      << plot_h << "\" fill=\"none\" stroke=\"#000000\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x_lo + (x_hi - x_lo) * t / 4.0;
    const double yv = y_lo + (y_hi - y_lo) * t / 4.0;
    out << "<text x=\"" << num(px(xv)) << "\" y=\"" << top + plot_h + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num3(xv)
        << "</text>\n"
        << "<text x=\"" << left - 6 << "\" y=\"" << num(py(yv) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num3(yv)
        << "</text>\n";
  }
  out << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"2\" points=\"";
  for (std::size_t k = 0; k < curve.points.size(); ++k) {
    if (k) out << ' ';
    out << num(px(curve.points[k].x)) << ',' << num(py(curve.points[k].y));
  }
  out << "\"/>\n"
      << "<circle cx=\"" << num(px(curve.context_point.x)) << "\" cy=\""
      << num(py(curve.context_point.y)) << "\" r=\"5\" fill=\"#dc3220\"/>\n"
      << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << xml_escape(x_label) << "</text>\n"
      << "<text x=\"16\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
      << top + plot_h / 2 << ")\">" << xml_escape(y_label) << "</text>\n"
      << "</svg>\n";
  return out.str();
}

WordTable WordTable::defaults() {
  return {{{0.25, "slightly important"},
           {0.5, "important"},
           {0.75, "very important"},
           {1.0, "extremely important"}},
          {{0.25, "very unfavorable"},
           {0.5, "unfavorable"},
           {0.75, "favorable"},
           {1.0, "very favorable"}}};
}

void WordTable::validate() const {
  for (const auto* table : {&ci, &cu}) {
    if (table->empty()) throw CiuError("word table must not be empty");
    for (std::size_t k = 1; k < table->size(); ++k) {
      if (!((*table)[k].first > (*table)[k - 1].first))
        throw CiuError("word table bounds must be strictly increasing");
    }
    if (table->back().first < 1.0) throw CiuError("last word table bound must be at least 1");
  }
}

namespace {
const std::string& lookup(const std::vector<std::pair<double, std::string>>& table, double v) {
  for (const auto& [bound, word] : table) {
    if (v <= bound) return word;
  }
  return table.back().second;
}
}  // namespace

const std::string& WordTable::ci_word(double v) const { return lookup(ci, v); }
const std::string& WordTable::cu_word(double v) const { return lookup(cu, v); }

std::string textual_explanation(const std::vector<CiuResult>& results,
                                const ConceptVocabulary& vocabulary, const WordTable& words,
                                std::size_t top_k) {
  if (results.empty()) throw CiuError("no results to explain");
  if (top_k < 1) throw CiuError("top_k must be at least 1");
  words.validate();

  // One sentence per output, in order of first appearance.
  std::vector<std::size_t> outputs;
  for (const auto& r : results) {
    if (std::find(outputs.begin(), outputs.end(), r.output_index) == outputs.end())
      outputs.push_back(r.output_index);
  }
  std::ostringstream text;
  for (auto j : outputs) {
    std::vector<const CiuResult*> rs;
    for (const auto& r : results) {
      if (r.output_index == j) rs.push_back(&r);
    }
    std::stable_sort(rs.begin(), rs.end(),
                     [](const CiuResult* a, const CiuResult* b) { return a->ci > b->ci; });
    if (rs.size() > top_k) rs.resize(top_k);

    const auto& head = *rs.front();
    const std::string output = head.output_name.empty() ? "y" + std::to_string(j) : head.output_name;
    text << output << " is " << num3(head.y_context) << " because ";
    for (std::size_t k = 0; k < rs.size(); ++k) {
      const auto& r = *rs[k];
      if (k > 0) text << (k + 1 == rs.size() ? " and " : ", ");
      text << vocabulary.display_name(r.target) << " is " << words.cu_word(r.cu) << " ("
           << words.ci_word(r.ci) << ", CI=" << num3(r.ci) << ", CU=" << num3(r.cu) << ")";
    }
    text << ".\n";
  }
  return text.str();
}

json results_to_structured(const std::vector<CiuResult>& results) {
  json arr = json::array();
  for (const auto& r : results) arr.push_back(r);
  return arr;
}

std::vector<CiuResult> results_from_structured(const json& doc) {
  const json& arr = doc.is_object() ? doc.at("results") : doc;
  if (!arr.is_array()) throw CiuError("results document must be an array");
  return arr.get<std::vector<CiuResult>>();
}

json results_document(const std::vector<CiuResult>& results) {
  return {{"schema", "ciu-results"}, {"version", 1}, {"results", results_to_structured(results)}};
}

RenderConfig render_config_from_json(const json& j) {
  RenderConfig cfg;
  auto rgb = [](const json& v) {
    const auto c = v.get<std::vector<double>>();
    if (c.size() != 3) throw CiuError("colors must be [r, g, b] triples");
    return Rgb{c[0], c[1], c[2]};
  };
  cfg.colors.cu_neutral = j.value("cu_neutral", cfg.colors.cu_neutral);
  if (j.contains("colors")) {
    const auto& c = j["colors"];
    if (c.contains("red")) cfg.colors.red = rgb(c["red"]);
    if (c.contains("yellow")) cfg.colors.yellow = rgb(c["yellow"]);
    if (c.contains("dark_green")) cfg.colors.dark_green = rgb(c["dark_green"]);
  }
  if (j.contains("words")) {
    const auto& w = j["words"];
    if (w.contains("ci")) cfg.words.ci = w["ci"].get<std::vector<std::pair<double, std::string>>>();
    if (w.contains("cu")) cfg.words.cu = w["cu"].get<std::vector<std::pair<double, std::string>>>();
  }
  cfg.colors.validate();
  cfg.words.validate();
  return cfg;
}

}  // namespace ciu
