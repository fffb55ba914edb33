#include "ciu/json_io.hpp"

#include <fstream>
#include <sstream>

namespace ciu {

void to_json(json& j, const InputDescriptor& d) {
  j = json{{"name", d.name},
           {"index", d.index},
           {"kind", to_string(d.kind)},
           {"min", d.min_value},
           {"max", d.max_value}};
  if (!d.categories.empty()) j["categories"] = d.categories;
  if (d.kind == FeatureKind::one_hot_member) j["group"] = d.group_id;
}

void from_json(const json& j, InputDescriptor& d) {
  d.name = j.at("name").get<std::string>();
  d.index = j.at("index").get<std::size_t>();
  d.kind = feature_kind_from_string(j.value("kind", std::string("continuous")));
  d.min_value = j.at("min").get<double>();
  d.max_value = j.at("max").get<double>();
  d.categories = j.value("categories", std::vector<double>{});
  d.group_id = j.value("group", -1);
}

void to_json(json& j, const OutputDescriptor& d) {
  j = json{{"name", d.name}, {"index", d.index}, {"absmin", d.absmin}, {"absmax", d.absmax}};
}

void from_json(const json& j, OutputDescriptor& d) {
  d.name = j.at("name").get<std::string>();
  d.index = j.at("index").get<std::size_t>();
  d.absmin = j.at("absmin").get<double>();
  d.absmax = j.at("absmax").get<double>();
}

void to_json(json& j, const Context& c) { j = c.values; }
void from_json(const json& j, Context& c) { c.values = j.get<std::vector<double>>(); }

void to_json(json& j, const IndexSet& s) { j = s.indices(); }
void from_json(const json& j, IndexSet& s) { s = IndexSet(j.get<std::vector<std::size_t>>()); }

void to_json(json& j, const OutputRangeEstimate& r) {
  j = json{{"cmin", r.cmin},
           {"cmax", r.cmax},
           {"n_samples", r.n_samples},
           {"contains_context", r.contains_context},
           {"studied", r.studied.indices()}};
  if (r.y_context) j["y_context"] = *r.y_context;
}

void from_json(const json& j, OutputRangeEstimate& r) {
  r.cmin = j.at("cmin").get<double>();
  r.cmax = j.at("cmax").get<double>();
  r.n_samples = j.at("n_samples").get<std::size_t>();
  r.contains_context = j.at("contains_context").get<bool>();
  r.y_context = j.contains("y_context") ? std::optional(j["y_context"].get<double>())
                                        : std::nullopt;
  const auto studied = j.value("studied", std::vector<std::size_t>{});
  r.studied = studied.empty() ? IndexSet{} : IndexSet(studied);
}

void to_json(json& j, const CiuResult& r) {
  j = json{{"target", r.target},
           {"indices", r.indices.indices()},
           {"output", r.output_name},
           {"output_index", r.output_index},
           {"ci", r.ci},
           {"cu", r.cu},
           {"cmin", r.cmin},
           {"cmax", r.cmax},
           {"y", r.y_context},
           {"n", r.n},
           {"seed", r.seed},
           {"degenerate_range", r.degenerate_range},
           {"overshoot", r.overshoot}};
}

void from_json(const json& j, CiuResult& r) {
  r.target = j.at("target").get<std::string>();
  const auto idx = j.value("indices", std::vector<std::size_t>{});
  r.indices = idx.empty() ? IndexSet{} : IndexSet(idx);
  r.output_name = j.value("output", std::string{});
  r.output_index = j.value("output_index", std::size_t{0});
  r.ci = j.at("ci").get<double>();
  r.cu = j.at("cu").get<double>();
  r.cmin = j.at("cmin").get<double>();
  r.cmax = j.at("cmax").get<double>();
  r.y_context = j.at("y").get<double>();
  r.n = j.at("n").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.degenerate_range = j.value("degenerate_range", false);
  r.overshoot = j.value("overshoot", false);
}

void to_json(json& j, const ConceptVocabulary& v) {
  j = json::array();
  for (const auto& c : v.concepts()) {
    json e{{"name", c.name}, {"indices", c.indices.indices()}, {"synonyms", c.synonyms}};
    if (c.parent) e["parent"] = *c.parent;
    j.push_back(std::move(e));
  }
}

void from_json(const json& j, ConceptVocabulary& v) {
  v = ConceptVocabulary{};
  for (const auto& e : j) {
    std::optional<std::string> parent;
    if (e.contains("parent") && !e["parent"].is_null()) parent = e["parent"].get<std::string>();
    v.add(e.at("name").get<std::string>(), IndexSet(e.at("indices").get<std::vector<std::size_t>>()),
          parent, e.value("synonyms", std::vector<std::string>{}));
  }
}

ConceptVocabulary vocabulary_from_config(const json& config,
                                         const std::vector<InputDescriptor>& inputs) {
  if (!config.contains("concepts") || !config["concepts"].is_array())
    throw CiuError("vocabulary config needs a 'concepts' array");
  ConceptVocabulary vocabulary;
  for (const auto& e : config["concepts"]) {
    const auto name = e.at("name").get<std::string>();
    std::vector<std::size_t> indices;
    for (const auto& f : e.at("features")) {
      if (f.is_number_integer()) {
        const auto index = f.get<long long>();
        if (index < 0 || static_cast<std::size_t>(index) >= inputs.size())
          throw CiuError("concept '" + name + "' references feature index " +
                         std::to_string(index) + " but the problem has " +
                         std::to_string(inputs.size()) + " features");
        indices.push_back(static_cast<std::size_t>(index));
        continue;
      }
      const auto feature = f.get<std::string>();
      auto it = std::find_if(inputs.begin(), inputs.end(),
                             [&](const InputDescriptor& d) { return d.name == feature; });
      if (it == inputs.end())
        throw CiuError("concept '" + name + "' references unknown feature '" + feature + "'");
      indices.push_back(it->index);
    }
    std::optional<std::string> parent;
    if (e.contains("parent") && !e["parent"].is_null()) parent = e["parent"].get<std::string>();
    vocabulary.add(name, IndexSet(std::move(indices)), parent,
                   e.value("synonyms", std::vector<std::string>{}));
  }
  vocabulary.validate(inputs.size());
  return vocabulary;
}

json vocabulary_to_config(const ConceptVocabulary& vocabulary,
                          const std::vector<InputDescriptor>& inputs) {
  json concepts = json::array();
  for (const auto& c : vocabulary.concepts()) {
    json features = json::array();
    for (auto i : c.indices) features.push_back(inputs.at(i).name);
    json e{{"name", c.name}, {"features", features}};
    if (c.parent) e["parent"] = *c.parent;
    if (!c.synonyms.empty()) e["synonyms"] = c.synonyms;
    concepts.push_back(std::move(e));
  }
  return json{{"concepts", concepts}};
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CiuError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw CiuError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CiuError("cannot write '" + path + "'");
  out << text;
}

}  // namespace ciu
