#pragma once

// nlohmann::json conversions for the core types. Doubles are written with
// full round-trip precision by the json library.

#include <json.hpp>

#include "ciu/types.hpp"

namespace ciu {

using json = nlohmann::json;

void to_json(json& j, const InputDescriptor& d);
void from_json(const json& j, InputDescriptor& d);
void to_json(json& j, const OutputDescriptor& d);
void from_json(const json& j, OutputDescriptor& d);
void to_json(json& j, const Context& c);
void from_json(const json& j, Context& c);
void to_json(json& j, const IndexSet& s);
void from_json(const json& j, IndexSet& s);
void to_json(json& j, const OutputRangeEstimate& r);
void from_json(const json& j, OutputRangeEstimate& r);
void to_json(json& j, const CiuResult& r);
void from_json(const json& j, CiuResult& r);

/// Vocabulary with explicit indices, as stored next to a model.
void to_json(json& j, const ConceptVocabulary& v);
void from_json(const json& j, ConceptVocabulary& v);

/// Reads a vocabulary config that names features instead of indices:
///
///   {"concepts": [{"name": "Petal size and shape",
///                  "features": ["petal_length", "petal_width"],
///                  "parent": "...", "synonyms": ["..."]}]}
///
/// Feature names are resolved against `inputs`.
ConceptVocabulary vocabulary_from_config(const json& config,
                                         const std::vector<InputDescriptor>& inputs);
json vocabulary_to_config(const ConceptVocabulary& vocabulary,
                          const std::vector<InputDescriptor>& inputs);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace ciu
