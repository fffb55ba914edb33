#include "ciu/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace ciu {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m;
  for (const auto& r : rows) m.append_row(r);
  return m;
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) {
    cols_ = values.size();
  } else if (values.size() != cols_) {
    throw CiuError("row of length " + std::to_string(values.size()) +
                   " appended to matrix with " + std::to_string(cols_) + " columns");
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix BlackBoxModel::eval_batch(const Matrix& rows) const {
  Matrix out(rows.rows(), output_count());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    auto y = eval(rows.row(r));
    if (y.size() != output_count()) {
      throw CiuError("model returned " + std::to_string(y.size()) + " outputs, expected " +
                     std::to_string(output_count()));
    }
    std::copy(y.begin(), y.end(), out.row(r).begin());
  }
  return out;
}

const char* to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::continuous:
      return "continuous";
    case FeatureKind::categorical:
      return "categorical";
    case FeatureKind::one_hot_member:
      return "one-hot";
  }
  return "continuous";
}

FeatureKind feature_kind_from_string(const std::string& text) {
  if (text == "continuous") return FeatureKind::continuous;
  if (text == "categorical") return FeatureKind::categorical;
  if (text == "one-hot") return FeatureKind::one_hot_member;
  throw CiuError("unknown feature kind '" + text + "'");
}

void InputDescriptor::validate() const {
  if (!std::isfinite(min_value) || !std::isfinite(max_value))
    throw CiuError("input '" + name + "': range bounds must be finite");
  if (min_value > max_value)
    throw CiuError("input '" + name + "': min_value > max_value");
  if (kind == FeatureKind::categorical) {
    if (categories.empty()) throw CiuError("categorical input '" + name + "' has no categories");
    for (double c : categories) {
      if (c < min_value || c > max_value)
        throw CiuError("categorical input '" + name + "' has a category outside its range");
    }
  }
  if (kind == FeatureKind::one_hot_member) {
    if (group_id < 0) throw CiuError("one-hot input '" + name + "' has no group id");
    if (min_value != 0.0 || max_value != 1.0)
      throw CiuError("one-hot group " + std::to_string(group_id) + ": member '" + name +
                     "' must have range [0,1]");
  }
}

void OutputDescriptor::validate() const {
  if (!std::isfinite(absmin) || !std::isfinite(absmax))
    throw CiuError("output '" + name + "': absolute range must be finite");
  if (!(absmin < absmax))
    throw CiuError("output '" + name + "': absmin must be strictly below absmax");
}

IndexSet::IndexSet(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
  if (indices_.empty()) throw CiuError("index set must not be empty");
  std::sort(indices_.begin(), indices_.end());
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end())
    throw CiuError("index set contains duplicate indices");
}

IndexSet IndexSet::all(std::size_t input_count) {
  std::vector<std::size_t> v(input_count);
  for (std::size_t i = 0; i < input_count; ++i) v[i] = i;
  return IndexSet(std::move(v));
}

bool IndexSet::contains(std::size_t index) const {
  return std::binary_search(indices_.begin(), indices_.end(), index);
}

bool IndexSet::is_subset_of(const IndexSet& other) const {
  return std::includes(other.indices_.begin(), other.indices_.end(), indices_.begin(),
                       indices_.end());
}

void IndexSet::check_bounds(std::size_t input_count) const {
  if (indices_.empty()) throw CiuError("index set must not be empty");
  if (indices_.back() >= input_count)
    throw CiuError("input index " + std::to_string(indices_.back()) + " out of range for " +
                   std::to_string(input_count) + " inputs");
}

void ConceptVocabulary::add(Concept entry) {
  if (entry.name.empty()) throw CiuError("concept name must not be empty");
  if (contains(entry.name)) throw CiuError("duplicate concept '" + entry.name + "'");
  if (entry.indices.empty()) throw CiuError("concept '" + entry.name + "' has no inputs");
  concepts_.push_back(std::move(entry));
}

void ConceptVocabulary::add(std::string name, IndexSet indices, std::optional<std::string> parent,
                            std::vector<std::string> synonyms) {
  add(Concept{std::move(name), std::move(indices), std::move(parent), std::move(synonyms)});
}

bool ConceptVocabulary::contains(const std::string& name) const {
  return std::any_of(concepts_.begin(), concepts_.end(),
                     [&](const Concept& c) { return c.name == name; });
}

const ConceptVocabulary::Concept& ConceptVocabulary::at(const std::string& name) const {
  for (const auto& c : concepts_) {
    if (c.name == name) return c;
  }
  throw CiuError("unknown concept '" + name + "'");
}

std::vector<const ConceptVocabulary::Concept*> ConceptVocabulary::children_of(
    const std::string& name) const {
  std::vector<const Concept*> out;
  for (const auto& c : concepts_) {
    if (c.parent && *c.parent == name) out.push_back(&c);
  }
  return out;
}

std::vector<const ConceptVocabulary::Concept*> ConceptVocabulary::top_level() const {
  std::vector<const Concept*> out;
  for (const auto& c : concepts_) {
    if (!c.parent) out.push_back(&c);
  }
  return out;
}

std::string ConceptVocabulary::display_name(const std::string& name) const {
  for (const auto& c : concepts_) {
    if (c.name == name && !c.synonyms.empty()) return c.synonyms.front();
  }
  return name;
}

void ConceptVocabulary::validate(std::size_t input_count) const {
  std::set<std::string> names;
  for (const auto& c : concepts_) {
    if (!names.insert(c.name).second) throw CiuError("duplicate concept '" + c.name + "'");
    try {
      c.indices.check_bounds(input_count);
    } catch (const CiuError& e) {
      throw CiuError("concept '" + c.name + "': " + e.what());
    }
  }
  for (const auto& c : concepts_) {
    if (!c.parent) continue;
    if (!contains(*c.parent))
      throw CiuError("concept '" + c.name + "' names unknown parent '" + *c.parent + "'");
    if (!c.indices.is_subset_of(at(*c.parent).indices))
      throw CiuError("concept '" + c.name + "' is not contained in its parent '" + *c.parent +
                     "'");
    // Parent chains must terminate.
    std::set<std::string> seen{c.name};
    const Concept* cur = &c;
    while (cur->parent) {
      if (!seen.insert(*cur->parent).second)
        throw CiuError("concept '" + c.name + "' has a cyclic parent chain");
      cur = &at(*cur->parent);
    }
  }
}

Problem::Problem(ModelPtr model, std::vector<InputDescriptor> inputs,
                 std::vector<OutputDescriptor> outputs)
    : model_(std::move(model)), inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
  if (!model_) throw CiuError("problem has no model");
  if (inputs_.size() != model_->input_count())
    throw CiuError("arity mismatch: model takes " + std::to_string(model_->input_count()) +
                   " inputs but " + std::to_string(inputs_.size()) + " descriptors were given");
  if (outputs_.size() != model_->output_count())
    throw CiuError("arity mismatch: model yields " + std::to_string(model_->output_count()) +
                   " outputs but " + std::to_string(outputs_.size()) +
                   " descriptors were given");
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    if (inputs_[i].index != i)
      throw CiuError("input descriptor '" + inputs_[i].name + "' has index " +
                     std::to_string(inputs_[i].index) + ", expected " + std::to_string(i));
    inputs_[i].validate();
  }
  for (std::size_t j = 0; j < outputs_.size(); ++j) {
    if (outputs_[j].index != j)
      throw CiuError("output descriptor '" + outputs_[j].name + "' has index " +
                     std::to_string(outputs_[j].index) + ", expected " + std::to_string(j));
    outputs_[j].validate();
  }
  // One-hot groups: at least two members and contiguous use of one id.
  std::map<int, std::size_t> group_sizes;
  for (const auto& d : inputs_) {
    if (d.kind == FeatureKind::one_hot_member) ++group_sizes[d.group_id];
  }
  for (auto [gid, size] : group_sizes) {
    if (size < 2)
      throw CiuError("malformed one-hot group " + std::to_string(gid) +
                     ": a group needs at least two members");
  }
}

std::optional<std::size_t> Problem::find_output(const std::string& name) const {
  for (const auto& o : outputs_) {
    if (o.name == name) return o.index;
  }
  return std::nullopt;
}

std::optional<std::size_t> Problem::find_input(const std::string& name) const {
  for (const auto& d : inputs_) {
    if (d.name == name) return d.index;
  }
  return std::nullopt;
}

std::vector<std::string> Problem::check_context(const Context& context) const {
  if (context.size() != input_count())
    throw CiuError("context has " + std::to_string(context.size()) + " values, model takes " +
                   std::to_string(input_count()));
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < context.size(); ++i) {
    const double v = context.values[i];
    if (!std::isfinite(v)) throw CiuError("context value " + std::to_string(i) + " is not finite");
    const auto& d = inputs_[i];
    if (v < d.min_value || v > d.max_value) {
      std::ostringstream msg;
      msg << "context value " << v << " for '" << d.name << "' lies outside [" << d.min_value
          << ", " << d.max_value << "]";
      warnings.push_back(msg.str());
    }
  }
  return warnings;
}

Problem validate_problem(ModelPtr model, std::vector<InputDescriptor> inputs,
                         std::vector<OutputDescriptor> outputs) {
  return Problem(std::move(model), std::move(inputs), std::move(outputs));
}

}  // namespace ciu
