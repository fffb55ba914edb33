#include "ciu/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>

namespace ciu {

std::vector<std::vector<std::string>> read_csv_records(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false, any = false;
  char c;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // Blank lines are skipped.
    if (!(record.size() == 1 && record.front().empty())) records.push_back(std::move(record));
    record.clear();
  };
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
      any = false;
    } else if (c == '\r') {
      if (in.peek() == '\n') continue;
      end_record();
      any = false;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw CiuError("unterminated quoted CSV field");
  if (any) end_record();
  return records;
}

namespace {

std::optional<double> parse_number(const std::string& text) {
  auto first = text.data();
  auto last = text.data() + text.size();
  while (first < last && std::isspace(static_cast<unsigned char>(*first))) ++first;
  while (last > first && std::isspace(static_cast<unsigned char>(last[-1]))) --last;
  if (first == last) return std::nullopt;
  if (*first == '+') ++first;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<double> distinct_sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

Dataset parse_csv(std::istream& in, const std::vector<std::string>& target_columns,
                  const std::vector<std::string>& categorical_columns) {
  const auto records = read_csv_records(in);
  if (records.empty()) throw CiuError("CSV has no header row");
  const auto& header = records.front();
  const std::size_t width = header.size();
  if (records.size() < 2) throw CiuError("CSV has no data rows");
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != width)
      throw CiuError("ragged CSV: row " + std::to_string(r) + " has " +
                     std::to_string(records[r].size()) + " fields, header has " +
                     std::to_string(width));
  }
  auto column_of = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw CiuError("CSV has no column named '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::size_t> target_cols;
  for (const auto& t : target_columns) target_cols.push_back(column_of(t));
  if (target_cols.empty()) throw CiuError("no target column given");
  std::set<std::size_t> categorical;
  for (const auto& c : categorical_columns) categorical.insert(column_of(c));

  const std::size_t n = records.size() - 1;
  auto cell = [&](std::size_t row, std::size_t col) -> const std::string& {
    return records[row + 1][col];
  };
  auto numeric_column = [&](std::size_t col) {
    std::vector<double> values(n);
    for (std::size_t r = 0; r < n; ++r) {
      auto v = parse_number(cell(r, col));
      if (!v)
        throw CiuError("non-numeric cell '" + cell(r, col) + "' at row " + std::to_string(r + 1) +
                       ", column '" + header[col] + "'");
      values[r] = *v;
    }
    return values;
  };
  auto column_is_numeric = [&](std::size_t col) {
    for (std::size_t r = 0; r < n; ++r) {
      if (!parse_number(cell(r, col))) return false;
    }
    return true;
  };
  auto encode = [&](std::size_t col, Dataset& ds) {
    std::vector<std::string> labels;
    for (std::size_t r = 0; r < n; ++r) labels.push_back(cell(r, col));
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    std::vector<double> codes(n);
    for (std::size_t r = 0; r < n; ++r)
      codes[r] = static_cast<double>(std::lower_bound(labels.begin(), labels.end(), cell(r, col)) -
                                     labels.begin());
    ds.encodings.push_back({header[col], labels});
    return codes;
  };

  Dataset ds;
  std::vector<std::vector<double>> feature_cols;
  for (std::size_t col = 0; col < width; ++col) {
    if (std::find(target_cols.begin(), target_cols.end(), col) != target_cols.end()) continue;
    const bool is_cat = categorical.count(col) > 0;
    if (is_cat) ds.categorical_features.push_back(ds.feature_names.size());
    ds.feature_names.push_back(header[col]);
    feature_cols.push_back(is_cat && !column_is_numeric(col) ? encode(col, ds) : numeric_column(col));
  }
  if (feature_cols.empty()) throw CiuError("CSV has no feature columns");

  std::vector<std::vector<double>> target_data;
  for (auto col : target_cols) {
    if (categorical.count(col) || !column_is_numeric(col)) {
      if (target_cols.size() != 1)
        throw CiuError("a class target column must be the only target");
      const auto codes = encode(col, ds);
      const auto& labels = ds.encodings.back().labels;
      for (std::size_t k = 0; k < labels.size(); ++k) {
        ds.target_names.push_back(labels[k]);
        std::vector<double> onehot(n);
        for (std::size_t r = 0; r < n; ++r) onehot[r] = codes[r] == static_cast<double>(k) ? 1.0 : 0.0;
        target_data.push_back(std::move(onehot));
      }
      ds.classification = true;
    } else {
      ds.target_names.push_back(header[col]);
      target_data.push_back(numeric_column(col));
    }
  }

  ds.features = Matrix(n, feature_cols.size());
  for (std::size_t c = 0; c < feature_cols.size(); ++c)
    for (std::size_t r = 0; r < n; ++r) ds.features(r, c) = feature_cols[c][r];
  ds.targets = Matrix(n, target_data.size());
  for (std::size_t c = 0; c < target_data.size(); ++c)
    for (std::size_t r = 0; r < n; ++r) ds.targets(r, c) = target_data[c][r];
  return ds;
}

Dataset load_csv(const std::string& path, const std::vector<std::string>& target_columns,
                 const std::vector<std::string>& categorical_columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CiuError("cannot open '" + path + "'");
  return parse_csv(in, target_columns, categorical_columns);
}

std::vector<InputDescriptor> Dataset::input_descriptors() const {
  std::vector<InputDescriptor> inputs;
  for (std::size_t c = 0; c < feature_names.size(); ++c) {
    const auto col = features.column(c);
    InputDescriptor d;
    d.name = feature_names[c];
    d.index = c;
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    d.min_value = *lo;
    d.max_value = *hi;
    if (std::find(categorical_features.begin(), categorical_features.end(), c) !=
        categorical_features.end()) {
      d.kind = FeatureKind::categorical;
      d.categories = distinct_sorted(col);
    }
    inputs.push_back(std::move(d));
  }
  return inputs;
}

std::vector<OutputDescriptor> Dataset::output_descriptors() const {
  std::vector<OutputDescriptor> outputs;
  for (std::size_t j = 0; j < target_names.size(); ++j) {
    OutputDescriptor o{target_names[j], j, 0.0, 1.0};
    if (!classification) {
      const auto col = targets.column(j);
      const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      o.absmin = *lo;
      o.absmax = *hi;
    }
    outputs.push_back(std::move(o));
  }
  return outputs;
}

}  // namespace ciu
