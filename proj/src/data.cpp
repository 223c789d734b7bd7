#include "crc/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "crc/error.hpp"
#include "crc/format.hpp"

namespace crc {

namespace {

constexpr std::size_t kMaxDiscreteValues = 10;

std::string cell_position(std::size_t line, std::size_t column, const RawTable& table) {
  std::ostringstream msg;
  msg << "line " << line << ", column " << column + 1;
  if (column < table.header.size()) msg << " ('" << table.header[column] << "')";
  return msg.str();
}

// Numeric tokens sort by value (so "2" < "10"), anything else lexicographically.
std::vector<std::string> sorted_tokens(const std::set<std::string>& distinct) {
  std::vector<std::string> tokens(distinct.begin(), distinct.end());
  std::vector<double> numeric;
  numeric.reserve(tokens.size());
  for (const auto& token : tokens) {
    auto value = parse_double(token);
    if (!value) return tokens;
    numeric.push_back(*value);
  }
  std::vector<std::size_t> order(tokens.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return numeric[a] < numeric[b]; });
  std::vector<std::string> result;
  result.reserve(tokens.size());
  for (auto i : order) result.push_back(tokens[i]);
  return result;
}

std::vector<std::size_t> feature_columns(const RawTable& table) {
  std::vector<std::size_t> columns;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c != table.label_column) columns.push_back(c);
  }
  return columns;
}

int token_code(const std::vector<std::string>& tokens, const std::string& token) {
  auto it = std::find(tokens.begin(), tokens.end(), token);
  if (it == tokens.end()) return -1;
  return static_cast<int>(it - tokens.begin());
}

}  // namespace

void FeatureSchema::validate() const {
  if (features.empty()) throw Error("schema needs at least one feature");
  if (feature_names.size() != features.size()) throw Error("schema feature names do not match features");
  if (num_classes() < 2) throw Error("schema needs at least two classes");
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (auto* f = std::get_if<DiscreteFeature>(&features[i]); f && f->cardinality() < 2) {
      throw Error("discrete feature '" + feature_names[i] + "' has fewer than two categories");
    }
  }
}

FeatureSchema FeatureSchema::make(std::span<const int> cardinalities, int num_classes) {
  FeatureSchema schema;
  for (std::size_t i = 0; i < cardinalities.size(); ++i) {
    schema.feature_names.push_back("x" + std::to_string(i + 1));
    if (cardinalities[i] == 0) {
      schema.features.emplace_back(ContinuousFeature{});
    } else {
      DiscreteFeature f;
      for (int k = 1; k <= cardinalities[i]; ++k) f.categories.push_back(std::to_string(k));
      schema.features.emplace_back(std::move(f));
    }
  }
  schema.label_name = "y";
  for (int k = 1; k <= num_classes; ++k) schema.class_names.push_back(std::to_string(k));
  schema.validate();
  return schema;
}

void validate_instance(const FeatureSchema& schema, std::span<const double> x) {
  if (x.size() != schema.features.size()) {
    throw Error("instance has " + std::to_string(x.size()) + " values, schema has " +
                std::to_string(schema.features.size()) + " features");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw Error("feature " + std::to_string(i + 1) + " is not finite");
    if (auto* f = std::get_if<DiscreteFeature>(&schema.features[i])) {
      if (x[i] != std::floor(x[i]) || x[i] < 0 || x[i] >= f->cardinality()) {
        throw Error("feature " + std::to_string(i + 1) + " value " + format_double(x[i]) +
                    " is outside its support");
      }
    }
  }
}

void validate_label(const FeatureSchema& schema, int y) {
  if (y < 0 || y >= schema.num_classes()) {
    throw Error("label " + std::to_string(y) + " is outside 0.." + std::to_string(schema.num_classes() - 1));
  }
}

Dataset::Dataset(FeatureSchema schema) : schema_(std::move(schema)) {}

Dataset::Dataset(FeatureSchema schema, std::vector<double> values, std::vector<int> labels)
    : schema_(std::move(schema)), values_(std::move(values)), labels_(std::move(labels)) {
  const auto d = static_cast<std::size_t>(schema_.num_features());
  if (values_.size() != labels_.size() * d) throw Error("dataset values do not match label count");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    validate_instance(schema_, row(i));
    validate_label(schema_, labels_[i]);
  }
}

void Dataset::add(std::span<const double> x, int y) {
  validate_instance(schema_, x);
  validate_label(schema_, y);
  values_.insert(values_.end(), x.begin(), x.end());
  labels_.push_back(y);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out(schema_);
  const auto d = static_cast<std::size_t>(num_features());
  out.values_.reserve(indices.size() * d);
  out.labels_.reserve(indices.size());
  for (auto i : indices) {
    if (i >= size()) throw Error("subset index " + std::to_string(i) + " out of range");
    auto r = row(i);
    out.values_.insert(out.values_.end(), r.begin(), r.end());
    out.labels_.push_back(labels_[i]);
  }
  return out;
}

RawTable parse_csv(std::istream& in, const std::string& label_column) {
  RawTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    for (auto& cell : split(line, ',')) {
      auto t = trim(cell);
      if (t.size() >= 2 && t.front() == '"' && t.back() == '"') t = t.substr(1, t.size() - 2);
      cells.emplace_back(t);
    }
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw Error("line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                  " cells, expected " + std::to_string(table.header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].empty()) throw Error("empty cell at " + cell_position(line_no, c, table));
    }
    table.rows.push_back(std::move(cells));
  }
  if (table.header.empty()) throw Error("missing header row");
  if (table.rows.empty()) throw Error("no instances");

  // Name first, then "last", then a 1-based column number.
  auto named = std::find(table.header.begin(), table.header.end(), label_column);
  if (named != table.header.end()) {
    table.label_column = static_cast<std::size_t>(named - table.header.begin());
  } else if (label_column == "last") {
    table.label_column = table.header.size() - 1;
  } else if (auto index = parse_integer(label_column);
             index && *index >= 1 && static_cast<std::size_t>(*index) <= table.header.size()) {
    table.label_column = static_cast<std::size_t>(*index - 1);
  } else {
    throw Error("label column '" + label_column + "' not found in header");
  }
  if (table.header.size() < 2) throw Error("table needs at least one feature column besides the label");
  return table;
}

RawTable load_csv(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return parse_csv(in, label_column);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

Dataset infer_schema(const RawTable& table) {
  FeatureSchema schema;
  schema.label_name = table.header.at(table.label_column);

  std::set<std::string> label_tokens;
  for (const auto& row : table.rows) label_tokens.insert(row[table.label_column]);
  schema.class_names = sorted_tokens(label_tokens);
  if (schema.class_names.size() < 2) throw Error("label column needs at least two distinct values");

  for (auto c : feature_columns(table)) {
    std::set<std::string> distinct;
    for (const auto& row : table.rows) {
      distinct.insert(row[c]);
      if (distinct.size() > kMaxDiscreteValues) break;
    }
    schema.feature_names.push_back(table.header[c]);
    if (distinct.size() > kMaxDiscreteValues) {
      schema.features.emplace_back(ContinuousFeature{});
    } else if (distinct.size() < 2) {
      throw Error("column '" + table.header[c] + "' is constant");
    } else {
      schema.features.emplace_back(DiscreteFeature{sorted_tokens(distinct)});
    }
  }
  schema.validate();
  return encode(table, schema);
}

Dataset encode(const RawTable& table, const FeatureSchema& schema) {
  const auto columns = feature_columns(table);
  if (columns.size() != schema.features.size()) {
    throw Error("table has " + std::to_string(columns.size()) + " feature columns, schema has " +
                std::to_string(schema.features.size()));
  }
  std::vector<double> values;
  std::vector<int> labels;
  values.reserve(table.rows.size() * columns.size());
  labels.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = r + 2;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      const auto& token = row[columns[i]];
      if (auto* f = std::get_if<DiscreteFeature>(&schema.features[i])) {
        const int code = token_code(f->categories, token);
        if (code < 0) throw Error("unknown category '" + token + "' at " + cell_position(line, columns[i], table));
        values.push_back(code);
      } else {
        auto value = parse_double(token);
        if (!value) throw Error("non-numeric value '" + token + "' at " + cell_position(line, columns[i], table));
        values.push_back(*value);
      }
    }
    const int y = token_code(schema.class_names, row[table.label_column]);
    if (y < 0) throw Error("unknown label at " + cell_position(line, table.label_column, table));
    labels.push_back(y);
  }
  return Dataset(schema, std::move(values), std::move(labels));
}

void write_csv(std::ostream& out, const Dataset& dataset) {
  const auto& schema = dataset.schema();
  for (const auto& name : schema.feature_names) out << name << ',';
  out << schema.label_name << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto x = dataset.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (auto* f = std::get_if<DiscreteFeature>(&schema.features[j])) {
        out << f->categories[static_cast<std::size_t>(x[j])];
      } else {
        out << format_double(x[j]);
      }
      out << ',';
    }
    out << schema.class_names[static_cast<std::size_t>(dataset.label(i))] << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_csv(out, dataset);
}

FeatureScaler fit_feature_scaler(const Dataset& dataset) {
  if (dataset.empty()) throw Error("cannot fit a feature scaler on an empty dataset");
  const auto d = static_cast<std::size_t>(dataset.num_features());
  const auto m = static_cast<double>(dataset.size());
  FeatureScaler scaler{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  for (std::size_t j = 0; j < d; ++j) {
    if (is_discrete(dataset.schema().features[j])) continue;
    double sum = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) sum += dataset.row(i)[j];
    const double mean = sum / m;
    double ss = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) ss += (dataset.row(i)[j] - mean) * (dataset.row(i)[j] - mean);
    const double sd = std::sqrt(ss / m);
    scaler.shift[j] = mean;
    if (sd > 0.0) scaler.scale[j] = sd;
  }
  return scaler;
}

Dataset FeatureScaler::apply(const Dataset& dataset) const {
  const auto d = static_cast<std::size_t>(dataset.num_features());
  if (shift.size() != d || scale.size() != d) throw Error("feature scaler width does not match the dataset");
  std::vector<double> values(dataset.values().begin(), dataset.values().end());
  for (std::size_t j = 0; j < d; ++j) {
    if (is_discrete(dataset.schema().features[j])) continue;
    for (std::size_t i = 0; i < dataset.size(); ++i) values[i * d + j] = (values[i * d + j] - shift[j]) / scale[j];
  }
  return Dataset(dataset.schema(), std::move(values),
                 std::vector<int>(dataset.labels().begin(), dataset.labels().end()));
}

Split train_test_split(const Dataset& dataset, std::size_t train_size, std::size_t test_size,
                       Rng& rng) {
  if (train_size + test_size > dataset.size()) {
    throw Error("split sizes " + std::to_string(train_size) + " + " + std::to_string(test_size) +
                " exceed " + std::to_string(dataset.size()) + " instances");
  }
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_size));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(train_size),
                                order.begin() + static_cast<std::ptrdiff_t>(train_size + test_size));
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {dataset.subset(train), dataset.subset(test)};
}

}  // namespace crc
