#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "crc/rng.hpp"

namespace crc {

/// Categorical feature. `categories[k]` is the original token of code k;
/// codes are 0-based internally and 1-based in every exported file.
struct DiscreteFeature {
  std::vector<std::string> categories;

  int cardinality() const { return static_cast<int>(categories.size()); }
  bool operator==(const DiscreteFeature&) const = default;
};

struct ContinuousFeature {
  bool operator==(const ContinuousFeature&) const = default;
};

using FeatureSpec = std::variant<DiscreteFeature, ContinuousFeature>;

inline bool is_discrete(const FeatureSpec& spec) {
  return std::holds_alternative<DiscreteFeature>(spec);
}

struct FeatureSchema {
  std::vector<std::string> feature_names;
  std::vector<FeatureSpec> features;
  std::string label_name;
  std::vector<std::string> class_names;  // sorted tokens; index = class code

  int num_features() const { return static_cast<int>(features.size()); }
  int num_classes() const { return static_cast<int>(class_names.size()); }

  // Throws Error if d < 1, r < 2, or any discrete cardinality < 2.
  void validate() const;

  // Builds a schema with generated names; handy for synthetic data and tests.
  // `cardinalities[i] == 0` marks feature i continuous.
  static FeatureSchema make(std::span<const int> cardinalities, int num_classes);

  bool operator==(const FeatureSchema&) const = default;
};

/// Labeled instances. Values are stored row-major; a discrete value is its
/// 0-based category code held exactly as a double.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(FeatureSchema schema);
  Dataset(FeatureSchema schema, std::vector<double> values, std::vector<int> labels);

  const FeatureSchema& schema() const { return schema_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  int num_features() const { return schema_.num_features(); }
  int num_classes() const { return schema_.num_classes(); }

  std::span<const double> row(std::size_t i) const {
    const auto d = static_cast<std::size_t>(num_features());
    return {values_.data() + i * d, d};
  }
  int label(std::size_t i) const { return labels_[i]; }
  std::span<const int> labels() const { return labels_; }
  std::span<const double> values() const { return values_; }

  // Validates the instance against the schema before appending.
  void add(std::span<const double> x, int y);

  Dataset subset(std::span<const std::size_t> indices) const;

  bool operator==(const Dataset&) const = default;

 private:
  FeatureSchema schema_;
  std::vector<double> values_;
  std::vector<int> labels_;
};

// Throws Error when x does not fit the schema (wrong width, category out of
// range or non-integral, non-finite continuous value).
void validate_instance(const FeatureSchema& schema, std::span<const double> x);
void validate_label(const FeatureSchema& schema, int y);

/// Untyped CSV contents.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t label_column = 0;
};

// `label_column` is a header name, "last", or a 1-based column number.
RawTable parse_csv(std::istream& in, const std::string& label_column);
RawTable load_csv(const std::filesystem::path& path, const std::string& label_column);

// Applies the <=10-distinct-values rule and sorted-token encoding.
Dataset infer_schema(const RawTable& table);

// Encodes a table under a known schema (tokens must already be known).
Dataset encode(const RawTable& table, const FeatureSchema& schema);

// Writes original tokens for discrete columns and labels, shortest
// round-trip decimals for continuous ones. Label column goes last.
void write_csv(std::ostream& out, const Dataset& dataset);
void write_csv(const std::filesystem::path& path, const Dataset& dataset);

/// Affine map x -> (x - shift) / scale on continuous columns; discrete
/// columns pass through unchanged.
struct FeatureScaler {
  std::vector<double> shift;
  std::vector<double> scale;

  Dataset apply(const Dataset& dataset) const;
};

// Population mean and standard deviation of each continuous column. A
// constant column gets scale 1.
FeatureScaler fit_feature_scaler(const Dataset& dataset);

struct Split {
  Dataset train;
  Dataset test;
};

Split train_test_split(const Dataset& dataset, std::size_t train_size, std::size_t test_size,
                       Rng& rng);

}  // namespace crc
