#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "crc/data.hpp"

namespace crc {

// Floors that keep statistics mappable to valid parameters.
inline constexpr double kCountFloor = 1e-9;
inline constexpr double kVarianceFloor = 1e-6;

/// Block structure of a naive Bayes statistics vector:
///   [class counts (r)] then per feature either
///   r x r_i counts (row = class) or r x 3 moments (1, x, x^2).
class StatsLayout {
 public:
  struct Block {
    bool discrete = false;
    int width = 0;  // r_i for discrete, 3 for continuous
    std::size_t offset = 0;

    bool operator==(const Block&) const = default;
  };

  explicit StatsLayout(const FeatureSchema& schema);

  int num_classes() const { return num_classes_; }
  int num_features() const { return static_cast<int>(blocks_.size()); }
  const Block& block(int feature) const { return blocks_[static_cast<std::size_t>(feature)]; }
  std::size_t size() const { return size_; }

  bool operator==(const StatsLayout&) const = default;

 private:
  int num_classes_ = 0;
  std::vector<Block> blocks_;
  std::size_t size_ = 0;
};

/// Additive sufficient statistics. Supports componentwise addition and
/// scaling; all vectors combined must share the same layout.
class StatsVector {
 public:
  StatsVector() = default;
  explicit StatsVector(std::shared_ptr<const StatsLayout> layout);
  explicit StatsVector(const FeatureSchema& schema);

  const StatsLayout& layout() const { return *layout_; }
  const std::shared_ptr<const StatsLayout>& layout_ptr() const { return layout_; }
  int num_classes() const { return layout_->num_classes(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double& class_count(int y) { return values_[static_cast<std::size_t>(y)]; }
  double class_count(int y) const { return values_[static_cast<std::size_t>(y)]; }
  double& count(int feature, int y, int x) { return values_[index(feature, y, x)]; }
  double count(int feature, int y, int x) const { return values_[index(feature, y, x)]; }
  // k = 0, 1, 2 for the zeroth, first and second moment.
  double& moment(int feature, int y, int k) { return values_[index(feature, y, k)]; }
  double moment(int feature, int y, int k) const { return values_[index(feature, y, k)]; }

  // Equivalent sample size: total class-count mass.
  double ess() const;

  StatsVector& operator+=(const StatsVector& other);
  StatsVector& operator-=(const StatsVector& other);
  StatsVector& operator*=(double factor);
  // this += factor * other
  StatsVector& add_scaled(const StatsVector& other, double factor);

  friend StatsVector operator+(StatsVector a, const StatsVector& b) { return a += b; }
  friend StatsVector operator-(StatsVector a, const StatsVector& b) { return a -= b; }
  friend StatsVector operator*(StatsVector a, double c) { return a *= c; }
  friend StatsVector operator*(double c, StatsVector a) { return a *= c; }

  bool operator==(const StatsVector& other) const;

 private:
  std::size_t index(int feature, int y, int k) const {
    const auto& b = layout_->block(feature);
    return b.offset + static_cast<std::size_t>(y * b.width + k);
  }
  void check_compatible(const StatsVector& other) const;

  std::shared_ptr<const StatsLayout> layout_;
  std::vector<double> values_;
};

struct Gaussian {
  double mean = 0.0;
  double var = 1.0;
  bool operator==(const Gaussian&) const = default;
};

/// p(x_i | y) for a discrete feature, row-major r x r_i.
struct CategoricalTable {
  int cardinality = 0;
  std::vector<double> probs;
  double prob(int y, int x) const { return probs[static_cast<std::size_t>(y * cardinality + x)]; }
  bool operator==(const CategoricalTable&) const = default;
};

/// One Gaussian per class for a continuous feature.
struct GaussianTable {
  std::vector<Gaussian> per_class;
  bool operator==(const GaussianTable&) const = default;
};

using FeatureParams = std::variant<CategoricalTable, GaussianTable>;

struct NBParams {
  std::vector<double> class_probs;
  std::vector<FeatureParams> features;

  int num_classes() const { return static_cast<int>(class_probs.size()); }
  bool operator==(const NBParams&) const = default;
};

// Statistics of a single labeled instance.
StatsVector stat_map_instance(const FeatureSchema& schema, std::span<const double> x, int y);
// Sum of instance statistics over the dataset.
StatsVector stat_map_dataset(const Dataset& dataset);
// Statistics expected under the model's class posterior; labels are ignored.
StatsVector prob_stat_map(const Dataset& dataset, const NBParams& params);

NBParams param_map(const StatsVector& stats);

std::vector<double> posterior(const NBParams& params, std::span<const double> x);
int predict(const NBParams& params, std::span<const double> x);
// Lowest index wins ties.
int argmax(std::span<const double> scores);

StatsVector uniform_init(const FeatureSchema& schema, double m0);

struct Errors {
  double err01 = 0.0;
  double soft = 0.0;
};
Errors evaluate(const NBParams& params, const Dataset& dataset);

/// Floors counts and zeroth moments at kCountFloor and raises second moments
/// so that each implied variance is at least kVarianceFloor. Returns true if
/// anything changed. Idempotent.
bool project_in_place(StatsVector& stats);

// Plain-text "key = value" dumps, one component per line, 1-based indices.
void dump(std::ostream& out, const StatsVector& stats);
void dump(std::ostream& out, const NBParams& params);
std::string dump_string(const StatsVector& stats);
std::string dump_string(const NBParams& params);

/// Precomputed log tables for scoring many instances with one parameter set.
class NBScorer {
 public:
  explicit NBScorer(const NBParams& params);

  // Writes log p(x, y) for every class into `out` (size r).
  void log_joint(std::span<const double> x, std::span<double> out) const;
  // Normalized posterior into `out`, computed with max-subtraction.
  void posterior(std::span<const double> x, std::span<double> out) const;

  int num_classes() const { return num_classes_; }

 private:
  struct FeatureTerm {
    bool discrete = false;
    int cardinality = 0;
    std::vector<double> log_probs;  // discrete: r x r_i
    std::vector<double> mean, inv_var, log_norm;  // continuous: per class
  };
  int num_classes_ = 0;
  std::vector<double> log_class_;
  std::vector<FeatureTerm> terms_;
};

/// Naive Bayes as a closed-form model: the statistics mapping and parameter
/// mapping pair consumed by the calibration algorithms.
struct NaiveBayes {
  using Stats = StatsVector;
  using Params = NBParams;

  static Stats stat_map(const Dataset& dataset) { return stat_map_dataset(dataset); }
  static Stats prob_stat_map(const Dataset& dataset, const Params& params) {
    return crc::prob_stat_map(dataset, params);
  }
  static Params param_map(const Stats& stats) { return crc::param_map(stats); }
  static bool project(Stats& stats) { return project_in_place(stats); }
  static Errors evaluate(const Params& params, const Dataset& dataset) {
    return crc::evaluate(params, dataset);
  }
};

}  // namespace crc
