#include "crc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "crc/error.hpp"
#include "crc/format.hpp"

namespace crc {

StatsLayout::StatsLayout(const FeatureSchema& schema) : num_classes_(schema.num_classes()) {
  schema.validate();
  std::size_t offset = static_cast<std::size_t>(num_classes_);
  for (const auto& spec : schema.features) {
    Block b;
    if (auto* f = std::get_if<DiscreteFeature>(&spec)) {
      b.discrete = true;
      b.width = f->cardinality();
    } else {
      b.width = 3;
    }
    b.offset = offset;
    offset += static_cast<std::size_t>(num_classes_ * b.width);
    blocks_.push_back(b);
  }
  size_ = offset;
}

StatsVector::StatsVector(std::shared_ptr<const StatsLayout> layout)
    : layout_(std::move(layout)), values_(layout_->size(), 0.0) {}

StatsVector::StatsVector(const FeatureSchema& schema)
    : StatsVector(std::make_shared<const StatsLayout>(schema)) {}

double StatsVector::ess() const {
  double total = 0.0;
  for (int y = 0; y < num_classes(); ++y) total += class_count(y);
  return total;
}

void StatsVector::check_compatible(const StatsVector& other) const {
  if (layout_ != other.layout_ && !(layout_ && other.layout_ && *layout_ == *other.layout_)) {
    throw Error("statistics vectors have different layouts");
  }
}

StatsVector& StatsVector::operator+=(const StatsVector& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

StatsVector& StatsVector::operator-=(const StatsVector& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

StatsVector& StatsVector::operator*=(double factor) {
  for (auto& v : values_) v *= factor;
  return *this;
}

StatsVector& StatsVector::add_scaled(const StatsVector& other, double factor) {
  check_compatible(other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += factor * other.values_[i];
  return *this;
}

bool StatsVector::operator==(const StatsVector& other) const {
  if (!layout_ || !other.layout_) return layout_ == other.layout_;
  return *layout_ == *other.layout_ && values_ == other.values_;
}

namespace {

// Adds weight * s(x, y) into stats.
void accumulate(StatsVector& stats, std::span<const double> x, int y, double weight) {
  stats.class_count(y) += weight;
  const auto& layout = stats.layout();
  for (int i = 0; i < layout.num_features(); ++i) {
    const double v = x[static_cast<std::size_t>(i)];
    if (layout.block(i).discrete) {
      stats.count(i, y, static_cast<int>(v)) += weight;
    } else {
      stats.moment(i, y, 0) += weight;
      stats.moment(i, y, 1) += weight * v;
      stats.moment(i, y, 2) += weight * v * v;
    }
  }
}

}  // namespace

StatsVector stat_map_instance(const FeatureSchema& schema, std::span<const double> x, int y) {
  validate_instance(schema, x);
  validate_label(schema, y);
  StatsVector stats(schema);
  accumulate(stats, x, y, 1.0);
  return stats;
}

StatsVector stat_map_dataset(const Dataset& dataset) {
  if (dataset.empty()) throw Error("cannot map statistics of an empty dataset");
  StatsVector stats(dataset.schema());
  for (std::size_t i = 0; i < dataset.size(); ++i) accumulate(stats, dataset.row(i), dataset.label(i), 1.0);
  return stats;
}

StatsVector prob_stat_map(const Dataset& dataset, const NBParams& params) {
  StatsVector stats(dataset.schema());
  const NBScorer scorer(params);
  if (scorer.num_classes() != dataset.num_classes()) throw Error("parameters do not match dataset classes");
  std::vector<double> post(static_cast<std::size_t>(scorer.num_classes()));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto x = dataset.row(i);
    scorer.posterior(x, post);
    for (int y = 0; y < scorer.num_classes(); ++y) accumulate(stats, x, y, post[static_cast<std::size_t>(y)]);
  }
  return stats;
}

NBParams param_map(const StatsVector& stats) {
  const auto& layout = stats.layout();
  const int r = layout.num_classes();
  NBParams params;

  const double total = stats.ess();
  for (int y = 0; y < r; ++y) {
    if (!(stats.class_count(y) >= kCountFloor)) {
      throw Error("class count below floor; statistics were not projected");
    }
    params.class_probs.push_back(stats.class_count(y) / total);
  }

  for (int i = 0; i < layout.num_features(); ++i) {
    const auto& block = layout.block(i);
    if (block.discrete) {
      CategoricalTable table;
      table.cardinality = block.width;
      table.probs.resize(static_cast<std::size_t>(r * block.width));
      for (int y = 0; y < r; ++y) {
        double row_total = 0.0;
        for (int x = 0; x < block.width; ++x) {
          if (!(stats.count(i, y, x) >= kCountFloor)) {
            throw Error("category count below floor; statistics were not projected");
          }
          row_total += stats.count(i, y, x);
        }
        for (int x = 0; x < block.width; ++x) {
          table.probs[static_cast<std::size_t>(y * block.width + x)] = stats.count(i, y, x) / row_total;
        }
      }
      params.features.emplace_back(std::move(table));
    } else {
      GaussianTable table;
      for (int y = 0; y < r; ++y) {
        const double s0 = stats.moment(i, y, 0);
        if (!(s0 >= kCountFloor)) throw Error("zeroth moment below floor; statistics were not projected");
        const double mean = stats.moment(i, y, 1) / s0;
        const double var = std::max(stats.moment(i, y, 2) / s0 - mean * mean, kVarianceFloor);
        table.per_class.push_back({mean, var});
      }
      params.features.emplace_back(std::move(table));
    }
  }
  return params;
}

NBScorer::NBScorer(const NBParams& params) : num_classes_(params.num_classes()) {
  for (double p : params.class_probs) log_class_.push_back(std::log(p));
  for (const auto& feature : params.features) {
    FeatureTerm term;
    if (auto* table = std::get_if<CategoricalTable>(&feature)) {
      term.discrete = true;
      term.cardinality = table->cardinality;
      for (double p : table->probs) term.log_probs.push_back(std::log(p));
    } else {
      const auto& gaussians = std::get<GaussianTable>(feature).per_class;
      for (const auto& g : gaussians) {
        term.mean.push_back(g.mean);
        term.inv_var.push_back(1.0 / g.var);
        term.log_norm.push_back(-0.5 * std::log(2.0 * std::numbers::pi * g.var));
      }
    }
    terms_.push_back(std::move(term));
  }
}

void NBScorer::log_joint(std::span<const double> x, std::span<double> out) const {
  for (int y = 0; y < num_classes_; ++y) {
    const auto yu = static_cast<std::size_t>(y);
    double score = log_class_[yu];
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      const auto& term = terms_[i];
      if (term.discrete) {
        score += term.log_probs[yu * static_cast<std::size_t>(term.cardinality) + static_cast<std::size_t>(x[i])];
      } else {
        const double diff = x[i] - term.mean[yu];
        score += term.log_norm[yu] - 0.5 * diff * diff * term.inv_var[yu];
      }
    }
    out[yu] = score;
  }
}

void NBScorer::posterior(std::span<const double> x, std::span<double> out) const {
  log_joint(x, out);
  const double top = *std::max_element(out.begin(), out.begin() + num_classes_);
  double total = 0.0;
  for (int y = 0; y < num_classes_; ++y) {
    auto& v = out[static_cast<std::size_t>(y)];
    v = std::exp(v - top);
    total += v;
  }
  for (int y = 0; y < num_classes_; ++y) out[static_cast<std::size_t>(y)] /= total;
}

std::vector<double> posterior(const NBParams& params, std::span<const double> x) {
  std::vector<double> out(static_cast<std::size_t>(params.num_classes()));
  NBScorer(params).posterior(x, out);
  return out;
}

int argmax(std::span<const double> scores) {
  return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

int predict(const NBParams& params, std::span<const double> x) {
  return argmax(posterior(params, x));
}

StatsVector uniform_init(const FeatureSchema& schema, double m0) {
  if (!(m0 > 0.0)) throw Error("equivalent sample size must be positive");
  StatsVector stats(schema);
  const auto& layout = stats.layout();
  const int r = layout.num_classes();
  const double per_class = m0 / r;
  for (int y = 0; y < r; ++y) {
    stats.class_count(y) = per_class;
    for (int i = 0; i < layout.num_features(); ++i) {
      const auto& block = layout.block(i);
      if (block.discrete) {
        for (int x = 0; x < block.width; ++x) stats.count(i, y, x) = m0 / (r * block.width);
      } else {
        // (m0/r, 0, m0/r): mean 0 and variance 1 in every class.
        stats.moment(i, y, 0) = per_class;
        stats.moment(i, y, 1) = 0.0;
        stats.moment(i, y, 2) = per_class;
      }
    }
  }
  return stats;
}

Errors evaluate(const NBParams& params, const Dataset& dataset) {
  if (dataset.empty()) throw Error("cannot evaluate on an empty dataset");
  const NBScorer scorer(params);
  std::vector<double> post(static_cast<std::size_t>(scorer.num_classes()));
  double wrong = 0.0;
  double soft = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    scorer.posterior(dataset.row(i), post);
    const int y = dataset.label(i);
    if (argmax(post) != y) wrong += 1.0;
    soft += 1.0 - post[static_cast<std::size_t>(y)];
  }
  const auto m = static_cast<double>(dataset.size());
  return {wrong / m, soft / m};
}

bool project_in_place(StatsVector& stats) {
  bool changed = false;
  auto floor = [&](double& v) {
    if (!(v >= kCountFloor)) {
      v = kCountFloor;
      changed = true;
    }
  };
  const auto& layout = stats.layout();
  for (int y = 0; y < layout.num_classes(); ++y) {
    floor(stats.class_count(y));
    for (int i = 0; i < layout.num_features(); ++i) {
      const auto& block = layout.block(i);
      if (block.discrete) {
        for (int x = 0; x < block.width; ++x) floor(stats.count(i, y, x));
      } else {
        floor(stats.moment(i, y, 0));
        const double s0 = stats.moment(i, y, 0);
        const double mean = stats.moment(i, y, 1) / s0;
        if (!(stats.moment(i, y, 2) / s0 - mean * mean >= kVarianceFloor)) {
          stats.moment(i, y, 2) = s0 * (mean * mean + kVarianceFloor);
          changed = true;
        }
      }
    }
  }
  return changed;
}

void dump(std::ostream& out, const StatsVector& stats) {
  const auto& layout = stats.layout();
  for (int y = 0; y < layout.num_classes(); ++y) {
    out << "class_count[" << y + 1 << "] = " << format_double(stats.class_count(y)) << '\n';
  }
  for (int i = 0; i < layout.num_features(); ++i) {
    const auto& block = layout.block(i);
    for (int y = 0; y < layout.num_classes(); ++y) {
      for (int k = 0; k < block.width; ++k) {
        out << "feature[" << i + 1 << "]." << (block.discrete ? "count" : "moment") << "[y=" << y + 1
            << "][" << (block.discrete ? "x=" : "") << (block.discrete ? k + 1 : k)
            << "] = " << format_double(stats.values()[block.offset + static_cast<std::size_t>(y * block.width + k)])
            << '\n';
      }
    }
  }
}

void dump(std::ostream& out, const NBParams& params) {
  for (int y = 0; y < params.num_classes(); ++y) {
    out << "class_prob[" << y + 1 << "] = " << format_double(params.class_probs[static_cast<std::size_t>(y)]) << '\n';
  }
  for (std::size_t i = 0; i < params.features.size(); ++i) {
    if (auto* table = std::get_if<CategoricalTable>(&params.features[i])) {
      for (int y = 0; y < params.num_classes(); ++y) {
        for (int x = 0; x < table->cardinality; ++x) {
          out << "feature[" << i + 1 << "].prob[y=" << y + 1 << "][x=" << x + 1
              << "] = " << format_double(table->prob(y, x)) << '\n';
        }
      }
    } else {
      const auto& per_class = std::get<GaussianTable>(params.features[i]).per_class;
      for (std::size_t y = 0; y < per_class.size(); ++y) {
        out << "feature[" << i + 1 << "].mean[y=" << y + 1 << "] = " << format_double(per_class[y].mean) << '\n';
        out << "feature[" << i + 1 << "].var[y=" << y + 1 << "] = " << format_double(per_class[y].var) << '\n';
      }
    }
  }
}

std::string dump_string(const StatsVector& stats) {
  std::ostringstream out;
  dump(out, stats);
  return out.str();
}

std::string dump_string(const NBParams& params) {
  std::ostringstream out;
  dump(out, params);
  return out.str();
}

}  // namespace crc
