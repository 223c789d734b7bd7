#include "crc/synthetic.hpp"

#include <cmath>
#include <vector>

#include "crc/error.hpp"

namespace crc {

SyntheticSpec synthetic_preset(const std::string& kind) {
  SyntheticSpec spec;
  if (kind == "blobs") return spec;
  if (kind == "categorical") {
    spec.num_continuous = 0;
    spec.num_discrete = 4;
    return spec;
  }
  if (kind == "mixed") {
    spec.num_continuous = 2;
    spec.num_discrete = 2;
    spec.separation = 2.0;
    return spec;
  }
  throw Error("unknown synthetic dataset kind '" + kind + "' (expected blobs, categorical or mixed)");
}

Dataset generate_synthetic(const SyntheticSpec& spec, Rng& rng) {
  if (spec.num_classes < 2) throw Error("synthetic data needs at least two classes");
  if (spec.num_continuous < 0 || spec.num_discrete < 0 || spec.num_continuous + spec.num_discrete < 1) {
    throw Error("synthetic data needs at least one feature");
  }
  if (spec.num_discrete > 0 && spec.cardinality < 2) throw Error("discrete cardinality must be at least 2");

  const auto r = static_cast<std::size_t>(spec.num_classes);
  const auto dc = static_cast<std::size_t>(spec.num_continuous);
  const auto dd = static_cast<std::size_t>(spec.num_discrete);
  const auto k = static_cast<std::size_t>(spec.cardinality);

  // Centers at radius separation/2; two classes sit antipodally.
  std::vector<std::vector<double>> centers(r, std::vector<double>(dc, 0.0));
  for (std::size_t y = 0; y < r && dc > 0; ++y) {
    if (y == 1 && r == 2) {
      for (std::size_t j = 0; j < dc; ++j) centers[1][j] = -centers[0][j];
      break;
    }
    double len = 0.0;
    for (auto& c : centers[y]) {
      c = rng.normal();
      len += c * c;
    }
    len = std::sqrt(len);
    for (auto& c : centers[y]) c *= 0.5 * spec.separation / (len > 0 ? len : 1.0);
  }

  // Per class and discrete feature: weights exp(signal * N(0,1)), normalized.
  std::vector<std::vector<std::vector<double>>> tables(r, std::vector<std::vector<double>>(dd));
  for (std::size_t y = 0; y < r; ++y) {
    for (std::size_t j = 0; j < dd; ++j) {
      auto& p = tables[y][j];
      double total = 0.0;
      for (std::size_t x = 0; x < k; ++x) {
        p.push_back(std::exp(spec.discrete_signal * rng.normal()));
        total += p.back();
      }
      for (auto& v : p) v /= total;
    }
  }

  std::vector<int> cardinalities;
  for (std::size_t j = 0; j < dd; ++j) cardinalities.push_back(spec.cardinality);
  for (std::size_t j = 0; j < dc; ++j) cardinalities.push_back(0);
  Dataset dataset(FeatureSchema::make(cardinalities, spec.num_classes));

  std::vector<double> x(dd + dc);
  for (std::size_t i = 0; i < spec.size; ++i) {
    const auto y = static_cast<std::size_t>(rng.uniform_index(r));
    for (std::size_t j = 0; j < dd; ++j) {
      double u = rng.uniform01();
      std::size_t code = 0;
      while (code + 1 < k && u >= tables[y][j][code]) u -= tables[y][j][code++];
      x[j] = static_cast<double>(code);
    }
    for (std::size_t j = 0; j < dc; ++j) x[dd + j] = rng.normal(centers[y][j], 1.0);
    dataset.add(x, static_cast<int>(y));
  }
  return dataset;
}

}  // namespace crc
