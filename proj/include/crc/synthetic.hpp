#pragma once

#include <cstddef>
#include <string>

#include "crc/data.hpp"
#include "crc/rng.hpp"

namespace crc {

/// Class-conditional generator for test and demo data. Labels are drawn
/// uniformly. Continuous features are unit-variance Gaussians around class
/// centers `separation` apart on average; discrete features follow a random
/// categorical table per class, sharpened by `discrete_signal` (0 = no
/// dependence on the class).
struct SyntheticSpec {
  std::size_t size = 1000;
  int num_classes = 2;
  int num_continuous = 2;
  int num_discrete = 0;
  int cardinality = 3;
  double separation = 6.0;
  double discrete_signal = 1.0;
};

// Preset names: "blobs" (continuous only), "categorical" (discrete only),
// "mixed" (both).
SyntheticSpec synthetic_preset(const std::string& kind);

Dataset generate_synthetic(const SyntheticSpec& spec, Rng& rng);

}  // namespace crc
