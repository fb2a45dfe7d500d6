#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "chanlab/relu_net.hpp"

namespace chanlab {

/// One bit per hidden neuron, in layer order then neuron order:
/// 1 = pre-activation strictly positive.
struct ActivationPattern {
  std::vector<std::uint64_t> words;
  long n_bits = 0;

  bool get(long i) const { return (words[i >> 6] >> (i & 63)) & 1u; }
  void set(long i, bool v);
  bool operator==(const ActivationPattern& other) const;
  std::uint64_t hash() const;
};

struct PatternHasher {
  size_t operator()(const ActivationPattern& p) const { return static_cast<size_t>(p.hash()); }
};

/// The affine map a network realizes on one activation region.
struct RegionAffine {
  ActivationPattern pattern;
  Mat weight;
  Vec bias;
};

ActivationPattern activation_pattern(const MlpParams& params, const Vec& x);

/// Accumulate the masked layer maps W_i * diag(pattern_i) into the
/// region's equivalent (weight, bias).
RegionAffine region_affine(const MlpParams& params, const ActivationPattern& pattern);

struct LinearityCheck {
  bool pass = false;
  double residual = 0.0;
};

/// Compares forward(x) against the region map at x and at a small
/// same-pattern perturbation; residual is relative to max(1, |f|).
LinearityCheck verify_local_linearity(const MlpParams& params, const Vec& x, double tolerance);

/// Distinct activation patterns over sampled probe inputs (a lower bound
/// on the network's region count).
long count_regions_sampled(const MlpParams& params, const std::function<Vec()>& input_sampler,
                           long n_probes);

struct RegionOccupancy {
  ActivationPattern pattern;
  long train_count = 0;
  long probe_count = 0;
  double train_mse = 0.0;  // NaN when train_count == 0
};

struct OccupancyReport {
  std::vector<RegionOccupancy> regions;  // train_count desc, probe_count desc, hash
  long train_total = 0;
  long probe_total = 0;
  /// Fraction of probe inputs whose pattern contains no training sample.
  double empty_region_fraction = 0.0;
  double overall_train_mse = 0.0;
};

/// Assign every training and probe input to its pattern; report per-region
/// counts and training loss, and the empty-region probe fraction.
OccupancyReport region_occupancy(const MlpParams& params, const SampleSet& train_set,
                                 const SampleSet& probe_set);

/// CSV columns: pattern_hash,train_count,probe_count,region_mse
/// (region_mse empty for regions with no training samples).
void write_occupancy_csv(const OccupancyReport& report, const std::string& path);

}  // namespace chanlab
