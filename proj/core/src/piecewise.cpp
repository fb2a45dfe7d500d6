#include "chanlab/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace chanlab {

void ActivationPattern::set(long i, bool v) {
  if (v)
    words[i >> 6] |= (std::uint64_t{1} << (i & 63));
  else
    words[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
}

bool ActivationPattern::operator==(const ActivationPattern& other) const {
  return n_bits == other.n_bits && words == other.words;
}

std::uint64_t ActivationPattern::hash() const {
  // FNV-1a over the packed words.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint64_t w : words) {
    for (int b = 0; b < 8; ++b) {
      h ^= (w >> (8 * b)) & 0xFF;
      h *= 0x100000001b3ull;
    }
  }
  h ^= static_cast<std::uint64_t>(n_bits);
  h *= 0x100000001b3ull;
  return h;
}

ActivationPattern activation_pattern(const MlpParams& params, const Vec& x) {
  ActivationPattern p;
  p.n_bits = params.hidden_neurons();
  p.words.assign(static_cast<size_t>((p.n_bits + 63) / 64), 0);
  Vec a = x;
  long bit = 0;
  const size_t n = params.layers.size();
  for (size_t i = 0; i + 1 < n; ++i) {
    Vec z = params.layers[i].weight * a + params.layers[i].bias;
    for (Eigen::Index j = 0; j < z.size(); ++j, ++bit) p.set(bit, z(j) > 0.0);
    a = z.cwiseMax(0.0);
  }
  return p;
}

RegionAffine region_affine(const MlpParams& params, const ActivationPattern& pattern) {
  if (pattern.n_bits != params.hidden_neurons())
    throw std::invalid_argument("pattern length mismatch");
  const size_t n = params.layers.size();
  RegionAffine region;
  region.pattern = pattern;
  region.weight = params.layers[0].weight;
  region.bias = params.layers[0].bias;
  long bit = 0;
  for (size_t i = 1; i < n; ++i) {
    const Eigen::Index width = params.layers[i].weight.cols();
    // Mask the previous layer's output rows per the pattern, then feed
    // through the next affine map.
    for (Eigen::Index j = 0; j < width; ++j, ++bit) {
      if (!pattern.get(bit)) {
        region.weight.row(j).setZero();
        region.bias(j) = 0.0;
      }
    }
    region.weight = params.layers[i].weight * region.weight;
    region.bias = params.layers[i].weight * region.bias + params.layers[i].bias;
  }
  return region;
}

LinearityCheck verify_local_linearity(const MlpParams& params, const Vec& x, double tolerance) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const ActivationPattern pattern = activation_pattern(params, x);
  const RegionAffine region = region_affine(params, pattern);

  const auto rel_resid = [&](const Vec& p) {
    const Vec f = forward(params, p);
    const Vec g = region.weight * p + region.bias;
    const double scale = std::max(1.0, f.cwiseAbs().maxCoeff());
    return (f - g).cwiseAbs().maxCoeff() / scale;
  };

  double resid = rel_resid(x);

  // Probe a nearby input with the same pattern; shrink the step until the
  // pattern holds (a kink may sit arbitrarily close).
  Rng probe_rng(0x9E3779B97F4A7C15ull ^ static_cast<std::uint64_t>(pattern.hash()), 7);
  double step = 1e-6 * (1.0 + x.norm());
  for (int attempt = 0; attempt < 40; ++attempt) {
    Vec delta(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) delta(i) = probe_rng.gaussian();
    const Vec xp = x + step * delta / std::max(delta.norm(), 1e-300);
    if (activation_pattern(params, xp) == pattern) {
      resid = std::max(resid, rel_resid(xp));
      break;
    }
    step *= 0.5;
  }
  return LinearityCheck{resid <= tolerance, resid};
}

long count_regions_sampled(const MlpParams& params, const std::function<Vec()>& input_sampler,
                           long n_probes) {
  if (n_probes < 1) throw std::invalid_argument("n_probes must be >= 1");
  std::unordered_set<ActivationPattern, PatternHasher> seen;
  for (long i = 0; i < n_probes; ++i) seen.insert(activation_pattern(params, input_sampler()));
  return static_cast<long>(seen.size());
}

OccupancyReport region_occupancy(const MlpParams& params, const SampleSet& train_set,
                                 const SampleSet& probe_set) {
  if (train_set.empty() || probe_set.empty())
    throw std::invalid_argument("occupancy needs nonempty train and probe sets");

  struct Bucket {
    long train_count = 0;
    long probe_count = 0;
    double loss_sum = 0.0;
  };
  std::unordered_map<ActivationPattern, Bucket, PatternHasher> buckets;

  const Mat train_pred = forward_batch(params, train_set.x);
  double overall = 0.0;
  for (long m = 0; m < train_set.size(); ++m) {
    const double loss = (train_pred.col(m) - train_set.h.col(m)).squaredNorm();
    overall += loss;
    Bucket& b = buckets[activation_pattern(params, train_set.x.col(m))];
    ++b.train_count;
    b.loss_sum += loss;
  }

  long empty_probes = 0;
  for (long m = 0; m < probe_set.size(); ++m) {
    Bucket& b = buckets[activation_pattern(params, probe_set.x.col(m))];
    ++b.probe_count;
    if (b.train_count == 0) ++empty_probes;
  }

  OccupancyReport report;
  report.train_total = train_set.size();
  report.probe_total = probe_set.size();
  report.overall_train_mse = overall / static_cast<double>(train_set.size());
  report.empty_region_fraction =
      static_cast<double>(empty_probes) / static_cast<double>(probe_set.size());
  report.regions.reserve(buckets.size());
  for (auto& [pattern, b] : buckets) {
    RegionOccupancy r;
    r.pattern = pattern;
    r.train_count = b.train_count;
    r.probe_count = b.probe_count;
    r.train_mse = b.train_count > 0 ? b.loss_sum / static_cast<double>(b.train_count)
                                    : std::numeric_limits<double>::quiet_NaN();
    report.regions.push_back(std::move(r));
  }
  std::sort(report.regions.begin(), report.regions.end(),
            [](const RegionOccupancy& a, const RegionOccupancy& b) {
              if (a.train_count != b.train_count) return a.train_count > b.train_count;
              if (a.probe_count != b.probe_count) return a.probe_count > b.probe_count;
              return a.pattern.hash() < b.pattern.hash();
            });
  return report;
}

void write_occupancy_csv(const OccupancyReport& report, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open occupancy csv for writing: " + path);
  os << "pattern_hash,train_count,probe_count,region_mse\n";
  char buf[64];
  for (const auto& r : report.regions) {
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(r.pattern.hash()));
    os << buf << ',' << r.train_count << ',' << r.probe_count << ',';
    if (r.train_count > 0) {
      std::snprintf(buf, sizeof(buf), "%.12g", r.train_mse);
      os << buf;
    }
    os << '\n';
  }
  if (!os) throw std::runtime_error("occupancy csv write failed: " + path);
}

}  // namespace chanlab
