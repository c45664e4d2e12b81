#ifndef QMOMENT_SIMULATE_HPP
#define QMOMENT_SIMULATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmoment/amplifier.hpp"
#include "qmoment/error.hpp"
#include "qmoment/fock_oracle.hpp"
#include "qmoment/moment_table.hpp"
#include "qmoment/rng.hpp"
#include "qmoment/state_spec.hpp"
#include "qmoment/tomography.hpp"

namespace qmoment {

struct HomodyneSample {
  double theta = 0.0;
  double x = 0.0;
};

struct HeterodyneSample {
  double q = 0.0;
  double p = 0.0;
};

/// Quadrature outcomes, stored phase by phase in the order of `phases`.
struct HomodyneRecord {
  std::vector<double> phases;
  std::vector<HomodyneSample> samples;
  std::uint64_t seed = 0;
  std::optional<StateSpec> state;
};

/// Amplifier settings used when a heterodyne record was taken through the chain.
struct ChainSettings {
  double gain = 1.0;
  double noise_temperature = 1.0;
};

/// I/Q outcomes S = q + i p with alpha = S / sqrt(2).
struct HeterodyneRecord {
  std::vector<HeterodyneSample> samples;
  std::uint64_t seed = 0;
  std::optional<StateSpec> state;
  std::optional<ChainSettings> amp;
};

inline constexpr std::size_t kSampleChunk = 4096;
inline constexpr int kInverseCdfPoints = 4096;
inline constexpr int kJackknifeBlocks = 20;
inline constexpr std::size_t kMinSamples = 100;

namespace detail {

struct LowMoments {
  cplx mean;
  double n_photons;
  double a2_abs;
};

inline LowMoments low_moments(const FockState& state) {
  const MomentTable t = oracle_moments(state, Ordering::Normal, 2);
  return {t(0, 1), t(1, 1).real(), std::abs(t(0, 2))};
}

inline FockState realize_for_sampling(const StateSpec& spec) { return realize(spec, suggested_cutoff(spec, 4) + 4); }

}  // namespace detail

/// Inverse-CDF sampler of the tomogram at a fixed set of phases. The CDF
/// tables are built once and reused for every call to `sample`.
class HomodyneSampler {
 public:
  HomodyneSampler(const StateSpec& spec, std::vector<double> phases) : spec_(spec), phases_(std::move(phases)) {
    if (phases_.empty()) throw Error(ErrorCode::InvalidParameter, "homodyne sampling needs at least one phase");
    const FockState state = detail::realize_for_sampling(spec);
    const auto low = detail::low_moments(state);
    const double spread = std::sqrt(0.5 + low.n_photons + low.a2_abs);
    half_range_ = std::numbers::sqrt2 * std::abs(low.mean) + 9.0 * spread;
    xs_.resize(kInverseCdfPoints);
    for (int i = 0; i < kInverseCdfPoints; ++i) {
      xs_[i] = -half_range_ + 2.0 * half_range_ * i / (kInverseCdfPoints - 1);
    }
    for (double theta : phases_) {
      std::vector<double> cdf(kInverseCdfPoints, 0.0);
      double prev = std::max(0.0, oracle_tomogram(state, theta, xs_[0]));
      for (int i = 1; i < kInverseCdfPoints; ++i) {
        const double cur = std::max(0.0, oracle_tomogram(state, theta, xs_[i]));
        cdf[i] = cdf[i - 1] + 0.5 * (prev + cur) * (xs_[i] - xs_[i - 1]);
        prev = cur;
      }
      for (double& c : cdf) c /= cdf.back();
      cdfs_.push_back(std::move(cdf));
    }
  }

  const std::vector<double>& phases() const { return phases_; }
  double half_range() const { return half_range_; }

  HomodyneRecord sample(std::size_t n_per_phase, std::uint64_t seed) const {
    if (n_per_phase < 1) throw Error(ErrorCode::InvalidParameter, "n_per_phase must be >= 1");
    HomodyneRecord rec;
    rec.phases = phases_;
    rec.seed = seed;
    rec.state = spec_;
    rec.samples.resize(phases_.size() * n_per_phase);
    const std::size_t chunks_per_phase = (n_per_phase + kSampleChunk - 1) / kSampleChunk;
    parallel_chunks(phases_.size() * chunks_per_phase, [&](std::size_t job) {
      const std::size_t phase = job / chunks_per_phase;
      const std::size_t chunk = job % chunks_per_phase;
      RandomStream rng(seed, (static_cast<std::uint64_t>(phase) << 32) | chunk);
      const std::size_t begin = chunk * kSampleChunk;
      const std::size_t end = std::min(n_per_phase, begin + kSampleChunk);
      for (std::size_t s = begin; s < end; ++s) {
        rec.samples[phase * n_per_phase + s] = {phases_[phase], invert(cdfs_[phase], rng.uniform())};
      }
    });
    return rec;
  }

 private:
  double invert(const std::vector<double>& cdf, double u) const {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.begin()) return xs_.front();
    if (it == cdf.end()) return xs_.back();
    const std::size_t i = static_cast<std::size_t>(it - cdf.begin());
    const double span = cdf[i] - cdf[i - 1];
    const double frac = span > 0.0 ? (u - cdf[i - 1]) / span : 0.5;
    return xs_[i - 1] + frac * (xs_[i] - xs_[i - 1]);
  }

  StateSpec spec_;
  std::vector<double> phases_;
  double half_range_ = 0.0;
  std::vector<double> xs_;
  std::vector<std::vector<double>> cdfs_;
};

inline HomodyneRecord sample_homodyne(const StateSpec& spec, const std::vector<double>& phases,
                                      std::size_t n_per_phase, std::uint64_t seed) {
  return HomodyneSampler(spec, phases).sample(n_per_phase, seed);
}

/// Rejection sampler of the Husimi function on a box around <a> against the
/// global bound Q <= 1/pi. Through an amplifier (signal port, thermal noise)
/// each accepted alpha becomes beta = sqrt(g) alpha + eta with circular
/// Gaussian eta, E|eta|^2 = nbar (g - 1).
class HeterodyneSampler {
 public:
  explicit HeterodyneSampler(const StateSpec& spec, std::optional<ChainSettings> amp = std::nullopt)
      : spec_(spec), amp_(amp), husimi_(detail::realize_for_sampling(spec)) {
    if (amp_) {
      require_gain(amp_->gain, "heterodyne chain");
      if (!(amp_->noise_temperature > 0.0)) {
        throw Error(ErrorCode::InvalidParameter, "noise temperature must be > 0");
      }
    }
    const FockState state = detail::realize_for_sampling(spec);
    const auto low = detail::low_moments(state);
    center_ = low.mean;
    const double variance = std::max(low.n_photons + 1.0 - std::norm(low.mean), 1.0);
    half_width_ = 6.0 * std::sqrt(variance);
  }

  HeterodyneRecord sample(std::size_t n, std::uint64_t seed) const {
    if (n < 1) throw Error(ErrorCode::InvalidParameter, "sample count must be >= 1");
    HeterodyneRecord rec;
    rec.seed = seed;
    rec.state = spec_;
    rec.amp = amp_;
    rec.samples.resize(n);
    const std::size_t chunks = (n + kSampleChunk - 1) / kSampleChunk;
    const double root_g = amp_ ? std::sqrt(amp_->gain) : 1.0;
    const double eta_sd =
        amp_ ? std::sqrt(0.5 * thermal_mean_photons(amp_->noise_temperature) * (amp_->gain - 1.0)) : 0.0;
    parallel_chunks(chunks, [&](std::size_t chunk) {
      RandomStream rng(seed, chunk);
      const std::size_t end = std::min(n, (chunk + 1) * kSampleChunk);
      for (std::size_t s = chunk * kSampleChunk; s < end; ++s) {
        cplx alpha;
        while (true) {
          alpha = center_ + cplx{half_width_ * (2.0 * rng.uniform() - 1.0), half_width_ * (2.0 * rng.uniform() - 1.0)};
          const double q = std::numbers::sqrt2 * alpha.real();
          const double p = std::numbers::sqrt2 * alpha.imag();
          if (rng.uniform() * (1.0 / std::numbers::pi) < husimi_(q, p)) break;
        }
        if (amp_) alpha = root_g * alpha + cplx{eta_sd * rng.normal(), eta_sd * rng.normal()};
        rec.samples[s] = {std::numbers::sqrt2 * alpha.real(), std::numbers::sqrt2 * alpha.imag()};
      }
    });
    return rec;
  }

 private:
  StateSpec spec_;
  std::optional<ChainSettings> amp_;
  HusimiEvaluator husimi_;
  cplx center_;
  double half_width_ = 0.0;
};

inline HeterodyneRecord sample_heterodyne(const StateSpec& spec, std::size_t n, std::uint64_t seed,
                                          std::optional<ChainSettings> amp = std::nullopt) {
  return HeterodyneSampler(spec, amp).sample(n, seed);
}

/// Moment table with per-entry standard errors; stderr(i,j) holds the
/// errors of the real and imaginary parts as its real and imaginary parts.
struct EstimatedMoments {
  MomentTable table{Ordering::Antinormal, 0};
  MomentTable stderr_table{Ordering::Antinormal, 0};
};

namespace detail {

/// Block jackknife: `replicates[b]` is the estimate with block b left out.
inline MomentTable jackknife_stderr(const std::vector<MomentTable>& replicates) {
  const std::size_t blocks = replicates.size();
  MomentTable out(replicates.front().ordering(), replicates.front().max_degree());
  const auto size = out.data().size();
  for (std::size_t k = 0; k < size; ++k) {
    cplx mean{0.0, 0.0};
    for (const auto& r : replicates) mean += r.data()[k];
    mean /= static_cast<double>(blocks);
    double var_re = 0.0;
    double var_im = 0.0;
    for (const auto& r : replicates) {
      const cplx d = r.data()[k] - mean;
      var_re += d.real() * d.real();
      var_im += d.imag() * d.imag();
    }
    const double f = static_cast<double>(blocks - 1) / static_cast<double>(blocks);
    out.data()[k] = cplx{std::sqrt(f * var_re), std::sqrt(f * var_im)};
  }
  return out;
}

inline std::size_t block_begin(std::size_t n, std::size_t b, std::size_t blocks) { return n * b / blocks; }

}  // namespace detail

/// entry(k,l) = mean of alpha^k conj(alpha)^l with alpha = (q + i p)/sqrt(2).
/// A non-empty `map` is applied to the estimate and to every jackknife
/// replicate, so the errors follow it (e.g. deamplification).
inline EstimatedMoments estimate_antinormal_moments(
    const HeterodyneRecord& rec, int max_degree,
    const std::function<MomentTable(const MomentTable&)>& map = {}) {
  const std::size_t n = rec.samples.size();
  if (n < kMinSamples) {
    throw Error(ErrorCode::TooFewSamples, std::to_string(n) + " heterodyne samples, need >= 100");
  }
  const std::size_t size = static_cast<std::size_t>(MomentTable::lattice_size(max_degree));
  std::vector<std::vector<cplx>> block_sums(kJackknifeBlocks, std::vector<cplx>(size, cplx{0.0, 0.0}));
  std::vector<std::size_t> block_counts(kJackknifeBlocks);
  std::vector<cplx> pow_a(static_cast<std::size_t>(max_degree) + 1);
  std::vector<cplx> pow_c(static_cast<std::size_t>(max_degree) + 1);
  for (std::size_t b = 0; b < kJackknifeBlocks; ++b) {
    const std::size_t begin = detail::block_begin(n, b, kJackknifeBlocks);
    const std::size_t end = detail::block_begin(n, b + 1, kJackknifeBlocks);
    block_counts[b] = end - begin;
    for (std::size_t s = begin; s < end; ++s) {
      const cplx alpha{rec.samples[s].q / std::numbers::sqrt2, rec.samples[s].p / std::numbers::sqrt2};
      pow_a[0] = pow_c[0] = 1.0;
      for (int r = 1; r <= max_degree; ++r) {
        pow_a[r] = pow_a[r - 1] * alpha;
        pow_c[r] = pow_c[r - 1] * std::conj(alpha);
      }
      for (int d = 0; d <= max_degree; ++d) {
        for (int k = d; k >= 0; --k) block_sums[b][MomentTable::index(k, d - k)] += pow_a[k] * pow_c[d - k];
      }
    }
  }
  const auto table_from = [&](std::optional<std::size_t> skip) {
    MomentTable t(Ordering::Antinormal, max_degree);
    std::size_t count = 0;
    std::vector<cplx> sum(size, cplx{0.0, 0.0});
    for (std::size_t b = 0; b < kJackknifeBlocks; ++b) {
      if (skip && *skip == b) continue;
      count += block_counts[b];
      for (std::size_t k = 0; k < size; ++k) sum[k] += block_sums[b][k];
    }
    for (std::size_t k = 0; k < size; ++k) t.data()[k] = sum[k] / static_cast<double>(count);
    t(0, 0) = 1.0;
    return map ? map(t) : t;
  };
  EstimatedMoments est;
  est.table = table_from(std::nullopt);
  std::vector<MomentTable> replicates;
  for (std::size_t b = 0; b < kJackknifeBlocks; ++b) replicates.push_back(table_from(b));
  est.stderr_table = detail::jackknife_stderr(replicates);
  return est;
}

namespace detail {

/// Per-phase, per-block sums of x^r: sums[phase][block][r], counts[phase][block].
struct PhaseBlockSums {
  std::vector<std::vector<std::vector<double>>> sums;
  std::vector<std::vector<std::size_t>> counts;
};

inline std::vector<std::vector<double>> split_by_phase(const HomodyneRecord& rec) {
  std::vector<std::vector<double>> by_phase(rec.phases.size());
  for (const auto& s : rec.samples) {
    std::size_t a = 0;
    while (a < rec.phases.size() && std::abs(rec.phases[a] - s.theta) > 1e-12) ++a;
    if (a == rec.phases.size()) {
      throw Error(ErrorCode::InvalidParameter, "sample phase " + std::to_string(s.theta) + " is not declared");
    }
    by_phase[a].push_back(s.x);
  }
  return by_phase;
}

inline PhaseBlockSums phase_block_sums(const HomodyneRecord& rec, int max_order) {
  const auto by_phase = split_by_phase(rec);
  PhaseBlockSums out;
  for (std::size_t a = 0; a < by_phase.size(); ++a) {
    const auto& xs = by_phase[a];
    if (xs.size() < kMinSamples) {
      throw Error(ErrorCode::TooFewSamples, "phase " + std::to_string(rec.phases[a]) + " has " +
                                                std::to_string(xs.size()) + " samples, need >= 100");
    }
    std::vector<std::vector<double>> sums(kJackknifeBlocks, std::vector<double>(max_order + 1, 0.0));
    std::vector<std::size_t> counts(kJackknifeBlocks);
    for (std::size_t b = 0; b < kJackknifeBlocks; ++b) {
      const std::size_t begin = block_begin(xs.size(), b, kJackknifeBlocks);
      const std::size_t end = block_begin(xs.size(), b + 1, kJackknifeBlocks);
      counts[b] = end - begin;
      for (std::size_t s = begin; s < end; ++s) {
        double xr = 1.0;
        for (int r = 0; r <= max_order; ++r, xr *= xs[s]) sums[b][r] += xr;
      }
    }
    out.sums.push_back(std::move(sums));
    out.counts.push_back(std::move(counts));
  }
  return out;
}

inline TomographicMoments tomographic_from_sums(const HomodyneRecord& rec, const PhaseBlockSums& s, int max_order,
                                                std::optional<std::size_t> skip) {
  TomographicMoments tm;
  tm.max_order = max_order;
  tm.thetas = rec.phases;
  tm.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rec.phases.size()), max_order + 1);
  for (std::size_t a = 0; a < rec.phases.size(); ++a) {
    std::size_t count = 0;
    for (std::size_t b = 0; b < kJackknifeBlocks; ++b) {
      if (skip && *skip == b) continue;
      count += s.counts[a][b];
      for (int r = 0; r <= max_order; ++r) tm.values(static_cast<Eigen::Index>(a), r) += s.sums[a][b][r];
    }
    tm.values.row(static_cast<Eigen::Index>(a)) /= static_cast<double>(count);
    tm.values(static_cast<Eigen::Index>(a), 0) = 1.0;
  }
  return tm;
}

}  // namespace detail

/// Empirical <X^r> per declared phase with jackknife standard errors.
inline TomographicMoments estimate_tomographic_moments(const HomodyneRecord& rec, int max_order) {
  const auto sums = detail::phase_block_sums(rec, max_order);
  TomographicMoments tm = detail::tomographic_from_sums(rec, sums, max_order, std::nullopt);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(tm.values.rows(), tm.values.cols());
  std::vector<Eigen::MatrixXd> reps;
  for (std::size_t b = 0; b < kJackknifeBlocks; ++b) {
    reps.push_back(detail::tomographic_from_sums(rec, sums, max_order, b).values);
    mean += reps.back();
  }
  mean /= static_cast<double>(kJackknifeBlocks);
  Eigen::MatrixXd var = Eigen::MatrixXd::Zero(mean.rows(), mean.cols());
  for (const auto& r : reps) var += (r - mean).cwiseAbs2();
  tm.stderrs = (var * (kJackknifeBlocks - 1.0) / kJackknifeBlocks).cwiseSqrt();
  return tm;
}

/// Ordered moments inverted from the homodyne record's tomographic moments,
/// with jackknife errors propagated through the inversion.
inline EstimatedMoments estimate_moments_from_homodyne(const HomodyneRecord& rec, Ordering ordering, int max_degree) {
  const auto sums = detail::phase_block_sums(rec, max_degree);
  EstimatedMoments est;
  est.table = moments_from_tomographic_moments(detail::tomographic_from_sums(rec, sums, max_degree, std::nullopt),
                                               ordering, max_degree);
  std::vector<MomentTable> replicates;
  for (std::size_t b = 0; b < kJackknifeBlocks; ++b) {
    replicates.push_back(
        moments_from_tomographic_moments(detail::tomographic_from_sums(rec, sums, max_degree, b), ordering, max_degree));
  }
  est.stderr_table = detail::jackknife_stderr(replicates);
  return est;
}

/// Histogram density per phase on `x_bins` equal bins spanning all samples.
inline TomogramGrid estimate_tomogram(const HomodyneRecord& rec, int x_bins) {
  if (x_bins < 1) throw Error(ErrorCode::InvalidParameter, "x_bins must be >= 1");
  const auto by_phase = detail::split_by_phase(rec);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& xs : by_phase) {
    if (xs.size() < kMinSamples) throw Error(ErrorCode::TooFewSamples, "need >= 100 samples per phase");
    for (double x : xs) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  const double width = (hi - lo) / x_bins * (1.0 + 1e-12);
  TomogramGrid grid;
  grid.thetas = rec.phases;
  grid.quadrature = XQuadrature::Midpoint;
  for (int i = 0; i < x_bins; ++i) {
    grid.xs.push_back(lo + (i + 0.5) * width);
    grid.x_weights.push_back(width);
  }
  grid.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rec.phases.size()), x_bins);
  for (std::size_t a = 0; a < by_phase.size(); ++a) {
    for (double x : by_phase[a]) {
      const int bin = std::min(x_bins - 1, static_cast<int>((x - lo) / width));
      grid.values(static_cast<Eigen::Index>(a), bin) += 1.0;
    }
    grid.values.row(static_cast<Eigen::Index>(a)) /= static_cast<double>(by_phase[a].size()) * width;
  }
  return grid;
}

struct CrosscheckEntry {
  int i = 0;
  int j = 0;
  cplx heterodyne;
  cplx homodyne;
  cplx heterodyne_stderr;
  cplx homodyne_stderr;
  /// Largest |delta| / combined stderr over the real and imaginary parts.
  double z_score = 0.0;
  bool ok = true;
};

struct CrosscheckReport {
  int max_degree = 0;
  double threshold = 4.0;
  std::vector<CrosscheckEntry> entries;
  bool pass = true;
};

/// Antinormal moments from the heterodyne record against those inverted from
/// the homodyne record, entry by entry for degrees 1..R.
inline CrosscheckReport crosscheck(const HomodyneRecord& homodyne, const HeterodyneRecord& heterodyne, int max_degree,
                                   double threshold = 4.0) {
  const auto het = estimate_antinormal_moments(heterodyne, max_degree);
  const auto hom = estimate_moments_from_homodyne(homodyne, Ordering::Antinormal, max_degree);
  CrosscheckReport report;
  report.max_degree = max_degree;
  report.threshold = threshold;
  for (int d = 1; d <= max_degree; ++d) {
    for (int i = d; i >= 0; --i) {
      CrosscheckEntry e;
      e.i = i;
      e.j = d - i;
      e.heterodyne = het.table(i, e.j);
      e.homodyne = hom.table(i, e.j);
      e.heterodyne_stderr = het.stderr_table(i, e.j);
      e.homodyne_stderr = hom.stderr_table(i, e.j);
      const cplx delta = e.heterodyne - e.homodyne;
      const double se_re = std::hypot(e.heterodyne_stderr.real(), e.homodyne_stderr.real());
      const double se_im = std::hypot(e.heterodyne_stderr.imag(), e.homodyne_stderr.imag());
      const auto z = [](double diff, double se) {
        if (std::abs(diff) <= 1e-12) return 0.0;
        return se > 0.0 ? std::abs(diff) / se : std::numeric_limits<double>::infinity();
      };
      e.z_score = std::max(z(delta.real(), se_re), z(delta.imag(), se_im));
      e.ok = e.z_score <= threshold;
      report.pass = report.pass && e.ok;
      report.entries.push_back(e);
    }
  }
  return report;
}

}  // namespace qmoment

#endif  // QMOMENT_SIMULATE_HPP
