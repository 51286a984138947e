#pragma once

// Synthetic datasets y_i = g_i . x + eps_i with reproducible randomness.

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dmra/error.hpp"
#include "dmra/group.hpp"
#include "dmra/moments.hpp"

namespace dmra {

/// Named substreams of a root seed.
enum class Stream : std::uint64_t { kSignal = 1, kDistribution = 2, kElements = 3, kNoise = 4, kEstimator = 5, kTrial = 6 };

/// Mixes (root, stream, index) into an independent 64-bit seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

inline std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t index = 0) {
  return derive_seed(root, static_cast<std::uint64_t>(stream), index);
}

using Rng = std::mt19937_64;

inline Signal sample_signal(std::size_t L, std::uint64_t seed) {
  if (L < 3) throw InvalidArgument("sample_signal: L must be at least 3");
  Rng rng(derive_seed(seed, Stream::kSignal));
  std::normal_distribution<double> normal;
  RealVector x(static_cast<Eigen::Index>(L));
  for (auto& v : x) v = normal(rng);
  return Signal(std::move(x));
}

/// Uniform point of the 2L-simplex (normalized i.i.d. exponentials).
inline GroupDistribution sample_distribution(std::size_t L, std::uint64_t seed) {
  if (L < 3) throw InvalidArgument("sample_distribution: L must be at least 3");
  Rng rng(derive_seed(seed, Stream::kDistribution));
  std::exponential_distribution<double> expo(1.0);
  RealVector w(static_cast<Eigen::Index>(2 * L));
  for (auto& v : w) v = expo(rng);
  return GroupDistribution::from_flat(w / w.sum());
}

/// A dataset of n noisy transformed copies of a signal, with optional ground truth.
struct ObservationSet {
  ObservationMatrix observations;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::vector<DihedralElement>> true_elements;
  std::optional<Signal> true_signal;
  std::optional<GroupDistribution> true_distribution;

  std::size_t L() const { return static_cast<std::size_t>(observations.cols()); }
  std::size_t n() const { return static_cast<std::size_t>(observations.rows()); }

  void validate() const {
    if (observations.rows() < 1) throw InvalidArgument("ObservationSet: n must be at least 1");
    if (observations.cols() < 3) throw InvalidArgument("ObservationSet: L must be at least 3");
    if (!observations.allFinite()) throw InvalidArgument("ObservationSet: non-finite observation");
    if (!(sigma >= 0.0)) throw InvalidArgument("ObservationSet: sigma must be nonnegative");
    if (true_elements && true_elements->size() != n()) {
      throw InvalidArgument("ObservationSet: true_elements length differs from n");
    }
    if (true_signal && true_signal->size() != L()) throw InvalidArgument("ObservationSet: true_signal length");
    if (true_distribution && true_distribution->order() != L()) {
      throw InvalidArgument("ObservationSet: true_distribution order");
    }
  }
};

/// SNR = ||x||^2 / (L sigma^2).
inline double snr_of(const Signal& x, double sigma) {
  return x.values().squaredNorm() / (static_cast<double>(x.size()) * sigma * sigma);
}

inline double sigma_for_snr(const Signal& x, double snr) {
  if (!(snr > 0.0)) throw InvalidArgument("sigma_for_snr: SNR must be positive");
  return std::sqrt(x.values().squaredNorm() / (static_cast<double>(x.size()) * snr));
}

/// One experiment: sizes, noise level and estimator knobs.
struct ExperimentConfig {
  std::size_t L = 10;
  std::size_t n = 1000;
  std::optional<double> sigma;
  std::optional<double> snr;
  std::size_t trials = 50;
  std::uint64_t seed = 1;
  std::vector<std::string> methods;
  std::optional<double> lambda;  // unset selects lambda = L
  std::size_t em_max_iterations = 400;
  double em_tolerance = 1e-4;
  std::size_t mom_starts = 10;
  std::size_t mom_max_iterations = 200;

  double sigma_for(const Signal& x) const {
    if (sigma) return *sigma;
    if (snr) return sigma_for_snr(x, *snr);
    throw InvalidArgument("ExperimentConfig: neither sigma nor SNR given");
  }
};

namespace detail {

inline constexpr std::size_t kGenerateBlock = 4096;

}  // namespace detail

/// Draws n observations. Element and noise draws use one generator per block of
/// rows, seeded from (seed, stream, block), so the result does not depend on how
/// blocks are scheduled.
inline ObservationSet generate(const Signal& x, const GroupDistribution& rho, std::size_t n, double sigma,
                               std::uint64_t seed) {
  if (x.size() != rho.order()) throw InvalidArgument("generate: signal length and distribution order differ");
  if (n < 1) throw InvalidArgument("generate: n must be at least 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("generate: sigma must be finite and >= 0");
  const auto L = x.size();

  std::vector<double> cdf(2 * L);
  {
    const RealVector flat = rho.flat();
    double acc = 0.0;
    for (std::size_t i = 0; i < 2 * L; ++i) cdf[i] = (acc += flat[static_cast<Eigen::Index>(i)]);
  }

  ObservationSet obs;
  obs.observations.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(L));
  obs.sigma = sigma;
  obs.seed = seed;
  std::vector<DihedralElement> truth;
  truth.reserve(n);

  const auto blocks = (n + detail::kGenerateBlock - 1) / detail::kGenerateBlock;
  for (std::size_t b = 0; b < blocks; ++b) {
    Rng element_rng(derive_seed(seed, Stream::kElements, b));
    Rng noise_rng(derive_seed(seed, Stream::kNoise, b));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto end = std::min(n, (b + 1) * detail::kGenerateBlock);
    for (std::size_t i = b * detail::kGenerateBlock; i < end; ++i) {
      const double u = unit(element_rng) * cdf.back();
      auto idx = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      idx = std::min(idx, 2 * L - 1);
      // u can round up to cdf.back(); step back over zero-probability tail elements.
      while (idx > 0 && cdf[idx] == cdf[idx - 1]) --idx;
      const auto g = DihedralElement::from_index(L, idx);
      truth.push_back(g);
      auto row = obs.observations.row(static_cast<Eigen::Index>(i));
      RealVector gx(static_cast<Eigen::Index>(L));
      detail::act(g, x.values(), gx);
      for (std::size_t l = 0; l < L; ++l) row[static_cast<Eigen::Index>(l)] = gx[static_cast<Eigen::Index>(l)] + sigma * normal(noise_rng);
    }
  }
  obs.true_elements = std::move(truth);
  obs.true_signal = x;
  obs.true_distribution = rho;
  return obs;
}

}  // namespace dmra
