#pragma once

// Expectation-maximization for the dihedral mixture likelihood
//   l(x, rho) = sum_i log sum_j rho_j N(y_i; g_j.x, sigma^2 I).
// All weights are normalized in the log domain.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <tuple>
#include <random>
#include <vector>

#include "dmra/error.hpp"
#include "dmra/estimate_result.hpp"
#include "dmra/group.hpp"
#include "dmra/moments.hpp"
#include "dmra/simulator.hpp"

namespace dmra {

struct EMState {
  Signal x;
  GroupDistribution rho;
  /// n x 2L, rows are posterior element probabilities in canonical order. Empty
  /// before the first step.
  RealMatrix weights;
};

struct EMOptions {
  std::size_t max_iterations = 400;
  double tolerance = 1e-4;
  std::size_t starts = 1;
};

namespace detail {

/// Columns are g_j.x in canonical order.
inline RealMatrix orbit_matrix(const Signal& x) {
  const auto L = x.size();
  RealMatrix out(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(2 * L));
  RealVector tmp(static_cast<Eigen::Index>(L));
  for (std::size_t j = 0; j < 2 * L; ++j) {
    detail::act(DihedralElement::from_index(L, j), x.values(), tmp);
    out.col(static_cast<Eigen::Index>(j)) = tmp;
  }
  return out;
}

struct EMBlock {
  RealMatrix s;      // 2L x L, sum_i w_ij y_i
  RealVector wsum;   // 2L
  double loglik = 0.0;

  EMBlock& operator+=(const EMBlock& o) {
    s += o.s;
    wsum += o.wsum;
    loglik += o.loglik;
    return *this;
  }
};

/// E-step over rows [begin, end). With sigma == 0 each row is assigned to the
/// nearest orbit point of positive probability (first in canonical order on ties)
/// and the log-likelihood is not defined (reported as 0).
inline EMBlock em_block(const ObservationMatrix& y, const RealMatrix& orbit, const RealVector& log_rho, double x_norm2,
                        double sigma, std::size_t begin, std::size_t end, RealMatrix* weights_out) {
  const auto L = orbit.rows();
  const auto G = orbit.cols();
  const auto rows = static_cast<Eigen::Index>(end - begin);
  const auto yb = y.middleRows(static_cast<Eigen::Index>(begin), rows);
  const RealMatrix c = yb * orbit;  // rows x 2L inner products
  RealMatrix w(rows, G);
  double loglik = 0.0;
  if (sigma > 0.0) {
    const double inv_var = 1.0 / (sigma * sigma);
    const double log_norm = 0.5 * static_cast<double>(L) * std::log(2.0 * std::numbers::pi * sigma * sigma);
    for (Eigen::Index i = 0; i < rows; ++i) {
      double top = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < G; ++j) {
        const double a = log_rho[j] + c(i, j) * inv_var;
        w(i, j) = a;
        top = std::max(top, a);
      }
      double total = 0.0;
      for (Eigen::Index j = 0; j < G; ++j) {
        const double e = std::exp(w(i, j) - top);
        w(i, j) = e;
        total += e;
      }
      w.row(i) /= total;
      loglik += top + std::log(total) - 0.5 * (yb.row(i).squaredNorm() + x_norm2) * inv_var - log_norm;
    }
  } else {
    w.setZero();
    for (Eigen::Index i = 0; i < rows; ++i) {
      Eigen::Index best = -1;
      for (Eigen::Index j = 0; j < G; ++j) {
        if (log_rho[j] == -std::numeric_limits<double>::infinity()) continue;
        if (best < 0 || c(i, j) > c(i, best)) best = j;
      }
      w(i, best) = 1.0;
    }
  }
  EMBlock out{w.transpose() * yb, w.colwise().sum().transpose(), loglik};
  if (weights_out != nullptr) weights_out->middleRows(static_cast<Eigen::Index>(begin), rows) = w;
  return out;
}

inline EMBlock em_pass(const Signal& x, const GroupDistribution& rho, const ObservationMatrix& y, double sigma,
                       RealMatrix* weights_out) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("EM: sigma must be finite and nonnegative");
  const auto n = static_cast<std::size_t>(y.rows());
  const auto L = x.size();
  if (n == 0) throw InvalidArgument("EM: no observations");
  if (static_cast<std::size_t>(y.cols()) != L || rho.order() != L) throw InvalidArgument("EM: length mismatch");
  const RealMatrix orbit = orbit_matrix(x);
  const RealVector log_rho = rho.flat().array().log();
  const double x_norm2 = x.values().squaredNorm();
  if (weights_out != nullptr) weights_out->resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(2 * L));
  const std::size_t blocks = (n + kRowBlock - 1) / kRowBlock;
  return pairwise_sum<EMBlock>(0, blocks, [&](std::size_t b) {
    return em_block(y, orbit, log_rho, x_norm2, sigma, b * kRowBlock, std::min(n, (b + 1) * kRowBlock), weights_out);
  });
}

/// M-step from accumulated weights.
inline std::pair<Signal, GroupDistribution> em_update(const EMBlock& acc, std::size_t L, std::size_t n) {
  RealVector x = RealVector::Zero(static_cast<Eigen::Index>(L));
  RealVector tmp(static_cast<Eigen::Index>(L));
  for (std::size_t j = 0; j < 2 * L; ++j) {
    const RealVector sj = acc.s.row(static_cast<Eigen::Index>(j)).transpose();
    detail::act(inverse(DihedralElement::from_index(L, j)), sj, tmp);
    x += tmp;
  }
  x /= static_cast<double>(n);
  RealVector flat = acc.wsum / acc.wsum.sum();
  // Remove the rounding drift so the distribution invariant holds to 1e-12.
  flat = flat.cwiseMax(0.0);
  flat /= flat.sum();
  return {Signal(std::move(x)), GroupDistribution::from_flat(flat)};
}

}  // namespace detail

/// Log-likelihood with the Gaussian normalizing constant.
inline double log_likelihood(const Signal& x, const GroupDistribution& rho, const ObservationMatrix& y, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("log_likelihood: sigma must be positive");
  return detail::em_pass(x, rho, y, sigma, nullptr).loglik;
}

inline double log_likelihood(const Signal& x, const GroupDistribution& rho, const ObservationSet& obs, double sigma) {
  return log_likelihood(x, rho, obs.observations, sigma);
}

/// One EM iteration. The returned state carries the weights computed at the input
/// parameters and the updated (x, rho).
inline EMState em_step(const EMState& state, const ObservationMatrix& y, double sigma) {
  RealMatrix weights;
  const auto acc = detail::em_pass(state.x, state.rho, y, sigma, &weights);
  auto [x, rho] = detail::em_update(acc, state.x.size(), static_cast<std::size_t>(y.rows()));
  return {std::move(x), std::move(rho), std::move(weights)};
}

inline EMState em_step(const EMState& state, const ObservationSet& obs, double sigma) {
  return em_step(state, obs.observations, sigma);
}

namespace detail {

inline EstimateResult em_from(Signal x, GroupDistribution rho, const ObservationMatrix& y, double sigma,
                              const EMOptions& options) {
  const auto n = static_cast<std::size_t>(y.rows());
  const auto L = x.size();
  EstimateResult result{x, rho};
  for (std::size_t t = 0;; ++t) {
    const auto acc = em_pass(x, rho, y, sigma, nullptr);
    result.objective_trace.push_back(acc.loglik);
    const auto& tr = result.objective_trace;
    const bool converged = t > 0 && tr[t] - tr[t - 1] < options.tolerance;
    if (converged || t == options.max_iterations) {
      result.iterations = t;
      break;
    }
    std::tie(x, rho) = em_update(acc, L, n);
  }
  result.x_est = std::move(x);
  result.rho_est = std::move(rho);
  return result;
}

}  // namespace detail

/// EM from a standard-normal x and uniform rho. With several starts the run with the
/// highest final log-likelihood is kept.
inline EstimateResult estimate_by_em(const ObservationMatrix& y, double sigma, std::uint64_t init_seed,
                                     const EMOptions& options = {}) {
  detail::Stopwatch clock;
  if (!(sigma > 0.0)) throw InvalidArgument("estimate_by_em: sigma must be positive");
  const auto L = static_cast<std::size_t>(y.cols());
  std::optional<EstimateResult> best;
  for (std::size_t start = 0; start < std::max<std::size_t>(1, options.starts); ++start) {
    auto run = detail::em_from(sample_signal(L, derive_seed(init_seed, Stream::kEstimator, start)),
                               GroupDistribution::uniform(L), y, sigma, options);
    if (!best || run.objective_trace.back() > best->objective_trace.back()) best = std::move(run);
  }
  best->wall_time = clock.elapsed();
  return std::move(*best);
}

inline EstimateResult estimate_by_em(const ObservationSet& obs, double sigma, std::uint64_t init_seed,
                                     const EMOptions& options = {}) {
  return estimate_by_em(obs.observations, sigma, init_seed, options);
}

}  // namespace dmra
