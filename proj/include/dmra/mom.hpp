#pragma once

// Method of moments: least-squares fit of (x, rho) to the first two moments,
//   f = ||m2 - C_x D_p C_x^T - C_sx D_q C_sx^T||_F^2 + lambda ||m1 - C_p x - C_q s.x||^2,
// minimized by a Gauss-Newton trust region over (x, logits), rho = softmax(logits).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "dmra/error.hpp"
#include "dmra/estimate_result.hpp"
#include "dmra/group.hpp"
#include "dmra/moments.hpp"
#include "dmra/simulator.hpp"

namespace dmra {

struct MomObjective {
  double value = 0.0;
  /// Gradient with respect to (x, p, q), length 3L.
  RealVector gradient;
};

struct MomOptions {
  double lambda = -1.0;  // negative selects L
  std::size_t starts = 10;
  std::size_t max_iterations = 200;
  double gradient_tolerance = 1e-8;
  double step_tolerance = 1e-12;
  double initial_radius = 1.0;
};

namespace detail {

/// Index l with (g_j . e_m)[l] = 1.
inline std::size_t image_of(std::size_t j, std::size_t m, std::size_t L) {
  const auto k = static_cast<long long>(j % L);
  const auto mm = static_cast<long long>(m);
  return j < L ? wrap(mm + k, L) : wrap(k - mm, L);
}

/// Residual vector [vec(m2 - model2); sqrt(lambda) (m1 - model1)] and its Jacobian
/// with respect to (x, w), where w is the flat 2L weight vector.
struct MomResidual {
  RealVector r;
  RealMatrix jac;
};

inline MomResidual mom_residual(const RealVector& x, const RealVector& w, const MomentPair& m, double lambda,
                                bool with_jacobian) {
  const auto L = static_cast<std::size_t>(x.size());
  const auto Li = static_cast<Eigen::Index>(L);
  const auto G = static_cast<Eigen::Index>(2 * L);
  RealMatrix u(Li, G);
  RealVector tmp(Li);
  for (Eigen::Index j = 0; j < G; ++j) {
    act(DihedralElement::from_index(L, static_cast<std::size_t>(j)), x, tmp);
    u.col(j) = tmp;
  }
  const RealMatrix model2 = u * w.asDiagonal() * u.transpose();
  const RealVector model1 = u * w;
  const double root = std::sqrt(lambda);
  MomResidual out;
  out.r.resize(Li * Li + Li);
  const RealMatrix r2 = m.m2 - model2;
  out.r.head(Li * Li) = Eigen::Map<const RealVector>(r2.data(), Li * Li);
  out.r.tail(Li) = root * (m.m1 - model1);
  if (!with_jacobian) return out;

  out.jac = RealMatrix::Zero(Li * Li + Li, Li + G);
  for (std::size_t mi = 0; mi < L; ++mi) {
    auto col = out.jac.col(static_cast<Eigen::Index>(mi));
    for (Eigen::Index j = 0; j < G; ++j) {
      const auto pos = static_cast<Eigen::Index>(image_of(static_cast<std::size_t>(j), mi, L));
      const double wj = w[j];
      if (wj == 0.0) continue;
      for (Eigen::Index c = 0; c < Li; ++c) {
        // column-major vec: entry (row, col) sits at row + col * L
        col[pos + c * Li] -= wj * u(c, j);
        col[c + pos * Li] -= wj * u(c, j);
      }
      col[Li * Li + pos] -= root * wj;
    }
  }
  for (Eigen::Index j = 0; j < G; ++j) {
    auto col = out.jac.col(Li + j);
    const RealMatrix outer = u.col(j) * u.col(j).transpose();
    col.head(Li * Li) = -Eigen::Map<const RealVector>(outer.data(), Li * Li);
    col.tail(Li) = -root * u.col(j);
  }
  return out;
}

inline double resolve_lambda(double lambda, std::size_t L) { return lambda < 0.0 ? static_cast<double>(L) : lambda; }

}  // namespace detail

inline MomObjective mom_objective(const Signal& x, const RealVector& p, const RealVector& q, const MomentPair& m,
                                  double lambda) {
  const auto L = x.size();
  if (static_cast<std::size_t>(p.size()) != L || static_cast<std::size_t>(q.size()) != L || m.size() != L) {
    throw InvalidArgument("mom_objective: length mismatch");
  }
  if (!(lambda >= 0.0)) throw InvalidArgument("mom_objective: lambda must be nonnegative");
  RealVector w(static_cast<Eigen::Index>(2 * L));
  w << p, q;
  const auto res = detail::mom_residual(x.values(), w, m, lambda, true);
  return {res.r.squaredNorm(), 2.0 * res.jac.transpose() * res.r};
}

namespace detail {

inline RealVector softmax(const RealVector& a) {
  const RealVector e = (a.array() - a.maxCoeff()).exp();
  return e / e.sum();
}

/// Minimizer of g^T s + s^T B s / 2 subject to ||s|| <= radius, for symmetric PSD B.
inline RealVector trust_region_step(const RealMatrix& b, const RealVector& g, double radius) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> eig(b);
  if (eig.info() != Eigen::Success) throw NumericalFailure("trust region: eigen-solver failed");
  const RealVector lam = eig.eigenvalues().cwiseMax(0.0);
  const RealVector gt = eig.eigenvectors().transpose() * g;
  const double floor = 1e-12 * std::max(lam.maxCoeff(), std::numeric_limits<double>::min());
  const auto step = [&](double mu) {
    RealVector c(gt.size());
    for (Eigen::Index i = 0; i < gt.size(); ++i) {
      const double d = lam[i] + mu;
      c[i] = d > floor ? -gt[i] / d : 0.0;
    }
    return c;
  };
  RealVector c = step(0.0);
  if (c.norm() > radius) {
    double lo = 0.0;
    double hi = g.norm() / radius;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (step(mid).norm() > radius) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    c = step(hi);
  }
  return eig.eigenvectors() * c;
}

struct MomRun {
  RealVector x;
  RealVector w;
  double value = 0.0;
  double initial_value = 0.0;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
  std::vector<double> trace;
};

inline MomRun minimize_from(RealVector x, RealVector logits, const MomentPair& m, double lambda,
                            const MomOptions& options) {
  const auto L = x.size();
  const auto dim = L + logits.size();
  RealVector theta(dim);
  theta << x, logits;
  const auto evaluate = [&](const RealVector& th, bool jac) {
    return mom_residual(th.head(L), softmax(th.tail(2 * L)), m, lambda, jac);
  };
  auto res = evaluate(theta, true);
  double f = res.r.squaredNorm();
  MomRun run;
  run.initial_value = f;
  run.trace.push_back(f);
  double radius = options.initial_radius;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    run.iterations = it + 1;
    const RealVector w = softmax(theta.tail(2 * L));
    RealMatrix jac(res.jac.rows(), dim);
    jac.leftCols(L) = res.jac.leftCols(L);
    const RealMatrix dsoft = RealMatrix(w.asDiagonal()) - w * w.transpose();
    jac.rightCols(2 * L) = res.jac.rightCols(2 * L) * dsoft;
    const RealVector g = 2.0 * jac.transpose() * res.r;
    run.gradient_norm = g.norm();
    if (run.gradient_norm < options.gradient_tolerance) break;
    const RealMatrix b = 2.0 * jac.transpose() * jac;
    const RealVector s = trust_region_step(b, g, radius);
    const double snorm = s.norm();
    if (snorm < options.step_tolerance) break;
    const double predicted = -(g.dot(s) + 0.5 * s.dot(b * s));
    if (!(predicted > 0.0)) break;
    const RealVector trial = theta + s;
    auto trial_res = evaluate(trial, true);
    const double f_trial = trial_res.r.squaredNorm();
    const double ratio = (f - f_trial) / predicted;
    if (ratio < 0.25) {
      radius = 0.25 * snorm;
    } else if (ratio > 0.75 && snorm > 0.99 * radius) {
      radius = std::min(2.0 * radius, 1e6);
    }
    if (f_trial < f && ratio > 1e-4) {
      theta = trial;
      res = std::move(trial_res);
      f = f_trial;
      run.trace.push_back(f);
    }
  }
  run.x = theta.head(L);
  run.w = softmax(theta.tail(2 * L));
  run.value = f;
  return run;
}

}  // namespace detail

/// Multi-start minimization of the moment objective; returns the lowest objective.
inline EstimateResult estimate_by_mom(const MomentPair& m, std::uint64_t seed, const MomOptions& options = {}) {
  detail::Stopwatch clock;
  const auto L = m.size();
  if (L < 3) throw InvalidArgument("estimate_by_mom: L must be at least 3");
  if (m.sigma2 != 0.0) throw InvalidArgument("estimate_by_mom: moments must be debiased");
  const double lambda = detail::resolve_lambda(options.lambda, L);
  const double energy = m.m2.trace();
  std::optional<detail::MomRun> best;
  bool any_progress = false;
  for (std::size_t start = 0; start < std::max<std::size_t>(1, options.starts); ++start) {
    Rng rng(derive_seed(seed, Stream::kEstimator, start));
    std::normal_distribution<double> normal;
    RealVector x(static_cast<Eigen::Index>(L));
    RealVector logits(static_cast<Eigen::Index>(2 * L));
    for (auto& v : x) v = normal(rng);
    for (auto& v : logits) v = normal(rng);
    if (energy > 0.0) x *= std::sqrt(energy) / x.norm();
    auto run = detail::minimize_from(std::move(x), std::move(logits), m, lambda, options);
    if (run.value < run.initial_value || run.gradient_norm < options.gradient_tolerance) any_progress = true;
    if (!best || run.value < best->value) best = std::move(run);
  }
  if (!any_progress) throw NumericalFailure("estimate_by_mom: no start decreased the objective");
  EstimateResult result{Signal(best->x), GroupDistribution::from_flat(best->w)};
  result.iterations = best->iterations;
  result.objective_trace = std::move(best->trace);
  result.wall_time = clock.elapsed();
  return result;
}

/// Empirical moments, debiased with the known sigma, then estimate_by_mom.
inline EstimateResult estimate_by_mom(const ObservationMatrix& y, double sigma, std::uint64_t seed,
                                      const MomOptions& options = {}) {
  if (!(sigma >= 0.0)) throw InvalidArgument("estimate_by_mom: sigma must be nonnegative");
  detail::Stopwatch clock;
  auto result = estimate_by_mom(debias(empirical_moments(y), sigma * sigma), seed, options);
  result.wall_time = clock.elapsed();
  return result;
}

inline EstimateResult estimate_by_mom(const ObservationSet& obs, double sigma, std::uint64_t seed,
                                      const MomOptions& options = {}) {
  return estimate_by_mom(obs.observations, sigma, seed, options);
}

}  // namespace dmra
