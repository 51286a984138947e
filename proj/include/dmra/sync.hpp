#pragma once

// Group synchronization: pairwise alignment of observations followed by a spectral
// estimate of the group elements from their ratios g_i g_j^{-1}.
//
// D_2L is embedded in O(2) by r -> rotation by 2 pi / L, s -> diag(1, -1). The
// 2n x 2n block matrix H_ij = rep(g_i g_j^{-1}) equals G G^T for G = [rep(g_i)], so
// its top-2 eigenspace recovers the elements up to a global right factor.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "dmra/error.hpp"
#include "dmra/estimate_result.hpp"
#include "dmra/group.hpp"
#include "dmra/moments.hpp"
#include "dmra/simulator.hpp"

namespace dmra {

struct Alignment {
  DihedralElement element;
  double score = 0.0;
};

namespace detail {

template <typename A, typename B>
Alignment align_rows(const A& yi, const B& yj) {
  const auto L = static_cast<std::size_t>(yi.size());
  const RealVector scores = orbit_inner_products(yi, yj);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return {DihedralElement::from_index(L, static_cast<std::size_t>(best)), scores[best]};
}

}  // namespace detail

/// argmax_g <y_i, g.y_j>; ties go to the earliest element in canonical order.
inline Alignment pairwise_align(const Signal& yi, const Signal& yj) {
  if (yi.size() != yj.size()) throw InvalidArgument("pairwise_align: lengths differ");
  return detail::align_rows(yi.values(), yj.values());
}

/// Pairwise ratio estimates g_ij ~ g_i g_j^{-1} for i < j; (j, i) is the inverse.
class SyncRatios {
 public:
  SyncRatios(std::size_t n, std::size_t L) : n_(n), L_(L), elements_(n * (n - 1) / 2, 0), scores_(n * (n - 1) / 2, 0.0) {
    if (n < 2) throw InvalidArgument("SyncRatios: need at least two elements");
  }

  std::size_t size() const { return n_; }
  std::size_t order() const { return L_; }

  void set(std::size_t i, std::size_t j, const DihedralElement& g, double score = 0.0) {
    if (i == j || i >= n_ || j >= n_) throw InvalidArgument("SyncRatios::set: bad index pair");
    if (g.order() != L_) throw InvalidArgument("SyncRatios::set: element of the wrong group");
    const DihedralElement stored = i < j ? g : inverse(g);
    const auto k = slot(std::min(i, j), std::max(i, j));
    elements_[k] = static_cast<std::uint32_t>(stored.index());
    scores_[k] = score;
  }

  DihedralElement at(std::size_t i, std::size_t j) const {
    if (i == j) return DihedralElement::identity(L_);
    const auto g = DihedralElement::from_index(L_, elements_[slot(std::min(i, j), std::max(i, j))]);
    return i < j ? g : inverse(g);
  }

  double score(std::size_t i, std::size_t j) const { return scores_[slot(std::min(i, j), std::max(i, j))]; }

 private:
  std::size_t slot(std::size_t i, std::size_t j) const { return i * n_ - i * (i + 1) / 2 + (j - i - 1); }

  std::size_t n_;
  std::size_t L_;
  std::vector<std::uint32_t> elements_;
  std::vector<double> scores_;
};

/// Aligns every pair of observations.
inline SyncRatios align_all(const ObservationMatrix& y) {
  const auto n = static_cast<std::size_t>(y.rows());
  const auto L = static_cast<std::size_t>(y.cols());
  SyncRatios ratios(n, L);
  for (std::size_t i = 0; i < n; ++i) {
    const RealVector yi = y.row(static_cast<Eigen::Index>(i)).transpose();
    for (std::size_t j = i + 1; j < n; ++j) {
      const RealVector yj = y.row(static_cast<Eigen::Index>(j)).transpose();
      const auto a = detail::align_rows(yi, yj);
      ratios.set(i, j, a.element, a.score);
    }
  }
  return ratios;
}

/// Orthogonal 2x2 image of g.
inline Eigen::Matrix2d representation(const DihedralElement& g) {
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(g.rotation()) / static_cast<double>(g.order());
  Eigen::Matrix2d rot;
  rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  if (!g.reflected()) return rot;
  return rot * Eigen::Vector2d(1.0, -1.0).asDiagonal();
}

/// The element whose representation is Frobenius-nearest to `block`.
inline DihedralElement round_to_group(const Eigen::Matrix2d& block, std::size_t L) {
  std::size_t best = 0;
  double best_trace = -std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < 2 * L; ++idx) {
    const double t = (representation(DihedralElement::from_index(L, idx)).transpose() * block).trace();
    if (t > best_trace) {
      best_trace = t;
      best = idx;
    }
  }
  return DihedralElement::from_index(L, best);
}

struct SyncOptions {
  std::size_t max_iterations = 2000;
  double tolerance = 1e-10;
  std::uint64_t seed = 0x5eed;
};

namespace detail {

/// Top-2 eigenvectors of a symmetric operator given by `apply(V) -> H V`, using
/// shifted block subspace iteration with Rayleigh-Ritz extraction.
template <typename Apply>
RealMatrix top_two_eigenvectors(Eigen::Index dim, double shift, const Apply& apply, const SyncOptions& options) {
  const Eigen::Index block = std::min<Eigen::Index>(dim, 8);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  RealMatrix v(dim, block);
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = normal(rng);
  Eigen::HouseholderQR<RealMatrix> qr(v);
  v = qr.householderQ() * RealMatrix::Identity(dim, block);
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    RealMatrix hv = apply(v) + shift * v;
    const RealMatrix t = v.transpose() * hv;
    Eigen::SelfAdjointEigenSolver<RealMatrix> ritz(0.5 * (t + t.transpose()));
    if (ritz.info() != Eigen::Success) throw NumericalFailure("synchronize: Ritz eigen-solver failed");
    const RealMatrix rv = v * ritz.eigenvectors();
    const RealMatrix hrv = hv * ritz.eigenvectors();
    const auto& theta = ritz.eigenvalues();
    bool converged = true;
    for (Eigen::Index k = block - 2; k < block; ++k) {
      const double res = (hrv.col(k) - theta[k] * rv.col(k)).norm();
      if (res > options.tolerance * std::abs(theta[block - 1])) converged = false;
    }
    if (converged) return rv.rightCols(2);
    Eigen::HouseholderQR<RealMatrix> step(hrv);
    v = step.householderQ() * RealMatrix::Identity(dim, block);
  }
  throw NumericalFailure("synchronize: subspace iteration did not converge");
}

}  // namespace detail

/// Spectral estimate of g_1..g_n from their ratios, up to one global right factor.
inline std::vector<DihedralElement> synchronize(const SyncRatios& ratios, const SyncOptions& options = {}) {
  const auto n = ratios.size();
  const auto L = ratios.order();
  if (n < 2) throw InvalidArgument("synchronize: need at least two elements");
  const auto dim = static_cast<Eigen::Index>(2 * n);

  std::vector<Eigen::Matrix2d> reps;
  for (const auto& g : elements(L)) reps.push_back(representation(g));

  RealMatrix u;
  constexpr std::size_t kDenseLimit = 2048;
  if (n <= kDenseLimit) {
    RealMatrix h = RealMatrix::Identity(dim, dim);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto& rep = reps[ratios.at(i, j).index()];
        const auto bi = static_cast<Eigen::Index>(2 * i);
        const auto bj = static_cast<Eigen::Index>(2 * j);
        h.block<2, 2>(bi, bj) = rep;
        h.block<2, 2>(bj, bi) = rep.transpose();
      }
    }
    if (dim <= 64) {
      Eigen::SelfAdjointEigenSolver<RealMatrix> eig(h);
      if (eig.info() != Eigen::Success) throw NumericalFailure("synchronize: eigen-solver failed");
      u = eig.eigenvectors().rightCols(2);
    } else {
      u = detail::top_two_eigenvectors(dim, static_cast<double>(n), [&](const RealMatrix& v) -> RealMatrix { return h * v; },
                                       options);
    }
  } else {
    const auto apply = [&](const RealMatrix& v) -> RealMatrix {
      RealMatrix out = v;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j) continue;
          out.middleRows<2>(static_cast<Eigen::Index>(2 * i)) +=
              reps[ratios.at(i, j).index()] * v.middleRows<2>(static_cast<Eigen::Index>(2 * j));
        }
      }
      return out;
    };
    u = detail::top_two_eigenvectors(dim, static_cast<double>(n), apply, options);
  }

  // Rotate the eigenbasis so the first block is orthogonal-aligned with the identity.
  Eigen::JacobiSVD<Eigen::Matrix2d> polar(u.topRows<2>(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix2d anchor = polar.matrixU() * polar.matrixV().transpose();
  std::vector<DihedralElement> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Matrix2d b = u.middleRows<2>(static_cast<Eigen::Index>(2 * i)) * anchor.transpose();
    out.push_back(round_to_group(b, L));
  }
  return out;
}

/// Aligns all pairs, synchronizes and averages g_i^{-1} y_i.
inline EstimateResult estimate_by_sync(const ObservationMatrix& y, const SyncOptions& options = {}) {
  detail::Stopwatch clock;
  const auto n = static_cast<std::size_t>(y.rows());
  if (n < 2) throw InvalidArgument("estimate_by_sync: need at least two observations");
  const auto L = static_cast<std::size_t>(y.cols());
  const auto elems = synchronize(align_all(y), options);
  RealVector acc = RealVector::Zero(static_cast<Eigen::Index>(L));
  RealVector tmp(static_cast<Eigen::Index>(L));
  for (std::size_t i = 0; i < n; ++i) {
    const RealVector yi = y.row(static_cast<Eigen::Index>(i)).transpose();
    detail::act(inverse(elems[i]), yi, tmp);
    acc += tmp;
  }
  EstimateResult result{Signal(acc / static_cast<double>(n))};
  result.iterations = 1;
  result.wall_time = clock.elapsed();
  return result;
}

inline EstimateResult estimate_by_sync(const ObservationSet& obs, const SyncOptions& options = {}) {
  return estimate_by_sync(obs.observations, options);
}

}  // namespace dmra
