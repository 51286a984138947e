#pragma once

// Population and empirical moments of the observation model y = g.x + eps.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <set>
#include <utility>

#include "dmra/error.hpp"
#include "dmra/group.hpp"

namespace dmra {

using ObservationMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A probability vector over D_2L: p[k] = P(r^k), q[k] = P(r^k s).
class GroupDistribution {
 public:
  GroupDistribution(RealVector p, RealVector q) : p_(std::move(p)), q_(std::move(q)) {
    if (p_.size() != q_.size()) throw InvalidArgument("GroupDistribution: p and q differ in length");
    if (p_.size() < 1) throw InvalidArgument("GroupDistribution: empty");
    if (!p_.allFinite() || !q_.allFinite()) throw InvalidArgument("GroupDistribution: non-finite entry");
    if (p_.minCoeff() < 0.0 || q_.minCoeff() < 0.0) {
      throw InvalidArgument("GroupDistribution: negative probability");
    }
    if (std::abs(p_.sum() + q_.sum() - 1.0) > 1e-12) {
      throw InvalidArgument("GroupDistribution: probabilities do not sum to one");
    }
  }

  /// From a 2L vector in canonical element order.
  static GroupDistribution from_flat(const RealVector& flat) {
    const auto L = flat.size() / 2;
    if (flat.size() != 2 * L) throw InvalidArgument("GroupDistribution: flat vector has odd length");
    return {flat.head(L), flat.tail(L)};
  }

  static GroupDistribution uniform(std::size_t L) {
    const auto n = static_cast<Eigen::Index>(L);
    const double w = 1.0 / static_cast<double>(2 * L);
    return {RealVector::Constant(n, w), RealVector::Constant(n, w)};
  }

  static GroupDistribution point_mass(const DihedralElement& g) {
    RealVector flat = RealVector::Zero(static_cast<Eigen::Index>(2 * g.order()));
    flat[static_cast<Eigen::Index>(g.index())] = 1.0;
    return from_flat(flat);
  }

  std::size_t order() const { return static_cast<std::size_t>(p_.size()); }
  const RealVector& p() const { return p_; }
  const RealVector& q() const { return q_; }

  double operator()(const DihedralElement& g) const {
    const auto k = static_cast<Eigen::Index>(g.rotation());
    return g.reflected() ? q_[k] : p_[k];
  }

  RealVector flat() const {
    RealVector out(2 * p_.size());
    out << p_, q_;
    return out;
  }

  /// rho'(g) = rho(g h). Moments of (h.x, rho') equal those of (x, rho).
  GroupDistribution translated(const DihedralElement& h) const {
    RealVector out(2 * p_.size());
    for (const auto& g : elements(order())) out[static_cast<Eigen::Index>(g.index())] = (*this)(compose(g, h));
    return from_flat(out);
  }

 private:
  RealVector p_;
  RealVector q_;
};

/// First and second moments. sigma2 records the noise variance still contained in m2.
struct MomentPair {
  RealVector m1;
  RealMatrix m2;
  double sigma2 = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(m1.size()); }
};

namespace detail {

inline void require_same_order(const Signal& x, const GroupDistribution& rho, const char* what) {
  if (x.size() != rho.order()) {
    throw InvalidArgument(std::string(what) + ": signal length and distribution order differ");
  }
}

/// Circulant matrix with column k equal to r^k z, i.e. C[l, k] = z[l - k].
inline RealMatrix circulant(const RealVector& z) {
  const auto L = static_cast<std::size_t>(z.size());
  RealMatrix c(z.size(), z.size());
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t k = 0; k < L; ++k) {
      c(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) =
          z[static_cast<Eigen::Index>(wrap(static_cast<long long>(l) - static_cast<long long>(k), L))];
    }
  }
  return c;
}

inline RealVector reflect(const RealVector& x) {
  RealVector out(x.size());
  act(DihedralElement::s(static_cast<std::size_t>(x.size())), x, out);
  return out;
}

/// Deterministic pairwise (tree) sum of f(0), ..., f(count - 1).
template <typename T, typename F>
T pairwise_sum(std::size_t begin, std::size_t end, const F& f) {
  if (end - begin == 1) return f(begin);
  const std::size_t mid = begin + (end - begin) / 2;
  T left = pairwise_sum<T>(begin, mid, f);
  left += pairwise_sum<T>(mid, end, f);
  return left;
}

inline constexpr std::size_t kRowBlock = 512;

}  // namespace detail

/// C_p x + C_q (s.x).
inline RealVector analytic_m1(const Signal& x, const GroupDistribution& rho) {
  detail::require_same_order(x, rho, "analytic_m1");
  return detail::circulant(rho.p()) * x.values() + detail::circulant(rho.q()) * detail::reflect(x.values());
}

/// C_x D_p C_x^T + C_{sx} D_q C_{sx}^T + sigma^2 I.
inline RealMatrix analytic_m2(const Signal& x, const GroupDistribution& rho, double sigma = 0.0) {
  detail::require_same_order(x, rho, "analytic_m2");
  if (!(sigma >= 0.0)) throw InvalidArgument("analytic_m2: sigma must be nonnegative");
  const RealMatrix cx = detail::circulant(x.values());
  const RealMatrix csx = detail::circulant(detail::reflect(x.values()));
  RealMatrix m2 = cx * rho.p().asDiagonal() * cx.transpose() + csx * rho.q().asDiagonal() * csx.transpose();
  m2.diagonal().array() += sigma * sigma;
  return 0.5 * (m2 + m2.transpose());
}

inline MomentPair analytic_moments(const Signal& x, const GroupDistribution& rho, double sigma = 0.0) {
  return {analytic_m1(x, rho), analytic_m2(x, rho, sigma), sigma * sigma};
}

/// Sample averages (1/n) sum y_i and (1/n) sum y_i y_i^T. sigma2 is left at `sigma2`.
inline MomentPair empirical_moments(const ObservationMatrix& y, double sigma2 = 0.0) {
  const auto n = static_cast<std::size_t>(y.rows());
  if (n == 0) throw InvalidArgument("empirical_moments: no observations");
  const auto blocks = (n + detail::kRowBlock - 1) / detail::kRowBlock;
  const auto block_rows = [&](std::size_t b) {
    const auto start = static_cast<Eigen::Index>(b * detail::kRowBlock);
    const auto rows = std::min<Eigen::Index>(static_cast<Eigen::Index>(detail::kRowBlock), y.rows() - start);
    return y.middleRows(start, rows);
  };
  RealVector s1 = detail::pairwise_sum<RealVector>(0, blocks, [&](std::size_t b) -> RealVector {
    return block_rows(b).colwise().sum().transpose();
  });
  RealMatrix s2 = detail::pairwise_sum<RealMatrix>(0, blocks, [&](std::size_t b) -> RealMatrix {
    const auto blk = block_rows(b);
    return blk.transpose() * blk;
  });
  const double inv_n = 1.0 / static_cast<double>(n);
  MomentPair m{s1 * inv_n, s2 * inv_n, sigma2};
  m.m2 = 0.5 * (m.m2 + m.m2.transpose()).eval();
  return m;
}

/// Sample variance (n - 1 denominator) of the group-invariant statistic
/// (1/sqrt L) sum_l y_i[l]; unbiased for sigma^2.
inline double estimate_sigma2(const ObservationMatrix& y) {
  const auto n = y.rows();
  if (n < 2) throw InvalidArgument("estimate_sigma2: need at least two observations");
  const RealVector stat = y.rowwise().sum() / std::sqrt(static_cast<double>(y.cols()));
  const double mean = stat.mean();
  const double var = (stat.array() - mean).square().sum() / static_cast<double>(n - 1);
  return std::max(0.0, var);
}

inline MomentPair debias(MomentPair m, double sigma2) {
  if (!(sigma2 >= 0.0)) throw InvalidArgument("debias: sigma2 must be nonnegative");
  m.m2.diagonal().array() -= sigma2;
  m.sigma2 = 0.0;
  return m;
}

/// Records which (i, j) entries of a FourierMomentTable were read.
using AccessLog = std::set<std::pair<std::size_t, std::size_t>>;

/// Fourier-domain first moment and the table M_{i,j} = (F M2 F^*)[i, -j mod L]. For
/// exact moments M_{i,j} = ph[i+j] xh[i] xh[j] + DFT(q)[i+j] xh[-i] xh[-j], so
/// M_{i,-i} = |xh[i]|^2.
class FourierMomentTable {
 public:
  FourierMomentTable(ComplexVector mhat1, ComplexMatrix second)
      : mhat1_(std::move(mhat1)), second_(std::move(second)) {}

  std::size_t size() const { return static_cast<std::size_t>(mhat1_.size()); }
  const ComplexVector& mhat1() const { return mhat1_; }

  /// M_{i,j} with indices taken mod L.
  Complex entry(long long i, long long j) const {
    const auto L = size();
    const auto a = detail::wrap(i, L);
    const auto b = detail::wrap(j, L);
    if (log_ != nullptr) log_->emplace(a, b);
    return second_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(detail::wrap(-static_cast<long long>(b), L)));
  }

  /// Test hook: subsequent entry() reads are recorded into `log` (nullptr disables).
  void set_access_log(AccessLog* log) { log_ = log; }

 private:
  ComplexVector mhat1_;
  ComplexMatrix second_;
  AccessLog* log_ = nullptr;
};

namespace detail {

inline ComplexMatrix dft_matrix(std::size_t L) {
  ComplexMatrix f(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(L));
  const double step = -2.0 * std::numbers::pi / static_cast<double>(L);
  for (std::size_t a = 0; a < L; ++a) {
    for (std::size_t l = 0; l < L; ++l) {
      f(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(l)) =
          std::polar(1.0, step * static_cast<double>((a * l) % L));
    }
  }
  return f;
}

}  // namespace detail

inline FourierMomentTable fourier_moments(const MomentPair& m) {
  if (m.sigma2 != 0.0) throw InvalidArgument("fourier_moments: moments must be debiased first");
  const auto L = m.size();
  const ComplexMatrix f = detail::dft_matrix(L);
  ComplexVector mhat1 = f * m.m1.cast<Complex>();
  ComplexMatrix second = f * m.m2.cast<Complex>() * f.adjoint();
  return {std::move(mhat1), std::move(second)};
}

}  // namespace dmra
