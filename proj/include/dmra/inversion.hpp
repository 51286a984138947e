#pragma once

// Orbit recovery from exact first and second moments.
//
// With z[i] = xh[i] / |xh[i]| and xh[0] normalized to 1, every table entry reads
//   M_{i,j} = P[i+j] z[i] z[j] + Q[i+j] / (z[i] z[j])
// for unknown Fourier coefficients P, Q of the distribution. Eliminating P and Q
// between triples of entries yields two quadratics in z[n+1] for every n, whose
// common root is a rational function of z[1], z[2], z[n-1], z[n]. Eliminating z[3]
// gives a palindromic quadratic for z[2] given z[1]. z[1] itself is free up to the
// weighted scaling z[k] -> nu^k z[k]; the parity constraint on the middle frequency
// restricts nu to L values. That leaves at most 2L candidate signals; the moments
// are linear in the distribution, so each candidate is scored by a least-squares fit.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dmra/error.hpp"
#include "dmra/group.hpp"
#include "dmra/moments.hpp"

namespace dmra {

struct InversionOptions {
  /// Denominators and leading coefficients below this fraction of their largest
  /// monomial are treated as vanishing.
  double degeneracy_tolerance = 1e-10;
  /// Power-spectrum entries below this fraction of the largest one are zero.
  double spectrum_tolerance = 1e-10;
  /// Candidates whose inverse transform has an imaginary part above this fraction
  /// of the real part are discarded.
  double realness_tolerance = 1e-6;
  /// Relative residual allowed when z[n+1] is substituted back into the two quadratics.
  double quadratic_tolerance = 1e-4;
};

/// Unit-modulus Fourier phases z[0..top] (z[0] = 1) and the signed DC term.
struct PhaseVector {
  std::vector<Complex> z;
  double dc = 0.0;
};

struct QuarticCoefficients {
  Complex a0;
  Complex a1;
  Complex a2;
  double b1 = 0.0;
  double b2 = 0.0;
};

struct BranchLabel {
  std::size_t root_index = 0;  // which of the L admissible scalings nu
  std::size_t z2_branch = 0;   // which root of the palindromic quadratic
};

struct CandidateSet {
  std::vector<Signal> candidates;
  std::vector<BranchLabel> labels;
  /// Why a z2 branch produced no candidates, if it did not.
  std::vector<std::string> rejected_branches;
};

/// View of a FourierMomentTable rescaled as if |xh[i]| = 1 and xh[0] = 1.
class NormalizedMomentTable {
 public:
  NormalizedMomentTable(const FourierMomentTable& table, RealVector magnitudes, double dc)
      : table_(&table), magnitudes_(std::move(magnitudes)), dc_(dc) {}

  std::size_t size() const { return table_->size(); }

  Complex entry(long long i, long long j) const {
    return table_->entry(i, j) / (scale(i) * scale(j));
  }

 private:
  double scale(long long i) const {
    const auto k = detail::wrap(i, size());
    return k == 0 ? dc_ : magnitudes_[static_cast<Eigen::Index>(k)];
  }

  const FourierMomentTable* table_;
  RealVector magnitudes_;
  double dc_;
};

struct PowerSpectrumNormalization {
  PhaseVector phases;     // template: z = {1}, dc filled in
  RealVector magnitudes;  // |xh[i]| for i = 0..L-1
  NormalizedMomentTable table;
};

namespace detail {

inline double magnitude_sum(std::initializer_list<Complex> terms) {
  double s = 0.0;
  for (const auto& t : terms) s += std::abs(t);
  return s;
}

inline std::string describe(const Complex& c) {
  std::ostringstream os;
  os.precision(6);
  os << c.real() << (c.imag() < 0 ? "-" : "+") << std::abs(c.imag()) << "i";
  return os.str();
}

inline Complex unit(const Complex& c) {
  const double r = std::abs(c);
  return r > 0.0 ? c / r : Complex{1.0, 0.0};
}

}  // namespace detail

/// Reads M_{i,-i} = |xh[i]|^2 for i <= L/2, fixes the DC sign from mhat1[0] and
/// rescales the table to unit-modulus phases.
inline PowerSpectrumNormalization normalize_by_power_spectrum(const FourierMomentTable& table,
                                                              const InversionOptions& options = {}) {
  const auto L = table.size();
  RealVector power(static_cast<Eigen::Index>(L));
  for (std::size_t i = 0; i <= L / 2; ++i) {
    const double v = table.entry(static_cast<long long>(i), -static_cast<long long>(i)).real();
    power[static_cast<Eigen::Index>(i)] = v;
    power[static_cast<Eigen::Index>(detail::wrap(-static_cast<long long>(i), L))] = v;
  }
  const double largest = power.maxCoeff();
  for (std::size_t i = 0; i <= L / 2; ++i) {
    if (!(power[static_cast<Eigen::Index>(i)] > options.spectrum_tolerance * largest)) {
      throw DegenerateInstance("power spectrum entry |xh[" + std::to_string(i) + "]|^2 = " +
                               std::to_string(power[static_cast<Eigen::Index>(i)]) +
                               " vanishes; the signal is not generic");
    }
  }
  RealVector magnitudes = power.cwiseSqrt();
  const double dc = table.mhat1()[0].real() < 0.0 ? -magnitudes[0] : magnitudes[0];
  PhaseVector phases{{Complex{1.0, 0.0}}, dc};
  NormalizedMomentTable normalized(table, magnitudes, dc);
  return {std::move(phases), std::move(magnitudes), std::move(normalized)};
}

/// Coefficients of the palindromic quartic in z[2] and of its real reduction
/// B1 z1^4 + B2 z1^2 z2 + B1 z2^2 = 0.
template <typename Table>
QuarticCoefficients quartic_coefficients(const Table& t) {
  const Complex m10 = t.entry(1, 0);
  const Complex m11 = t.entry(1, 1);
  const Complex m21 = t.entry(2, -1);
  const Complex m20 = t.entry(2, 0);
  const Complex m32 = t.entry(3, -2);
  const Complex m31 = t.entry(3, -1);
  QuarticCoefficients c;
  c.a0 = m10 * m10 * m20 * m20 - m10 * m20 * m32 * m31;
  c.a1 = -2.0 * m10 * m10 * m11 * m20 - 2.0 * m10 * m21 * m20 * m20 + m11 * m20 * m32 * m32 +
         m10 * m11 * m32 * m31 + m21 * m20 * m32 * m31 + m10 * m21 * m31 * m31;
  c.a2 = m10 * m10 * m11 * m11 + 2.0 * m10 * m11 * m21 * m20 + 2.0 * m10 * m10 * m20 * m20 +
         m21 * m21 * m20 * m20 - m11 * m11 * m32 * m32 - m20 * m20 * m32 * m32 -
         2.0 * m11 * m21 * m32 * m31 - m10 * m10 * m31 * m31 - m21 * m21 * m31 * m31;
  c.b1 = 2.0 * (std::conj(c.a0) * c.a1).imag();
  c.b2 = 2.0 * (std::conj(c.a0) * c.a2).imag();
  return c;
}

/// The two roots z2 of B1 z1^4 + B2 z1^2 z2 + B1 z2^2 = 0. Their product is z1^4.
inline std::array<Complex, 2> solve_z2(const Complex& z1, const QuarticCoefficients& c,
                                       const InversionOptions& options = {}) {
  const double scale = std::abs(c.a0) * std::max(std::abs(c.a1), std::abs(c.a2));
  if (!(std::abs(c.b1) > options.degeneracy_tolerance * scale)) {
    throw DegenerateInstance("palindromic quadratic degenerates: B1 = " + std::to_string(c.b1) +
                             " relative to |A0|max(|A1|,|A2|) = " + std::to_string(scale));
  }
  const Complex disc = std::sqrt(Complex{c.b2 * c.b2 - 4.0 * c.b1 * c.b1, 0.0});
  const Complex z1sq = z1 * z1;
  return {z1sq * (-c.b2 + disc) / (2.0 * c.b1), z1sq * (-c.b2 - disc) / (2.0 * c.b1)};
}

/// z[3] as a rational function of z[1], z[2].
template <typename Table>
Complex z3_from_z1_z2(const Complex& z1, const Complex& z2, const Table& t, const InversionOptions& options = {}) {
  const Complex m10 = t.entry(1, 0);
  const Complex m11 = t.entry(1, 1);
  const Complex m21 = t.entry(2, -1);
  const Complex m20 = t.entry(2, 0);
  const Complex m32 = t.entry(3, -2);
  const Complex m31 = t.entry(3, -1);
  const Complex z1p2 = z1 * z1;
  const Complex z1p4 = z1p2 * z1p2;
  const Complex z2p2 = z2 * z2;

  const Complex n0 = m10 * m20 * z1p4;
  const Complex n1 = -m10 * m11 * z1p2 * z2;
  const Complex n2 = -m20 * m21 * z1p2 * z2;
  const Complex n3 = m10 * m20 * z2p2;
  const Complex d0 = m10 * m31 * z1p4;
  const Complex d1 = -m21 * m31 * z1p2 * z2;
  const Complex d2 = -m11 * m32 * z1p2 * z2;
  const Complex d3 = m20 * m32 * z2p2;
  const Complex num = z1 * z2 * (n0 + n1 + n2 + n3);
  const Complex den = d0 + d1 + d2 + d3;
  if (!(std::abs(den) > options.degeneracy_tolerance * detail::magnitude_sum({d0, d1, d2, d3}))) {
    throw DegenerateInstance("z[3] denominator vanishes at z1 = " + detail::describe(z1) +
                             ", z2 = " + detail::describe(z2) + " (denominator " + detail::describe(den) + ")");
  }
  return num / den;
}

namespace detail {

/// Coefficients (alpha, beta, gamma) of the two quadratics alpha w^2 + beta w + gamma = 0
/// satisfied by w = z[n+1]: the first from entries (1,0), (2,-1), (n+1,-n); the second
/// from (n+1,0), (n,1), (n-1,2).
struct QuadraticPair {
  std::array<Complex, 3> first;
  std::array<Complex, 3> second;
  std::array<double, 3> first_scale;
  std::array<double, 3> second_scale;
};

template <typename Table>
QuadraticPair recursion_quadratics(long long n, const Complex& z1, const Complex& z2, const Complex& zp,
                                   const Complex& zn, const Table& t) {
  const Complex m10 = t.entry(1, 0);
  const Complex m21 = t.entry(2, -1);
  const Complex mn1 = t.entry(n, 1);
  const Complex mp2 = t.entry(n - 1, 2);
  const Complex mfn = t.entry(n + 1, -n);
  const Complex mf0 = t.entry(n + 1, 0);
  const Complex z1p2 = z1 * z1;
  const Complex z2p2 = z2 * z2;
  const Complex u = zn * z1;
  const Complex v = zp * z2;
  QuadraticPair q;
  q.first = {m21 * z1 * z2 - m10 * z1p2 * z1, mfn * (z1p2 * z1p2 - z2p2) * zn,
             m10 * z1 * z2p2 * zn * zn - m21 * z1p2 * z1 * z2 * zn * zn};
  q.first_scale = {std::abs(m21) + std::abs(m10), 2.0 * std::abs(mfn), std::abs(m10) + std::abs(m21)};
  q.second = {mn1 * u - mp2 * v, mf0 * (v * v - u * u), u * v * (mp2 * u - mn1 * v)};
  q.second_scale = {std::abs(mn1) + std::abs(mp2), 2.0 * std::abs(mf0), std::abs(mp2) + std::abs(mn1)};
  return q;
}

inline double quadratic_residual(const std::array<Complex, 3>& c, const std::array<double, 3>& scale,
                                 const Complex& w) {
  const Complex value = (c[0] * w + c[1]) * w + c[2];
  const double size = scale[0] * std::norm(w) + scale[1] * std::abs(w) + scale[2];
  return std::abs(value) / size;
}

}  // namespace detail

/// z[n+1] = a / b for n >= 3, from z[1], z[2], z[n-1], z[n].
template <typename Table>
Complex z_next(long long n, const Complex& z1, const Complex& z2, const Complex& z_nm1, const Complex& z_n,
               const Table& t, const InversionOptions& options = {}) {
  if (n < 3) throw InvalidArgument("z_next: n must be at least 3 (z[3] has its own expression)");
  const Complex m10 = t.entry(1, 0);
  const Complex m21 = t.entry(2, -1);
  const Complex mn1 = t.entry(n, 1);
  const Complex mp2 = t.entry(n - 1, 2);
  const Complex mfn = t.entry(n + 1, -n);
  const Complex mf0 = t.entry(n + 1, 0);

  const Complex z1p2 = z1 * z1;
  const Complex z1p3 = z1p2 * z1;
  const Complex z1p4 = z1p2 * z1p2;
  const Complex z1p5 = z1p4 * z1;
  const Complex z2p2 = z2 * z2;
  const Complex z2p3 = z2p2 * z2;
  const Complex zpp2 = z_nm1 * z_nm1;
  const Complex znp2 = z_n * z_n;
  const Complex znp3 = znp2 * z_n;

  const Complex a0 = m10 * mn1 * (z1p2 * z2p2 * znp3 - z1p4 * z2p2 * zpp2 * z_n);
  const Complex a1 = m21 * mn1 * (z1p2 * z2p3 * zpp2 * z_n - z1p4 * z2 * znp3);
  const Complex a2 = m10 * mp2 * (z1p5 * z2 * z_nm1 * znp2 - z1 * z2p3 * z_nm1 * znp2);
  const Complex b0 = mn1 * mfn * (z1 * z2p2 * znp2 - z1p5 * znp2);
  const Complex b1 = mp2 * mfn * (z1p4 * z2 * z_nm1 * z_n - z2p3 * z_nm1 * z_n);
  const Complex b2 = mf0 * m21 * (z1 * z2p3 * zpp2 - z1p3 * z2 * znp2);
  const Complex b3 = mf0 * m10 * (z1p5 * znp2 - z1p3 * z2p2 * zpp2);
  const Complex num = a0 + a1 + a2;
  const Complex den = b0 + b1 + b2 + b3;
  const double den_scale =
      std::abs(mn1 * mfn) * (std::abs(z1 * z2p2 * znp2) + std::abs(z1p5 * znp2)) +
      std::abs(mp2 * mfn) * (std::abs(z1p4 * z2 * z_nm1 * z_n) + std::abs(z2p3 * z_nm1 * z_n)) +
      std::abs(mf0 * m21) * (std::abs(z1 * z2p3 * zpp2) + std::abs(z1p3 * z2 * znp2)) +
      std::abs(mf0 * m10) * (std::abs(z1p5 * znp2) + std::abs(z1p3 * z2p2 * zpp2));
  if (!(std::abs(den) > options.degeneracy_tolerance * den_scale)) {
    throw DegenerateInstance("z[" + std::to_string(n + 1) + "] denominator vanishes (" + detail::describe(den) + ")");
  }
  const Complex w = num / den;
  const auto quads = detail::recursion_quadratics(n, z1, z2, z_nm1, z_n, t);
  const double r1 = detail::quadratic_residual(quads.first, quads.first_scale, w);
  const double r2 = detail::quadratic_residual(quads.second, quads.second_scale, w);
  if (r1 > options.quadratic_tolerance || r2 > options.quadratic_tolerance) {
    throw InconsistentMoments("z[" + std::to_string(n + 1) + "] = " + detail::describe(w) +
                              " does not satisfy its quadratics (relative residuals " + std::to_string(r1) + ", " +
                              std::to_string(r2) + ")");
  }
  return w;
}

/// Index of the last phase needed: L/2 for even L, (L+1)/2 for odd L.
inline std::size_t phase_chain_length(std::size_t L) { return L / 2 + L % 2; }

/// Builds the reference phase chain z[0..top] starting from z[0] = z[1] = 1.
template <typename Table>
std::vector<Complex> phase_chain(const Complex& z2, std::size_t top, const Table& t, const InversionOptions& options = {}) {
  std::vector<Complex> z{Complex{1.0, 0.0}, Complex{1.0, 0.0}, detail::unit(z2)};
  if (top >= 3) z.push_back(detail::unit(z3_from_z1_z2(z[1], z[2], t, options)));
  for (std::size_t n = 3; n + 1 <= top; ++n) {
    z.push_back(detail::unit(z_next(static_cast<long long>(n), z[1], z[2], z[n - 1], z[n], t, options)));
  }
  z.resize(top + 1);
  return z;
}

/// Enumerates the at most 2L signals whose phase chains satisfy the moment
/// equations and the parity constraint.
inline CandidateSet enumerate_candidates(const FourierMomentTable& table, const InversionOptions& options = {}) {
  const auto L = table.size();
  if (L < 4) throw InvalidArgument("inversion needs L >= 4; got L = " + std::to_string(L));
  const auto norm = normalize_by_power_spectrum(table, options);
  const auto coeffs = quartic_coefficients(norm.table);
  const auto roots = solve_z2(Complex{1.0, 0.0}, coeffs, options);
  const auto top = phase_chain_length(L);
  const double two_pi = 2.0 * std::numbers::pi;

  CandidateSet out;
  for (std::size_t branch = 0; branch < roots.size(); ++branch) {
    std::vector<Complex> chain;
    try {
      chain = phase_chain(roots[branch], top, norm.table, options);
    } catch (const DegenerateInstance& e) {
      out.rejected_branches.push_back(e.what());
      continue;
    } catch (const InconsistentMoments& e) {
      out.rejected_branches.push_back(e.what());
      continue;
    }
    // nu^L = c makes the scaled chain meet z[L/2]^2 = 1 (even) or z[(L-1)/2] z[(L+1)/2] = 1 (odd).
    const Complex c = L % 2 == 0 ? 1.0 / (chain[L / 2] * chain[L / 2]) : 1.0 / (chain[(L - 1) / 2] * chain[(L + 1) / 2]);
    const double base = std::arg(c) / static_cast<double>(L);
    for (std::size_t k = 0; k < L; ++k) {
      const Complex nu = std::polar(1.0, base + two_pi * static_cast<double>(k) / static_cast<double>(L));
      ComplexVector xh = ComplexVector::Zero(static_cast<Eigen::Index>(L));
      xh[0] = norm.phases.dc;
      Complex power{1.0, 0.0};
      for (std::size_t i = 1; i <= L / 2; ++i) {
        power *= nu;
        const Complex value = norm.magnitudes[static_cast<Eigen::Index>(i)] * power * chain[i];
        xh[static_cast<Eigen::Index>(i)] = value;
        if (2 * i != L) xh[static_cast<Eigen::Index>(L - i)] = std::conj(value);
      }
      const ComplexVector time = idft_complex(FourierSignal(xh));
      const double real_norm = time.real().norm();
      if (!(time.imag().norm() <= options.realness_tolerance * real_norm)) continue;
      out.candidates.emplace_back(time.real());
      out.labels.push_back({k, branch});
    }
  }
  if (out.candidates.empty()) {
    std::string why;
    for (const auto& r : out.rejected_branches) why += "; " + r;
    throw InconsistentMoments("no candidate signal is consistent with the moments" + why);
  }
  return out;
}

struct DistributionFit {
  GroupDistribution rho;
  /// ||m2 - M2(x, rho)||_F + ||m1 - M1(x, rho)||_2
  double residual = 0.0;
  /// Condition number of the least-squares system on the identifiable part.
  double condition = 0.0;
  /// For a real signal the moments only see p + q at frequency zero, so mass can
  /// move uniformly between all rotations and all reflections. sum(p) of every
  /// nonnegative distribution with the same moments lies in this range.
  double rotation_mass_min = 0.0;
  double rotation_mass_max = 0.0;
};

namespace detail {

/// Euclidean projection onto the probability simplex.
inline RealVector project_to_simplex(const RealVector& v) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i];
    const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - t > 0.0) theta = t;
  }
  RealVector out = (v.array() - theta).max(0.0).matrix();
  return out / out.sum();
}

inline double moment_residual(const Signal& x, const GroupDistribution& rho, const MomentPair& m) {
  return (m.m2 - analytic_m2(x, rho)).norm() + (m.m1 - analytic_m1(x, rho)).norm();
}

}  // namespace detail

/// Least-squares distribution for a fixed candidate signal. The moments are linear
/// in (p, q); the normalization is eliminated exactly, and the one direction the
/// moments cannot see (rotations against reflections) is fixed by staying as close
/// as nonnegativity allows to the minimum-norm solution.
inline DistributionFit recover_distribution(const Signal& x, const MomentPair& m, double condition_limit = 1e10) {
  if (x.size() != m.size()) throw InvalidArgument("recover_distribution: signal and moments differ in length");
  if (m.sigma2 != 0.0) throw InvalidArgument("recover_distribution: moments must be debiased first");
  const auto L = static_cast<Eigen::Index>(x.size());
  const Eigen::Index unknowns = 2 * L;
  const Eigen::Index rows = L + L * (L + 1) / 2;
  RealMatrix a(rows, unknowns);
  RealVector b(rows);
  const double root2 = std::sqrt(2.0);
  for (Eigen::Index j = 0; j < unknowns; ++j) {
    RealVector gx(L);
    detail::act(DihedralElement::from_index(x.size(), static_cast<std::size_t>(j)), x.values(), gx);
    a.col(j).head(L) = gx;
    Eigen::Index row = L;
    for (Eigen::Index r = 0; r < L; ++r) {
      for (Eigen::Index c = r; c < L; ++c) a(row++, j) = gx[r] * gx[c] * (r == c ? 1.0 : root2);
    }
  }
  b.head(L) = m.m1;
  {
    Eigen::Index row = L;
    for (Eigen::Index r = 0; r < L; ++r) {
      for (Eigen::Index c = r; c < L; ++c) b[row++] = m.m2(r, c) * (r == c ? 1.0 : root2);
    }
  }
  // w = w0 + N z + t d: w0 uniform, d = (1, .., 1, -1, .., -1) / sqrt(2L) is invisible
  // to the moments, N spans the rest of {sum w = 0}.
  const RealVector w0 = RealVector::Constant(unknowns, 1.0 / static_cast<double>(unknowns));
  RealMatrix fixed(unknowns, 2);
  fixed.col(0).setOnes();
  fixed.col(1) << RealVector::Ones(L), -RealVector::Ones(L);
  Eigen::HouseholderQR<RealMatrix> qr(fixed);
  const RealMatrix q = qr.householderQ() * RealMatrix::Identity(unknowns, unknowns);
  const RealMatrix basis = q.rightCols(unknowns - 2);
  const RealVector d = fixed.col(1) / fixed.col(1).norm();
  const RealMatrix reduced = a * basis;
  Eigen::JacobiSVD<RealMatrix> svd(reduced, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double condition = sv[0] / std::max(sv[sv.size() - 1], std::numeric_limits<double>::min());
  if (!(condition < condition_limit)) {
    throw DegenerateInstance("distribution system is rank deficient (condition estimate " + std::to_string(condition) +
                             "); the candidate signal has a nontrivial symmetry");
  }
  const RealVector base = w0 + basis * svd.solve(b - a * w0);
  // Feasible t: base + t d >= 0.
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < unknowns; ++j) {
    if (d[j] > 0.0) {
      lo = std::max(lo, -base[j] / d[j]);
    } else {
      hi = std::min(hi, -base[j] / d[j]);
    }
  }
  // An empty interval (noise, or rounding when it degenerates to a point) takes the
  // t with the smallest worst violation before projecting.
  const double t = lo <= hi ? std::clamp(0.0, lo, hi) : 0.5 * (lo + hi);
  RealVector w = detail::project_to_simplex(base + t * d);
  const double base_mass = base.head(L).sum();
  const double mass_step = d.head(L).sum();
  double mass_lo = w.head(L).sum();
  double mass_hi = mass_lo;
  if (lo <= hi) {
    mass_lo = base_mass + lo * mass_step;
    mass_hi = base_mass + hi * mass_step;
  }
  auto rho = GroupDistribution::from_flat(w);
  const double residual = detail::moment_residual(x, rho, m);
  return {std::move(rho), residual, condition, std::clamp(mass_lo, 0.0, 1.0), std::clamp(mass_hi, 0.0, 1.0)};
}

struct OrbitEstimate {
  Signal x;
  GroupDistribution rho;
  double residual = 0.0;
  std::size_t candidate_index = 0;
};

/// Fits a distribution to every candidate and returns the smallest moment residual
/// (first index wins ties).
inline OrbitEstimate select_orbit(const CandidateSet& cands, const MomentPair& m) {
  if (cands.candidates.empty()) throw InvalidArgument("select_orbit: empty candidate set");
  std::optional<OrbitEstimate> best;
  std::string failures;
  for (std::size_t i = 0; i < cands.candidates.size(); ++i) {
    try {
      auto fit = recover_distribution(cands.candidates[i], m);
      if (!best || fit.residual < best->residual) {
        best = OrbitEstimate{cands.candidates[i], std::move(fit.rho), fit.residual, i};
      }
    } catch (const DegenerateInstance& e) {
      if (cands.candidates.size() == 1) throw;
      failures += std::string("; ") + e.what();
    }
  }
  if (!best) throw DegenerateInstance("no candidate admits a distribution fit" + failures);
  return *best;
}

/// Full pipeline for debiased moments.
inline OrbitEstimate invert_moments(const MomentPair& m, const InversionOptions& options = {}) {
  const auto table = fourier_moments(m);
  return select_orbit(enumerate_candidates(table, options), m);
}

}  // namespace dmra
