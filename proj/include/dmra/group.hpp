#pragma once

// The dihedral group D_2L and its action on real length-L signals.
//
// Elements are stored as (rotation, reflected) and denote r^rotation or
// r^rotation s. The time-domain action is
//   (r.x)[l] = x[(l - 1) mod L],   (s.x)[l] = x[-l mod L],
// so (r^k s . x)[l] = x[(k - l) mod L].
//
// DFT convention: xh[k] = sum_l x[l] exp(-2 pi i k l / L), inverse scaled by 1/L.
// Under it the rotation acts in frequency as (r.xh)[k] = exp(-2 pi i k / L) xh[k].

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <string>
#include <vector>

#include "dmra/error.hpp"

namespace dmra {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

namespace detail {

inline std::size_t wrap(long long i, std::size_t L) {
  const long long m = static_cast<long long>(L);
  long long r = i % m;
  return static_cast<std::size_t>(r < 0 ? r + m : r);
}

}  // namespace detail

class DihedralElement {
 public:
  DihedralElement(std::size_t order, long long rotation = 0, bool reflected = false)
      : order_(order), rotation_(0), reflected_(reflected) {
    if (order == 0) throw InvalidArgument("DihedralElement: order must be positive");
    rotation_ = detail::wrap(rotation, order);
  }

  static DihedralElement identity(std::size_t L) { return {L, 0, false}; }
  static DihedralElement r(std::size_t L, long long k = 1) { return {L, k, false}; }
  static DihedralElement s(std::size_t L) { return {L, 0, true}; }

  /// Position in the canonical order {1, r, ..., r^{L-1}, s, rs, ..., r^{L-1}s}.
  static DihedralElement from_index(std::size_t L, std::size_t index) {
    if (index >= 2 * L) throw InvalidArgument("DihedralElement: index out of range");
    return {L, static_cast<long long>(index % L), index >= L};
  }

  std::size_t order() const { return order_; }
  std::size_t rotation() const { return rotation_; }
  bool reflected() const { return reflected_; }
  std::size_t index() const { return rotation_ + (reflected_ ? order_ : 0); }
  bool is_identity() const { return rotation_ == 0 && !reflected_; }

  friend bool operator==(const DihedralElement&, const DihedralElement&) = default;

  std::string to_string() const {
    std::string out = rotation_ == 0 ? std::string{} : "r^" + std::to_string(rotation_);
    if (reflected_) out += "s";
    return out.empty() ? "1" : out;
  }

 private:
  std::size_t order_;
  std::size_t rotation_;
  bool reflected_;
};

/// All 2L elements in canonical order.
inline std::vector<DihedralElement> elements(std::size_t L) {
  std::vector<DihedralElement> out;
  out.reserve(2 * L);
  for (std::size_t i = 0; i < 2 * L; ++i) out.push_back(DihedralElement::from_index(L, i));
  return out;
}

/// Group product g*h: (r^a s^e)(r^b s^f) = r^{a + (-1)^e b} s^{e+f}.
inline DihedralElement compose(const DihedralElement& g, const DihedralElement& h) {
  if (g.order() != h.order()) throw InvalidArgument("compose: elements of different groups");
  const auto a = static_cast<long long>(g.rotation());
  const auto b = static_cast<long long>(h.rotation());
  return {g.order(), g.reflected() ? a - b : a + b, g.reflected() != h.reflected()};
}

inline DihedralElement inverse(const DihedralElement& g) {
  if (g.reflected()) return g;
  return {g.order(), -static_cast<long long>(g.rotation()), false};
}

/// A real signal of length L >= 3 with finite entries.
class Signal {
 public:
  explicit Signal(RealVector values) : values_(std::move(values)) {
    if (values_.size() < 3) throw InvalidArgument("Signal: length must be at least 3");
    if (!values_.allFinite()) throw InvalidArgument("Signal: entries must be finite");
  }
  Signal(std::initializer_list<double> values)
      : Signal(Eigen::Map<const RealVector>(values.begin(), static_cast<Eigen::Index>(values.size()))) {}

  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  const RealVector& values() const { return values_; }
  double norm() const { return values_.norm(); }

  friend bool operator==(const Signal& a, const Signal& b) { return a.values_ == b.values_; }

 private:
  RealVector values_;
};

/// Fourier coefficients of a signal of length L.
class FourierSignal {
 public:
  explicit FourierSignal(ComplexVector coeffs) : coeffs_(std::move(coeffs)) {}

  std::size_t size() const { return static_cast<std::size_t>(coeffs_.size()); }
  Complex operator[](std::size_t i) const { return coeffs_[static_cast<Eigen::Index>(i)]; }
  const ComplexVector& coeffs() const { return coeffs_; }

  /// Largest violation of coeffs[L-i] = conj(coeffs[i]).
  double symmetry_defect() const {
    const auto L = size();
    double worst = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
      const auto j = static_cast<Eigen::Index>(detail::wrap(-static_cast<long long>(i), L));
      worst = std::max(worst, std::abs(coeffs_[j] - std::conj(coeffs_[static_cast<Eigen::Index>(i)])));
    }
    return worst;
  }

 private:
  ComplexVector coeffs_;
};

namespace detail {

/// out = g . in for contiguous length-L vectors; out must not alias in.
template <typename In, typename Out>
void act(const DihedralElement& g, const In& in, Out& out) {
  const auto L = g.order();
  const auto k = static_cast<long long>(g.rotation());
  if (g.reflected()) {
    for (std::size_t l = 0; l < L; ++l) out[l] = in[wrap(k - static_cast<long long>(l), L)];
  } else {
    for (std::size_t l = 0; l < L; ++l) out[l] = in[wrap(static_cast<long long>(l) - k, L)];
  }
}

inline void require_length(const DihedralElement& g, std::size_t L, const char* what) {
  if (g.order() != L) {
    throw InvalidArgument(std::string(what) + ": group order " + std::to_string(g.order()) +
                          " does not match signal length " + std::to_string(L));
  }
}

}  // namespace detail

inline Signal apply(const DihedralElement& g, const Signal& x) {
  detail::require_length(g, x.size(), "apply");
  RealVector out(x.values().size());
  detail::act(g, x.values(), out);
  return Signal(std::move(out));
}

inline FourierSignal dft(const Signal& x) {
  Eigen::FFT<double> fft;
  ComplexVector out;
  fft.fwd(out, x.values());
  return FourierSignal(std::move(out));
}

/// Complex inverse transform, no symmetry requirement.
inline ComplexVector idft_complex(const FourierSignal& xh) {
  Eigen::FFT<double> fft;
  ComplexVector out;
  fft.inv(out, xh.coeffs());
  return out;
}

/// Inverse transform to a real signal. Fails if the input is not conjugate
/// symmetric to within `tolerance` relative to its largest coefficient.
inline Signal idft(const FourierSignal& xh, double tolerance = 1e-9) {
  const double scale = std::max(1.0, xh.coeffs().cwiseAbs().maxCoeff());
  if (xh.symmetry_defect() > tolerance * scale) {
    throw InvalidArgument("idft: coefficients are not conjugate symmetric; no real inverse");
  }
  return Signal(idft_complex(xh).real());
}

inline FourierSignal fourier_apply(const DihedralElement& g, const FourierSignal& xh) {
  detail::require_length(g, xh.size(), "fourier_apply");
  const auto L = xh.size();
  ComplexVector base(xh.coeffs().size());
  if (g.reflected()) {
    for (std::size_t l = 0; l < L; ++l) base[static_cast<Eigen::Index>(l)] = xh[detail::wrap(-static_cast<long long>(l), L)];
  } else {
    base = xh.coeffs();
  }
  const double step = -2.0 * std::numbers::pi / static_cast<double>(L);
  for (std::size_t l = 0; l < L; ++l) {
    const auto phase = static_cast<double>((l * g.rotation()) % L) * step;
    base[static_cast<Eigen::Index>(l)] *= std::polar(1.0, phase);
  }
  return FourierSignal(std::move(base));
}

/// c[k] = <a, r^k b> = sum_l a[l] b[(l - k) mod L].
template <typename A, typename B>
RealVector circular_correlation(const A& a, const B& b) {
  const auto L = static_cast<std::size_t>(a.size());
  RealVector c = RealVector::Zero(static_cast<Eigen::Index>(L));
  for (std::size_t k = 0; k < L; ++k) {
    double acc = 0.0;
    for (std::size_t l = 0; l < L; ++l) acc += a[l] * b[detail::wrap(static_cast<long long>(l) - static_cast<long long>(k), L)];
    c[static_cast<Eigen::Index>(k)] = acc;
  }
  return c;
}

/// Inner products <a, g.b> for all 2L elements g in canonical order.
template <typename A, typename B>
RealVector orbit_inner_products(const A& a, const B& b) {
  const auto L = static_cast<std::size_t>(a.size());
  RealVector out(static_cast<Eigen::Index>(2 * L));
  for (std::size_t k = 0; k < L; ++k) {
    double plain = 0.0;
    double mirrored = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      const auto ll = static_cast<long long>(l);
      const auto kk = static_cast<long long>(k);
      plain += a[l] * b[detail::wrap(ll - kk, L)];
      mirrored += a[l] * b[detail::wrap(kk - ll, L)];
    }
    out[static_cast<Eigen::Index>(k)] = plain;
    out[static_cast<Eigen::Index>(k + L)] = mirrored;
  }
  return out;
}

}  // namespace dmra
