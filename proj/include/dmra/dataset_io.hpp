#pragma once

// Binary dataset container and CSV export.
//
// Layout (all fields little-endian):
//   magic   "DMRA" (4 bytes)
//   version u32 (currently 1)
//   L       u32
//   n       u64
//   sigma   f64
//   seed    u64
//   flags   u32   bit 0: true elements, bit 1: true signal, bit 2: true distribution
//   observations  n*L f64, row-major
//   [elements]     n * (u32 rotation, u32 reflected)
//   [signal]       L f64
//   [distribution] 2L f64, canonical element order

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <type_traits>

#include "dmra/error.hpp"
#include "dmra/simulator.hpp"

namespace dmra {

inline constexpr std::array<char, 4> kDatasetMagic{'D', 'M', 'R', 'A'};
inline constexpr std::uint32_t kDatasetVersion = 1;

namespace detail {

enum DatasetFlags : std::uint32_t { kHasElements = 1u, kHasSignal = 2u, kHasDistribution = 4u };

template <typename T>
T to_little(T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &v, sizeof(T));
    std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&v, bytes.data(), sizeof(T));
  }
  return v;
}

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}
  template <typename T>
  void put(T v) {
    v = to_little(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  BinaryReader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}
  template <typename T>
  T get(const char* what) {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (in_.gcount() != static_cast<std::streamsize>(sizeof(T))) {
      throw FormatError(path_ + ": truncated file while reading " + what);
    }
    return to_little(v);
  }

 private:
  std::istream& in_;
  std::string path_;
};

}  // namespace detail

inline void save(const ObservationSet& obs, const std::string& path) {
  obs.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  detail::BinaryWriter w(out);
  for (char c : kDatasetMagic) w.put(c);
  w.put(kDatasetVersion);
  w.put(static_cast<std::uint32_t>(obs.L()));
  w.put(static_cast<std::uint64_t>(obs.n()));
  w.put(obs.sigma);
  w.put(obs.seed);
  std::uint32_t flags = 0;
  if (obs.true_elements) flags |= detail::kHasElements;
  if (obs.true_signal) flags |= detail::kHasSignal;
  if (obs.true_distribution) flags |= detail::kHasDistribution;
  w.put(flags);
  for (Eigen::Index i = 0; i < obs.observations.rows(); ++i) {
    for (Eigen::Index l = 0; l < obs.observations.cols(); ++l) w.put(obs.observations(i, l));
  }
  if (obs.true_elements) {
    for (const auto& g : *obs.true_elements) {
      w.put(static_cast<std::uint32_t>(g.rotation()));
      w.put(static_cast<std::uint32_t>(g.reflected() ? 1 : 0));
    }
  }
  if (obs.true_signal) {
    for (double v : obs.true_signal->values()) w.put(v);
  }
  if (obs.true_distribution) {
    for (double v : obs.true_distribution->flat()) w.put(v);
  }
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

inline ObservationSet load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  detail::BinaryReader r(in, path);
  for (char expected : kDatasetMagic) {
    if (r.get<char>("magic") != expected) throw FormatError(path + ": not a dataset file (bad magic)");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kDatasetVersion) {
    throw FormatError(path + ": unsupported dataset version " + std::to_string(version));
  }
  const auto L = r.get<std::uint32_t>("L");
  const auto n = r.get<std::uint64_t>("n");
  if (L < 3 || n < 1) throw FormatError(path + ": invalid header (L or n)");
  if (n > (std::uint64_t{1} << 40) / L) throw FormatError(path + ": header claims an implausible size");
  ObservationSet obs;
  obs.sigma = r.get<double>("sigma");
  obs.seed = r.get<std::uint64_t>("seed");
  const auto flags = r.get<std::uint32_t>("flags");
  if (flags & ~std::uint32_t{7}) throw FormatError(path + ": unknown flag bits");
  obs.observations.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(L));
  for (Eigen::Index i = 0; i < obs.observations.rows(); ++i) {
    for (Eigen::Index l = 0; l < obs.observations.cols(); ++l) obs.observations(i, l) = r.get<double>("observations");
  }
  if (flags & detail::kHasElements) {
    std::vector<DihedralElement> elems;
    elems.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto k = r.get<std::uint32_t>("elements");
      const auto refl = r.get<std::uint32_t>("elements");
      if (k >= L || refl > 1) throw FormatError(path + ": invalid group element");
      elems.emplace_back(L, k, refl == 1);
    }
    obs.true_elements = std::move(elems);
  }
  try {
    if (flags & detail::kHasSignal) {
      RealVector x(L);
      for (auto& v : x) v = r.get<double>("signal");
      obs.true_signal = Signal(std::move(x));
    }
    if (flags & detail::kHasDistribution) {
      RealVector w(2 * static_cast<Eigen::Index>(L));
      for (auto& v : w) v = r.get<double>("distribution");
      obs.true_distribution = GroupDistribution::from_flat(w);
    }
    obs.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(path + ": " + e.what());
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError(path + ": trailing bytes after dataset");
  return obs;
}

/// CSV export: header "index,y_0,...,y_{L-1}", 17 significant digits.
inline void write_observations_csv(const ObservationSet& obs, std::ostream& out) {
  out << "index";
  for (std::size_t l = 0; l < obs.L(); ++l) out << ",y_" << l;
  out << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < obs.observations.rows(); ++i) {
    out << i;
    for (Eigen::Index l = 0; l < obs.observations.cols(); ++l) out << ',' << obs.observations(i, l);
    out << '\n';
  }
}

}  // namespace dmra
