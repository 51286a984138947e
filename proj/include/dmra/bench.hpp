#pragma once

// SNR sweeps, relative error, slope fits and the CSV record format.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <locale>
#include <optional>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dmra/error.hpp"
#include "dmra/estimators.hpp"
#include "dmra/group.hpp"
#include "dmra/inversion.hpp"
#include "dmra/moments.hpp"
#include "dmra/simulator.hpp"

namespace dmra {

/// min over g of ||g.x_est - x_true|| / ||x_true||.
inline double relative_error(const Signal& x_est, const Signal& x_true) {
  if (x_est.size() != x_true.size()) throw InvalidArgument("relative_error: lengths differ");
  const double norm = x_true.norm();
  if (norm == 0.0) throw InvalidArgument("relative_error: true signal is zero");
  const auto L = x_true.size();
  RealVector gx(static_cast<Eigen::Index>(L));
  double best = std::numeric_limits<double>::infinity();
  for (const auto& g : elements(L)) {
    detail::act(g, x_est.values(), gx);
    best = std::min(best, (gx - x_true.values()).norm());
  }
  return best / norm;
}

struct TrialRecord {
  std::string method;
  double snr = 0.0;
  std::size_t trial = 0;
  double rel_error = 0.0;
  std::size_t iterations = 0;
  double wall_ms = 0.0;
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
};

/// `count` points log-spaced over [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count == 0) throw InvalidArgument("log_grid: need 0 < lo <= hi and count >= 1");
  if (count == 1) return {lo};
  std::vector<double> out;
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1)));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

/// Least-squares slope of log10(mean error) against log10(SNR) over SNR points in
/// [lo, hi]. Only successful records of `method` (any method if empty) are used.
inline double fit_slope(const std::vector<TrialRecord>& records, double lo, double hi, const std::string& method = "") {
  std::map<double, std::pair<double, std::size_t>> by_snr;
  for (const auto& r : records) {
    if (!r.ok() || (!method.empty() && r.method != method)) continue;
    if (r.snr < lo || r.snr > hi) continue;
    auto& slot = by_snr[r.snr];
    slot.first += r.rel_error;
    slot.second += 1;
  }
  if (by_snr.size() < 2) throw InvalidArgument("fit_slope: need at least two distinct SNR points in range");
  std::vector<double> u;
  std::vector<double> v;
  for (const auto& [snr, acc] : by_snr) {
    const double mean = acc.first / static_cast<double>(acc.second);
    if (!(mean > 0.0)) throw InvalidArgument("fit_slope: mean error must be positive");
    u.push_back(std::log10(snr));
    v.push_back(std::log10(mean));
  }
  const auto k = static_cast<double>(u.size());
  double mu = 0.0;
  double mv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= k;
  mv /= k;
  double suv = 0.0;
  double suu = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    suv += (u[i] - mu) * (v[i] - mv);
    suu += (u[i] - mu) * (u[i] - mu);
  }
  return suv / suu;
}

/// Mean relative error per SNR for one method.
inline std::vector<std::pair<double, double>> mean_errors(const std::vector<TrialRecord>& records,
                                                          const std::string& method) {
  std::map<double, std::pair<double, std::size_t>> acc;
  for (const auto& r : records) {
    if (r.ok() && r.method == method) {
      acc[r.snr].first += r.rel_error;
      acc[r.snr].second += 1;
    }
  }
  std::vector<std::pair<double, double>> out;
  for (const auto& [snr, a] : acc) out.emplace_back(snr, a.first / static_cast<double>(a.second));
  return out;
}

/// Mean EM iteration count per SNR, ascending in SNR.
inline std::vector<std::pair<double, double>> report_iterations(const std::vector<TrialRecord>& records) {
  std::map<double, std::pair<double, std::size_t>> acc;
  for (const auto& r : records) {
    if (r.ok() && r.method == "em") {
      acc[r.snr].first += static_cast<double>(r.iterations);
      acc[r.snr].second += 1;
    }
  }
  if (acc.empty()) throw InvalidArgument("report_iterations: no EM records");
  std::vector<std::pair<double, double>> out;
  for (const auto& [snr, a] : acc) out.emplace_back(snr, a.first / static_cast<double>(a.second));
  return out;
}

struct SweepSpec {
  std::vector<double> snr_grid = log_grid(1e-2, 1e2, 15);
  std::size_t n = 1000;
  std::size_t L = 10;
  std::size_t trials = 50;
  std::vector<std::string> methods{"em", "mom"};
  std::uint64_t seed = 1;
  std::string out;
  std::optional<double> sigma;  // overrides the grid with a single noise level
  std::optional<double> lambda;
  bool force_sync = false;
  bool timing = true;
  std::size_t threads = 0;  // 0 selects the hardware concurrency
  EMOptions em;
  MomOptions mom;

  void validate() const {
    if (L < 3) throw InvalidArgument("SweepSpec: L must be at least 3");
    if (n < 1) throw InvalidArgument("SweepSpec: n must be at least 1");
    if (trials < 1) throw InvalidArgument("SweepSpec: trials must be at least 1");
    if (methods.empty()) throw InvalidArgument("SweepSpec: no methods");
    for (const auto& m : methods) {
      if (m != "sync" && m != "em" && m != "mom" && m != "invert") throw InvalidArgument("SweepSpec: unknown method '" + m + "'");
    }
    if (!sigma) {
      if (snr_grid.empty()) throw InvalidArgument("SweepSpec: empty SNR grid");
      for (std::size_t i = 0; i < snr_grid.size(); ++i) {
        if (!(snr_grid[i] > 0.0)) throw InvalidArgument("SweepSpec: SNR values must be positive");
        if (i > 0 && !(snr_grid[i] > snr_grid[i - 1])) throw InvalidArgument("SweepSpec: SNR grid must be strictly increasing");
      }
    } else if (!(*sigma >= 0.0)) {
      throw InvalidArgument("SweepSpec: sigma must be nonnegative");
    }
  }

  /// Methods actually run: sync is dropped for n > 5000 unless forced.
  std::vector<std::string> active_methods() const {
    std::vector<std::string> out;
    for (const auto& m : methods) {
      if (m == "sync" && n > 5000 && !force_sync) continue;
      out.push_back(m);
    }
    return out;
  }
};

/// Runs one estimator on one dataset and fills the record.
inline TrialRecord run_method(const std::string& method, const ObservationSet& obs, const Signal& truth,
                              std::uint64_t seed, const SweepSpec& spec) {
  TrialRecord rec;
  rec.method = method;
  detail::Stopwatch clock;
  try {
    if (method == "sync") {
      if (obs.n() < 2) throw InvalidArgument("sync needs n >= 2");
      auto r = estimate_by_sync(obs);
      rec.rel_error = relative_error(r.x_est, truth);
      rec.iterations = r.iterations;
    } else if (method == "em") {
      auto r = estimate_by_em(obs, obs.sigma, seed, spec.em);
      rec.rel_error = relative_error(r.x_est, truth);
      rec.iterations = r.iterations;
    } else if (method == "mom") {
      MomOptions opts = spec.mom;
      if (spec.lambda) opts.lambda = *spec.lambda;
      auto r = estimate_by_mom(obs, obs.sigma, seed, opts);
      rec.rel_error = relative_error(r.x_est, truth);
      rec.iterations = r.iterations;
    } else if (method == "invert") {
      auto r = invert_moments(debias(empirical_moments(obs.observations), obs.sigma * obs.sigma));
      rec.rel_error = relative_error(r.x, truth);
      rec.iterations = 1;
    } else {
      throw InvalidArgument("unknown method '" + method + "'");
    }
  } catch (const std::exception& e) {
    rec.status = std::string("error: ") + e.what();
    rec.rel_error = std::numeric_limits<double>::quiet_NaN();
  }
  rec.wall_ms = spec.timing ? 1e3 * clock.elapsed().count() : 0.0;
  return rec;
}

/// The dataset of trial `trial` at grid point `point`: fresh (x, rho) and noise.
inline ObservationSet sweep_dataset(const SweepSpec& spec, std::size_t point, std::size_t trial, double* snr_out = nullptr) {
  const auto trial_seed = derive_seed(spec.seed, Stream::kTrial, point * spec.trials + trial);
  const Signal x = sample_signal(spec.L, trial_seed);
  const GroupDistribution rho = sample_distribution(spec.L, trial_seed);
  const double sigma = spec.sigma ? *spec.sigma : sigma_for_snr(x, spec.snr_grid[point]);
  if (snr_out != nullptr) *snr_out = spec.sigma ? (sigma > 0.0 ? snr_of(x, sigma) : std::numeric_limits<double>::infinity()) : spec.snr_grid[point];
  return generate(x, rho, spec.n, sigma, trial_seed);
}

inline void write_csv(const std::vector<TrialRecord>& records, std::ostream& out);

/// Every (grid point, trial, method) in that order; the output does not depend on
/// thread scheduling. Estimator failures are recorded in `status`.
inline std::vector<TrialRecord> run_sweep(const SweepSpec& spec) {
  spec.validate();
  const auto methods = spec.active_methods();
  const std::size_t points = spec.sigma ? 1 : spec.snr_grid.size();
  const std::size_t tasks = points * spec.trials;
  std::vector<std::vector<TrialRecord>> results(tasks);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr failure;
  const auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      try {
        const std::size_t point = t / spec.trials;
        const std::size_t trial = t % spec.trials;
        double snr = 0.0;
        const auto obs = sweep_dataset(spec, point, trial, &snr);
        const auto est_seed = derive_seed(obs.seed, Stream::kEstimator);
        for (const auto& m : methods) {
          auto rec = run_method(m, obs, *obs.true_signal, est_seed, spec);
          rec.snr = snr;
          rec.trial = trial;
          results[t].push_back(std::move(rec));
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::size_t threads = spec.threads != 0 ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, tasks);
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<TrialRecord> records;
  for (auto& r : results) {
    for (auto& rec : r) records.push_back(std::move(rec));
  }
  if (!spec.out.empty()) {
    std::ofstream file(spec.out, std::ios::binary);
    if (!file) throw IoError("run_sweep: cannot open " + spec.out);
    write_csv(records, file);
    if (!file) throw IoError("run_sweep: write failed for " + spec.out);
  }
  return records;
}

inline constexpr const char* kCsvHeader = "method,snr,trial,rel_error,iters,wall_ms,status";

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(17) << v;
  return s.str();
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline double parse_double(const std::string& s, const char* what) {
  std::istringstream in(s);
  in.imbue(std::locale::classic());
  double v = 0.0;
  in >> v;
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (in.fail() || !in.eof()) throw FormatError(std::string("bad ") + what + " '" + s + "'");
  return v;
}

inline std::size_t parse_size(const std::string& s, const char* what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw FormatError(std::string("bad ") + what + " '" + s + "'");
  return v;
}

}  // namespace detail

inline void write_csv(const std::vector<TrialRecord>& records, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << detail::csv_field(r.method) << ',' << detail::format_double(r.snr) << ',' << r.trial << ','
        << detail::format_double(r.rel_error) << ',' << r.iterations << ',' << detail::format_double(r.wall_ms) << ','
        << detail::csv_field(r.status) << '\n';
  }
}

inline std::vector<TrialRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw FormatError("read_csv: missing or unexpected header");
  std::vector<TrialRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 7) throw FormatError("read_csv: line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
    TrialRecord r;
    r.method = f[0];
    r.snr = detail::parse_double(f[1], "snr");
    r.trial = detail::parse_size(f[2], "trial");
    r.rel_error = detail::parse_double(f[3], "rel_error");
    r.iterations = detail::parse_size(f[4], "iters");
    r.wall_ms = detail::parse_double(f[5], "wall_ms");
    r.status = f[6];
    out.push_back(std::move(r));
  }
  return out;
}

/// key=value lines; '#' starts a comment; blank lines ignored.
inline std::map<std::string, std::string> parse_config(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("config line " + std::to_string(lineno) + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError("config line " + std::to_string(lineno) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace detail

/// SNR grid from "a,b,c" or "log:lo:hi:count".
inline std::vector<double> parse_snr_grid(const std::string& s) {
  if (s.rfind("log:", 0) == 0) {
    std::vector<std::string> parts;
    std::stringstream ss(s.substr(4));
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) throw FormatError("SNR grid: expected log:lo:hi:count");
    return log_grid(detail::parse_double(parts[0], "SNR"), detail::parse_double(parts[1], "SNR"),
                    detail::parse_size(parts[2], "count"));
  }
  std::vector<double> out;
  for (const auto& item : detail::split_list(s)) out.push_back(detail::parse_double(item, "SNR"));
  if (out.empty()) throw FormatError("SNR grid: empty");
  return out;
}

/// Applies config keys (L, n, trials, seed, methods, snr_grid, snr, sigma, lambda,
/// out, force_sync, timing, threads, em_max_iterations, em_tolerance, mom_starts,
/// mom_max_iterations) to a spec.
inline void apply_config(SweepSpec& spec, const std::map<std::string, std::string>& cfg) {
  for (const auto& [key, value] : cfg) {
    if (key == "L") {
      spec.L = detail::parse_size(value, "L");
    } else if (key == "n") {
      spec.n = detail::parse_size(value, "n");
    } else if (key == "trials") {
      spec.trials = detail::parse_size(value, "trials");
    } else if (key == "seed") {
      spec.seed = detail::parse_size(value, "seed");
    } else if (key == "methods") {
      spec.methods = detail::split_list(value);
    } else if (key == "snr_grid") {
      spec.snr_grid = parse_snr_grid(value);
    } else if (key == "snr") {
      spec.snr_grid = {detail::parse_double(value, "snr")};
    } else if (key == "sigma") {
      spec.sigma = detail::parse_double(value, "sigma");
    } else if (key == "lambda") {
      spec.lambda = detail::parse_double(value, "lambda");
    } else if (key == "out") {
      spec.out = value;
    } else if (key == "force_sync") {
      spec.force_sync = value == "1" || value == "true";
    } else if (key == "timing") {
      spec.timing = value == "1" || value == "true";
    } else if (key == "threads") {
      spec.threads = detail::parse_size(value, "threads");
    } else if (key == "em_max_iterations") {
      spec.em.max_iterations = detail::parse_size(value, "em_max_iterations");
    } else if (key == "em_tolerance") {
      spec.em.tolerance = detail::parse_double(value, "em_tolerance");
    } else if (key == "mom_starts") {
      spec.mom.starts = detail::parse_size(value, "mom_starts");
    } else if (key == "mom_max_iterations") {
      spec.mom.max_iterations = detail::parse_size(value, "mom_max_iterations");
    } else {
      throw FormatError("config: unknown key '" + key + "'");
    }
  }
}

}  // namespace dmra
