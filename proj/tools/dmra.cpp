#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dmra/dmra.hpp"

namespace {

using namespace dmra;

void print_vector(std::ostream& out, const char* name, const RealVector& v) {
  out << name << ':';
  for (double e : v) out << ' ' << detail::format_double(e);
  out << '\n';
}

int cmd_generate(std::size_t L, std::size_t n, std::optional<double> snr, std::optional<double> sigma, std::uint64_t seed,
                 const std::string& out, const std::string& csv) {
  const Signal x = sample_signal(L, seed);
  const auto rho = sample_distribution(L, seed);
  const double s = sigma ? *sigma : sigma_for_snr(x, snr.value_or(1.0));
  const auto obs = generate(x, rho, n, s, seed);
  save(obs, out);
  if (!csv.empty()) {
    std::ofstream file(csv);
    if (!file) throw IoError("cannot open " + csv);
    write_observations_csv(obs, file);
  }
  std::cout << "wrote " << out << ": L=" << L << " n=" << n << " sigma=" << detail::format_double(s)
            << " snr=" << detail::format_double(s > 0 ? snr_of(x, s) : std::numeric_limits<double>::infinity()) << '\n';
  return 0;
}

int cmd_estimate(const std::string& in, const std::string& method, std::optional<double> sigma, std::uint64_t seed,
                 std::optional<double> lambda, const std::string& out) {
  const auto obs = load(in);
  const double s = sigma ? *sigma : obs.sigma;
  std::optional<Signal> x;
  std::optional<GroupDistribution> rho;
  std::size_t iterations = 0;
  if (method == "sync") {
    auto r = estimate_by_sync(obs);
    x = r.x_est;
    iterations = r.iterations;
  } else if (method == "em") {
    auto r = estimate_by_em(obs, s, seed);
    x = r.x_est;
    rho = r.rho_est;
    iterations = r.iterations;
  } else if (method == "mom") {
    MomOptions opts;
    if (lambda) opts.lambda = *lambda;
    auto r = estimate_by_mom(obs, s, seed, opts);
    x = r.x_est;
    rho = r.rho_est;
    iterations = r.iterations;
  } else if (method == "invert") {
    auto r = invert_moments(debias(empirical_moments(obs.observations), s * s));
    x = r.x;
    rho = r.rho;
  } else {
    throw InvalidArgument("unknown method '" + method + "'");
  }
  std::ostream* stream = &std::cout;
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw IoError("cannot open " + out);
    stream = &file;
  }
  *stream << "method: " << method << '\n' << "iterations: " << iterations << '\n';
  print_vector(*stream, "x", x->values());
  if (rho) print_vector(*stream, "rho", rho->flat());
  if (obs.true_signal) *stream << "rel_error: " << detail::format_double(relative_error(*x, *obs.true_signal)) << '\n';
  return 0;
}

int cmd_invert(std::size_t L, std::uint64_t seed) {
  const Signal x = sample_signal(L, seed);
  const auto rho = sample_distribution(L, seed);
  const auto m = analytic_moments(x, rho);
  const auto cands = enumerate_candidates(fourier_moments(m));
  const auto est = select_orbit(cands, m);
  std::cout << "L: " << L << '\n'
            << "candidates: " << cands.candidates.size() << '\n'
            << "selected: " << est.candidate_index << '\n'
            << "moment_residual: " << detail::format_double(est.residual) << '\n'
            << "rel_error: " << detail::format_double(relative_error(est.x, x)) << '\n';
  print_vector(std::cout, "x_true", x.values());
  print_vector(std::cout, "x_est", est.x.values());
  return 0;
}

void print_summary(const std::vector<TrialRecord>& records, std::optional<std::pair<double, double>> range) {
  std::set<std::string> methods;
  std::size_t failures = 0;
  for (const auto& r : records) {
    methods.insert(r.method);
    if (!r.ok()) ++failures;
  }
  std::cout << "records: " << records.size() << " failures: " << failures << '\n';
  for (const auto& m : methods) {
    std::cout << "method " << m << '\n';
    for (const auto& [snr, err] : mean_errors(records, m)) {
      std::cout << "  snr " << detail::format_double(snr) << " mean_rel_error " << detail::format_double(err) << '\n';
    }
    if (range) {
      try {
        std::cout << "  slope " << detail::format_double(fit_slope(records, range->first, range->second, m)) << '\n';
      } catch (const InvalidArgument& e) {
        std::cout << "  slope unavailable: " << e.what() << '\n';
      }
    }
  }
  if (methods.count("em")) {
    std::cout << "em iterations\n";
    for (const auto& [snr, it] : report_iterations(records)) {
      std::cout << "  snr " << detail::format_double(snr) << " mean_iterations " << detail::format_double(it) << '\n';
    }
  }
}

std::optional<std::pair<double, double>> parse_range(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw FormatError("--range expects lo:hi");
  return std::pair{detail::parse_double(s.substr(0, colon), "range"), detail::parse_double(s.substr(colon + 1), "range")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dihedral multi-reference alignment: simulation, estimation and SNR sweeps"};
  app.require_subcommand(1);

  std::size_t L = 10;
  std::size_t n = 1000;
  std::optional<double> snr;
  std::optional<double> sigma;
  std::uint64_t seed = 1;
  std::string out;
  std::string in;
  std::string csv;
  std::string method = "em";
  std::vector<std::string> methods;
  std::optional<double> lambda;
  std::string config;
  std::string snr_grid;
  std::size_t trials = 50;
  std::size_t threads = 0;
  bool force_sync = false;
  bool no_timing = false;
  std::string range;

  auto* gen = app.add_subcommand("generate", "Draw a synthetic dataset");
  gen->add_option("--L", L, "Signal length")->check(CLI::Range(3, 1 << 20));
  gen->add_option("--n", n, "Number of observations")->check(CLI::PositiveNumber);
  gen->add_option("--snr", snr, "Signal-to-noise ratio ||x||^2 / (L sigma^2)");
  gen->add_option("--sigma", sigma, "Noise standard deviation (overrides --snr)");
  gen->add_option("--seed", seed, "Root seed");
  gen->add_option("--out", out, "Binary dataset path")->required();
  gen->add_option("--csv", csv, "Also write observations as CSV");

  auto* est = app.add_subcommand("estimate", "Run one estimator on a dataset");
  est->add_option("--in", in, "Binary dataset path")->required();
  est->add_option("--method", method, "sync, em, mom or invert")->check(CLI::IsMember({"sync", "em", "mom", "invert"}));
  est->add_option("--sigma", sigma, "Noise level (default: the dataset's)");
  est->add_option("--seed", seed, "Initialization seed");
  est->add_option("--lambda", lambda, "First-moment weight for mom (default L)");
  est->add_option("--out", out, "Write the estimate here instead of stdout");

  auto* sweep = app.add_subcommand("sweep", "Relative error against SNR, written as CSV");
  sweep->add_option("--config", config, "key=value file; flags override it");
  sweep->add_option("--L", L, "Signal length");
  sweep->add_option("--n", n, "Observations per dataset");
  sweep->add_option("--snr-grid", snr_grid, "Comma list or log:lo:hi:count");
  sweep->add_option("--snr", snr, "Single SNR point");
  sweep->add_option("--sigma", sigma, "Fixed noise level instead of an SNR grid");
  sweep->add_option("--trials", trials, "Trials per grid point");
  sweep->add_option("--seed", seed, "Root seed");
  sweep->add_option("--method", methods, "Methods (repeatable): sync, em, mom, invert")->delimiter(',');
  sweep->add_option("--lambda", lambda, "First-moment weight for mom");
  sweep->add_option("--out", out, "CSV output path");
  sweep->add_option("--threads", threads, "Worker threads (0: all cores)");
  sweep->add_option("--range", range, "SNR range lo:hi for the printed slope");
  sweep->add_flag("--force-sync", force_sync, "Run sync even for n > 5000");
  sweep->add_flag("--no-timing", no_timing, "Write wall_ms = 0 for byte-reproducible CSV");

  auto* inv = app.add_subcommand("invert", "Recover a random signal from its exact moments");
  inv->add_option("--L", L, "Signal length")->check(CLI::Range(4, 4096));
  inv->add_option("--seed", seed, "Seed of the random instance");

  auto* rep = app.add_subcommand("report", "Summarize a sweep CSV");
  rep->add_option("--csv", csv, "Sweep CSV")->required();
  rep->add_option("--range", range, "SNR range lo:hi for slopes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate(L, n, snr, sigma, seed, out, csv);
    if (*est) return cmd_estimate(in, method, sigma, seed, lambda, out);
    if (*inv) return cmd_invert(L, seed);
    if (*rep) {
      std::ifstream file(csv);
      if (!file) throw IoError("cannot open " + csv);
      print_summary(read_csv(file), parse_range(range));
      return 0;
    }
    if (*sweep) {
      SweepSpec spec;
      if (!config.empty()) {
        std::ifstream file(config);
        if (!file) throw IoError("cannot open " + config);
        apply_config(spec, parse_config(file));
      }
      if (sweep->count("--L")) spec.L = L;
      if (sweep->count("--n")) spec.n = n;
      if (sweep->count("--trials")) spec.trials = trials;
      if (sweep->count("--seed")) spec.seed = seed;
      if (!methods.empty()) spec.methods = methods;
      if (!snr_grid.empty()) spec.snr_grid = parse_snr_grid(snr_grid);
      if (snr) spec.snr_grid = {*snr};
      if (sigma) spec.sigma = sigma;
      if (lambda) spec.lambda = lambda;
      if (!out.empty()) spec.out = out;
      if (sweep->count("--threads")) spec.threads = threads;
      if (force_sync) spec.force_sync = true;
      if (no_timing) spec.timing = false;
      const auto records = run_sweep(spec);
      print_summary(records, parse_range(range));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
