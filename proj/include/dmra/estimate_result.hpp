#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "dmra/group.hpp"
#include "dmra/moments.hpp"

namespace dmra {

struct EstimateResult {
  explicit EstimateResult(Signal x, std::optional<GroupDistribution> rho = std::nullopt)
      : x_est(std::move(x)), rho_est(std::move(rho)) {}

  Signal x_est;
  std::optional<GroupDistribution> rho_est;
  std::size_t iterations = 0;
  /// Log-likelihood per iterate for EM, objective value per accepted step for the
  /// method of moments, empty for synchronization.
  std::vector<double> objective_trace;
  std::chrono::duration<double> wall_time{0.0};
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  std::chrono::duration<double> elapsed() const { return std::chrono::steady_clock::now() - start_; }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

}  // namespace dmra
