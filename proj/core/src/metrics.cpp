#include "bootdqn/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "bootdqn/error.hpp"

namespace bootdqn::harness {

TimeToLearn time_to_learn(std::span<const double> returns, double optimal_return, std::int64_t budget) {
  int successes = 0;
  const auto limit = std::min<std::size_t>(returns.size(), static_cast<std::size_t>(std::max<std::int64_t>(budget, 0)));
  for (std::size_t i = 0; i < limit; ++i) {
    if (returns[i] >= optimal_return - kSuccessTolerance && ++successes == kEpisodesToLearn) {
      return {static_cast<std::int64_t>(i) + 1, false};
    }
  }
  return {budget, true};
}

double dithering_lower_bound(int n) {
  if (n < 3) throw ConfigError("chain length must be >= 3");
  return 99.0 + std::ldexp(1.0, n - 11);
}

MedianTimeToLearn median_time_to_learn(std::span<const TimeToLearn> runs) {
  if (runs.empty()) return {0.0, true};
  std::vector<TimeToLearn> sorted(runs.begin(), runs.end());
  // Censored runs sort after every learned run.
  std::sort(sorted.begin(), sorted.end(), [](const TimeToLearn& a, const TimeToLearn& b) {
    if (a.censored != b.censored) return !a.censored;
    return a.episode < b.episode;
  });
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return {static_cast<double>(sorted[n / 2].episode), sorted[n / 2].censored};
  const auto& lo = sorted[n / 2 - 1];
  const auto& hi = sorted[n / 2];
  return {0.5 * static_cast<double>(lo.episode + hi.episode), lo.censored || hi.censored};
}

std::vector<double> cumulative_sum(std::span<const double> values) {
  std::vector<double> out;
  out.reserve(values.size());
  double acc = 0.0;
  for (double v : values) out.push_back(acc += v);
  return out;
}

}  // namespace bootdqn::harness
