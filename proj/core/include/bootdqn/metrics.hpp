#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace bootdqn::harness {

inline constexpr int kEpisodesToLearn = 100;
inline constexpr double kSuccessTolerance = 1e-9;

struct TimeToLearn {
  std::int64_t episode = 0;  // 1-based; equals the budget when censored
  bool censored = false;

  friend bool operator==(const TimeToLearn&, const TimeToLearn&) = default;
};

// Episode (1-based) at which the running count of episodes with return
// >= optimal_return - 1e-9 reaches 100, or censored at `budget`.
TimeToLearn time_to_learn(std::span<const double> returns, double optimal_return, std::int64_t budget);

// 99 + 2^(N-11): expected time to learn for any shallow exploration strategy.
double dithering_lower_bound(int n);

struct MedianTimeToLearn {
  double value = 0.0;
  bool censored = false;
};

// Median over seeds with censored runs counted at the budget; the median is
// censored when the middle order statistic is.
MedianTimeToLearn median_time_to_learn(std::span<const TimeToLearn> runs);

std::vector<double> cumulative_sum(std::span<const double> values);

}  // namespace bootdqn::harness
