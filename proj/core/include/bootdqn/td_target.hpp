#pragma once

#include <span>

namespace bootdqn {

// Double-DQN target: the online net picks the next action (lowest index on
// ties), the target net evaluates it. Terminal transitions return the reward.
// Throws TrainingError on non-finite input.
double q_target_ddqn(double reward, bool terminal, std::span<const double> q_online_next,
                     std::span<const double> q_target_next, double gamma);

}  // namespace bootdqn
