#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bootdqn/rng.hpp"

namespace bootdqn {

// One step of experience plus the bootstrap mask drawn when it was recorded.
struct Transition {
  std::vector<double> features;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_features;
  bool terminal = false;
  std::vector<double> mask;

  friend bool operator==(const Transition&, const Transition&) = default;
};

// Fixed-capacity ring of transitions with FIFO eviction and uniform sampling
// with replacement. Masks are stored as given and never re-drawn.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t num_heads);

  // Throws UsageError when the mask length differs from num_heads(), the
  // feature vectors disagree in length with each other or with earlier
  // transitions, or the reward is non-finite.
  void append(Transition t);

  std::vector<Transition> sample_minibatch(std::size_t batch_size, Rng& rng) const;
  std::vector<const Transition*> sample_pointers(std::size_t batch_size, Rng& rng) const;

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t num_heads() const { return num_heads_; }
  std::uint64_t insert_count() const { return insert_count_; }

  // Residents ordered oldest first.
  std::vector<Transition> contents() const;

 private:
  std::size_t capacity_;
  std::size_t num_heads_;
  std::size_t feature_dim_ = 0;
  std::uint64_t insert_count_ = 0;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

}  // namespace bootdqn
