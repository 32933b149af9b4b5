#include "bootdqn/replay.hpp"

#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "bootdqn/error.hpp"

namespace bootdqn {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t num_heads)
    : capacity_(capacity), num_heads_(num_heads) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
  if (num_heads == 0) throw ConfigError("replay buffer needs at least one head");
  items_.reserve(capacity);
}

void ReplayBuffer::append(Transition t) {
  if (t.mask.size() != num_heads_) {
    throw UsageError("transition mask has length " + std::to_string(t.mask.size()) +
                     ", buffer expects " + std::to_string(num_heads_));
  }
  if (t.features.size() != t.next_features.size() || t.features.empty()) {
    throw UsageError("transition feature and next-feature lengths differ");
  }
  if (feature_dim_ != 0 && t.features.size() != feature_dim_) {
    throw UsageError("transition feature length changed within a buffer");
  }
  if (!std::isfinite(t.reward)) throw UsageError("transition reward is not finite");
  feature_dim_ = t.features.size();

  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
  ++insert_count_;
}

std::vector<const Transition*> ReplayBuffer::sample_pointers(std::size_t batch_size, Rng& rng) const {
  if (batch_size == 0) return {};
  if (items_.empty()) throw UsageError("cannot sample from an empty replay buffer");
  std::vector<const Transition*> out;
  out.reserve(batch_size);
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  for (std::size_t i = 0; i < batch_size; ++i) out.push_back(&items_[pick(rng)]);
  return out;
}

std::vector<Transition> ReplayBuffer::sample_minibatch(std::size_t batch_size, Rng& rng) const {
  std::vector<Transition> out;
  out.reserve(batch_size);
  for (const auto* t : sample_pointers(batch_size, rng)) out.push_back(*t);
  return out;
}

std::vector<Transition> ReplayBuffer::contents() const {
  std::vector<Transition> out;
  out.reserve(items_.size());
  if (items_.size() < capacity_) return items_;
  for (std::size_t i = 0; i < capacity_; ++i) out.push_back(items_[(next_ + i) % capacity_]);
  return out;
}

}  // namespace bootdqn
