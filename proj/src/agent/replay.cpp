#include "agent/replay.hpp"

#include <cmath>
#include <cstring>

#include "common/error.hpp"

namespace kcbf::agent {

bool BitwiseEqual(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         (a.size() == 0 ||
          std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<size_t>(a.size())) == 0);
}

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
  KCBF_REQUIRE(capacity > 0, ErrorCode::kInvalidArgument, "replay capacity must be positive");
}

void ReplayBuffer::Insert(ReplayRecord record, const Vec& applied_action) {
  KCBF_REQUIRE(BitwiseEqual(record.u_safe, applied_action), ErrorCode::kActionEchoMismatch,
               "stored action differs from the action the environment applied");
  KCBF_REQUIRE(record.obs.allFinite() && record.next_obs.allFinite() &&
                   std::isfinite(record.reward),
               ErrorCode::kNonFiniteState, "replay record is not finite");
  if (records_.size() < capacity_) {
    records_.push_back(std::move(record));
  } else {
    records_[next_] = std::move(record);
  }
  next_ = (next_ + 1) % capacity_;
  ++inserted_;
}

std::vector<const ReplayRecord*> ReplayBuffer::Sample(size_t batch,
                                                      std::mt19937_64& rng) const {
  KCBF_REQUIRE(!records_.empty(), ErrorCode::kInvalidArgument, "replay buffer is empty");
  std::uniform_int_distribution<size_t> pick(0, records_.size() - 1);
  std::vector<const ReplayRecord*> out(batch);
  for (auto& p : out) p = &records_[pick(rng)];
  return out;
}

}  // namespace kcbf::agent
