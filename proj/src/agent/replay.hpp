#pragma once

#include <random>
#include <vector>

#include "common/types.hpp"

namespace kcbf::agent {

struct ReplayRecord {
  Vec obs;
  Vec z;
  Vec u_nom;
  Vec u_safe;
  double reward = 0.0;
  Vec next_obs;
  Vec next_z;
  bool terminal = false;
};

// Ring buffer of filtered transitions.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity);

  // `applied_action` is the action the environment reports having
  // integrated; it must equal record.u_safe bit for bit or the record is
  // rejected with ActionEchoMismatch.
  void Insert(ReplayRecord record, const Vec& applied_action);

  size_t size() const { return records_.size(); }
  size_t capacity() const { return capacity_; }
  long total_inserted() const { return inserted_; }
  const ReplayRecord& at(size_t i) const { return records_.at(i); }

  std::vector<const ReplayRecord*> Sample(size_t batch, std::mt19937_64& rng) const;

 private:
  size_t capacity_;
  std::vector<ReplayRecord> records_;
  size_t next_ = 0;
  long inserted_ = 0;
};

bool BitwiseEqual(const Vec& a, const Vec& b);

}  // namespace kcbf::agent
