#pragma once

#include <atomic>
#include <cstdint>

namespace smr {

// Single-writer counter. Only the owning thread increments it; any thread may
// read a (possibly slightly stale) value.
class owner_counter {
 public:
  void add(std::uint64_t n = 1) noexcept {
    v_.store(v_.load(std::memory_order_relaxed) + n, std::memory_order_relaxed);
  }
  std::uint64_t get() const noexcept { return v_.load(std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> v_{0};
};

struct counters {
  owner_counter allocated;
  owner_counter retired;
  owner_counter reclaimed;
  owner_counter region_entries;
  owner_counter enter_fences;
  // stamp list instrumentation
  owner_counter push_calls;
  owner_counter push_iterations;
  owner_counter remove_calls;
  owner_counter remove_prev_iterations;
  owner_counter remove_next_iterations;
};

struct counter_totals {
  std::uint64_t allocated = 0;
  std::uint64_t retired = 0;
  std::uint64_t reclaimed = 0;
  std::uint64_t region_entries = 0;
  std::uint64_t enter_fences = 0;
  std::uint64_t push_calls = 0;
  std::uint64_t push_iterations = 0;
  std::uint64_t remove_calls = 0;
  std::uint64_t remove_prev_iterations = 0;
  std::uint64_t remove_next_iterations = 0;

  // Nodes handed to the reclaimer that have not been destroyed yet.
  std::uint64_t unreclaimed() const noexcept {
    return retired > reclaimed ? retired - reclaimed : 0;
  }

  void accumulate(const counters& c) noexcept {
    // reclaimed first: a concurrent snapshot then never shows more
    // reclaimed than retired nodes
    reclaimed += c.reclaimed.get();
    allocated += c.allocated.get();
    retired += c.retired.get();
    region_entries += c.region_entries.get();
    enter_fences += c.enter_fences.get();
    push_calls += c.push_calls.get();
    push_iterations += c.push_iterations.get();
    remove_calls += c.remove_calls.get();
    remove_prev_iterations += c.remove_prev_iterations.get();
    remove_next_iterations += c.remove_next_iterations.get();
  }
};

}  // namespace smr
