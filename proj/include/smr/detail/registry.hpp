#pragma once

#include <atomic>
#include <cstddef>
#include <vector>

#include "smr/counters.hpp"
#include "smr/retired_node.hpp"

namespace smr::detail {

// Reclaimed nodes are parked here before their memory is released, so a
// stale read of a reclaimed node observes the poisoned payload instead of
// freed memory. Used by the safety tests.
class quarantine {
 public:
  void set_capacity(std::size_t n) { ring_.assign(n, nullptr); }

  void put(retired_node* n) noexcept {
    if (ring_.empty()) {
      n->dispose(n, dispose_op::deallocate);
      return;
    }
    retired_node*& slot = ring_[pos_];
    if (slot) slot->dispose(slot, dispose_op::deallocate);
    slot = n;
    pos_ = (pos_ + 1) % ring_.size();
  }

  void flush() noexcept {
    for (auto& slot : ring_) {
      if (slot) slot->dispose(slot, dispose_op::deallocate);
      slot = nullptr;
    }
  }

  ~quarantine() { flush(); }

 private:
  std::vector<retired_node*> ring_;
  std::size_t pos_ = 0;
};

struct alignas(64) record_base {
  std::atomic<bool> in_use{false};
  record_base* next_record = nullptr;  // immutable once published
  counters ctr;
  unsigned region_depth = 0;
  quarantine parked;
};

// Lock-free list of per-thread records. Records are reused by later threads
// and only freed together with the registry.
template <class Record>
class registry {
 public:
  registry() = default;
  registry(const registry&) = delete;
  registry& operator=(const registry&) = delete;

  ~registry() {
    record_base* r = head_.load(std::memory_order_acquire);
    while (r) {
      record_base* next = r->next_record;
      delete static_cast<Record*>(r);
      r = next;
    }
  }

  // Returns the record and whether it was freshly allocated.
  std::pair<Record*, bool> acquire() {
    for (record_base* r = head_.load(std::memory_order_acquire); r; r = r->next_record) {
      bool expected = false;
      if (!r->in_use.load(std::memory_order_relaxed) &&
          r->in_use.compare_exchange_strong(expected, true, std::memory_order_acq_rel)) {
        active_.fetch_add(1, std::memory_order_relaxed);
        return {static_cast<Record*>(r), false};
      }
    }
    auto* r = new Record();
    r->in_use.store(true, std::memory_order_relaxed);
    record_base* h = head_.load(std::memory_order_relaxed);
    do {
      r->next_record = h;
    } while (!head_.compare_exchange_weak(h, r, std::memory_order_acq_rel,
                                          std::memory_order_relaxed));
    active_.fetch_add(1, std::memory_order_relaxed);
    return {r, true};
  }

  void release(Record& r) noexcept {
    active_.fetch_sub(1, std::memory_order_relaxed);
    r.in_use.store(false, std::memory_order_release);
  }

  std::size_t active() const noexcept { return active_.load(std::memory_order_relaxed); }

  // Visits every record ever created, in use or not.
  template <class F>
  void for_each(F&& f) const {
    for (record_base* r = head_.load(std::memory_order_acquire); r; r = r->next_record)
      f(*static_cast<Record*>(r));
  }

 private:
  std::atomic<record_base*> head_{nullptr};
  std::atomic<std::size_t> active_{0};
};

}  // namespace smr::detail
