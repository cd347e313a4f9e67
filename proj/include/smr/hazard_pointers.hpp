#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <vector>

#include "smr/detail/domain_base.hpp"
#include "smr/retired_node.hpp"

namespace smr {

struct hazard_pointers_config {
  std::size_t slots = 2;  // hazard pointers per thread, k
  bool dynamic = false;   // allow threads to grow beyond k
  // scan threshold R = threshold_base + threshold_factor * (sum of slots of
  // all registered threads)
  std::size_t threshold_base = 100;
  std::size_t threshold_factor = 2;
  std::size_t quarantine = 0;
};

using hazard_slot = std::atomic<retired_node*>;

struct hp_slot_block {
  struct alignas(64) line {
    hazard_slot s[8] = {};
  };
  explicit hp_slot_block(std::size_t n) : lines(std::make_unique<line[]>((n + 7) / 8)), size(n) {}
  hazard_slot& operator[](std::size_t i) noexcept { return lines[i / 8].s[i % 8]; }

  std::unique_ptr<line[]> lines;
  std::size_t size;
  std::atomic<hp_slot_block*> next{nullptr};
};

struct hp_record : detail::record_base {
  ~hp_record() {
    hp_slot_block* b = first;
    while (b) {
      hp_slot_block* n = b->next.load(std::memory_order_relaxed);
      delete b;
      b = n;
    }
  }
  hp_slot_block* first = nullptr;
  hp_slot_block* last = nullptr;
  std::size_t total_slots = 0;
  std::vector<hazard_slot*> free_slots;
  retired_list retired;
  std::vector<retired_node*> scratch;
};

class hazard_pointers : public detail::domain_base<hazard_pointers, hp_record> {
 public:
  static constexpr protection kind = protection::hazard;
  static constexpr const char* name = "hp";

  struct guard_state {
    hazard_slot* slot = nullptr;
  };

  explicit hazard_pointers(hazard_pointers_config cfg = {});
  ~hazard_pointers();

  record* attach_record();
  void detach_record(record& r);
  void drain();

  hazard_slot* alloc_slot(record& r);
  void free_slot(record& r, hazard_slot* s) noexcept;

  void retire(record& r, retired_node* n);
  // Reclaims every retired node of r (and every orphan) that no hazard
  // pointer protects. Returns the number of nodes reclaimed.
  std::size_t scan(record& r);

  std::size_t threshold() const noexcept {
    return cfg_.threshold_base +
           cfg_.threshold_factor * total_slots_.load(std::memory_order_relaxed);
  }
  std::size_t slot_count(const record& r) const noexcept { return r.total_slots; }
  std::size_t slot_blocks(const record& r) const noexcept;
  std::size_t retired_count(const record& r) const noexcept { return r.retired.size(); }
  // Nodes left behind by deregistered threads. Same restriction as
  // chain_stack::unsafe_count.
  std::size_t orphan_count() const noexcept { return orphans_.unsafe_count(); }
  const hazard_pointers_config& config() const noexcept { return cfg_; }

  template <class T, unsigned M, class Source>
  marked_ptr<T, M> protect(record& r, guard_state& st, const Source& src,
                           std::memory_order order) {
    marked_ptr<T, M> p = src.load(order);
    for (;;) {
      if (!p.get()) {
        unprotect(r, st);
        return p;
      }
      if (!st.slot) st.slot = alloc_slot(r);
      st.slot->store(header_of(p.get()), std::memory_order_relaxed);
      // (1) - orders the hazard store before the re-read; pairs with the
      // fence in scan
      std::atomic_thread_fence(std::memory_order_seq_cst);
      marked_ptr<T, M> q = src.load(std::memory_order_acquire);
      if (q.get() == p.get()) return q;
      p = q;
    }
  }

  template <class T, unsigned M, class Source>
  bool protect_if_equal(record& r, guard_state& st, const Source& src,
                        marked_ptr<T, M> expected, std::memory_order order) {
    if (!expected.get()) {
      unprotect(r, st);
      return src.load(order) == expected;
    }
    if (!st.slot) st.slot = alloc_slot(r);
    st.slot->store(header_of(expected.get()), std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_seq_cst);
    if (src.load(std::memory_order_acquire) == expected) return true;
    unprotect(r, st);
    return false;
  }

  void unprotect(record& r, guard_state& st, retired_node* = nullptr) noexcept {
    if (st.slot) {
      st.slot->store(nullptr, std::memory_order_release);
      free_slot(r, st.slot);
      st.slot = nullptr;
    }
  }

  void release_state(record& r, guard_state& st) noexcept { unprotect(r, st); }

  // A fresh node is private until published; no hazard needed yet.
  void adopt(record&, guard_state&, retired_node*) noexcept {}

  // Publish a hazard for a node the guard already owns.
  void pin(record& r, guard_state& st, retired_node* n) {
    if (!st.slot) st.slot = alloc_slot(r);
    st.slot->store(n, std::memory_order_seq_cst);
  }

  void retire_guarded(record& r, guard_state& st, retired_node* n) {
    unprotect(r, st);
    retire(r, n);
  }

  void discard_guarded(record& r, guard_state& st, retired_node* n) {
    unprotect(r, st);
    discard(r, n);
  }

  void open_region(record&) noexcept {}
  void close_region(record&) noexcept {}

 private:
  void add_block(record& r, std::size_t n);

  hazard_pointers_config cfg_;
  std::atomic<std::size_t> total_slots_{0};
  chain_stack orphans_;
};

}  // namespace smr
