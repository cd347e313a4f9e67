#pragma once

#include <atomic>
#include <cassert>
#include <cstddef>
#include <utility>

#include "smr/counters.hpp"
#include "smr/detail/registry.hpp"
#include "smr/marked_ptr.hpp"
#include "smr/retired_node.hpp"
#include "smr/thread_handle.hpp"

namespace smr {

enum class protection { region, hazard, refcount };

namespace detail {

// Registration, counters and node allocation shared by every scheme.
template <class Derived, class Record>
class domain_base {
 public:
  using record = Record;
  using handle = thread_handle<Derived>;
  using header_type = retired_node;
  template <class T, unsigned MarkBits>
  using link = atomic_marked_ptr<T, MarkBits>;

  domain_base() = default;
  domain_base(const domain_base&) = delete;
  domain_base& operator=(const domain_base&) = delete;

  handle register_thread() { return handle(derived()); }
  std::size_t registered_threads() const noexcept { return registry_.active(); }

  counter_totals totals() const {
    counter_totals t;
    // all reclaimed counts are read before any retired count
    std::uint64_t reclaimed = drained_.load(std::memory_order_relaxed);
    registry_.for_each([&](const Record& r) { reclaimed += r.ctr.reclaimed.get(); });
    registry_.for_each([&](const Record& r) { t.accumulate(r.ctr); });
    t.reclaimed = reclaimed;
    return t;
  }

  template <class F>
  void for_each_record(F&& f) const {
    registry_.for_each(std::forward<F>(f));
  }

  template <class T, class... Args>
  T* allocate(Record& r, Args&&... args) {
    T* p = block_layout<retired_node, T>::create(std::forward<Args>(args)...);
    r.ctr.allocated.add();
    return p;
  }

  template <class T>
  static retired_node* header_of(const T* p) noexcept {
    return block_layout<retired_node, T>::header(p);
  }

  // Frees a node that was never made reachable by other threads.
  void discard(Record& r, retired_node* n) {
    r.ctr.retired.add();
    reclaim_node(r, n);
  }

  // Frees a node still owned by a data structure being destroyed.
  void free_unshared(retired_node* n) noexcept {
    n->dispose(n, dispose_op::destroy);
    n->dispose(n, dispose_op::deallocate);
  }

  // Keep the last n reclaimed nodes of every thread allocated (test aid).
  void set_quarantine(std::size_t n) noexcept { quarantine_ = n; }

 protected:
  Derived& derived() noexcept { return static_cast<Derived&>(*this); }

  Record* acquire_record() {
    auto [r, fresh] = registry_.acquire();
    if (fresh) r->parked.set_capacity(quarantine_);
    return r;
  }

  void release_record(Record& r) noexcept { registry_.release(r); }

  void reclaim_node(Record& r, retired_node* n) noexcept {
    n->dispose(n, dispose_op::destroy);
    r.parked.put(n);
    r.ctr.reclaimed.add();
  }

  // Reclaims a node while no thread is registered.
  void reclaim_detached(retired_node* n) noexcept {
    n->dispose(n, dispose_op::destroy);
    n->dispose(n, dispose_op::deallocate);
    drained_.fetch_add(1, std::memory_order_relaxed);
  }

  void reclaim_chain_detached(retired_node* n) noexcept {
    while (n) {
      retired_node* next = n->next;
      reclaim_detached(n);
      n = next;
    }
  }

  void reclaim_chains_detached(retired_node* chains) noexcept {
    while (chains) {
      retired_node* next = chains->next_chunk;
      reclaim_chain_detached(chains);
      chains = next;
    }
  }

  registry<Record> registry_;
  std::atomic<std::uint64_t> drained_{0};
  std::size_t quarantine_ = 0;
};

// Schemes that protect nodes with critical regions. Regions nest; only the
// outermost enter and leave reach the scheme.
template <class Derived, class Record>
class region_domain : public domain_base<Derived, Record> {
 public:
  static constexpr protection kind = protection::region;

  struct guard_state {
    bool in_region = false;
  };

  void enter(Record& r) {
    if (r.region_depth++ == 0) {
      r.ctr.region_entries.add();
      this->derived().on_enter(r);
    }
  }

  void leave(Record& r) {
    assert(r.region_depth > 0);
    if (--r.region_depth == 0) this->derived().on_leave(r);
  }

  bool in_region(const Record& r) const noexcept { return r.region_depth > 0; }

  template <class T, unsigned M, class Source>
  marked_ptr<T, M> protect(Record& r, guard_state& st, const Source& src,
                           std::memory_order order) {
    if (!st.in_region) {
      enter(r);
      st.in_region = true;
    }
    marked_ptr<T, M> p = src.load(order);
    if (!p.get()) unprotect(r, st);
    return p;
  }

  template <class T, unsigned M, class Source>
  bool protect_if_equal(Record& r, guard_state& st, const Source& src,
                        marked_ptr<T, M> expected, std::memory_order order) {
    if (!st.in_region) {
      enter(r);
      st.in_region = true;
    }
    marked_ptr<T, M> p = src.load(order);
    if (p != expected || !p.get()) {
      unprotect(r, st);
      return p == expected;
    }
    return true;
  }

  void unprotect(Record& r, guard_state& st, retired_node* = nullptr) {
    if (st.in_region) {
      st.in_region = false;
      leave(r);
    }
  }

  void release_state(Record&, guard_state&) noexcept {}

  void adopt(Record& r, guard_state& st, retired_node*) {
    if (!st.in_region) {
      enter(r);
      st.in_region = true;
    }
  }

  void pin(Record& r, guard_state& st, retired_node* n) { adopt(r, st, n); }

  void retire_guarded(Record& r, guard_state& st, retired_node* n) {
    this->derived().retire(r, n);
    unprotect(r, st);
  }

  void discard_guarded(Record& r, guard_state& st, retired_node* n) {
    unprotect(r, st);
    this->discard(r, n);
  }

  void open_region(Record& r) {
    if (this->derived().regions_span_guards()) enter(r);
  }
  void close_region(Record& r) {
    if (this->derived().regions_span_guards()) leave(r);
  }
};

}  // namespace detail
}  // namespace smr
