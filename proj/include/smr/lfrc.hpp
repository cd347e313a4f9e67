#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "smr/detail/domain_base.hpp"
#include "smr/refcount.hpp"

namespace smr {

struct lfrc_config {
  // per-thread free list capacity per node type; 0 means every freed node
  // goes straight to the shared free list
  std::size_t local_free_list = 0;
};

namespace detail {

constexpr std::size_t lfrc_max_types = 32;

inline std::atomic<unsigned>& lfrc_type_counter() {
  static std::atomic<unsigned> n{0};
  return n;
}

template <class T>
unsigned lfrc_type_id() {
  static const unsigned id = lfrc_type_counter().fetch_add(1);
  if (id >= lfrc_max_types) throw std::length_error("lfrc: too many node types");
  return id;
}

template <class T>
concept has_links = requires(T& t) { t.for_each_link([](auto&) {}); };

}  // namespace detail

template <bool Padded>
struct lfrc_record : detail::record_base {
  std::array<std::vector<lfrc_header<Padded>*>, detail::lfrc_max_types> local_pool;
};

// Lock-free reference counting. A node is reclaimed by the thread that
// drops its last reference; its memory is recycled through per-type free
// lists and only released when the domain is destroyed. Padded places the
// reference count on a cache line of its own.
template <bool Padded>
class lfrc : public detail::domain_base<lfrc<Padded>, lfrc_record<Padded>> {
  using base = detail::domain_base<lfrc<Padded>, lfrc_record<Padded>>;

 public:
  using record = lfrc_record<Padded>;
  using header = lfrc_header<Padded>;
  using header_type = header;
  template <class T, unsigned MarkBits>
  using link = counted_link<T, MarkBits, Padded>;

  static constexpr protection kind = protection::refcount;
  static constexpr bool padded = Padded;

  struct guard_state {};

  explicit lfrc(lfrc_config cfg = {}) : cfg_(cfg) {
    for (auto& t : pool_) t.store(nullptr, std::memory_order_relaxed);
  }
  ~lfrc() {
    drain();
    for (auto& t : pool_) {
      header* h = t.exchange(nullptr);
      while (h) {
        header* next = h->pool_next.load(std::memory_order_relaxed);
        h->dispose(h, dispose_op::deallocate);
        h = next;
      }
    }
    this->registry_.for_each([](record& r) {
      for (auto& l : r.local_pool) {
        for (header* h : l) h->dispose(h, dispose_op::deallocate);
        l.clear();
      }
    });
  }

  const char* name() const noexcept {
    if (Padded) return cfg_.local_free_list ? "lfrc-padded-20" : "lfrc-padded";
    return cfg_.local_free_list ? "lfrc-unpadded-20" : "lfrc";
  }
  const lfrc_config& config() const noexcept { return cfg_; }

  record* attach_record() { return this->acquire_record(); }

  void detach_record(record& r) {
    for (std::size_t i = 0; i < r.local_pool.size(); ++i) {
      for (header* h : r.local_pool[i]) push_global(i, h);
      r.local_pool[i].clear();
    }
    this->release_record(r);
  }

  void drain() {
    retired_node* d = detail::lfrc_deferred<Padded>().steal();
    while (d) {
      retired_node* next = d->next_chunk;
      reclaim_claimed_detached(static_cast<header*>(d));
      d = next;
    }
  }

  template <class T>
  static retired_node* header_of(const T* p) noexcept {
    return detail::block_layout<header, T>::header(p);
  }

  template <class T>
  static header* lfrc_header_of(const T* p) noexcept {
    return detail::block_layout<header, T>::header(p);
  }

  // Only fresh nodes count as allocated; recycled ones were counted before.
  template <class T, class... Args>
  T* allocate(record& r, Args&&... args) {
    using layout = detail::block_layout<header, T>;
    const unsigned id = detail::lfrc_type_id<T>();
    header* h = pop_local(r, id);
    if (!h) h = pop_global(r, id);
    if (h) {
      // the claim bit is still set; it is cleared when construction succeeded
      try {
        ::new (static_cast<void*>(layout::payload(h))) T(std::forward<Args>(args)...);
      } catch (...) {
        push_global(id, h);
        throw;
      }
      rc::revive(h->ref);
      return layout::payload(h);
    }
    T* p = layout::create(std::forward<Args>(args)...);
    h = lfrc_header_of(p);
    h->ref.store(1, std::memory_order_relaxed);
    h->type_id = id;
    h->drop_links = &drop_links<T>;
    r.ctr.allocated.add();
    return p;
  }

  template <class T, unsigned M, class Source>
  marked_ptr<T, M> protect(record& r, guard_state&, const Source& src, std::memory_order order) {
    marked_ptr<T, M> p = src.load(order);
    for (;;) {
      if (!p.get()) return p;
      header* h = lfrc_header_of(p.get());
      rc::add_ref(h->ref);
      // the count was raised while src still referenced the node, so the
      // node was alive and cannot be claimed now
      marked_ptr<T, M> q = src.load(std::memory_order_acquire);
      if (q.get() == p.get()) return q;
      // the node may have lost every other reference meanwhile
      release(r, h);
      p = q;
    }
  }

  template <class T, unsigned M, class Source>
  bool protect_if_equal(record& r, guard_state&, const Source& src, marked_ptr<T, M> expected,
                        std::memory_order order) {
    if (!expected.get()) return src.load(order) == expected;
    header* h = lfrc_header_of(expected.get());
    rc::add_ref(h->ref);
    if (src.load(std::memory_order_acquire) == expected) return true;
    release(r, h);
    return false;
  }

  void unprotect(record& r, guard_state&, retired_node* n) {
    if (n) release(r, static_cast<header*>(n));
  }

  void release_state(record&, guard_state&) noexcept {}
  void adopt(record&, guard_state&, retired_node*) noexcept {}
  void pin(record&, guard_state&, retired_node*) noexcept {}
  void open_region(record&) noexcept {}
  void close_region(record&) noexcept {}

  void retire_guarded(record& r, guard_state&, retired_node* n) {
    r.ctr.retired.add();
    release(r, static_cast<header*>(n));
  }

  void discard_guarded(record& r, guard_state& st, retired_node* n) { retire_guarded(r, st, n); }

  // Drops one reference held by r's thread.
  void release(record& r, header* h) {
    if (rc::release(h->ref)) reclaim_claimed(r, h);
    if (!detail::lfrc_deferred<Padded>().empty()) {
      retired_node* d = detail::lfrc_deferred<Padded>().steal();
      while (d) {
        retired_node* next = d->next_chunk;
        reclaim_claimed(r, static_cast<header*>(d));
        d = next;
      }
    }
  }

  std::size_t global_pool_size(unsigned type_id) const noexcept {
    std::size_t n = 0;
    for (header* h = pool_[type_id].load(); h; h = h->pool_next.load()) ++n;
    return n;
  }
  std::size_t local_pool_size(const record& r, unsigned type_id) const noexcept {
    return r.local_pool[type_id].size();
  }
  template <class T>
  static unsigned type_id() {
    return detail::lfrc_type_id<T>();
  }

 private:
  template <class T>
  static void drop_links(header* h, header*& worklist) {
    if constexpr (detail::has_links<T>) {
      T* p = detail::block_layout<header, T>::payload(h);
      p->for_each_link([&](auto& link) {
        header* target = link.take();
        if (target && rc::release(target->ref)) {
          target->next = worklist;
          worklist = target;
        }
      });
    }
  }

  void reclaim_claimed(record& r, header* h) {
    h->next = nullptr;
    header* work = h;
    while (work) {
      header* n = work;
      work = static_cast<header*>(n->next);
      n->drop_links(n, work);
      n->dispose(n, dispose_op::destroy);
      r.ctr.reclaimed.add();
      recycle(r, n);
    }
  }

  void reclaim_claimed_detached(header* h) {
    h->next = nullptr;
    header* work = h;
    while (work) {
      header* n = work;
      work = static_cast<header*>(n->next);
      n->drop_links(n, work);
      n->dispose(n, dispose_op::destroy);
      this->drained_.fetch_add(1, std::memory_order_relaxed);
      push_global(n->type_id, n);
    }
  }

  void recycle(record& r, header* h) {
    auto& local = r.local_pool[h->type_id];
    if (local.size() < cfg_.local_free_list)
      local.push_back(h);
    else
      push_global(h->type_id, h);
  }

  header* pop_local(record& r, unsigned id) {
    auto& local = r.local_pool[id];
    if (local.empty()) return nullptr;
    header* h = local.back();
    local.pop_back();
    return h;
  }

  void push_global(std::size_t id, header* h) noexcept {
    header* top = pool_[id].load(std::memory_order_relaxed);
    do {
      h->pool_next.store(top, std::memory_order_relaxed);
    } while (!pool_[id].compare_exchange_weak(top, h, std::memory_order_release,
                                              std::memory_order_relaxed));
  }

  // The count taken on the top node keeps it from being popped, reused and
  // pushed again between our read of pool_next and the CAS.
  header* pop_global(record& r, std::size_t id) {
    for (;;) {
      header* h = pool_[id].load(std::memory_order_acquire);
      if (!h) return nullptr;
      rc::add_ref(h->ref);
      if (pool_[id].load(std::memory_order_acquire) == h) {
        header* next = h->pool_next.load(std::memory_order_relaxed);
        // CAS on a copy so a failure leaves h naming the node we probed
        header* expected = h;
        if (pool_[id].compare_exchange_strong(expected, next, std::memory_order_acquire,
                                              std::memory_order_relaxed)) {
          // drop our probe count; the claim bit keeps the node ours
          h->ref.fetch_sub(1, std::memory_order_relaxed);
          return h;
        }
      }
      // somebody else popped and revived the node; if its user let go
      // while we held the probe, the last reference is ours
      if (rc::release(h->ref)) reclaim_claimed(r, h);
    }
  }

  lfrc_config cfg_;
  std::array<std::atomic<header*>, detail::lfrc_max_types> pool_;
};

using lfrc_unpadded = lfrc<false>;
using lfrc_padded = lfrc<true>;

}  // namespace smr
