#pragma once

#include <atomic>
#include <cstddef>
#include <optional>
#include <utility>

#include "smr/guard_ptr.hpp"
#include "smr/thread_handle.hpp"

namespace smr::ds {

// Michael-Scott queue. head_ always points to a dummy node; the value of a
// dequeued element lives in the node that becomes the new dummy.
template <class T, class Domain>
class ms_queue {
  struct node;
  using link = typename Domain::template link<node, 1>;
  using marked = marked_ptr<node, 1>;
  using guard = guard_ptr<node, Domain, 1>;

  struct node {
    node() = default;
    explicit node(T v) : value(std::move(v)) {}
    std::optional<T> value;
    link next;
    template <class F>
    void for_each_link(F&& f) {
      f(next);
    }
  };

 public:
  using handle = thread_handle<Domain>;
  using value_type = T;

  explicit ms_queue(handle& h) {
    guard dummy = make_guarded<node>(h);
    head_.store(dummy.marked_get(), std::memory_order_relaxed);
    tail_.store(dummy.marked_get(), std::memory_order_release);
    dummy.reset();
  }

  ms_queue(const ms_queue&) = delete;
  ms_queue& operator=(const ms_queue&) = delete;

  // No thread may use the queue any more.
  ~ms_queue() {
    node* p = head_.load(std::memory_order_acquire).get();
    while (p) {
      node* next = p->next.load(std::memory_order_relaxed).get();
      domain_of_nodes::free(p);
      p = next;
    }
  }

  void push(handle& h, T value) {
    guard n = make_guarded<node>(h, std::move(value));
    guard t(h);
    for (;;) {
      marked tl = t.acquire(tail_, std::memory_order_acquire);
      // (1) - this acquire-load synchronizes-with the release-CAS (2)
      marked next = tl->next.load(std::memory_order_acquire);
      if (next.get()) {
        // tail is lagging behind; help to swing it
        tail_.compare_exchange_weak(tl, next, std::memory_order_release,
                                    std::memory_order_relaxed);
        continue;
      }
      marked expected{};
      // (2) - this release-CAS synchronizes-with the acquire-loads (1, 3)
      if (tl->next.compare_exchange_strong(expected, n.marked_get(), std::memory_order_release,
                                           std::memory_order_relaxed)) {
        tail_.compare_exchange_strong(tl, n.marked_get(), std::memory_order_release,
                                      std::memory_order_relaxed);
        break;
      }
    }
    n.reset();
  }

  std::optional<T> try_pop(handle& h) {
    guard hd(h);
    guard nx(h);
    for (;;) {
      marked hp = hd.acquire(head_, std::memory_order_acquire);
      // (3) - this acquire-load synchronizes-with the release-CAS (2)
      marked np = nx.acquire(hp->next, std::memory_order_acquire);
      if (head_.load(std::memory_order_acquire) != hp) continue;
      if (!np.get()) return std::nullopt;
      marked tl = tail_.load(std::memory_order_acquire);
      if (tl.get() == hp.get()) {
        tail_.compare_exchange_weak(tl, np, std::memory_order_release, std::memory_order_relaxed);
        continue;
      }
      if (head_.compare_exchange_weak(hp, np, std::memory_order_release,
                                      std::memory_order_relaxed))
        break;
    }
    // only the winning thread touches the value of the new dummy
    std::optional<T> result = std::move(nx->value);
    nx->value.reset();
    hd.retire();
    return result;
  }

  // Calls f(node, links) for the dummy and every element, where links is the
  // number of queue links (head, tail, next) referencing the node. Only
  // meaningful while no thread modifies the queue.
  template <class F>
  void unsafe_for_each_node(F&& f) const {
    node* tl = tail_.load().get();
    node* hd = head_.load().get();
    for (node* p = hd; p; p = p->next.load().get())
      f(*p, std::size_t(p == hd) + std::size_t(p == tl) + std::size_t(p != hd));
  }

  // Number of elements. Only meaningful while no thread modifies the queue.
  std::size_t unsafe_size() const {
    std::size_t n = 0;
    for (node* p = head_.load().get()->next.load().get(); p; p = p->next.load().get()) ++n;
    return n;
  }

 private:
  struct domain_of_nodes {
    static void free(node* p) {
      retired_node* h = Domain::header_of(p);
      h->dispose(h, dispose_op::destroy);
      h->dispose(h, dispose_op::deallocate);
    }
  };

  alignas(64) link head_;
  alignas(64) link tail_;
};

}  // namespace smr::ds
