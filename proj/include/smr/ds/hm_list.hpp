#pragma once

#include <atomic>
#include <cstddef>
#include <utility>

#include "smr/guard_ptr.hpp"
#include "smr/thread_handle.hpp"

namespace smr::ds {

struct no_value {};

// Harris' ordered list with Michael's improvements: a node is removed by
// marking its next link and then unlinking it; traversals unlink marked
// nodes they come across. Holds at most two guards per operation, except
// get_or_insert which also keeps the returned node protected.
template <class Key, class Value, class Domain>
class hm_list {
 public:
  struct node;
  using link = typename Domain::template link<node, 1>;
  using marked = marked_ptr<node, 1>;
  using guard = guard_ptr<node, Domain, 1>;
  using handle = thread_handle<Domain>;

  struct node {
    template <class... Args>
    explicit node(Key k, Args&&... args) : key(std::move(k)), value(std::forward<Args>(args)...) {}
    const Key key;
    Value value;
    link next;
    template <class F>
    void for_each_link(F&& f) {
      f(next);
    }
  };

  hm_list() = default;
  hm_list(const hm_list&) = delete;
  hm_list& operator=(const hm_list&) = delete;

  // No thread may use the list any more.
  ~hm_list() {
    node* p = head_.load(std::memory_order_acquire).get();
    while (p) {
      node* next = p->next.load(std::memory_order_relaxed).get();
      retired_node* h = Domain::header_of(p);
      h->dispose(h, dispose_op::destroy);
      h->dispose(h, dispose_op::deallocate);
      p = next;
    }
  }

  bool contains(handle& h, const Key& key) {
    find_info info(h);
    return find(key, info);
  }

  // Returns a guard to the node holding key, or an empty guard.
  guard find_node(handle& h, const Key& key) {
    find_info info(h);
    if (find(key, info)) return std::move(info.cur);
    return guard(h);
  }

  template <class... Args>
  bool insert(handle& h, const Key& key, Args&&... args) {
    find_info info(h);
    guard n(h);
    for (;;) {
      if (find(key, info)) {
        if (n) n.discard();
        return false;
      }
      if (!n) n = make_guarded<node, Domain, 1>(h, key, std::forward<Args>(args)...);
      if (try_link(info, n)) {
        n.reset();
        return true;
      }
    }
  }

  bool remove(handle& h, const Key& key) {
    find_info info(h);
    // mark the node's next link; this is the linearization point
    do {
      if (!find(key, info)) return false;
    } while (!info.cur->next.compare_exchange_weak(info.next, marked(info.next.get(), 1),
                                                   std::memory_order_relaxed,
                                                   std::memory_order_relaxed));
    marked expected(info.cur.get(), 0);
    // (1) - this release-CAS synchronizes-with the acquire-loads (3, 4)
    if (info.prev->compare_exchange_weak(expected, info.next, std::memory_order_release,
                                         std::memory_order_relaxed))
      info.cur.retire();
    else
      // somebody interfered; walk again so the marked node gets unlinked
      find(key, info);
    return true;
  }

  // Returns the node holding key, inserting producer() first if key is
  // absent. The bool tells whether this call inserted. If another thread
  // wins the race for the same key, the produced candidate is discarded.
  template <class Producer>
  std::pair<guard, bool> get_or_insert(handle& h, const Key& key, Producer&& producer) {
    find_info info(h);
    guard n(h);
    for (;;) {
      if (find(key, info)) {
        if (n) n.discard();
        return {std::move(info.cur), false};
      }
      if (!n) {
        n = make_guarded<node, Domain, 1>(h, key, producer());
        // the node must stay protected after it becomes reachable
        n.pin();
      }
      if (try_link(info, n)) return {std::move(n), true};
    }
  }

  // Calls f(node) for every node still linked, marked or not. Only
  // meaningful while no thread modifies the list.
  template <class F>
  void unsafe_for_each_node(F&& f) const {
    for (marked p = head_.load(); p.get(); p = p->next.load()) f(*p.get());
  }

  // Visits the keys in order. Only meaningful while no thread modifies the
  // list.
  template <class F>
  void unsafe_for_each(F&& f) const {
    for (marked p = head_.load(); p.get(); p = p->next.load())
      if (!p->next.load().mark()) f(p->key, p->value);
  }

 private:
  struct find_info {
    explicit find_info(handle& h) : cur(h), save(h) {}
    link* prev = nullptr;
    marked next{};
    guard cur;
    guard save;
  };

  bool try_link(find_info& info, guard& n) {
    marked cur(info.cur.get(), 0);
    n->next.store(cur, std::memory_order_relaxed);
    // (2) - this release-CAS synchronizes-with the acquire-loads (3, 4)
    if (info.prev->compare_exchange_weak(cur, n.marked_get(), std::memory_order_release,
                                         std::memory_order_relaxed))
      return true;
    // drop the link while cur is still protected
    n->next.store(marked{}, std::memory_order_relaxed);
    return false;
  }

  bool find(const Key& key, find_info& info) {
  retry:
    info.prev = &head_;
    info.next = info.prev->load(std::memory_order_relaxed);
    info.save.reset();
    for (;;) {
      // (3) - this acquire-load synchronizes-with the release-CAS (1, 2, 5)
      if (!info.cur.acquire_if_equal(*info.prev, info.next, std::memory_order_acquire))
        goto retry;
      if (!info.cur) return false;

      info.next = info.cur->next.load(std::memory_order_relaxed);
      if (info.next.mark() != 0) {
        // cur is logically deleted; unlink and retire it
        // (4) - this acquire-load synchronizes-with the release-CAS (1, 2, 5)
        info.next = marked(info.cur->next.load(std::memory_order_acquire).get(), 0);
        marked expected(info.cur.get(), 0);
        // (5) - this release-CAS synchronizes-with the acquire-loads (3, 4)
        if (!info.prev->compare_exchange_weak(expected, info.next, std::memory_order_release,
                                              std::memory_order_relaxed))
          goto retry;
        info.cur.retire();
      } else {
        if (info.prev->load(std::memory_order_relaxed) != marked(info.cur.get(), 0))
          goto retry;  // cur might be cut from the list
        const Key& ckey = info.cur->key;
        if (!(ckey < key)) return !(key < ckey);
        info.prev = &info.cur->next;
        info.save = std::move(info.cur);
      }
    }
  }

  link head_;
};

template <class Key, class Domain>
class list_set {
 public:
  using handle = thread_handle<Domain>;

  bool insert(handle& h, const Key& key) { return list_.insert(h, key); }
  bool remove(handle& h, const Key& key) { return list_.remove(h, key); }
  bool contains(handle& h, const Key& key) { return list_.contains(h, key); }

  template <class F>
  void unsafe_for_each(F&& f) const {
    list_.unsafe_for_each([&](const Key& k, const no_value&) { f(k); });
  }
  template <class F>
  void unsafe_for_each_node(F&& f) const {
    list_.unsafe_for_each_node(std::forward<F>(f));
  }

 private:
  hm_list<Key, no_value, Domain> list_;
};

}  // namespace smr::ds
