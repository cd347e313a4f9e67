#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <new>
#include <utility>

namespace smr {

enum class dispose_op {
  destroy,    // run the payload destructor only
  deallocate  // release the memory block (payload must already be destroyed)
};

// Header placed in front of every node managed by a reclaimer.
struct retired_node {
  retired_node* next = nullptr;        // next node in a retire list
  retired_node* next_chunk = nullptr;  // next list in a list of lists
  std::uint64_t tag = 0;               // stamp / epoch the node was retired in
  void (*dispose)(retired_node*, dispose_op) = nullptr;
};

namespace detail {

constexpr std::size_t round_up(std::size_t n, std::size_t a) { return (n + a - 1) / a * a; }

// Memory layout of a node: Header at offset 0, T at payload_offset.
template <class Header, class T>
struct block_layout {
  static constexpr std::size_t align =
      std::max({alignof(Header), alignof(T), std::size_t(8)});
  static constexpr std::size_t payload_offset = round_up(sizeof(Header), align);
  static constexpr std::size_t size = payload_offset + sizeof(T);

  static Header* header(const T* p) noexcept {
    return reinterpret_cast<Header*>(
        reinterpret_cast<char*>(const_cast<T*>(p)) - payload_offset);
  }
  static T* payload(const Header* h) noexcept {
    return std::launder(reinterpret_cast<T*>(
        reinterpret_cast<char*>(const_cast<Header*>(h)) + payload_offset));
  }

  static void* allocate() { return ::operator new(size, std::align_val_t{align}); }
  static void deallocate(void* p) noexcept {
    ::operator delete(p, size, std::align_val_t{align});
  }

  static void dispose(retired_node* n, dispose_op op) noexcept {
    auto* h = static_cast<Header*>(n);
    if (op == dispose_op::destroy) {
      payload(h)->~T();
    } else {
      h->~Header();
      deallocate(h);
    }
  }

  template <class... Args>
  static T* create(Args&&... args) {
    void* mem = allocate();
    Header* h = ::new (mem) Header();
    h->dispose = &dispose;
    try {
      return ::new (static_cast<void*>(payload(h))) T(std::forward<Args>(args)...);
    } catch (...) {
      h->~Header();
      deallocate(mem);
      throw;
    }
  }
};

}  // namespace detail

// FIFO list of retired nodes, owned by one thread.
class retired_list {
 public:
  retired_list() = default;
  retired_list(const retired_list&) = delete;
  retired_list& operator=(const retired_list&) = delete;

  bool empty() const noexcept { return first_ == nullptr; }
  std::size_t size() const noexcept { return count_; }
  retired_node* front() const noexcept { return first_; }

  void push_back(retired_node* n) noexcept {
    n->next = nullptr;
    if (last_)
      last_->next = n;
    else
      first_ = n;
    last_ = n;
    ++count_;
  }

  retired_node* pop_front() noexcept {
    retired_node* n = first_;
    first_ = n->next;
    if (!first_) last_ = nullptr;
    --count_;
    n->next = nullptr;
    return n;
  }

  // Detach all nodes as a null-terminated chain.
  retired_node* steal() noexcept {
    retired_node* n = first_;
    first_ = last_ = nullptr;
    count_ = 0;
    return n;
  }

  void append(retired_list& other) noexcept {
    if (other.empty()) return;
    if (last_)
      last_->next = other.first_;
    else
      first_ = other.first_;
    last_ = other.last_;
    count_ += other.count_;
    other.first_ = other.last_ = nullptr;
    other.count_ = 0;
  }

 private:
  retired_node* first_ = nullptr;
  retired_node* last_ = nullptr;
  std::size_t count_ = 0;
};

// Lock-free stack of chains. A chain is a null-terminated list linked through
// `next`; chains are linked through the first node's `next_chunk`.
class chain_stack {
 public:
  bool empty() const noexcept { return head_.load(std::memory_order_acquire) == nullptr; }

  void push(retired_node* chain) noexcept {
    if (!chain) return;
    retired_node* h = head_.load(std::memory_order_relaxed);
    do {
      chain->next_chunk = h;
    } while (!head_.compare_exchange_weak(h, chain, std::memory_order_release,
                                          std::memory_order_relaxed));
  }

  // Push a list of chains linked through next_chunk.
  void push_all(retired_node* chains) noexcept {
    if (!chains) return;
    retired_node* last = chains;
    while (last->next_chunk) last = last->next_chunk;
    retired_node* h = head_.load(std::memory_order_relaxed);
    do {
      last->next_chunk = h;
    } while (!head_.compare_exchange_weak(h, chains, std::memory_order_release,
                                          std::memory_order_relaxed));
  }

  retired_node* steal() noexcept { return head_.exchange(nullptr, std::memory_order_acquire); }

  // Number of nodes in all chains. Only meaningful while no thread pushes or
  // steals.
  std::size_t unsafe_count() const noexcept {
    std::size_t n = 0;
    for (retired_node* c = head_.load(std::memory_order_acquire); c; c = c->next_chunk)
      for (retired_node* p = c; p; p = p->next) ++n;
    return n;
  }

 private:
  std::atomic<retired_node*> head_{nullptr};
};

}  // namespace smr
