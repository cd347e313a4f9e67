#pragma once

#include <atomic>
#include <cassert>
#include <cstdint>

#include "smr/marked_ptr.hpp"
#include "smr/retired_node.hpp"

namespace smr {

// Reference count word of a node: the low 63 bits count references, bit 63
// is the claim bit. The thread that sets the claim bit owns the node's
// reclamation.
namespace rc {

constexpr std::uint64_t claim_bit = std::uint64_t(1) << 63;
constexpr std::uint64_t count_mask = claim_bit - 1;

constexpr std::uint64_t count(std::uint64_t w) noexcept { return w & count_mask; }
constexpr bool claimed(std::uint64_t w) noexcept { return (w & claim_bit) != 0; }

// Releases that found no reference to drop. Stays zero unless a count is
// corrupted.
inline std::atomic<std::uint64_t>& underflows() noexcept {
  static std::atomic<std::uint64_t> n{0};
  return n;
}

template <class Atomic>
void add_ref(Atomic& ref) noexcept {
  ref.fetch_add(1, std::memory_order_relaxed);
}

// Drops one reference. Returns true if the caller claimed the node.
template <class Atomic>
bool release(Atomic& ref) noexcept {
  const std::uint64_t c = ref.fetch_sub(1, std::memory_order_acq_rel);
  if (count(c) == 0) [[unlikely]] {
    underflows().fetch_add(1, std::memory_order_relaxed);
    assert(!"reference count underflow");
  }
  if (count(c) != 1 || claimed(c)) return false;
  // a transient reader may increment and release again; whoever moves 0 to
  // claimed wins
  std::uint64_t zero = 0;
  return ref.compare_exchange_strong(zero, claim_bit, std::memory_order_acq_rel,
                                     std::memory_order_relaxed);
}

// A claimed node is taken from a free list: clear the claim bit and hand the
// caller one reference.
template <class Atomic>
void revive(Atomic& ref) noexcept {
  ref.fetch_add(1 - claim_bit, std::memory_order_acq_rel);
}

}  // namespace rc

template <bool Padded>
struct lfrc_header : retired_node {
  alignas(Padded ? 64 : 8) std::atomic<std::uint64_t> ref{0};
  std::atomic<lfrc_header*> pool_next{nullptr};
  // releases the node's outgoing links; claimed targets are pushed onto the
  // worklist (linked through next)
  void (*drop_links)(lfrc_header*, lfrc_header*& worklist) = nullptr;
  unsigned type_id = 0;
};

namespace detail {

// Nodes whose last reference went away inside a link operation; the domain
// reclaims them on its next release.
template <bool Padded>
inline chain_stack& lfrc_deferred() {
  static chain_stack s;
  return s;
}

template <bool Padded>
inline void lfrc_release_deferred(lfrc_header<Padded>* h) noexcept {
  if (rc::release(h->ref)) {
    h->next = nullptr;
    lfrc_deferred<Padded>().push(h);
  }
}

}  // namespace detail

// Link whose target's reference count includes this link.
template <class T, unsigned MarkBits, bool Padded>
class counted_link {
 public:
  using marked = marked_ptr<T, MarkBits>;
  using header = lfrc_header<Padded>;
  using layout = detail::block_layout<header, T>;

  counted_link() noexcept = default;
  counted_link(const counted_link&) = delete;
  counted_link& operator=(const counted_link&) = delete;

  marked load(std::memory_order order = std::memory_order_seq_cst) const noexcept {
    return v_.load(order);
  }

  void store(marked p, std::memory_order order = std::memory_order_seq_cst) noexcept {
    if (p.get()) rc::add_ref(layout::header(p.get())->ref);
    marked old = v_.exchange(p, order);
    if (old.get()) detail::lfrc_release_deferred<Padded>(layout::header(old.get()));
  }

  bool compare_exchange_strong(marked& expected, marked desired,
                               std::memory_order success = std::memory_order_seq_cst,
                               std::memory_order failure = std::memory_order_seq_cst) noexcept {
    return cas(expected, desired, success, failure, false);
  }

  bool compare_exchange_weak(marked& expected, marked desired,
                             std::memory_order success = std::memory_order_seq_cst,
                             std::memory_order failure = std::memory_order_seq_cst) noexcept {
    return cas(expected, desired, success, failure, true);
  }

  // Clears the link of a claimed node and returns the old target's header.
  header* take() noexcept {
    marked old = v_.exchange(marked{}, std::memory_order_relaxed);
    return old.get() ? layout::header(old.get()) : nullptr;
  }

 private:
  bool cas(marked& expected, marked desired, std::memory_order success,
           std::memory_order failure, bool weak) noexcept {
    T* const from = expected.get();
    T* const to = desired.get();
    if (from == to) {
      // only the mark changes; no count moves
      return weak ? v_.compare_exchange_weak(expected, desired, success, failure)
                  : v_.compare_exchange_strong(expected, desired, success, failure);
    }
    // the new target is counted before it becomes reachable through us
    if (to) rc::add_ref(layout::header(to)->ref);
    const bool ok = weak ? v_.compare_exchange_weak(expected, desired, success, failure)
                         : v_.compare_exchange_strong(expected, desired, success, failure);
    if (ok) {
      if (from) detail::lfrc_release_deferred<Padded>(layout::header(from));
    } else if (to) {
      detail::lfrc_release_deferred<Padded>(layout::header(to));
    }
    return ok;
  }

  std::atomic<marked> v_{};
};

}  // namespace smr
