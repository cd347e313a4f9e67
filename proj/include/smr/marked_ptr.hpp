#pragma once

#include <atomic>
#include <cassert>
#include <cstdint>

namespace smr {

// A pointer whose lowest MarkBits bits carry a mark. Nodes handed out by the
// reclaimers are at least 8-byte aligned, so up to three bits are free.
template <class T, unsigned MarkBits = 1>
class marked_ptr {
  static_assert(MarkBits <= 3);

 public:
  static constexpr std::uintptr_t mark_mask = (std::uintptr_t(1) << MarkBits) - 1;

  constexpr marked_ptr() noexcept = default;
  marked_ptr(T* p, std::uintptr_t mark = 0) noexcept
      : bits_(reinterpret_cast<std::uintptr_t>(p) | mark) {
    assert((reinterpret_cast<std::uintptr_t>(p) & mark_mask) == 0);
    assert(mark <= mark_mask);
  }

  static marked_ptr from_bits(std::uintptr_t bits) noexcept {
    marked_ptr r;
    r.bits_ = bits;
    return r;
  }

  T* get() const noexcept { return reinterpret_cast<T*>(bits_ & ~mark_mask); }
  std::uintptr_t mark() const noexcept { return bits_ & mark_mask; }
  std::uintptr_t bits() const noexcept { return bits_; }

  T* operator->() const noexcept { return get(); }
  T& operator*() const noexcept { return *get(); }
  explicit operator bool() const noexcept { return get() != nullptr; }

  friend bool operator==(marked_ptr a, marked_ptr b) noexcept { return a.bits_ == b.bits_; }

 private:
  std::uintptr_t bits_ = 0;
};

// Plain atomic link used by every scheme except reference counting.
template <class T, unsigned MarkBits = 1>
using atomic_marked_ptr = std::atomic<marked_ptr<T, MarkBits>>;

}  // namespace smr
