#pragma once

#include <atomic>
#include <utility>

#include "smr/detail/domain_base.hpp"
#include "smr/marked_ptr.hpp"
#include "smr/thread_handle.hpp"

namespace smr {

// Keeps the node it points to from being reclaimed while it is held.
template <class T, class Domain, unsigned MarkBits = 1>
class guard_ptr {
 public:
  using marked = marked_ptr<T, MarkBits>;
  using handle_type = thread_handle<Domain>;

  guard_ptr() noexcept = default;
  explicit guard_ptr(handle_type& h) noexcept : dom_(&h.domain()), rec_(&h.record()) {}

  guard_ptr(const guard_ptr&) = delete;
  guard_ptr& operator=(const guard_ptr&) = delete;

  guard_ptr(guard_ptr&& o) noexcept
      : dom_(o.dom_), rec_(o.rec_), ptr_(std::exchange(o.ptr_, marked{})),
        st_(std::exchange(o.st_, {})) {}

  guard_ptr& operator=(guard_ptr&& o) noexcept {
    if (this != &o) {
      clear();
      dom_ = o.dom_;
      rec_ = o.rec_;
      ptr_ = std::exchange(o.ptr_, marked{});
      st_ = std::exchange(o.st_, {});
    }
    return *this;
  }

  ~guard_ptr() { clear(); }

  // Loads src and protects the loaded node. Returns the loaded value.
  template <class Source>
  marked acquire(const Source& src, std::memory_order order = std::memory_order_seq_cst) {
    marked old = ptr_;
    ptr_ = dom_->template protect<T, MarkBits>(*rec_, st_, src, order);
    if constexpr (Domain::kind == protection::refcount) {
      if (old.get()) dom_->unprotect(*rec_, st_, header(old.get()));
    }
    return ptr_;
  }

  // Protects src only if it still holds expected. On failure the guard is empty.
  template <class Source>
  bool acquire_if_equal(const Source& src, marked expected,
                        std::memory_order order = std::memory_order_seq_cst) {
    marked old = ptr_;
    bool ok = dom_->template protect_if_equal<T, MarkBits>(*rec_, st_, src, expected, order);
    ptr_ = ok ? expected : marked{};
    if constexpr (Domain::kind == protection::refcount) {
      if (old.get()) dom_->unprotect(*rec_, st_, header(old.get()));
    }
    return ok;
  }

  void reset() noexcept {
    if (dom_) dom_->unprotect(*rec_, st_, ptr_.get() ? header(ptr_.get()) : nullptr);
    ptr_ = marked{};
  }

  // Protects the node the guard already owns, e.g. a fresh node that is
  // about to be published and used afterwards.
  void pin() {
    if (ptr_.get()) dom_->pin(*rec_, st_, header(ptr_.get()));
  }

  // The node has been unlinked; hand it to the reclaimer and drop the guard.
  void retire() {
    dom_->retire_guarded(*rec_, st_, header(ptr_.get()));
    ptr_ = marked{};
  }

  // The node was never published; free it right away.
  void discard() {
    dom_->discard_guarded(*rec_, st_, header(ptr_.get()));
    ptr_ = marked{};
  }

  T* get() const noexcept { return ptr_.get(); }
  marked marked_get() const noexcept { return ptr_; }
  std::uintptr_t mark() const noexcept { return ptr_.mark(); }
  T* operator->() const noexcept { return ptr_.get(); }
  T& operator*() const noexcept { return *ptr_.get(); }
  explicit operator bool() const noexcept { return ptr_.get() != nullptr; }

  template <class U, class D, unsigned M, class... Args>
  friend guard_ptr<U, D, M> make_guarded(thread_handle<D>& h, Args&&... args);

 private:
  static retired_node* header(T* p) noexcept { return Domain::header_of(p); }

  void clear() noexcept {
    reset();
    if (dom_) dom_->release_state(*rec_, st_);
  }

  Domain* dom_ = nullptr;
  typename Domain::record* rec_ = nullptr;
  marked ptr_{};
  typename Domain::guard_state st_{};
};

// Allocates a node and returns a guard that owns and protects it.
template <class T, class Domain, unsigned MarkBits = 1, class... Args>
guard_ptr<T, Domain, MarkBits> make_guarded(thread_handle<Domain>& h, Args&&... args) {
  guard_ptr<T, Domain, MarkBits> g(h);
  T* p = h.domain().template allocate<T>(h.record(), std::forward<Args>(args)...);
  g.ptr_ = marked_ptr<T, MarkBits>(p);
  h.domain().adopt(h.record(), g.st_, Domain::header_of(p));
  return g;
}

// Amortizes region entry over several operations for schemes that support
// it. For the other schemes it does nothing.
template <class Domain>
class region_guard {
 public:
  explicit region_guard(thread_handle<Domain>& h) : dom_(&h.domain()), rec_(&h.record()) {
    dom_->open_region(*rec_);
  }
  region_guard(const region_guard&) = delete;
  region_guard& operator=(const region_guard&) = delete;
  ~region_guard() { dom_->close_region(*rec_); }

 private:
  Domain* dom_;
  typename Domain::record* rec_;
};

}  // namespace smr
