#pragma once

#include <utility>

namespace smr {

// Registration of a thread with a reclamation domain. Every data structure
// operation takes the caller's handle. A handle must only be used by one
// thread at a time; tests may drive several handles from one thread to
// replay interleavings deterministically.
template <class Domain>
class thread_handle {
 public:
  using record_type = typename Domain::record;

  explicit thread_handle(Domain& d) : domain_(&d), record_(d.attach_record()) {}
  thread_handle(const thread_handle&) = delete;
  thread_handle& operator=(const thread_handle&) = delete;
  thread_handle(thread_handle&& o) noexcept
      : domain_(o.domain_), record_(std::exchange(o.record_, nullptr)) {}
  thread_handle& operator=(thread_handle&& o) noexcept {
    if (this != &o) {
      release();
      domain_ = o.domain_;
      record_ = std::exchange(o.record_, nullptr);
    }
    return *this;
  }
  ~thread_handle() { release(); }

  // Deregister now. Remaining retired nodes are handed off to the domain.
  void release() noexcept {
    if (record_) domain_->detach_record(*std::exchange(record_, nullptr));
  }

  bool attached() const noexcept { return record_ != nullptr; }
  Domain& domain() const noexcept { return *domain_; }
  record_type& record() const noexcept { return *record_; }

 private:
  Domain* domain_;
  record_type* record_;
};

}  // namespace smr
