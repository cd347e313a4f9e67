#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>

#include "smr/detail/domain_base.hpp"
#include "smr/retired_node.hpp"

namespace smr {

enum class epoch_mode {
  er,   // every guard acquisition is its own critical region
  ner,  // region_guard spans several operations
  qsr   // quiescent-state based: leaving the outermost region is a quiescent state
};

struct epoch_config {
  epoch_mode mode = epoch_mode::er;
  // try to advance the global epoch every this many region entries (ER/NER)
  std::size_t advance_interval = 100;
  std::size_t quarantine = 0;
};

struct epoch_record : detail::record_base {
  // ER/NER: epoch << 1 | active.  QSR: last round this thread was quiescent in.
  std::atomic<std::uint64_t> state{0};
  std::uint64_t local_epoch = 0;
  std::size_t entries = 0;
  retired_list limbo[3];
  std::uint64_t limbo_epoch[3] = {0, 0, 0};
  // QSR: current and previous batch with the highest round of their nodes
  retired_list batch[2];
  std::uint64_t batch_round[2] = {0, 0};
};

class epoch_domain : public detail::region_domain<epoch_domain, epoch_record> {
 public:
  explicit epoch_domain(epoch_config cfg = {});
  ~epoch_domain();

  const char* name() const noexcept;
  epoch_mode mode() const noexcept { return cfg_.mode; }
  bool regions_span_guards() const noexcept { return cfg_.mode != epoch_mode::er; }

  void retire(record& r, retired_node* n);
  void on_enter(record& r);
  void on_leave(record& r);

  record* attach_record();
  void detach_record(record& r);
  void drain();

  // ER/NER: advances the global epoch if every active thread has observed
  // it. On success the caller reclaims its limbo list from two epochs ago.
  bool try_advance(record& r);
  // QSR: quiescent state of r.
  void quiescent(record& r);

  std::uint64_t global_epoch() const noexcept { return global_.load(std::memory_order_acquire); }
  static bool is_active(const record& r) noexcept {
    return (r.state.load(std::memory_order_acquire) & 1) != 0;
  }
  static std::uint64_t local_epoch(const record& r) noexcept {
    return r.state.load(std::memory_order_acquire) >> 1;
  }
  std::size_t pending(const record& r) const noexcept;
  std::size_t orphan_count() const noexcept { return orphans_.unsafe_count(); }

 private:
  void reclaim_limbo(record& r, std::uint64_t global);
  void reclaim_batches(record& r, std::uint64_t round);
  void process_orphans(record& r, std::uint64_t global);

  epoch_config cfg_;
  // ER/NER: global epoch.  QSR: global round.
  alignas(64) std::atomic<std::uint64_t> global_{0};
  chain_stack orphans_;
};

}  // namespace smr
