#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "smr/counters.hpp"
#include "smr/detail/domain_base.hpp"
#include "smr/retired_node.hpp"

namespace smr {

// Lock-free doubly-linked list of the threads currently inside a critical
// region, ordered by the stamp each took on entry. The prev links form the
// authoritative chain head -> newest -> ... -> oldest -> tail; next links
// point the other way and are only hints.
//
// The head sentinel holds the next stamp to hand out, the tail sentinel the
// lowest stamp that may still be held by a thread in the list.
//
// A link word packs a 48-bit block address, a delete mark in bit 0 and a
// 16-bit version in the top bits. Every store to a link bumps the version, so
// a CAS cannot succeed against a block that left and re-entered the list.
class stamp_list {
 public:
  struct alignas(64) block {
    std::atomic<std::uint64_t> prev{0};
    std::atomic<std::uint64_t> next{0};
    std::atomic<std::uint64_t> stamp{0};
    std::atomic<bool> linked{false};
  };

  stamp_list();
  stamp_list(const stamp_list&) = delete;
  stamp_list& operator=(const stamp_list&) = delete;

  // Inserts b at the head and returns its stamp.
  std::uint64_t push(block& b, counters& c);
  // Removes b. Returns true if b was the oldest block when it was unlinked.
  bool remove(block& b, counters& c);

  std::uint64_t highest_stamp() const noexcept {
    return head_.stamp.load(std::memory_order_seq_cst);
  }
  std::uint64_t lowest_stamp() const noexcept {
    return tail_.stamp.load(std::memory_order_acquire);
  }

  // Stamps along the prev chain, newest first. Only meaningful while no
  // thread modifies the list.
  std::vector<std::uint64_t> stamps() const;
  // Stamps along the next hints, oldest first. Same restriction.
  std::vector<std::uint64_t> stamps_by_next() const;

 private:
  std::pair<block*, std::uint64_t> find_newer(block* x, std::uint64_t& iters);
  block* unlink(block* x, std::uint64_t& iters);
  void help_remove(block* x, std::uint64_t& iters);
  void raise_tail(std::uint64_t v) noexcept;

  block head_;
  block tail_;
};

struct stamp_it_config {
  // reclaim the local retire list when it grows beyond this many nodes
  std::size_t local_threshold = 64;
  // after leaving a region without being the oldest thread, move the local
  // retire list to the shared one if it holds more than this many nodes
  std::size_t donation_threshold = 64;
  std::size_t quarantine = 0;
};

struct stamp_it_record : detail::record_base {
  stamp_list::block block;
  retired_list local;
  std::uint64_t stamp = 0;
  std::uint64_t global_visits = 0;
};

class stamp_it : public detail::region_domain<stamp_it, stamp_it_record> {
 public:
  static constexpr const char* name = "stamp";

  explicit stamp_it(stamp_it_config cfg = {});
  ~stamp_it();

  bool regions_span_guards() const noexcept { return true; }

  void retire(record& r, retired_node* n);
  void on_enter(record& r);
  void on_leave(record& r);

  record* attach_record();
  void detach_record(record& r);

  // Reclaims pending nodes. No thread may be registered.
  void drain();

  // Reclaims the prefix of r's local list whose tags do not exceed the
  // lowest stamp.
  void reclaim_local(record& r);
  // Same for every list in the shared retire list. Returns the number of
  // nodes looked at.
  std::size_t reclaim_global(record& r);

  std::uint64_t highest_stamp() const noexcept { return list_.highest_stamp(); }
  std::uint64_t lowest_stamp() const noexcept { return list_.lowest_stamp(); }
  const stamp_list& list() const noexcept { return list_; }
  const stamp_it_config& config() const noexcept { return cfg_; }
  // Hands r's local list to the shared retire list as one sorted sublist.
  void donate(record& r);
  // Nodes in the shared retire list. Same restriction as
  // chain_stack::unsafe_count.
  std::size_t global_count() const noexcept { return global_.unsafe_count(); }

 private:
  stamp_it_config cfg_;
  stamp_list list_;
  chain_stack global_;
};

}  // namespace smr
