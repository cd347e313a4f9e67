#include "smr/stamp_it.hpp"

#include <cassert>
#include <stdexcept>

namespace smr {

namespace {

using block = stamp_list::block;
using link_t = std::uint64_t;

constexpr link_t mark_bit = 1;
constexpr int version_shift = 48;
constexpr link_t address_mask = ((link_t(1) << version_shift) - 1) & ~link_t(7);

block* ptr_of(link_t l) noexcept { return reinterpret_cast<block*>(l & address_mask); }
bool is_marked(link_t l) noexcept { return (l & mark_bit) != 0; }

link_t make_link(block* p, link_t version) noexcept {
  return reinterpret_cast<std::uintptr_t>(p) | ((version & 0xffff) << version_shift);
}

// the value that replaces old when the link is redirected to p
link_t bumped(link_t old, block* p) noexcept {
  return make_link(p, (old >> version_shift) + 1);
}

void check_address(const void* p) {
  if (reinterpret_cast<std::uintptr_t>(p) >> version_shift)
    throw std::runtime_error("stamp list block outside the 48-bit address range");
}

}  // namespace

stamp_list::stamp_list() {
  check_address(&head_);
  check_address(&tail_);
  head_.prev.store(make_link(&tail_, 0), std::memory_order_relaxed);
  tail_.next.store(make_link(&head_, 0), std::memory_order_relaxed);
  head_.linked.store(true, std::memory_order_relaxed);
  tail_.linked.store(true, std::memory_order_relaxed);
}

void stamp_list::raise_tail(std::uint64_t v) noexcept {
  std::uint64_t t = tail_.stamp.load(std::memory_order_relaxed);
  while (t < v && !tail_.stamp.compare_exchange_weak(t, v, std::memory_order_seq_cst,
                                                      std::memory_order_relaxed)) {
  }
}

std::uint64_t stamp_list::push(block& b, counters& c) {
  c.push_calls.add();
  b.next.store(bumped(b.next.load(std::memory_order_relaxed), &head_),
               std::memory_order_relaxed);

  // (1) - the stamp is taken after head_.prev was read; a successful CAS
  // then proves no block was inserted in between, so stamps decrease along
  // the prev chain
  link_t hp = head_.prev.load(std::memory_order_seq_cst);
  std::uint64_t stamp;
  std::uint64_t iters = 0;
  for (;;) {
    ++iters;
    stamp = head_.stamp.fetch_add(1, std::memory_order_seq_cst);
    b.stamp.store(stamp, std::memory_order_relaxed);
    b.prev.store(bumped(b.prev.load(std::memory_order_relaxed), ptr_of(hp)),
                 std::memory_order_release);
    if (head_.prev.compare_exchange_strong(hp, bumped(hp, &b), std::memory_order_seq_cst,
                                           std::memory_order_seq_cst))
      break;
  }
  c.push_iterations.add(iters);
  b.linked.store(true, std::memory_order_release);

  block* w = ptr_of(hp);
  link_t wn = w->next.load(std::memory_order_acquire);
  if (!is_marked(wn) && ptr_of(wn) != &b)
    w->next.compare_exchange_strong(wn, bumped(wn, &b), std::memory_order_acq_rel,
                                    std::memory_order_relaxed);
  return stamp;
}

// Finds the block whose prev link points to x. Returns {nullptr, 0} if x is
// no longer in the chain.
std::pair<block*, link_t> stamp_list::find_newer(block* x, std::uint64_t& iters) {
  // the next hint is usable if its target is linked and still points back
  block* h = ptr_of(x->next.load(std::memory_order_acquire));
  if (h) {
    link_t hp = h->prev.load(std::memory_order_acquire);
    if (ptr_of(hp) == x && !is_marked(hp) &&
        (h == &head_ || h->linked.load(std::memory_order_acquire)))
      return {h, hp};
  }

  const std::uint64_t xs = x->stamp.load(std::memory_order_relaxed);
restart:
  block* cur = &head_;
  link_t cl = head_.prev.load(std::memory_order_seq_cst);
  for (;;) {
    block* c = ptr_of(cl);
    if (c == x) return {cur, cl};
    if (c == &tail_) return {nullptr, 0};
    if (is_marked(cl)) {
      help_remove(cur, iters);
      goto restart;
    }
    const std::uint64_t cs = c->stamp.load(std::memory_order_acquire);
    const link_t nl = c->prev.load(std::memory_order_acquire);
    // cur unchanged means c was its older neighbour while cs and nl were read
    if (cur->prev.load(std::memory_order_acquire) != cl) goto restart;
    // everything past c is older than x, so x is gone
    if (cs < xs) return {nullptr, 0};
    cur = c;
    cl = nl;
  }
}

// Makes sure the marked block x is no longer in the prev chain. Returns the
// newer neighbour if this call unlinked x, nullptr otherwise.
block* stamp_list::unlink(block* x, std::uint64_t& iters) {
  for (;;) {
    ++iters;
    auto [n, np] = find_newer(x, iters);
    if (!n) return nullptr;
    if (is_marked(np)) {
      // n is leaving too and its prev is frozen at x; it has to go first
      help_remove(n, iters);
      continue;
    }
    block* o = ptr_of(x->prev.load(std::memory_order_acquire));
    std::uint64_t h0 = 0;
    std::uint64_t ns = 0;
    if (o == &tail_) {
      // (2) - h0 is read before the CAS; any block that reads head_.prev
      // after the list became empty takes a stamp of at least h0
      h0 = head_.stamp.load(std::memory_order_seq_cst);
      if (n != &head_) ns = n->stamp.load(std::memory_order_acquire);
    }
    if (n->prev.compare_exchange_strong(np, bumped(np, o), std::memory_order_seq_cst,
                                        std::memory_order_seq_cst)) {
      if (o == &tail_) raise_tail(n == &head_ ? h0 : ns);
      return n;
    }
  }
}

void stamp_list::help_remove(block* x, std::uint64_t& iters) {
  block* n = unlink(x, iters);
  if (!n) return;
  block* o = ptr_of(x->prev.load(std::memory_order_acquire));
  link_t on = o->next.load(std::memory_order_acquire);
  if (!is_marked(on) && ptr_of(on) == x)
    o->next.compare_exchange_strong(on, bumped(on, n), std::memory_order_acq_rel,
                                    std::memory_order_relaxed);
}

bool stamp_list::remove(block& b, counters& c) {
  c.remove_calls.add();
  // (3) - marking freezes prev; from here on nobody redirects it
  block* o = ptr_of(b.prev.fetch_or(mark_bit, std::memory_order_acq_rel));
  b.next.fetch_or(mark_bit, std::memory_order_acq_rel);

  std::uint64_t prev_iters = 0;
  block* n = unlink(&b, prev_iters);
  c.remove_prev_iterations.add(prev_iters);

  std::uint64_t next_iters = 0;
  for (;;) {
    ++next_iters;
    link_t on = o->next.load(std::memory_order_acquire);
    if (!n || is_marked(on) || ptr_of(on) != &b) break;
    if (o->next.compare_exchange_strong(on, bumped(on, n), std::memory_order_acq_rel,
                                        std::memory_order_relaxed))
      break;
  }
  c.remove_next_iterations.add(next_iters);

  b.linked.store(false, std::memory_order_release);
  return o == &tail_;
}

std::vector<std::uint64_t> stamp_list::stamps() const {
  std::vector<std::uint64_t> out;
  for (block* b = ptr_of(head_.prev.load()); b && b != &tail_; b = ptr_of(b->prev.load()))
    out.push_back(b->stamp.load());
  return out;
}

std::vector<std::uint64_t> stamp_list::stamps_by_next() const {
  std::vector<std::uint64_t> out;
  for (block* b = ptr_of(tail_.next.load()); b && b != &head_; b = ptr_of(b->next.load()))
    out.push_back(b->stamp.load());
  return out;
}

stamp_it::stamp_it(stamp_it_config cfg) : cfg_(cfg) { set_quarantine(cfg.quarantine); }

stamp_it::~stamp_it() { drain(); }

stamp_it::record* stamp_it::attach_record() {
  record* r = acquire_record();
  check_address(&r->block);
  return r;
}

void stamp_it::detach_record(record& r) {
  assert(r.region_depth == 0);
  donate(r);
  reclaim_global(r);
  release_record(r);
}

void stamp_it::drain() {
  reclaim_chains_detached(global_.steal());
  registry_.for_each([&](record& r) {
    if (!r.in_use.load(std::memory_order_acquire)) reclaim_chain_detached(r.local.steal());
  });
}

void stamp_it::on_enter(record& r) { r.stamp = list_.push(r.block, r.ctr); }

void stamp_it::on_leave(record& r) {
  const bool last = list_.remove(r.block, r.ctr);
  reclaim_local(r);
  if (last)
    reclaim_global(r);
  else if (r.local.size() > cfg_.donation_threshold)
    donate(r);
}

void stamp_it::retire(record& r, retired_node* n) {
  n->tag = list_.highest_stamp();
  r.local.push_back(n);
  r.ctr.retired.add();
  if (r.local.size() > cfg_.local_threshold) reclaim_local(r);
}

void stamp_it::reclaim_local(record& r) {
  const std::uint64_t lowest = list_.lowest_stamp();
  while (!r.local.empty() && r.local.front()->tag <= lowest) reclaim_node(r, r.local.pop_front());
}

void stamp_it::donate(record& r) {
  if (!r.local.empty()) global_.push(r.local.steal());
}

std::size_t stamp_it::reclaim_global(record& r) {
  std::size_t visited = 0;
  for (;;) {
    retired_node* chains = global_.steal();
    if (!chains) break;
    const std::uint64_t lowest = list_.lowest_stamp();
    retired_node* keep = nullptr;
    while (chains) {
      retired_node* next_chain = chains->next_chunk;
      retired_node* n = chains;
      // each sublist is sorted by tag, so only a prefix can be reclaimed
      while (n) {
        ++visited;
        if (n->tag > lowest) break;
        retired_node* next = n->next;
        reclaim_node(r, n);
        n = next;
      }
      if (n) {
        n->next_chunk = keep;
        keep = n;
      }
      chains = next_chain;
    }
    global_.push_all(keep);
    if (list_.lowest_stamp() == lowest) break;
  }
  r.global_visits += visited;
  return visited;
}

}  // namespace smr
