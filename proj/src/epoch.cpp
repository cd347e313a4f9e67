#include "smr/epoch.hpp"

#include <algorithm>
#include <cassert>

namespace smr {

epoch_domain::epoch_domain(epoch_config cfg) : cfg_(cfg) {
  if (cfg_.advance_interval == 0) cfg_.advance_interval = 1;
  set_quarantine(cfg.quarantine);
}

epoch_domain::~epoch_domain() { drain(); }

const char* epoch_domain::name() const noexcept {
  switch (cfg_.mode) {
    case epoch_mode::er:
      return "er";
    case epoch_mode::ner:
      return "ner";
    case epoch_mode::qsr:
      return "qsr";
  }
  return "?";
}

epoch_domain::record* epoch_domain::attach_record() {
  record* r = acquire_record();
  const std::uint64_t g = global_.load(std::memory_order_acquire);
  r->local_epoch = g;
  r->entries = 0;
  r->state.store(cfg_.mode == epoch_mode::qsr ? g : g << 1, std::memory_order_release);
  return r;
}

void epoch_domain::detach_record(record& r) {
  assert(r.region_depth == 0);
  const std::uint64_t g = global_.load(std::memory_order_acquire);
  if (cfg_.mode == epoch_mode::qsr) {
    reclaim_batches(r, g);
    for (auto& b : r.batch)
      if (!b.empty()) orphans_.push(b.steal());
  } else {
    reclaim_limbo(r, g);
    for (auto& l : r.limbo)
      if (!l.empty()) orphans_.push(l.steal());
  }
  release_record(r);
}

void epoch_domain::drain() { reclaim_chains_detached(orphans_.steal()); }

std::size_t epoch_domain::pending(const record& r) const noexcept {
  std::size_t n = 0;
  for (auto& l : r.limbo) n += l.size();
  for (auto& b : r.batch) n += b.size();
  return n;
}

void epoch_domain::on_enter(record& r) {
  if (cfg_.mode == epoch_mode::qsr) return;
  std::uint64_t e = global_.load(std::memory_order_relaxed);
  for (;;) {
    r.state.store(e << 1 | 1, std::memory_order_relaxed);
    // (1) - the active flag must be visible before we read shared nodes;
    // pairs with the fence in try_advance
    std::atomic_thread_fence(std::memory_order_seq_cst);
    r.ctr.enter_fences.add();
    const std::uint64_t again = global_.load(std::memory_order_relaxed);
    if (again == e) break;
    e = again;
  }
  if (e != r.local_epoch) {
    r.local_epoch = e;
    reclaim_limbo(r, e);
  }
  if (++r.entries >= cfg_.advance_interval) {
    r.entries = 0;
    try_advance(r);
  }
}

void epoch_domain::on_leave(record& r) {
  if (cfg_.mode == epoch_mode::qsr) {
    quiescent(r);
    return;
  }
  r.state.store(r.local_epoch << 1, std::memory_order_release);
}

bool epoch_domain::try_advance(record& r) {
  std::atomic_thread_fence(std::memory_order_seq_cst);
  std::uint64_t g = global_.load(std::memory_order_relaxed);
  bool all_current = true;
  registry_.for_each([&](const record& o) {
    const std::uint64_t s = o.state.load(std::memory_order_acquire);
    if ((s & 1) && (s >> 1) != g) all_current = false;
  });
  if (!all_current) return false;
  if (!global_.compare_exchange_strong(g, g + 1, std::memory_order_seq_cst)) return false;
  reclaim_limbo(r, g + 1);
  process_orphans(r, g + 1);
  return true;
}

void epoch_domain::retire(record& r, retired_node* n) {
  const std::uint64_t e = global_.load(std::memory_order_seq_cst);
  n->tag = e;
  r.ctr.retired.add();
  if (cfg_.mode == epoch_mode::qsr) {
    r.batch[0].push_back(n);
    r.batch_round[0] = std::max(r.batch_round[0], e);
    return;
  }
  const std::size_t i = e % 3;
  if (r.limbo_epoch[i] != e) {
    // the list still holds nodes from epoch e - 3 or earlier
    assert(r.limbo[i].empty() || r.limbo_epoch[i] + 3 <= e);
    while (!r.limbo[i].empty()) reclaim_node(r, r.limbo[i].pop_front());
    r.limbo_epoch[i] = e;
  }
  r.limbo[i].push_back(n);
}

void epoch_domain::reclaim_limbo(record& r, std::uint64_t global) {
  for (std::size_t i = 0; i < 3; ++i) {
    if (r.limbo[i].empty() || r.limbo_epoch[i] + 2 > global) continue;
    while (!r.limbo[i].empty()) reclaim_node(r, r.limbo[i].pop_front());
  }
}

void epoch_domain::quiescent(record& r) {
  std::uint64_t g = global_.load(std::memory_order_seq_cst);
  r.state.store(g, std::memory_order_release);
  // (2) - the next region must observe every unlink that preceded the round
  // we just announced
  std::atomic_thread_fence(std::memory_order_seq_cst);
  bool all_seen = true;
  registry_.for_each([&](const record& o) {
    if (o.in_use.load(std::memory_order_acquire) && o.state.load(std::memory_order_acquire) < g)
      all_seen = false;
  });
  if (all_seen && global_.compare_exchange_strong(g, g + 1, std::memory_order_seq_cst))
    process_orphans(r, g + 1);
  reclaim_batches(r, global_.load(std::memory_order_acquire));
}

void epoch_domain::reclaim_batches(record& r, std::uint64_t round) {
  for (std::size_t i = 0; i < 2; ++i) {
    if (r.batch[i].empty() || r.batch_round[i] + 2 > round) continue;
    while (!r.batch[i].empty()) reclaim_node(r, r.batch[i].pop_front());
  }
  if (r.batch[1].empty() && !r.batch[0].empty()) {
    r.batch[1].append(r.batch[0]);
    r.batch_round[1] = r.batch_round[0];
    r.batch_round[0] = 0;
  }
}

void epoch_domain::process_orphans(record& r, std::uint64_t global) {
  retired_node* chains = orphans_.steal();
  if (!chains) return;
  retired_list keep;
  while (chains) {
    retired_node* next_chain = chains->next_chunk;
    for (retired_node* n = chains; n;) {
      retired_node* next = n->next;
      if (n->tag + 2 <= global)
        reclaim_node(r, n);
      else
        keep.push_back(n);
      n = next;
    }
    chains = next_chain;
  }
  if (!keep.empty()) orphans_.push(keep.steal());
}

}  // namespace smr
