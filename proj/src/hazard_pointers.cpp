#include "smr/hazard_pointers.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace smr {

hazard_pointers::hazard_pointers(hazard_pointers_config cfg) : cfg_(cfg) {
  if (cfg_.slots == 0) throw std::invalid_argument("hazard_pointers: need at least one slot");
  set_quarantine(cfg.quarantine);
}

hazard_pointers::~hazard_pointers() { drain(); }

void hazard_pointers::add_block(record& r, std::size_t n) {
  auto* b = new hp_slot_block(n);
  if (r.last)
    r.last->next.store(b, std::memory_order_release);
  else
    r.first = b;
  r.last = b;
  for (std::size_t i = n; i-- > 0;) r.free_slots.push_back(&(*b)[i]);
  r.total_slots += n;
}

hazard_pointers::record* hazard_pointers::attach_record() {
  record* r = acquire_record();
  if (!r->first) add_block(*r, cfg_.slots);
  total_slots_.fetch_add(r->total_slots, std::memory_order_relaxed);
  return r;
}

void hazard_pointers::detach_record(record& r) {
  assert(r.free_slots.size() == r.total_slots);
  if (!r.retired.empty()) scan(r);
  if (!r.retired.empty()) orphans_.push(r.retired.steal());
  total_slots_.fetch_sub(r.total_slots, std::memory_order_relaxed);
  release_record(r);
}

void hazard_pointers::drain() { reclaim_chains_detached(orphans_.steal()); }

std::size_t hazard_pointers::slot_blocks(const record& r) const noexcept {
  std::size_t n = 0;
  for (hp_slot_block* b = r.first; b; b = b->next.load(std::memory_order_relaxed)) ++n;
  return n;
}

hazard_slot* hazard_pointers::alloc_slot(record& r) {
  if (r.free_slots.empty()) {
    if (!cfg_.dynamic) throw std::logic_error("hazard_pointers: all hazard slots in use");
    const std::size_t grow = r.total_slots;
    add_block(r, grow);
    total_slots_.fetch_add(grow, std::memory_order_relaxed);
  }
  hazard_slot* s = r.free_slots.back();
  r.free_slots.pop_back();
  return s;
}

void hazard_pointers::free_slot(record& r, hazard_slot* s) noexcept { r.free_slots.push_back(s); }

void hazard_pointers::retire(record& r, retired_node* n) {
  r.retired.push_back(n);
  r.ctr.retired.add();
  if (r.retired.size() >= threshold()) scan(r);
}

std::size_t hazard_pointers::scan(record& r) {
  // adopt the lists left behind by threads that deregistered; this happens
  // before the fence so every adopted node was unlinked before the snapshot
  for (retired_node* chain = orphans_.steal(); chain;) {
    retired_node* next_chain = chain->next_chunk;
    for (retired_node* n = chain; n;) {
      retired_node* next = n->next;
      r.retired.push_back(n);
      n = next;
    }
    chain = next_chain;
  }

  // (2) - pairs with the fence in protect: either the protecting thread
  // sees the node unlinked on its re-read, or we see its hazard
  std::atomic_thread_fence(std::memory_order_seq_cst);

  auto& hz = r.scratch;
  hz.clear();
  registry_.for_each([&](const record& other) {
    for (hp_slot_block* b = other.first; b; b = b->next.load(std::memory_order_acquire)) {
      for (std::size_t i = 0; i < b->size; ++i) {
        if (retired_node* p = (*b)[i].load(std::memory_order_acquire)) hz.push_back(p);
      }
    }
  });
  std::sort(hz.begin(), hz.end());

  retired_list keep;
  std::size_t reclaimed = 0;
  while (!r.retired.empty()) {
    retired_node* n = r.retired.pop_front();
    if (std::binary_search(hz.begin(), hz.end(), n)) {
      keep.push_back(n);
    } else {
      reclaim_node(r, n);
      ++reclaimed;
    }
  }
  r.retired.append(keep);
  return reclaimed;
}

}  // namespace smr
