#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <thread>
#include <type_traits>
#include <vector>

#include "smr/ds/hash_map.hpp"
#include "smr/ds/hm_list.hpp"
#include "smr/ds/ms_queue.hpp"
#include "smr/smr.hpp"
#include "support/canary.hpp"

// Workloads shared by the unit tests and the acceptance binary. Sizes are
// parameters so the unit tests can run them small and the acceptance
// binary at full size.
namespace support {

// Gives a scheme the chance to reclaim outside its usual trigger points.
// idle tells whether h holds no guard and no region.
template <class D>
void poke(D& d, smr::thread_handle<D>& h, bool idle) {
  if constexpr (std::is_same_v<D, smr::hazard_pointers>) {
    d.scan(h.record());
  } else if constexpr (std::is_same_v<D, smr::stamp_it>) {
    d.reclaim_local(h.record());
  } else if constexpr (std::is_same_v<D, smr::epoch_domain>) {
    if (d.mode() == smr::epoch_mode::qsr) {
      if (idle) d.quiescent(h.record());
    } else {
      d.try_advance(h.record());
    }
  } else {
    (void)d, (void)h, (void)idle;
  }
}

// ---------------------------------------------------------------------------
// Figure 1 replay

struct fig1_result {
  std::array<std::uint64_t, 3> stamps{};
  std::array<std::uint64_t, 2> tags{};
  std::array<bool, 3> was_last{};  // observed at T2's, T1's and T3's leave
  int n1_reclaimed_at = -1;
  int n2_reclaimed_at = -1;
  double seconds = 0;

  bool matches() const {
    return stamps == std::array<std::uint64_t, 3>{0, 1, 2} &&
           tags == std::array<std::uint64_t, 2>{2, 3} && n1_reclaimed_at == 7 &&
           n2_reclaimed_at == 8;
  }
};

inline fig1_result replay_fig1() {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  fig1_result res;
  int now = 0;

  struct item {
    item(int* now, int* at) : now(now), at(at) {}
    ~item() { *at = *now; }
    int* now;
    int* at;
  };

  smr::stamp_it_config cfg;
  // T2 leaves while T1 is still inside; its retire list has to reach the
  // shared list for T3 to reclaim n2
  cfg.donation_threshold = 0;
  smr::stamp_it d(cfg);
  auto t1 = d.register_thread();
  auto t2 = d.register_thread();
  auto t3 = d.register_thread();
  using region = smr::region_guard<smr::stamp_it>;
  std::optional<region> r1, r2, r3;

  auto retire = [&](smr::thread_handle<smr::stamp_it>& h, int* at) {
    auto g = smr::make_guarded<item, smr::stamp_it>(h, &now, at);
    smr::retired_node* hdr = smr::stamp_it::header_of(g.get());
    g.retire();
    return hdr->tag;
  };
  auto leave = [&](std::optional<region>& r, smr::thread_handle<smr::stamp_it>& h) {
    const auto before = h.record().ctr.remove_calls.get();
    // the stamp of the oldest thread is the tail's stamp before we leave
    const bool oldest = d.list().stamps().back() == h.record().stamp;
    r.reset();
    (void)before;
    return oldest;
  };

  now = 1;
  r1.emplace(t1);
  res.stamps[0] = t1.record().stamp;
  now = 2;
  r2.emplace(t2);
  res.stamps[1] = t2.record().stamp;
  now = 3;
  res.tags[0] = retire(t1, &res.n1_reclaimed_at);
  now = 4;
  r3.emplace(t3);
  res.stamps[2] = t3.record().stamp;
  now = 5;
  res.tags[1] = retire(t2, &res.n2_reclaimed_at);
  now = 6;
  res.was_last[0] = leave(r2, t2);
  now = 7;
  res.was_last[1] = leave(r1, t1);
  now = 8;
  res.was_last[2] = leave(r3, t3);
  res.seconds = std::chrono::duration<double>(clock::now() - start).count();
  return res;
}

// ---------------------------------------------------------------------------
// Canary stress: many threads hammer a structure whose keys poison
// themselves when reclaimed.

struct stress_result {
  std::uint64_t violations = 0;
  std::uint64_t operations = 0;
  std::uint64_t unreclaimed_after_drain = 0;
  double seconds = 0;
};

template <class Scheme, class Body>
stress_result run_stress(std::size_t threads, std::size_t ops_per_thread, std::uint64_t seed,
                         std::size_t quarantine, Body&& body) {
  using D = typename Scheme::domain;
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t before = canary_violations().load();
  auto d = Scheme::make(quarantine);
  std::atomic<std::uint64_t> ops{0};
  body(*d, threads, ops_per_thread, seed, ops);
  d->drain();
  stress_result r;
  r.violations = canary_violations().load() - before;
  r.operations = ops.load();
  r.unreclaimed_after_drain = d->totals().unreclaimed();
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  (void)sizeof(D);
  return r;
}

template <class D, class F>
void spawn(D& d, std::size_t threads, F&& f) {
  std::vector<std::thread> ts;
  for (std::size_t t = 0; t < threads; ++t)
    ts.emplace_back([&, t] {
      auto h = d.register_thread();
      f(h, t);
    });
  for (auto& t : ts) t.join();
}

template <class Scheme>
stress_result queue_canary_stress(std::size_t threads, std::size_t ops_per_thread,
                                  std::uint64_t seed, std::size_t quarantine = 64) {
  using D = typename Scheme::domain;
  return run_stress<Scheme>(
      threads, ops_per_thread, seed, quarantine,
      [](D& d, std::size_t p, std::size_t n, std::uint64_t s, std::atomic<std::uint64_t>& ops) {
        std::optional<smr::ds::ms_queue<canary, D>> q;
        {
          auto h = d.register_thread();
          q.emplace(h);
          for (int i = 0; i < 64; ++i) q->push(h, canary(i));
        }
        spawn(d, p, [&](smr::thread_handle<D>& h, std::size_t t) {
          std::mt19937_64 rng(s ^ t);
          std::optional<smr::region_guard<D>> region;
          for (std::size_t i = 0; i < n; ++i) {
            if (i % 100 == 0) {
              region.reset();
              region.emplace(h);
            }
            if (rng() & 1) {
              q->push(h, canary(rng()));
            } else if (auto v = q->try_pop(h)) {
              (void)v->value();
            }
          }
          region.reset();
          ops.fetch_add(n);
        });
        auto h = d.register_thread();
        while (q->try_pop(h)) {
        }
        q.reset();
      });
}

template <class Scheme>
stress_result list_canary_stress(std::size_t threads, std::size_t ops_per_thread,
                                 std::uint64_t seed, std::size_t quarantine = 64) {
  using D = typename Scheme::domain;
  return run_stress<Scheme>(
      threads, ops_per_thread, seed, quarantine,
      [](D& d, std::size_t p, std::size_t n, std::uint64_t s, std::atomic<std::uint64_t>& ops) {
        constexpr std::uint64_t key_range = 64;
        auto set = std::make_unique<smr::ds::list_set<canary, D>>();
        spawn(d, p, [&](smr::thread_handle<D>& h, std::size_t t) {
          std::mt19937_64 rng(s ^ t);
          std::optional<smr::region_guard<D>> region;
          for (std::size_t i = 0; i < n; ++i) {
            if (i % 100 == 0) {
              region.reset();
              region.emplace(h);
            }
            const canary key(rng() % key_range);
            switch (rng() % 3) {
              case 0:
                set->insert(h, key);
                break;
              case 1:
                set->remove(h, key);
                break;
              default:
                set->contains(h, key);
            }
          }
          region.reset();
          ops.fetch_add(n);
        });
        auto h = d.register_thread();
        for (std::uint64_t k = 0; k < key_range; ++k) set->remove(h, canary(k));
        h.release();
        set.reset();
      });
}

template <class Scheme>
stress_result map_canary_stress(std::size_t threads, std::size_t ops_per_thread,
                                std::uint64_t seed, std::size_t quarantine = 64) {
  using D = typename Scheme::domain;
  return run_stress<Scheme>(
      threads, ops_per_thread, seed, quarantine,
      [](D& d, std::size_t p, std::size_t n, std::uint64_t s, std::atomic<std::uint64_t>& ops) {
        constexpr std::uint64_t key_space = 300, max_entries = 100;
        std::optional<smr::ds::hash_map<canary, canary, D>> map;
        {
          auto h = d.register_thread();
          map.emplace(h, 64);
        }
        spawn(d, p, [&](smr::thread_handle<D>& h, std::size_t t) {
          std::mt19937_64 rng(s ^ t);
          std::optional<smr::region_guard<D>> region;
          for (std::size_t i = 0; i < n; ++i) {
            if (i % 100 == 0) {
              region.reset();
              region.emplace(h);
            }
            const std::uint64_t k = rng() % key_space;
            {
              auto [g, inserted] =
                  map->get_or_insert(h, canary(k), [&] { return canary(k * 7); });
              if (g->value.value() != k * 7) canary_violations().fetch_add(1);
            }
            if (auto g = map->find(h, canary(rng() % key_space)); g) (void)g->value.value();
            map->evict_fifo(h, max_entries);
          }
          region.reset();
          ops.fetch_add(n);
        });
        auto h = d.register_thread();
        map->evict_fifo(h, 0);
        h.release();
        map.reset();
      });
}

// ---------------------------------------------------------------------------
// Scripted interleavings: two handles driven from one OS thread execute
// every interleaving of two short scripts over {enter, retire, leave}.

enum class step { enter, retire, leave };

struct interleaving_result {
  std::uint64_t runs = 0;
  std::uint64_t violations = 0;      // guarded node found poisoned
  std::uint64_t double_destroys = 0;
  std::uint64_t leaks = 0;           // nodes never destroyed
};

template <class Scheme>
class scripted_run {
  using D = typename Scheme::domain;
  using handle = smr::thread_handle<D>;

  struct tracked {
    tracked(std::size_t id, std::vector<int>* destroyed) : id(id), destroyed(destroyed) {}
    ~tracked() {
      tag.store(poison_pattern, std::memory_order_relaxed);
      ++(*destroyed)[id];
    }
    bool healthy() const { return tag.load(std::memory_order_relaxed) == alive_pattern; }
    std::size_t id;
    std::vector<int>* destroyed;
    std::atomic<std::uint64_t> tag{alive_pattern};
  };
  using link = typename D::template link<tracked, 1>;
  using guard = smr::guard_ptr<tracked, D, 1>;

  struct actor {
    explicit actor(D& d) : h(d.register_thread()), g(h) {}
    handle h;
    guard g;
    std::optional<smr::region_guard<D>> region;
    bool idle() const { return !g && !region; }
  };

 public:
  explicit scripted_run(std::size_t max_nodes) : destroyed_(max_nodes, 0), d_(Scheme::make(0)) {
    a_.emplace_back(std::make_unique<actor>(*d_));
    a_.emplace_back(std::make_unique<actor>(*d_));
    install(*a_[0]);
  }

  void run(std::size_t who, step s) {
    actor& x = *a_[who];
    switch (s) {
      case step::enter:
        if (!x.region) x.region.emplace(x.h);
        x.g.acquire(cell_);
        break;
      case step::retire: {
        guard old(x.h);
        old.acquire(cell_);
        auto n = smr::make_guarded<tracked, D, 1>(x.h, created_++, &destroyed_);
        auto expected = old.marked_get();
        if (cell_.compare_exchange_strong(expected, n.marked_get())) old.retire();
        break;
      }
      case step::leave:
        x.g.reset();
        x.region.reset();
        break;
    }
    for (auto& y : a_) poke(*d_, y->h, y->idle());
  }

  // Number of guards that observed a poisoned node.
  std::uint64_t check() const {
    std::uint64_t bad = 0;
    for (auto& y : a_)
      if (y->g && !y->g->healthy()) ++bad;
    return bad;
  }

  void finish(interleaving_result& res) {
    for (auto& y : a_) {
      y->g.reset();
      y->region.reset();
    }
    {
      guard old(a_[0]->h);
      old.acquire(cell_);
      auto expected = old.marked_get();
      if (cell_.compare_exchange_strong(expected, {})) old.retire();
    }
    a_.clear();
    d_.reset();
    for (std::size_t i = 0; i < created_; ++i) {
      if (destroyed_[i] > 1) ++res.double_destroys;
      if (destroyed_[i] == 0) ++res.leaks;
    }
  }

 private:
  void install(actor& x) {
    auto n = smr::make_guarded<tracked, D, 1>(x.h, created_++, &destroyed_);
    cell_.store(n.marked_get());
    n.reset();
  }

  std::vector<int> destroyed_;
  std::size_t created_ = 0;
  std::unique_ptr<D> d_;
  link cell_;
  std::vector<std::unique_ptr<actor>> a_;
};

// Runs every pair of scripts of length len and every interleaving of each
// pair.
template <class Scheme>
interleaving_result exhaustive_interleavings(std::size_t len = 3) {
  interleaving_result res;
  std::vector<std::vector<step>> scripts{{}};
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<std::vector<step>> next;
    for (auto& s : scripts)
      for (step x : {step::enter, step::retire, step::leave}) {
        next.push_back(s);
        next.back().push_back(x);
      }
    scripts = std::move(next);
  }
  // interleavings as bit masks with len bits set among 2*len positions
  std::vector<unsigned> masks;
  for (unsigned m = 0; m < (1u << (2 * len)); ++m)
    if (static_cast<std::size_t>(__builtin_popcount(m)) == len) masks.push_back(m);

  for (auto& sa : scripts)
    for (auto& sb : scripts)
      for (unsigned m : masks) {
        scripted_run<Scheme> run(4 * len + 2);
        std::size_t ia = 0, ib = 0;
        for (std::size_t pos = 0; pos < 2 * len; ++pos) {
          if (m & (1u << pos))
            run.run(1, sb[ib++]);
          else
            run.run(0, sa[ia++]);
          res.violations += run.check();
        }
        run.finish(res);
        ++res.runs;
      }
  return res;
}

// ---------------------------------------------------------------------------
// Hazard pointer bound: one thread stops while holding two hazard pointers
// and a partly filled retire list; the others keep retiring and then leave.

struct hp_bound_result {
  std::size_t attributable = 0;   // frozen thread's retired nodes + nodes it blocks
  std::size_t frozen_retired = 0;
  std::size_t blocked = 0;
  std::size_t threshold = 0;      // R with all four threads registered
  std::size_t bound = 0;          // k + R
  std::size_t max_frozen_retired = 0;
};

inline hp_bound_result hp_bound_trial(std::uint64_t seed, std::size_t ops_per_worker,
                                      std::size_t workers = 3) {
  struct node {
    explicit node(std::uint64_t v) : v(v) {}
    std::uint64_t v;
  };
  using D = smr::hazard_pointers;
  using link = D::link<node, 1>;
  using guard = smr::guard_ptr<node, D, 1>;
  constexpr std::size_t cells = 16;

  D d;  // k = 2, static
  hp_bound_result res;
  std::array<link, cells> cell;
  auto frozen = d.register_thread();
  for (auto& c : cell) {
    auto n = smr::make_guarded<node, D, 1>(frozen, 0);
    c.store(n.marked_get());
    n.reset();
  }

  auto replace = [&](smr::thread_handle<D>& h, std::mt19937_64& rng) {
    guard old(h);
    link& c = cell[rng() % cells];
    for (;;) {
      auto cur = old.acquire(c);
      auto n = smr::make_guarded<node, D, 1>(h, rng());
      if (c.compare_exchange_strong(cur, n.marked_get())) {
        n.reset();
        old.retire();
        return;
      }
      n.discard();
    }
  };

  std::mt19937_64 rng(seed);
  std::vector<std::thread> ts;
  std::atomic<int> registered{0};
  std::atomic<bool> go{false};
  for (std::size_t t = 0; t < workers; ++t)
    ts.emplace_back([&, t] {
      auto h = d.register_thread();
      registered.fetch_add(1);
      while (!go.load()) std::this_thread::yield();
      std::mt19937_64 r(seed ^ (t + 1));
      for (std::size_t i = 0; i < ops_per_worker; ++i) replace(h, r);
    });
  while (registered.load() != static_cast<int>(workers)) std::this_thread::yield();
  res.threshold = d.threshold();
  res.bound = d.config().slots + res.threshold;

  // the frozen thread works for a while, then stops inside an operation
  const std::size_t warmup = rng() % (3 * res.threshold);
  for (std::size_t i = 0; i < warmup; ++i) {
    replace(frozen, rng);
    res.max_frozen_retired = std::max(res.max_frozen_retired, d.retired_count(frozen.record()));
  }
  guard a(frozen), b(frozen);
  a.acquire(cell[rng() % cells]);
  b.acquire(cell[rng() % cells]);
  go.store(true);
  for (auto& t : ts) t.join();

  res.frozen_retired = d.retired_count(frozen.record());
  res.blocked = d.orphan_count();
  res.attributable = res.frozen_retired + res.blocked;
  res.max_frozen_retired = std::max(res.max_frozen_retired, res.frozen_retired);
  a.reset();
  b.reset();
  for (auto& c : cell) {
    guard g(frozen);
    auto cur = g.acquire(c);
    if (c.compare_exchange_strong(cur, {})) g.retire();
  }
  return res;
}

// ---------------------------------------------------------------------------
// Epoch discipline: random steps of several handles; every destruction and
// every active handle's epoch is checked.

struct epoch_property_result {
  std::uint64_t steps = 0;
  std::uint64_t retired = 0;
  std::uint64_t destroyed = 0;
  std::uint64_t early = 0;         // destroyed before global >= tag + 2
  std::uint64_t guarded_destroyed = 0;
  std::uint64_t lag_violations = 0;
  std::uint64_t advances = 0;
};

struct epoch_ctx;

struct epoch_node {
  explicit epoch_node(epoch_ctx* c) : c(c) {}
  ~epoch_node();
  epoch_ctx* c;
};

struct epoch_ctx {
  smr::epoch_domain* d = nullptr;
  epoch_property_result* res = nullptr;
  std::vector<const epoch_node*> guarded;
};

inline epoch_node::~epoch_node() {
  if (!c->d) return;  // drained after every thread left
  ++c->res->destroyed;
  const std::uint64_t tag = smr::epoch_domain::header_of(this)->tag;
  if (c->d->global_epoch() < tag + 2) ++c->res->early;
  if (std::find(c->guarded.begin(), c->guarded.end(), this) != c->guarded.end())
    ++c->res->guarded_destroyed;
}

inline epoch_property_result epoch_property(std::size_t steps, std::uint64_t seed,
                                            smr::epoch_mode mode = smr::epoch_mode::er,
                                            std::size_t handles = 4) {
  using D = smr::epoch_domain;
  using node = epoch_node;
  using link = D::link<node, 1>;
  using guard = smr::guard_ptr<node, D, 1>;

  smr::epoch_config cfg;
  cfg.mode = mode;
  cfg.advance_interval = 7;
  epoch_property_result res;
  {
    D d(cfg);
    epoch_ctx c{&d, &res, {}};
    std::array<link, 4> cells;
    std::vector<smr::thread_handle<D>> hs;
    for (std::size_t i = 0; i < handles; ++i) hs.push_back(d.register_thread());
    std::vector<guard> gs;
    for (auto& h : hs) gs.emplace_back(h);
    for (auto& cell : cells) {
      auto n = smr::make_guarded<node, D, 1>(hs[0], &c);
      cell.store(n.marked_get());
      n.reset();
    }
    std::mt19937_64 rng(seed);
    // nodes guarded by everybody except handle skip
    auto refresh = [&](std::size_t skip) {
      c.guarded.clear();
      for (std::size_t j = 0; j < gs.size(); ++j)
        if (j != skip && gs[j]) c.guarded.push_back(gs[j].get());
    };
    const std::size_t none = handles;
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t i = rng() % handles;
      auto& h = hs[i];
      switch (rng() % 4) {
        case 0:
          refresh(i);
          gs[i].acquire(cells[rng() % cells.size()]);
          break;
        case 1:
          refresh(i);
          gs[i].reset();
          break;
        case 2: {
          refresh(none);
          guard old(h);
          auto& cell = cells[rng() % cells.size()];
          auto cur = old.acquire(cell);
          auto n = smr::make_guarded<node, D, 1>(h, &c);
          if (cell.compare_exchange_strong(cur, n.marked_get())) {
            n.reset();
            old.retire();
            ++res.retired;
          } else {
            n.discard();
          }
          break;
        }
        default:
          refresh(none);
          if (mode == smr::epoch_mode::qsr) {
            if (!gs[i]) d.quiescent(h.record());
          } else if (d.try_advance(h.record())) {
            ++res.advances;
          }
      }
      const std::uint64_t g = d.global_epoch();
      if (mode != smr::epoch_mode::qsr)
        for (auto& hh : hs)
          if (D::is_active(hh.record())) {
            const std::uint64_t l = D::local_epoch(hh.record());
            if (l > g || g - l > 1) ++res.lag_violations;
          }
      ++res.steps;
    }
    refresh(none);
    for (auto& g : gs) g.reset();
    c.guarded.clear();
    for (auto& cell : cells) {
      guard g(hs[0]);
      auto cur = g.acquire(cell);
      if (cell.compare_exchange_strong(cur, {})) g.retire();
    }
    gs.clear();
    hs.clear();
    c.d = nullptr;
  }
  return res;
}



// ---------------------------------------------------------------------------
// ER vs NER enter fences for n guard acquisitions inside one region_guard.

template <class D>
std::uint64_t enter_fences(D& d, std::size_t n) {
  struct node {};
  auto h = d.register_thread();
  typename D::template link<node, 1> cell;
  auto fresh = smr::make_guarded<node, D, 1>(h);
  cell.store(fresh.marked_get());
  fresh.reset();
  const auto before = h.record().ctr.enter_fences.get();
  {
    smr::region_guard<D> region(h);
    for (std::size_t i = 0; i < n; ++i) {
      smr::guard_ptr<node, D, 1> g(h);
      g.acquire(cell);
    }
  }
  const auto fences = h.record().ctr.enter_fences.get() - before;
  smr::guard_ptr<node, D, 1> g(h);
  auto cur = g.acquire(cell);
  if (cell.compare_exchange_strong(cur, {})) g.retire();
  return fences;
}

inline std::pair<std::uint64_t, std::uint64_t> er_ner_fences(std::size_t n) {
  smr::epoch_config er;
  er.mode = smr::epoch_mode::er;
  smr::epoch_config ner;
  ner.mode = smr::epoch_mode::ner;
  smr::epoch_domain a(er), b(ner);
  return {enter_fences(a, n), enter_fences(b, n)};
}

// ---------------------------------------------------------------------------
// Reference count claim under every schedule of two threads. Each atomic
// operation on the count word is a scheduling point.

class step_scheduler {
 public:
  explicit step_scheduler(std::vector<int> choices) : choices_(std::move(choices)) {}

  void begin(int tid) {
    std::unique_lock lk(m_);
    cv_.wait(lk, [&] { return started_ && turn_ == tid; });
  }

  // Called after a thread's atomic operation: hand the turn to the next
  // thread of the schedule.
  void yield(int tid) {
    std::unique_lock lk(m_);
    turn_ = next();
    cv_.notify_all();
    cv_.wait(lk, [&] { return turn_ == tid; });
  }

  void finish(int tid) {
    std::unique_lock lk(m_);
    done_[tid] = true;
    turn_ = next();
    cv_.notify_all();
  }

  void start() {
    std::unique_lock lk(m_);
    started_ = true;
    turn_ = next();
    cv_.notify_all();
  }

 private:
  int next() {
    if (done_[0] && done_[1]) return -1;
    int t = pos_ < choices_.size() ? choices_[pos_++] : 0;
    if (done_[t]) t = 1 - t;
    return t;
  }

  std::mutex m_;
  std::condition_variable cv_;
  std::vector<int> choices_;
  std::size_t pos_ = 0;
  int turn_ = -1;
  bool started_ = false;
  bool done_[2] = {false, false};
};

// std::atomic-like count word whose every operation is a scheduling point.
class scheduled_word {
 public:
  scheduled_word(std::uint64_t v, step_scheduler& s) : v_(v), s_(&s) {}

  std::uint64_t fetch_add(std::uint64_t d, std::memory_order) {
    const auto old = v_;
    v_ += d;
    after();
    return old;
  }
  std::uint64_t fetch_sub(std::uint64_t d, std::memory_order) {
    const auto old = v_;
    if (smr::rc::count(old) == 0) ++underflows;
    v_ -= d;
    after();
    return old;
  }
  bool compare_exchange_strong(std::uint64_t& expected, std::uint64_t desired,
                               std::memory_order, std::memory_order) {
    const bool ok = v_ == expected;
    if (ok)
      v_ = desired;
    else
      expected = v_;
    after();
    return ok;
  }
  std::uint64_t load() const { return v_; }

  static thread_local int tid;
  int underflows = 0;

 private:
  void after() { s_->yield(tid); }
  std::uint64_t v_;
  step_scheduler* s_;
};
inline thread_local int scheduled_word::tid = 0;

struct claim_result {
  std::uint64_t schedules = 0;
  std::uint64_t exactly_one = 0;
  std::uint64_t bad_final_word = 0;
  std::uint64_t underflows = 0;
};

// scenario 0: two owners release the last two references.
// scenario 1: the owner releases while a reader takes and drops a
//             transient reference.
// scenario 2: like 1, but both start with a reference and the reader's
//             transient reference overlaps its own release.
inline claim_result exhaustive_claims(int scenario, std::size_t depth = 8) {
  using program = std::function<int(scheduled_word&)>;  // returns claims
  auto release = [](scheduled_word& w) { return smr::rc::release(w) ? 1 : 0; };
  std::uint64_t initial = 0;
  program p0, p1;
  switch (scenario) {
    case 0:
      initial = 2;
      p0 = release;
      p1 = release;
      break;
    case 1:
      initial = 1;
      p0 = release;
      p1 = [&](scheduled_word& w) {
        smr::rc::add_ref(w);
        return release(w);
      };
      break;
    default:
      initial = 2;
      p0 = release;
      p1 = [&](scheduled_word& w) {
        smr::rc::add_ref(w);
        int c = release(w);
        return c + release(w);
      };
  }
  claim_result res;
  for (unsigned bits = 0; bits < (1u << depth); ++bits) {
    std::vector<int> choices;
    for (std::size_t i = 0; i < depth; ++i) choices.push_back((bits >> i) & 1);
    step_scheduler s(choices);
    scheduled_word w(initial, s);
    int claims[2] = {0, 0};
    auto body = [&](int tid, program& p) {
      scheduled_word::tid = tid;
      s.begin(tid);
      claims[tid] = p(w);
      s.finish(tid);
    };
    std::thread a(body, 0, std::ref(p0));
    std::thread b(body, 1, std::ref(p1));
    s.start();
    a.join();
    b.join();
    ++res.schedules;
    if (claims[0] + claims[1] == 1) ++res.exactly_one;
    if (w.load() != smr::rc::claim_bit) ++res.bad_final_word;
    res.underflows += w.underflows;
  }
  return res;
}

// Random concurrent operations on reference counted structures, followed by
// an audit of every node's count against the links that reference it.
struct rc_audit_result {
  std::uint64_t operations = 0;
  std::uint64_t miscounted = 0;
  std::uint64_t claimed_but_linked = 0;
  std::uint64_t leaked = 0;  // retired - reclaimed after the structures are gone
  std::uint64_t underflows = 0;  // releases of a node without references
};

inline rc_audit_result lfrc_random_audit(std::size_t threads, std::size_t ops_per_thread,
                                         std::uint64_t seed) {
  using D = smr::lfrc_unpadded;
  rc_audit_result res;
  const std::uint64_t underflows_before = smr::rc::underflows().load();
  D d;
  std::optional<smr::ds::ms_queue<std::uint64_t, D>> q;
  auto set = std::make_unique<smr::ds::list_set<std::uint64_t, D>>();
  {
    auto h = d.register_thread();
    q.emplace(h);
  }
  spawn(d, threads, [&](smr::thread_handle<D>& h, std::size_t t) {
    std::mt19937_64 rng(seed ^ t);
    for (std::size_t i = 0; i < ops_per_thread; ++i) {
      const std::uint64_t k = rng() % 32;
      switch (rng() % 5) {
        case 0:
          q->push(h, k);
          break;
        case 1:
          q->try_pop(h);
          break;
        case 2:
          set->insert(h, k);
          break;
        case 3:
          set->remove(h, k);
          break;
        default:
          set->contains(h, k);
      }
    }
  });
  res.operations = threads * ops_per_thread;
  auto check = [&](std::uint64_t word, std::size_t links) {
    if (smr::rc::claimed(word)) ++res.claimed_but_linked;
    if (smr::rc::count(word) != links) ++res.miscounted;
  };
  q->unsafe_for_each_node(
      [&](auto& n, std::size_t links) { check(D::lfrc_header_of(&n)->ref.load(), links); });
  set->unsafe_for_each_node([&](auto& n) { check(D::lfrc_header_of(&n)->ref.load(), 1); });
  q.reset();
  set.reset();
  d.drain();
  auto t = d.totals();
  res.leaked = t.unreclaimed();
  res.underflows = smr::rc::underflows().load() - underflows_before;
  return res;
}

// ---------------------------------------------------------------------------
// Oracle traces: single-threaded random operations compared against the
// standard containers.

struct oracle_result {
  std::uint64_t operations = 0;
  std::uint64_t mismatches = 0;
};

template <class Scheme>
oracle_result queue_oracle(std::size_t ops, std::uint64_t seed) {
  using D = typename Scheme::domain;
  auto d = Scheme::make();
  oracle_result res;
  {
    auto h = d->register_thread();
    smr::ds::ms_queue<std::uint64_t, D> q(h);
    std::deque<std::uint64_t> model;
    std::mt19937_64 rng(seed);
    std::optional<smr::region_guard<D>> region;
    for (std::size_t i = 0; i < ops; ++i) {
      if (i % 100 == 0) {
        region.reset();
        region.emplace(h);
      }
      if (rng() % 2) {
        const auto v = rng();
        q.push(h, v);
        model.push_back(v);
      } else {
        auto v = q.try_pop(h);
        std::optional<std::uint64_t> m;
        if (!model.empty()) {
          m = model.front();
          model.pop_front();
        }
        if (v != m) ++res.mismatches;
      }
      ++res.operations;
    }
    region.reset();
    if (q.unsafe_size() != model.size()) ++res.mismatches;
  }
  return res;
}

template <class Scheme>
oracle_result list_oracle(std::size_t ops, std::uint64_t seed, std::uint64_t key_range = 200) {
  using D = typename Scheme::domain;
  auto d = Scheme::make();
  oracle_result res;
  {
    auto h = d->register_thread();
    smr::ds::list_set<std::uint64_t, D> set;
    std::set<std::uint64_t> model;
    std::mt19937_64 rng(seed);
    std::optional<smr::region_guard<D>> region;
    for (std::size_t i = 0; i < ops; ++i) {
      if (i % 100 == 0) {
        region.reset();
        region.emplace(h);
      }
      const std::uint64_t k = rng() % key_range;
      bool got = false, want = false;
      switch (rng() % 3) {
        case 0:
          got = set.insert(h, k);
          want = model.insert(k).second;
          break;
        case 1:
          got = set.remove(h, k);
          want = model.erase(k) == 1;
          break;
        default:
          got = set.contains(h, k);
          want = model.count(k) == 1;
      }
      if (got != want) ++res.mismatches;
      ++res.operations;
    }
    region.reset();
    std::vector<std::uint64_t> keys;
    set.unsafe_for_each([&](std::uint64_t k) { keys.push_back(k); });
    if (!std::equal(keys.begin(), keys.end(), model.begin(), model.end())) ++res.mismatches;
  }
  return res;
}

}  // namespace support
