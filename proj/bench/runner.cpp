#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "bench/bench.hpp"
#include "smr/ds/hash_map.hpp"
#include "smr/ds/hm_list.hpp"
#include "smr/ds/ms_queue.hpp"
#include "smr/smr.hpp"

namespace bench {

namespace {

using clock_type = std::chrono::steady_clock;
using rng_type = std::mt19937_64;

// seed xor thread index; later trials are shifted by a fixed odd constant
std::uint64_t thread_seed(std::uint64_t seed, std::size_t thread, std::size_t trial) {
  return (seed ^ thread) + trial * 0x9e3779b97f4a7c15ull;
}

double uniform(rng_type& rng) { return double(rng() >> 11) * 0x1p-53; }

struct thread_stats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t produced = 0;
  std::size_t max_size = 0;
};

template <class D>
struct queue_bench {
  using handle = smr::thread_handle<D>;
  smr::ds::ms_queue<std::uint64_t, D> q;

  queue_bench(handle& h, const config& c, rng_type& rng) : q(h) {
    for (std::size_t i = 0; i < c.elements; ++i) q.push(h, rng());
  }
  std::size_t size() const { return q.unsafe_size(); }
  static std::size_t span(const config& c) { return c.region_span; }
  void op(handle& h, rng_type& rng, thread_stats&) {
    if (rng() & 1)
      q.push(h, rng());
    else
      (void)q.try_pop(h);
  }
};

template <class D>
struct list_bench {
  using handle = smr::thread_handle<D>;
  smr::ds::list_set<std::uint64_t, D> s;
  std::uint64_t key_range;
  double workload;

  list_bench(handle& h, const config& c, rng_type& rng)
      : key_range(c.key_range()), workload(c.workload) {
    const std::size_t n = std::min<std::uint64_t>(c.elements, key_range);
    for (std::size_t added = 0; added < n;)
      if (s.insert(h, rng() % key_range)) ++added;
  }
  std::size_t size() const {
    std::size_t n = 0;
    s.unsafe_for_each([&](std::uint64_t) { ++n; });
    return n;
  }
  static std::size_t span(const config& c) { return c.region_span; }
  void op(handle& h, rng_type& rng, thread_stats&) {
    const bool update = uniform(rng) < workload;
    const std::uint64_t key = rng() % key_range;
    if (!update)
      (void)s.contains(h, key);
    else if (rng() & 1)
      s.insert(h, key);
    else
      s.remove(h, key);
  }
};

template <class D>
struct hashmap_bench {
  using handle = smr::thread_handle<D>;
  using payload = std::vector<std::uint8_t>;
  using map_type = smr::ds::hash_map<std::uint64_t, payload, D>;
  map_type m;
  hashmap_params p;

  hashmap_bench(handle& h, const config& c, rng_type&) : m(h, c.map.buckets), p(c.map) {}
  std::size_t size() const { return m.unsafe_count(); }
  // one region per simulation
  static std::size_t span(const config&) { return 1; }
  // One simulation: look up per_simulation partial results, computing the
  // missing ones. All results stay in use until the simulation ends.
  void op(handle& h, rng_type& rng, thread_stats& st) {
    std::vector<typename map_type::guard> in_use;
    in_use.reserve(p.per_simulation);
    for (std::size_t i = 0; i < p.per_simulation; ++i) {
      const std::uint64_t key = rng() % p.key_space;
      auto [g, inserted] = m.get_or_insert(h, key, [&] {
        ++st.produced;
        return payload(p.payload_bytes, static_cast<std::uint8_t>(key));
      });
      ++(inserted ? st.misses : st.hits);
      in_use.push_back(std::move(g));
      if (inserted) m.evict_fifo(h, p.max_entries);
      st.max_size = std::max(st.max_size, m.size());
    }
  }
};

template <class D>
struct guardptr_bench {
  using handle = smr::thread_handle<D>;
  struct node {
    std::uint64_t value = 0;
    typename D::template link<node, 1> next;
    template <class F>
    void for_each_link(F&& f) {
      f(next);
    }
  };
  typename D::template link<node, 1> shared;

  guardptr_bench(handle& h, const config&, rng_type&) {
    auto g = smr::make_guarded<node, D, 1>(h);
    shared.store(g.marked_get(), std::memory_order_release);
    g.reset();
  }
  ~guardptr_bench() {
    smr::retired_node* n = D::header_of(shared.load(std::memory_order_acquire).get());
    n->dispose(n, smr::dispose_op::destroy);
    n->dispose(n, smr::dispose_op::deallocate);
  }
  std::size_t size() const { return 1; }
  // every guard acquires protection on its own
  static std::size_t span(const config&) { return 0; }
  void op(handle& h, rng_type&, thread_stats&) {
    smr::guard_ptr<node, D, 1> g(h);
    g.acquire(shared, std::memory_order_acquire);
  }
};

struct alignas(64) progress {
  std::atomic<std::uint64_t> ops{0};
};

template <class D, class B>
class runner {
 public:
  using handle = smr::thread_handle<D>;

  runner(const config& c, std::function<std::unique_ptr<D>()> make) : c_(c), make_(std::move(make)) {}

  run_output run() {
    run_output out;
    const std::size_t runs = c_.efficiency ? c_.runs : 1;
    for (std::size_t r = 0; r < runs; ++r) {
      auto d = make_();
      std::optional<B> bench;
      {
        auto h = d->register_thread();
        rng_type rng(thread_seed(c_.seed, c_.threads, 0));
        bench.emplace(h, c_, rng);
      }
      // a reader that never leaves its region for the whole run
      std::optional<handle> reader;
      std::optional<smr::region_guard<D>> reader_region;
      if (c_.stall_reader) {
        reader.emplace(d->register_thread());
        reader_region.emplace(*reader);
      }
      for (std::size_t t = 0; t < c_.trials; ++t)
        out.trials.push_back(trial(*d, *bench, r, t, r * c_.trials + t, out.samples));
      reader_region.reset();
      reader.reset();

      const auto totals = d->totals();
      if (c_.iterations) {
        auto mean = [](std::uint64_t iters, std::uint64_t calls) {
          return calls ? double(iters) / double(calls) : 0.0;
        };
        out.iterations = iteration_means{std::string(to_string(c_.benchmark)), c_.scheme,
                                         c_.threads,
                                         mean(totals.push_iterations, totals.push_calls),
                                         mean(totals.remove_prev_iterations, totals.remove_calls),
                                         mean(totals.remove_next_iterations, totals.remove_calls)};
      }
      out.final_size = bench->size();
      bench.reset();
      d->drain();
      const auto after = d->totals();
      out.retired += after.retired;
      out.reclaimed += after.reclaimed;
    }
    return out;
  }

 private:
  trial_result trial(D& d, B& bench, std::size_t run, std::size_t trial_in_run,
                     std::size_t trial_index, std::vector<sample>& samples) {
    const std::size_t p = c_.threads;
    const bool sampling = c_.efficiency;
    const std::size_t span = B::span(c_);
    std::vector<progress> prog(p);
    std::vector<thread_result> res(p);
    std::vector<thread_stats> stats(p);
    std::atomic<std::size_t> ready{0};
    std::atomic<bool> go{false}, stop{false};
    const auto before = d.totals();

    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < p; ++t)
      workers.emplace_back([&, t] {
        auto h = d.register_thread();
        rng_type rng(thread_seed(c_.seed, t, trial_index));
        const std::uint64_t budget =
            c_.ops ? *c_.ops / p + (t < *c_.ops % p ? 1 : 0) : ~std::uint64_t(0);
        ready.fetch_add(1);
        while (!go.load(std::memory_order_acquire)) std::this_thread::yield();
        const auto t0 = clock_type::now();
        bool in_region = false;
        std::uint64_t n = 0;
        for (; n < budget; ++n) {
          if (!c_.ops && stop.load(std::memory_order_relaxed)) break;
          if (span && n % span == 0) {
            if (in_region) d.close_region(h.record());
            d.open_region(h.record());
            in_region = true;
          }
          bench.op(h, rng, stats[t]);
          if (sampling) prog[t].ops.store(n + 1, std::memory_order_relaxed);
        }
        if (in_region) d.close_region(h.record());
        const auto t1 = clock_type::now();
        res[t] = {t, std::uint64_t(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()),
                  n};
      });

    while (ready.load() < p) std::this_thread::yield();
    const auto start = clock_type::now();
    go.store(true, std::memory_order_release);
    const auto length = std::chrono::duration_cast<clock_type::duration>(
        std::chrono::duration<double>(c_.duration));
    if (sampling) {
      for (std::size_t i = 1; i < samples_per_trial; ++i) {
        if (c_.ops) {
          const std::uint64_t target = *c_.ops * i / samples_per_trial;
          for (;;) {
            std::uint64_t done = 0;
            for (auto& pr : prog) done += pr.ops.load(std::memory_order_relaxed);
            if (done >= target) break;
            std::this_thread::sleep_for(std::chrono::microseconds(50));
          }
        } else {
          std::this_thread::sleep_until(start + length * i / samples_per_trial);
        }
        samples.push_back({run, trial_in_run, i, d.totals().unreclaimed()});
      }
    }
    if (!c_.ops) {
      std::this_thread::sleep_until(start + length);
      stop.store(true, std::memory_order_relaxed);
    }
    for (auto& w : workers) w.join();
    // the last sample is taken after every worker has deregistered
    if (sampling) samples.push_back({run, trial_in_run, samples_per_trial, d.totals().unreclaimed()});

    const auto after = d.totals();
    trial_result tr;
    tr.benchmark = std::string(to_string(c_.benchmark));
    tr.scheme = c_.scheme;
    tr.threads = p;
    tr.trial = trial_index;
    tr.elements = c_.elements;
    tr.workload = c_.workload;
    tr.per_thread = std::move(res);
    tr.retired = after.retired - before.retired;
    tr.reclaimed = after.reclaimed - before.reclaimed;
    for (auto& s : stats) {
      tr.hits += s.hits;
      tr.misses += s.misses;
      tr.produced += s.produced;
      tr.max_map_size = std::max(tr.max_map_size, s.max_size);
    }
    return tr;
  }

  const config& c_;
  std::function<std::unique_ptr<D>()> make_;
};

template <class D, class Make>
run_output run_scheme(const config& c, Make make) {
  switch (c.benchmark) {
    case benchmark_kind::queue:
      return runner<D, queue_bench<D>>(c, make).run();
    case benchmark_kind::list:
      return runner<D, list_bench<D>>(c, make).run();
    case benchmark_kind::hashmap:
      return runner<D, hashmap_bench<D>>(c, make).run();
    case benchmark_kind::guardptr:
      return runner<D, guardptr_bench<D>>(c, make).run();
  }
  throw config_error("unknown benchmark");
}

template <bool Padded>
run_output run_lfrc(const config& c, std::size_t local) {
  smr::lfrc_config lc;
  lc.local_free_list = local;
  return run_scheme<smr::lfrc<Padded>>(c, [lc] { return std::make_unique<smr::lfrc<Padded>>(lc); });
}

}  // namespace

run_output run(const config& c) {
  c.validate();
  const std::string& s = c.scheme;
  if (s == "stamp")
    return run_scheme<smr::stamp_it>(c, [] { return std::make_unique<smr::stamp_it>(); });
  if (s == "hp" || s == "hp-dynamic") {
    smr::hazard_pointers_config hc;
    // hash map simulations keep many results protected at once
    hc.dynamic = s == "hp-dynamic" || c.benchmark == benchmark_kind::hashmap;
    return run_scheme<smr::hazard_pointers>(
        c, [hc] { return std::make_unique<smr::hazard_pointers>(hc); });
  }
  if (s == "er" || s == "ner" || s == "qsr") {
    smr::epoch_config ec;
    ec.mode = s == "er" ? smr::epoch_mode::er : s == "ner" ? smr::epoch_mode::ner : smr::epoch_mode::qsr;
    return run_scheme<smr::epoch_domain>(c, [ec] { return std::make_unique<smr::epoch_domain>(ec); });
  }
  const std::size_t local = s.ends_with("-20") ? 20 : 0;
  if (s == "lfrc-padded" || s == "lfrc-padded-20") return run_lfrc<true>(c, local);
  return run_lfrc<false>(c, local);
}

std::vector<run_output> run_sweep(const config& c, sweep_axis axis, const std::vector<double>& values) {
  if (values.empty()) throw config_error("sweep needs at least one value");
  if (axis == sweep_axis::workload && c.benchmark != benchmark_kind::list)
    throw config_error("workload sweeps apply to the list benchmark only");
  if (axis == sweep_axis::elements && c.benchmark != benchmark_kind::list &&
      c.benchmark != benchmark_kind::queue)
    throw config_error("element sweeps apply to the queue and list benchmarks only");
  std::vector<config> configs;
  for (double v : values) {
    config x = c;
    if (axis == sweep_axis::workload) {
      x.workload = v;
    } else {
      if (!(v >= 0) || v != std::floor(v)) throw config_error("sweep values must be whole numbers");
      (axis == sweep_axis::threads ? x.threads : x.elements) = static_cast<std::size_t>(v);
    }
    x.validate();
    configs.push_back(x);
  }
  std::vector<run_output> out;
  for (auto& x : configs) out.push_back(run(x));
  return out;
}

}  // namespace bench
