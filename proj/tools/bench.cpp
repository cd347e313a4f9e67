#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "bench/bench.hpp"

namespace {

std::string stem_of(const std::string& out) {
  return out.ends_with(".csv") ? out.substr(0, out.size() - 4) : out;
}

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> v;
  std::stringstream ss(list);
  for (std::string s; std::getline(ss, s, ',');) {
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw bench::config_error("bad sweep value '" + s + "'");
    v.push_back(x);
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark driver for the reclamation schemes"};
  bench::config c;
  std::string benchmark = "queue";
  std::vector<std::string> schemes{"stamp"};
  std::optional<std::uint64_t> ops;
  std::string sweep, out;
  double scale = 1.0;
  std::optional<std::size_t> buckets, max_entries, key_space, per_sim, payload;

  app.add_option("--benchmark", benchmark, "queue, list, hashmap or guardptr")->capture_default_str();
  app.add_option("--scheme", schemes, "comma separated list of schemes")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--threads", c.threads, "worker threads")->capture_default_str();
  app.add_option("--trials", c.trials, "trials per run")->capture_default_str();
  auto* dur = app.add_option("--duration", c.duration, "seconds per trial")->capture_default_str();
  app.add_option("--ops", ops, "operation budget per trial instead of a duration")->excludes(dur);
  app.add_option("--elements", c.elements, "initial elements (queue, list)")->capture_default_str();
  app.add_option("--workload", c.workload, "fraction of list updates")->capture_default_str();
  app.add_option("--region-span", c.region_span, "operations per region")->capture_default_str();
  app.add_option("--seed", c.seed, "random seed")->capture_default_str();
  app.add_flag("--efficiency", c.efficiency, "sample unreclaimed nodes 50 times per trial");
  app.add_option("--runs", c.runs, "efficiency runs")->capture_default_str();
  app.add_flag("--iterations", c.iterations, "report stamp list iteration means");
  app.add_flag("--stall-reader", c.stall_reader, "keep one reader inside a region all run");
  app.add_option("--sweep", sweep, "AXIS=v1,v2,... with AXIS threads, workload or elements");
  app.add_option("--scale", scale, "scales hash map sizes and the duration")->capture_default_str();
  app.add_option("--buckets", buckets, "hash map buckets");
  app.add_option("--max-entries", max_entries, "hash map size limit");
  app.add_option("--key-space", key_space, "distinct partial results");
  app.add_option("--per-sim", per_sim, "results per simulation");
  app.add_option("--payload", payload, "bytes per partial result");
  app.add_option("--out", out, "trials CSV; companion files share its stem")->required();
  CLI11_PARSE(app, argc, argv);

  try {
    c.benchmark = bench::parse_benchmark(benchmark);
    c.ops = ops;
    if (!(scale > 0)) throw bench::config_error("scale must be positive");
    c.map = c.map.scaled(scale);
    c.duration *= scale;
    if (buckets) c.map.buckets = *buckets;
    if (max_entries) c.map.max_entries = *max_entries;
    if (key_space) c.map.key_space = *key_space;
    if (per_sim) c.map.per_simulation = *per_sim;
    if (payload) c.map.payload_bytes = *payload;

    std::optional<bench::sweep_axis> axis;
    std::vector<double> values;
    if (!sweep.empty()) {
      const auto eq = sweep.find('=');
      if (eq == std::string::npos) throw bench::config_error("--sweep expects AXIS=v1,v2,...");
      axis = bench::parse_axis(sweep.substr(0, eq));
      values = parse_values(sweep.substr(eq + 1));
      if (c.efficiency) throw bench::config_error("--efficiency does not combine with --sweep");
    }
    for (auto& s : schemes) {
      c.scheme = s;
      c.validate();
    }

    const std::string stem = stem_of(out);
    std::vector<bench::trial_result> trials;
    std::vector<bench::iteration_means> iterations;
    for (auto& s : schemes) {
      c.scheme = s;
      std::vector<bench::run_output> results;
      if (axis)
        results = bench::run_sweep(c, *axis, values);
      else
        results.push_back(bench::run(c));
      for (auto& r : results) {
        trials.insert(trials.end(), r.trials.begin(), r.trials.end());
        if (r.iterations) iterations.push_back(*r.iterations);
        if (!r.samples.empty()) bench::write_samples_csv(stem + "." + s + ".samples.csv", r.samples);
      }
      std::fprintf(stderr, "%s: done\n", s.c_str());
    }
    std::vector<bench::trial_row> rows;
    for (auto& t : trials) rows.push_back(bench::to_row(t));
    bench::write_trials_csv(out, rows);
    bench::write_threads_csv(stem + ".threads.csv", trials);
    bench::write_summary(stem + ".summary.txt", rows);
    if (!iterations.empty()) bench::write_iterations_csv(stem + ".iterations.csv", iterations);
  } catch (const bench::config_error& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
