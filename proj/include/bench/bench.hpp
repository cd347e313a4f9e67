#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bench {

class config_error : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class benchmark_kind { queue, list, hashmap, guardptr };

std::string_view to_string(benchmark_kind b) noexcept;
benchmark_kind parse_benchmark(std::string_view s);

// Scheme names accepted by the harness.
const std::vector<std::string>& scheme_names();
bool is_scheme(std::string_view s);

struct hashmap_params {
  std::size_t buckets = 2048;
  std::size_t max_entries = 10000;
  std::size_t key_space = 30000;
  std::size_t per_simulation = 1000;
  std::size_t payload_bytes = 1024;

  // Multiplies every size except the bucket count by factor.
  hashmap_params scaled(double factor) const;
};

struct config {
  benchmark_kind benchmark = benchmark_kind::queue;
  std::string scheme = "stamp";
  std::size_t threads = 1;
  std::size_t trials = 1;
  double duration = 1.0;             // seconds per trial
  std::optional<std::uint64_t> ops;  // total operation budget per trial instead of a duration
  std::size_t elements = 10;
  double workload = 0.2;  // list only: fraction of update operations
  std::size_t region_span = 100;
  std::uint64_t seed = 1;
  bool efficiency = false;  // collect unreclaimed-node samples
  std::size_t runs = 1;     // efficiency runs, each with a fresh domain
  bool iterations = false;  // stamp only: report stamp list iteration means
  bool stall_reader = false;  // keep a registered reader inside a region for the whole run
  hashmap_params map;

  // Throws config_error for inconsistent settings.
  void validate() const;
  std::uint64_t key_range() const noexcept { return elements ? 2 * elements : 1; }
};

constexpr std::size_t samples_per_trial = 50;

struct thread_result {
  std::size_t thread = 0;
  std::uint64_t runtime_ns = 0;
  std::uint64_t ops = 0;
};

struct trial_result {
  std::string benchmark;
  std::string scheme;
  std::size_t threads = 0;
  std::size_t trial = 0;
  std::size_t elements = 0;
  double workload = 0;
  std::vector<thread_result> per_thread;
  // counters over the trial
  std::uint64_t retired = 0;
  std::uint64_t reclaimed = 0;
  std::uint64_t hits = 0;      // hashmap: lookups that found the key
  std::uint64_t misses = 0;    // hashmap: lookups that inserted the key
  std::uint64_t produced = 0;  // hashmap: producer invocations
  std::size_t max_map_size = 0;

  // Mean over threads of runtime / ops.
  double ns_per_op() const;
  std::uint64_t ops_total() const;
};

struct sample {
  std::size_t run = 0;
  std::size_t trial = 0;
  std::size_t index = 0;  // 1 .. samples_per_trial
  std::uint64_t unreclaimed = 0;
};

struct iteration_means {
  std::string benchmark;
  std::string scheme;
  std::size_t threads = 0;
  double push = 0;
  double remove_prev = 0;
  double remove_next = 0;
};

struct run_output {
  std::vector<trial_result> trials;
  std::vector<sample> samples;  // efficiency mode
  std::optional<iteration_means> iterations;
  std::uint64_t retired = 0;  // whole run
  std::uint64_t reclaimed = 0;
  std::size_t final_size = 0;  // elements left in the structure of the last run
};

run_output run(const config& c);

enum class sweep_axis { threads, workload, elements };
sweep_axis parse_axis(std::string_view s);
// Runs c once per value of the axis and concatenates the results.
std::vector<run_output> run_sweep(const config& c, sweep_axis axis, const std::vector<double>& values);

// One line of the trials CSV.
struct trial_row {
  std::string benchmark;
  std::string scheme;
  std::size_t threads = 0;
  std::size_t trial = 0;
  std::size_t elements = 0;
  double workload = 0;
  double ns_per_op = 0;
  std::uint64_t ops_total = 0;
  friend bool operator==(const trial_row&, const trial_row&) = default;
};

trial_row to_row(const trial_result& r);
// Orders by benchmark, scheme, threads, elements, workload, trial.
void sort_rows(std::vector<trial_row>& rows);

inline constexpr std::string_view trials_header =
    "benchmark,scheme,threads,trial,elements,workload,ns_per_op,ops_total";
inline constexpr std::string_view samples_header = "run,trial,sample_index,unreclaimed";
inline constexpr std::string_view threads_header =
    "benchmark,scheme,threads,trial,thread,runtime_ns,ops";
inline constexpr std::string_view iterations_header =
    "benchmark,scheme,threads,push_mean,remove_prev_mean,remove_next_mean";

// Writers throw std::runtime_error naming the path on I/O failure and
// std::invalid_argument when there is nothing to write.
void write_trials_csv(const std::string& path, std::vector<trial_row> rows);
void write_threads_csv(const std::string& path, const std::vector<trial_result>& trials);
void write_samples_csv(const std::string& path, const std::vector<sample>& samples);
void write_iterations_csv(const std::string& path, const std::vector<iteration_means>& rows);
// mean and sample standard deviation of ns/op per configuration
void write_summary(const std::string& path, std::vector<trial_row> rows);

std::vector<trial_row> read_trials_csv(const std::string& path);
std::vector<sample> read_samples_csv(const std::string& path);

}  // namespace bench
