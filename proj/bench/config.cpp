#include <algorithm>
#include <bit>
#include <cmath>

#include "bench/bench.hpp"

namespace bench {

std::string_view to_string(benchmark_kind b) noexcept {
  switch (b) {
    case benchmark_kind::queue:
      return "queue";
    case benchmark_kind::list:
      return "list";
    case benchmark_kind::hashmap:
      return "hashmap";
    case benchmark_kind::guardptr:
      return "guardptr";
  }
  return "?";
}

benchmark_kind parse_benchmark(std::string_view s) {
  for (auto b : {benchmark_kind::queue, benchmark_kind::list, benchmark_kind::hashmap,
                 benchmark_kind::guardptr})
    if (to_string(b) == s) return b;
  throw config_error("unknown benchmark '" + std::string(s) + "'");
}

const std::vector<std::string>& scheme_names() {
  static const std::vector<std::string> names = {
      "lfrc", "lfrc-unpadded-20", "lfrc-padded", "lfrc-padded-20", "hp",
      "hp-dynamic", "qsr", "er", "ner", "stamp"};
  return names;
}

bool is_scheme(std::string_view s) {
  const auto& n = scheme_names();
  return std::find(n.begin(), n.end(), s) != n.end();
}

hashmap_params hashmap_params::scaled(double factor) const {
  auto scale = [factor](std::size_t v) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(double(v) * factor)));
  };
  hashmap_params p = *this;
  p.max_entries = scale(max_entries);
  p.key_space = scale(key_space);
  p.per_simulation = scale(per_simulation);
  p.payload_bytes = scale(payload_bytes);
  return p;
}

void config::validate() const {
  if (!is_scheme(scheme)) throw config_error("unknown scheme '" + scheme + "'");
  if (threads == 0) throw config_error("threads must be at least 1");
  if (trials == 0) throw config_error("trials must be at least 1");
  if (runs == 0) throw config_error("runs must be at least 1");
  if (ops) {
    if (*ops < threads) throw config_error("operation budget must cover every thread");
  } else if (!(duration > 0) || !std::isfinite(duration)) {
    throw config_error("duration must be positive");
  }
  if (!(workload >= 0 && workload <= 1)) throw config_error("workload must lie in [0, 1]");
  if (region_span == 0) throw config_error("region span must be at least 1");
  if (iterations && scheme != "stamp")
    throw config_error("iteration counters exist only for the stamp scheme");
  if (benchmark == benchmark_kind::hashmap) {
    if (!std::has_single_bit(map.buckets) || map.buckets < 2)
      throw config_error("bucket count must be a power of two");
    if (map.key_space == 0 || map.per_simulation == 0)
      throw config_error("key space and results per simulation must be positive");
  }
}

sweep_axis parse_axis(std::string_view s) {
  if (s == "threads") return sweep_axis::threads;
  if (s == "workload") return sweep_axis::workload;
  if (s == "elements") return sweep_axis::elements;
  throw config_error("unknown sweep axis '" + std::string(s) + "'");
}

}  // namespace bench
