#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "bench/bench.hpp"

namespace bench {

double trial_result::ns_per_op() const {
  if (per_thread.empty()) return 0;
  double sum = 0;
  for (auto& t : per_thread) sum += t.ops ? double(t.runtime_ns) / double(t.ops) : 0;
  return sum / double(per_thread.size());
}

std::uint64_t trial_result::ops_total() const {
  std::uint64_t n = 0;
  for (auto& t : per_thread) n += t.ops;
  return n;
}

trial_row to_row(const trial_result& r) {
  return {r.benchmark, r.scheme,      r.threads,     r.trial,
          r.elements,  r.workload, r.ns_per_op(), r.ops_total()};
}

void sort_rows(std::vector<trial_row>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const trial_row& a, const trial_row& b) {
    return std::tie(a.benchmark, a.scheme, a.threads, a.elements, a.workload, a.trial) <
           std::tie(b.benchmark, b.scheme, b.threads, b.elements, b.workload, b.trial);
  });
}

namespace {

// Shortest representation that parses back to the same double.
std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error(path + ": write failed");
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  for (std::string s; std::getline(ss, s, ',');) f.push_back(s);
  return f;
}

template <class T>
T number(const std::string& s, const std::string& path) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::runtime_error(path + ": bad number '" + s + "'");
  return v;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path, std::string_view header,
                                               std::size_t columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw std::runtime_error(path + ": unexpected header");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split(line);
    if (f.size() != columns) throw std::runtime_error(path + ": wrong column count");
    rows.push_back(std::move(f));
  }
  return rows;
}

}  // namespace

void write_trials_csv(const std::string& path, std::vector<trial_row> rows) {
  if (rows.empty()) throw std::invalid_argument(path + ": no trial results to write");
  sort_rows(rows);
  auto out = open_out(path);
  out << trials_header << '\n';
  for (auto& r : rows)
    out << r.benchmark << ',' << r.scheme << ',' << r.threads << ',' << r.trial << ','
        << r.elements << ',' << fmt(r.workload) << ',' << fmt(r.ns_per_op) << ',' << r.ops_total
        << '\n';
  finish(out, path);
}

void write_threads_csv(const std::string& path, const std::vector<trial_result>& trials) {
  if (trials.empty()) throw std::invalid_argument(path + ": no trial results to write");
  auto out = open_out(path);
  out << threads_header << '\n';
  for (auto& r : trials)
    for (auto& t : r.per_thread)
      out << r.benchmark << ',' << r.scheme << ',' << r.threads << ',' << r.trial << ','
          << t.thread << ',' << t.runtime_ns << ',' << t.ops << '\n';
  finish(out, path);
}

void write_samples_csv(const std::string& path, const std::vector<sample>& samples) {
  if (samples.empty()) throw std::invalid_argument(path + ": no samples to write");
  auto out = open_out(path);
  out << samples_header << '\n';
  for (auto& s : samples)
    out << s.run << ',' << s.trial << ',' << s.index << ',' << s.unreclaimed << '\n';
  finish(out, path);
}

void write_iterations_csv(const std::string& path, const std::vector<iteration_means>& rows) {
  if (rows.empty()) throw std::invalid_argument(path + ": no iteration counters to write");
  auto out = open_out(path);
  out << iterations_header << '\n';
  for (auto& r : rows)
    out << r.benchmark << ',' << r.scheme << ',' << r.threads << ',' << fmt(r.push) << ','
        << fmt(r.remove_prev) << ',' << fmt(r.remove_next) << '\n';
  finish(out, path);
}

void write_summary(const std::string& path, std::vector<trial_row> rows) {
  if (rows.empty()) throw std::invalid_argument(path + ": no trial results to summarize");
  sort_rows(rows);
  using key = std::tuple<std::string, std::string, std::size_t, std::size_t, double>;
  std::map<key, std::vector<const trial_row*>> groups;
  for (auto& r : rows) groups[{r.benchmark, r.scheme, r.threads, r.elements, r.workload}].push_back(&r);
  auto out = open_out(path);
  for (auto& [k, g] : groups) {
    double mean = 0;
    for (auto* r : g) mean += r->ns_per_op;
    mean /= double(g.size());
    double var = 0;
    for (auto* r : g) var += (r->ns_per_op - mean) * (r->ns_per_op - mean);
    const double sd = g.size() > 1 ? std::sqrt(var / double(g.size() - 1)) : 0;
    char line[256];
    std::snprintf(line, sizeof line,
                  "%s %s threads=%zu elements=%zu workload=%s trials=%zu ns/op=%.3f+-%.3f\n",
                  std::get<0>(k).c_str(), std::get<1>(k).c_str(), std::get<2>(k), std::get<3>(k),
                  fmt(std::get<4>(k)).c_str(), g.size(), mean, sd);
    out << line;
  }
  finish(out, path);
}

std::vector<trial_row> read_trials_csv(const std::string& path) {
  std::vector<trial_row> rows;
  for (auto& f : read_csv(path, trials_header, 8))
    rows.push_back({f[0], f[1], number<std::size_t>(f[2], path), number<std::size_t>(f[3], path),
                    number<std::size_t>(f[4], path), number<double>(f[5], path),
                    number<double>(f[6], path), number<std::uint64_t>(f[7], path)});
  return rows;
}

std::vector<sample> read_samples_csv(const std::string& path) {
  std::vector<sample> rows;
  for (auto& f : read_csv(path, samples_header, 4))
    rows.push_back({number<std::size_t>(f[0], path), number<std::size_t>(f[1], path),
                    number<std::size_t>(f[2], path), number<std::uint64_t>(f[3], path)});
  return rows;
}

}  // namespace bench
