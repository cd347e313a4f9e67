#pragma once

#include <atomic>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <utility>

#include "smr/ds/hm_list.hpp"
#include "smr/ds/ms_queue.hpp"

namespace smr::ds {

// Fixed-size hash map of Harris-Michael lists with approximate FIFO
// eviction. Keys are remembered in insertion order in a queue; eviction
// removes the oldest keys while the map holds more than the limit.
template <class Key, class Value, class Domain>
class hash_map {
  using bucket = hm_list<Key, Value, Domain>;

 public:
  using handle = thread_handle<Domain>;
  using guard = typename bucket::guard;

  static constexpr std::size_t default_buckets = 2048;

  explicit hash_map(handle& h, std::size_t buckets = default_buckets)
      : bits_(std::countr_zero(buckets)), buckets_(std::make_unique<bucket[]>(buckets)), fifo_(h) {
    if (!std::has_single_bit(buckets) || buckets < 2)
      throw std::invalid_argument("hash_map: bucket count must be a power of two");
    count_ = buckets;
  }

  // Fibonacci hashing: multiply by 2^64 / golden ratio and keep the top bits.
  static std::size_t bucket_index(std::uint64_t key, unsigned bits) noexcept {
    return static_cast<std::size_t>((key * 11400714819323198485ull) >> (64 - bits));
  }
  std::size_t bucket_index(const Key& key) const noexcept {
    return bucket_index(static_cast<std::uint64_t>(key), bits_);
  }
  std::size_t bucket_count() const noexcept { return count_; }

  // Returns the entry for key, creating it with producer() if it is absent.
  // The bool tells whether this call inserted the entry.
  template <class Producer>
  std::pair<guard, bool> get_or_insert(handle& h, const Key& key, Producer&& producer) {
    auto result = buckets_[bucket_index(key)].get_or_insert(h, key, std::forward<Producer>(producer));
    if (result.second) {
      size_.fetch_add(1, std::memory_order_relaxed);
      fifo_.push(h, key);
    }
    return result;
  }

  guard find(handle& h, const Key& key) { return buckets_[bucket_index(key)].find_node(h, key); }

  // Removes the oldest entries while the map holds more than max_entries.
  std::size_t evict_fifo(handle& h, std::size_t max_entries) {
    std::size_t evicted = 0;
    while (size_.load(std::memory_order_relaxed) > static_cast<std::int64_t>(max_entries)) {
      auto key = fifo_.try_pop(h);
      if (!key) break;
      if (buckets_[bucket_index(*key)].remove(h, *key)) {
        size_.fetch_sub(1, std::memory_order_relaxed);
        ++evicted;
      }
    }
    return evicted;
  }

  std::size_t size() const noexcept {
    const auto n = size_.load(std::memory_order_relaxed);
    return n < 0 ? 0 : static_cast<std::size_t>(n);
  }

  // Exact entry count. Only meaningful while no thread modifies the map.
  std::size_t unsafe_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < count_; ++i)
      buckets_[i].unsafe_for_each([&](const Key&, const Value&) { ++n; });
    return n;
  }

  template <class F>
  void unsafe_for_each(F&& f) const {
    for (std::size_t i = 0; i < count_; ++i) buckets_[i].unsafe_for_each(f);
  }

 private:
  unsigned bits_;
  std::size_t count_ = 0;
  std::unique_ptr<bucket[]> buckets_;
  ms_queue<Key, Domain> fifo_;
  alignas(64) std::atomic<std::int64_t> size_{0};
};

}  // namespace smr::ds
