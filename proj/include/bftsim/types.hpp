// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

namespace bftsim {

using NodeId = uint32_t;
using SimTime = uint64_t;
using Instance = uint64_t;  // consensus sequence number, first instance is 1
using Regency = uint64_t;   // view number, leader = regency % n

constexpr NodeId kNoNode = UINT32_MAX;

// Replica ids are 0..n-1; client node ids follow after the replicas.
inline bool is_replica(NodeId id, uint32_t n) { return id < n; }

inline std::string node_name(NodeId id, uint32_t n) {
  return id < n ? "r" + std::to_string(id) : "c" + std::to_string(id - n);
}

enum class Mode { Baseline, Broadcast, Forward };
enum class ReadQuorumMode { Optimized, Naive };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Baseline: return "baseline";
    case Mode::Broadcast: return "broadcast";
    case Mode::Forward: return "forward";
  }
  return "?";
}

inline const char* to_string(ReadQuorumMode m) {
  return m == ReadQuorumMode::Optimized ? "optimized" : "naive";
}

// Minimal expected-like result for fallible library calls.
template <typename T, typename E>
class Result {
 public:
  Result(T value) : value_(std::move(value)) {}      // NOLINT(google-explicit-constructor)
  Result(E error) : error_(std::move(error)) {}      // NOLINT(google-explicit-constructor)

  bool ok() const { return value_.has_value(); }
  explicit operator bool() const { return ok(); }
  const T& value() const { return *value_; }
  T& value() { return *value_; }
  const E& error() const { return *error_; }

 private:
  std::optional<T> value_;
  std::optional<E> error_;
};

// splitmix64, used to derive independent seeds for the rng streams of a run.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Bounded draw that does not go through std::uniform_int_distribution, so
// sequences are identical across standard library implementations.
template <typename Rng>
uint64_t draw(Rng& rng, uint64_t lo, uint64_t hi) {
  if (hi <= lo) return lo;
  return lo + rng() % (hi - lo + 1);
}

}  // namespace bftsim
