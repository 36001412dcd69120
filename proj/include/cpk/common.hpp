// common.hpp — shared error type, deterministic RNG, formatting, parallel map.
//
// Everything downstream needs bit-reproducible behavior across runs and
// thread counts, so randomness comes from an explicit splitmix64 stream
// (std::<random> distributions are not bit-stable across implementations)
// and parallel work always merges results in index order.
#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cpk {

// ============================================================================
// Errors
// ============================================================================

enum class ErrorCode {
  InvalidConfig,
  InvalidState,
  ImproperPolicy,
  HorizonExceeded,
  EmptyBatch,
  EmptyThresholds,
  SingleClass,
  UnknownLabel,
  DimensionMismatch,
  Infeasible,
  Unbounded,
  NumericalFailure,
  NotOptimal,
  TooLarge,
  NoCoverage,
  IoError,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::ImproperPolicy: return "ImproperPolicy";
    case ErrorCode::HorizonExceeded: return "HorizonExceeded";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::EmptyThresholds: return "EmptyThresholds";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::NotOptimal: return "NotOptimal";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NoCoverage: return "NoCoverage";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class CpkError : public std::runtime_error {
 public:
  CpkError(ErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + msg),
        code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw CpkError(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

// ============================================================================
// Deterministic RNG (splitmix64)
// ============================================================================

/// Mixes one 64-bit value through the splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a parent seed plus an index, so
/// sub-streams stay stable when unrelated parts of a computation change.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return mix64(parent ^ mix64(index + 0x517cc1b727220a95ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 significant bits.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  int uniform_int(int n) { return int(next_u64() % std::uint64_t(n)); }

  /// Samples an index from a discrete distribution (weights sum to ~1).
  int sample_discrete(const std::vector<double>& probs) {
    double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return int(i);
    }
    return int(probs.size()) - 1;
  }

 private:
  std::uint64_t state_;
};

// ============================================================================
// Formatting
// ============================================================================

/// Round-trip-exact decimal form of a double (%.17g).
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Short human-readable form (%g), used for grid thresholds and κ labels.
inline std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// ============================================================================
// Bounded parallelism
// ============================================================================

/// Thread budget: CPK_THREADS if set (>=1), else hardware concurrency.
inline int thread_budget() {
  if (const char* env = std::getenv("CPK_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : int(hc);
}

/// Runs fn(i) for i in [0, n) across the thread budget and returns results in
/// index order. fn must be safe to call concurrently; all aggregation that is
/// sensitive to floating-point order must happen on the returned vector.
template <typename T, typename Fn>
std::vector<T> parallel_map(int n, Fn&& fn) {
  std::vector<T> out(static_cast<std::size_t>(n));
  int workers = std::min(thread_budget(), n > 0 ? n : 1);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) out[std::size_t(i)] = fn(i);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (int i = w; i < n; i += workers) out[std::size_t(i)] = fn(i);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace cpk
