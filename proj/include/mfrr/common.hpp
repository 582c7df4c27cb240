#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mfrr {

/// Length of one market time unit in hours.
inline constexpr double kQhHours = 0.25;
inline constexpr int kQhPerDay = 96;
/// Bids must be backed by this much instantaneous charging capacity.
inline constexpr double kBufferFactor = 1.1;

/// Raised for malformed inputs and violated preconditions.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a model has no feasible solution. `qh` names the binding
/// quarter-hour when one is known, otherwise -1.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, int qh = -1)
      : std::runtime_error(what), qh_(qh) {}
  int qh() const noexcept { return qh_; }

 private:
  int qh_;
};

/// SplitMix64 finalizer; used to derive independent RNG substreams.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for substream `index` of a run seeded with `seed`.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// 64-bit FNV-1a, incremental.
class Fnv1a {
 public:
  void update(std::string_view bytes) noexcept;
  void update(double v) noexcept;
  void update(std::int64_t v) noexcept;
  std::uint64_t digest() const noexcept { return h_; }
  std::string hex() const;

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace mfrr
