#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace imkc {

/// SplitMix64 finalizer. Used to decorrelate derived seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives an independent sub-seed from a master seed, a stage tag and two
/// integer coordinates (typically the cluster count and a run index).
/// Changing any coordinate of one stream never perturbs another stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::uint64_t a = 0,
                          std::uint64_t b = 0) noexcept;

/// Thin wrapper over mt19937_64 whose draws are identical on every platform
/// (the standard distributions are implementation-defined, so we avoid them).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [0, n). Requires n > 0.
  std::size_t index(std::size_t n);

  /// Standard normal draw (Box-Muller, no cached second value).
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace imkc
