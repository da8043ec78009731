#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace bglmm {

// SplitMix64 step; also used to derive stream seeds.
std::uint64_t splitmix64(std::uint64_t& state);

// FNV-1a hash of a byte string, used to map subject ids to stream offsets.
std::uint64_t fnv1a64(std::string_view s);

// xoshiro256++ generator with deterministic output on every platform.
// Normal variates go through the inverse-CDF transform so that streams are
// reproducible bit-for-bit regardless of the standard library in use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on the open interval (0,1), 53-bit resolution, never 0 or 1.
  double uniform01();

  double normal();

  bool bernoulli(double p);

  // Index into [0, n) proportional to the given cumulative weights.
  // `cumulative` must be nondecreasing with back() == total mass.
  int categorical_from_cumulative(const double* cumulative, int n);

 private:
  std::array<std::uint64_t, 4> state_;
};

// Independent substream for one subject: mixes the global seed with a hash
// of the subject id. Identical (seed, id) pairs give identical streams.
Rng subject_stream(std::uint64_t seed, std::string_view subject_id);

// Generic labelled substream (e.g. data generation vs. fitting within one
// replication seed).
Rng labelled_stream(std::uint64_t seed, std::uint64_t label);

}  // namespace bglmm
