#include "bglmm/rng.hpp"

#include "bglmm/normal.hpp"

namespace bglmm {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}
}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& word : state_) word = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform01() {
  // (k + 1/2) * 2^-53 with k in [0, 2^53): strictly inside (0,1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() { return normal_quantile(uniform01()); }

bool Rng::bernoulli(double p) { return uniform01() < p; }

int Rng::categorical_from_cumulative(const double* cumulative, int n) {
  const double u = uniform01() * cumulative[n - 1];
  for (int i = 0; i < n - 1; ++i) {
    if (u < cumulative[i]) return i;
  }
  return n - 1;
}

Rng subject_stream(std::uint64_t seed, std::string_view subject_id) {
  std::uint64_t mix = seed ^ (fnv1a64(subject_id) * 0x9E3779B97F4A7C15ULL);
  return Rng(splitmix64(mix));
}

Rng labelled_stream(std::uint64_t seed, std::uint64_t label) {
  std::uint64_t mix = seed ^ (label * 0xD1B54A32D192ED03ULL);
  return Rng(splitmix64(mix));
}

}  // namespace bglmm
