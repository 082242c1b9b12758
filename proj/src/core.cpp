#include "rrmh/core.hpp"

#include <cmath>
#include <numbers>

namespace rrmh {

void require_dim(Index actual, Index expected, const char* what) {
  if (actual != expected) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(expected) +
                         ", got " + std::to_string(actual));
  }
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NonFiniteError(std::string(what) + ": non-finite entry");
}

namespace {
std::uint64_t splitmix(std::uint64_t x) {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace

RandomStream::RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t RandomStream::next_u64() {
  ++counter_;
  return engine_();
}

double RandomStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RandomStream::uniform_open() {
  return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
}

double RandomStream::normal() {
  // Box-Muller, one output per pair; no cached spare so the stream position
  // fully describes the state.
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vector RandomStream::normal_vector(Index n) {
  Vector z(n);
  for (Index i = 0; i < n; ++i) z[i] = normal();
  return z;
}

std::size_t RandomStream::uniform_index(std::size_t n) {
  if (n <= 1) return 0;
  return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
}

RandomStream RandomStream::split(std::uint64_t stream_id) const {
  return RandomStream(splitmix(seed_ ^ (0xD1B54A32D192ED03ULL * (stream_id + 1))));
}

}  // namespace rrmh
