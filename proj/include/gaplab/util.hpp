#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gaplab {

// Computation failed inside a named stage; the CLI maps this to exit code 1.
struct stage_error : std::runtime_error {
  std::string stage;
  stage_error(std::string st, const std::string& msg)
      : std::runtime_error(st + ": " + msg), stage(std::move(st)) {}
};

// Fractional part in [0,1).
inline double frac1(double x) {
  double f = x - static_cast<long long>(x);
  if (f < 0) f += 1.0;
  return f >= 1.0 ? f - 1.0 : f;
}

// Distance to the nearest integer, in [0, 1/2].
inline double dist_to_int(double x) {
  double f = frac1(x);
  return f <= 0.5 ? f : 1.0 - f;
}

// Number of worker threads: GAPLAB_THREADS if set, else hardware concurrency.
int worker_threads();

// Deterministic parallel loop: body(i) for i in [0, n). Results must be
// written to preallocated slots indexed by i so the outcome does not depend
// on the thread count. Exceptions are rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// Pairwise (tree) summation; order is fixed by the index layout, so sums are
// reproducible independent of threading decisions made by callers.
double pairwise_sum(const double* v, std::size_t n);
inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(v.data(), v.size());
}

// FNV-1a 64-bit digest of a byte string, hex-encoded. Used for output
// fingerprints in run manifests.
std::string fnv1a_hex(const std::string& bytes);

// Serialize a double with 17 significant digits (round-trip exact).
std::string fmt17(double x);

// Deterministic RNG stream: mt19937_64 seeded by (seed, stream) via a
// splitmix hash so parallel samples are independent of scheduling.
inline std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return std::mt19937_64(z ^ (z >> 31));
}

}  // namespace gaplab
