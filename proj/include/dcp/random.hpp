#pragma once

// Random streams and categorical draws from log-weights.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "dcp/error.hpp"

namespace dcp {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seed for the named sub-stream of a master seed ("data", "chain", ...).
inline std::uint64_t stream_seed(std::uint64_t master, std::string_view name) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : name) h = (h ^ ch) * 1099511628211ull;
  return splitmix64(master ^ splitmix64(h));
}

inline Rng make_stream(std::uint64_t master, std::string_view name) {
  return Rng(stream_seed(master, name));
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw InputError("uniform_index: empty range");
  // Rejection to avoid modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r;
  do r = rng();
  while (r >= limit);
  return static_cast<std::size_t>(r % n);
}

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

inline double standard_normal(Rng& rng) {
  // Box-Muller; one value per call keeps the stream position simple.
  double u1;
  do u1 = uniform01(rng);
  while (u1 <= 0.0);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// log(sum(exp(w))), treating -inf entries as zero mass.
inline double log_sum_exp(std::span<const double> w) {
  if (w.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(w.begin(), w.end());
  if (mx == -std::numeric_limits<double>::infinity()) return mx;
  double s = 0.0;
  for (double v : w) s += std::exp(v - mx);
  return mx + std::log(s);
}

// Normalized probabilities from log-weights.
inline std::vector<double> normalize_log_weights(std::span<const double> w) {
  const double lse = log_sum_exp(w);
  if (!std::isfinite(lse)) throw InputError("normalize_log_weights: no finite weight");
  std::vector<double> p(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) p[i] = std::exp(w[i] - lse);
  return p;
}

// Index drawn with probability proportional to exp(w[i]).
inline std::size_t sample_log_categorical(std::span<const double> w, Rng& rng) {
  const std::vector<double> p = normalize_log_weights(w);
  double u = uniform01(rng);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (u < p[i]) return i;
    u -= p[i];
  }
  // Rounding left u just above the total; return the last positive entry.
  for (std::size_t i = p.size(); i-- > 0;)
    if (p[i] > 0.0) return i;
  return p.size() - 1;
}

}  // namespace dcp
