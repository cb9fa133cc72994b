#pragma once

#include "cotfm/core.hpp"

#include <cstdint>
#include <random>

namespace cotfm {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Engine for `stream` derived from `seed`. Distinct streams are decorrelated,
/// so per-sample or per-chain generators can be built from a counter.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL)));
}

inline double uniform01(Rng& rng) {
  // 53 random mantissa bits, in [0, 1).
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline Index uniform_index(Rng& rng, Index n) {
  return static_cast<Index>(std::uniform_int_distribution<std::int64_t>(0, n - 1)(rng));
}

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

/// Fills `m` with i.i.d. standard normal draws in storage order.
template <typename Derived>
void fill_normal(Rng& rng, Eigen::DenseBase<Derived>& m) {
  std::normal_distribution<double> dist(0.0, 1.0);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
}

inline RowMatrix normal_matrix(Rng& rng, Index rows, Index cols) {
  RowMatrix m(rows, cols);
  fill_normal(rng, m);
  return m;
}

}  // namespace cotfm
