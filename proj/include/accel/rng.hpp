/**
 * @file rng.hpp
 * @brief Deterministic per-(seed, trial, purpose) random streams.
 *
 * Every consumer of randomness names its stream explicitly so that trials can
 * run in any order (or in parallel) and still reproduce bit-identically.
 */
#pragma once

#include <cstdint>
#include <random>
#include <Eigen/Dense>

namespace accel {

/// splitmix64 finalizer; mixes a 64-bit word thoroughly.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Named purposes keep streams disjoint without a registry.
enum class StreamPurpose : std::uint64_t {
  Tensor = 1,     ///< synthetic tensor construction (factors, core)
  Noise1 = 2,     ///< homoskedastic noise stage
  Noise2 = 3,     ///< heteroskedastic noise stage
  Init = 4,       ///< solver initial guess
  Misc = 5,
};

/// Deterministic stream: a mt19937_64 seeded from the mixed triple.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t trial,
                                   StreamPurpose purpose) {
  std::uint64_t s = mix64(seed);
  s = mix64(s ^ mix64(trial + 0x1000));
  s = mix64(s ^ mix64(static_cast<std::uint64_t>(purpose) + 0x2000));
  return std::mt19937_64(s);
}

/// Matrix with i.i.d. standard-normal entries, filled column-major.
inline Eigen::MatrixXd randn(std::mt19937_64& gen, int rows, int cols) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = nd(gen);
  return m;
}

/// Matrix with i.i.d. uniform [0,1) entries, filled column-major.
inline Eigen::MatrixXd randu(std::mt19937_64& gen, int rows, int cols) {
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = ud(gen);
  return m;
}

/// Random orthonormal rows×cols matrix (rows >= cols): QR of a Gaussian
/// matrix with the R diagonal sign-fixed, which makes the draw unique.
inline Eigen::MatrixXd random_orthonormal(std::mt19937_64& gen, int rows, int cols) {
  Eigen::MatrixXd g = randn(gen, rows, cols);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(cols, cols);
  for (int j = 0; j < cols; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace accel
