#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ergo {

/// Largest state / noise dimension supported by the fixed-capacity vector types.
/// Every catalogue model lives in N <= 3; the OU calibration model may go higher.
inline constexpr int kMaxDim = 8;
inline constexpr int kMaxNoise = 2 * kMaxDim;

// Dynamic size with a compile-time capacity: no heap traffic in the inner loops.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using NoiseVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxNoise, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor, kMaxDim,
                          kMaxDim>;
using SigmaMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor, kMaxDim,
                               kMaxNoise>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-facing parameters (non-positive rates, bad ranges, malformed specs).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Operation not defined for the given model or field representation.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

inline Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace ergo
