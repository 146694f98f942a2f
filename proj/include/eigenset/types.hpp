#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>

namespace eigenset {

using Real = double;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

using Rng = std::mt19937_64;

/// Argument violates a documented precondition (maps to CLI exit code 2).
struct invalid_input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Computation would exceed a hard resource guard (maps to CLI exit code 3).
struct resource_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxDim = 6;

inline Vec random_unit_vector(int d, Rng& rng) {
  std::normal_distribution<Real> gauss(0.0, 1.0);
  Vec v(d);
  do {
    for (int i = 0; i < d; ++i) v[i] = gauss(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

}  // namespace eigenset
