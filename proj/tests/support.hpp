#pragma once

#include "hcmm/tensor.hpp"

#include <cmath>
#include <random>

namespace hcmm::test
{
  inline Tensor2 random_tensor(std::mt19937_64& rng, double lo = -1.0, double hi = 1.0)
  {
    std::uniform_real_distribution<double> U(lo, hi);
    Tensor2 t;
    for (auto& v : t.c) v = U(rng);
    return t;
  }

  inline Tensor2 random_symmetric(std::mt19937_64& rng)
  {
    return sym(random_tensor(rng));
  }

  /// Random tensor with minor symmetries, filled through the pair storage.
  inline Tensor4 random_minor_symmetric(std::mt19937_64& rng)
  {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Tensor4 t;
    for (auto& v : t.m) v = U(rng);
    return t;
  }

  /// Proper rotation from a random unit quaternion.
  inline Tensor2 random_rotation(std::mt19937_64& rng)
  {
    std::normal_distribution<double> N;
    double q[4];
    double n = 0.0;
    for (double& v : q)
    {
      v = N(rng);
      n += v * v;
    }
    n = std::sqrt(n);
    const double w = q[0] / n, x = q[1] / n, y = q[2] / n, z = q[3] / n;
    Tensor2 R;
    R(0, 0) = 1 - 2 * (y * y + z * z);
    R(0, 1) = 2 * (x * y - z * w);
    R(0, 2) = 2 * (x * z + y * w);
    R(1, 0) = 2 * (x * y + z * w);
    R(1, 1) = 1 - 2 * (x * x + z * z);
    R(1, 2) = 2 * (y * z - x * w);
    R(2, 0) = 2 * (x * z - y * w);
    R(2, 1) = 2 * (y * z + x * w);
    R(2, 2) = 1 - 2 * (x * x + y * y);
    return R;
  }

  inline double max_diff(const Tensor2& a, const Tensor2& b)
  {
    double m = 0.0;
    for (int i = 0; i < 9; ++i) m = std::max(m, std::abs(a.c[i] - b.c[i]));
    return m;
  }
}  // namespace hcmm::test
