#pragma once

// Small fixed-size tensor algebra in three dimensions.
//
// Tensor2 stores all nine components row-major, symmetric or not.
// Tensor4 stores a fourth-order tensor with minor symmetries
// (T_ijkl = T_jikl = T_ijlk) as a 6x6 matrix M(I, J) = T_ijkl where the
// pair index map is
//
//   I : 0 -> (0,0)  1 -> (1,1)  2 -> (2,2)  3 -> (0,1)  4 -> (1,2)  5 -> (0,2)
//
// No Voigt weighting is folded into the stored components. Contractions with
// symmetric second-order tensors account for the two off-diagonal entries
// explicitly. FullTensor4 keeps all 81 components for products that lack
// minor symmetry.

#include "hcmm/errors.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <utility>

namespace hcmm
{
  using Vec3 = std::array<double, 3>;

  inline constexpr Vec3 operator+(const Vec3& a, const Vec3& b)
  {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
  }
  inline constexpr Vec3 operator-(const Vec3& a, const Vec3& b)
  {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
  }
  inline constexpr Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
  inline constexpr double dot(const Vec3& a, const Vec3& b)
  {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  }
  inline constexpr Vec3 cross(const Vec3& a, const Vec3& b)
  {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
  }
  inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
  inline Vec3 normalized(const Vec3& a) { return (1.0 / norm(a)) * a; }

  struct Tensor2
  {
    std::array<double, 9> c{};

    constexpr double& operator()(int i, int j) { return c[3 * i + j]; }
    constexpr double operator()(int i, int j) const { return c[3 * i + j]; }

    static constexpr Tensor2 zero() { return {}; }
    static constexpr Tensor2 identity()
    {
      Tensor2 t;
      t(0, 0) = t(1, 1) = t(2, 2) = 1.0;
      return t;
    }
    static constexpr Tensor2 diagonal(double a, double b, double d)
    {
      Tensor2 t;
      t(0, 0) = a;
      t(1, 1) = b;
      t(2, 2) = d;
      return t;
    }

    constexpr Tensor2& operator+=(const Tensor2& o)
    {
      for (std::size_t n = 0; n < 9; ++n) c[n] += o.c[n];
      return *this;
    }
    constexpr Tensor2& operator-=(const Tensor2& o)
    {
      for (std::size_t n = 0; n < 9; ++n) c[n] -= o.c[n];
      return *this;
    }
    constexpr Tensor2& operator*=(double s)
    {
      for (auto& v : c) v *= s;
      return *this;
    }

    constexpr bool operator==(const Tensor2&) const = default;
  };

  inline constexpr Tensor2 operator+(Tensor2 a, const Tensor2& b) { return a += b; }
  inline constexpr Tensor2 operator-(Tensor2 a, const Tensor2& b) { return a -= b; }
  inline constexpr Tensor2 operator*(double s, Tensor2 a) { return a *= s; }
  inline constexpr Tensor2 operator*(Tensor2 a, double s) { return a *= s; }

  inline constexpr Tensor2 operator*(const Tensor2& a, const Tensor2& b)
  {
    Tensor2 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        r(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j) + a(i, 2) * b(2, j);
    return r;
  }

  inline constexpr Vec3 operator*(const Tensor2& a, const Vec3& v)
  {
    return {a(0, 0) * v[0] + a(0, 1) * v[1] + a(0, 2) * v[2],
        a(1, 0) * v[0] + a(1, 1) * v[1] + a(1, 2) * v[2],
        a(2, 0) * v[0] + a(2, 1) * v[1] + a(2, 2) * v[2]};
  }

  inline constexpr Tensor2 transpose(const Tensor2& a)
  {
    Tensor2 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = a(j, i);
    return r;
  }

  inline constexpr double trace(const Tensor2& a) { return a(0, 0) + a(1, 1) + a(2, 2); }

  inline constexpr double det(const Tensor2& a)
  {
    return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
           a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
           a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  }

  /// Inverse via the adjugate. Throws InvertedConfiguration on a zero determinant.
  inline Tensor2 inverse(const Tensor2& a)
  {
    const double d = det(a);
    if (d == 0.0 || !std::isfinite(d)) throw InvertedConfiguration("inverse of a singular Tensor2");
    Tensor2 r;
    r(0, 0) = (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) / d;
    r(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) / d;
    r(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) / d;
    r(1, 0) = (a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2)) / d;
    r(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) / d;
    r(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) / d;
    r(2, 0) = (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)) / d;
    r(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) / d;
    r(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) / d;
    return r;
  }

  inline constexpr double ddot(const Tensor2& a, const Tensor2& b)
  {
    double s = 0.0;
    for (std::size_t n = 0; n < 9; ++n) s += a.c[n] * b.c[n];
    return s;
  }

  inline double frobenius(const Tensor2& a) { return std::sqrt(ddot(a, a)); }

  inline constexpr Tensor2 outer(const Vec3& a, const Vec3& b)
  {
    Tensor2 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = a[i] * b[j];
    return r;
  }

  inline constexpr Tensor2 sym(const Tensor2& a) { return 0.5 * (a + transpose(a)); }

  // ---------------------------------------------------------------------------

  namespace voigt
  {
    inline constexpr std::array<std::pair<int, int>, 6> pairs = {
        {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {1, 2}, {0, 2}}};

    inline constexpr std::array<std::array<int, 3>, 3> index = {{{0, 3, 5}, {3, 1, 4}, {5, 4, 2}}};

    inline constexpr int of(int i, int j) { return index[i][j]; }
    inline constexpr bool is_shear(int I) { return I >= 3; }
  }  // namespace voigt

  struct Tensor4
  {
    std::array<double, 36> m{};

    constexpr double& at(int I, int J) { return m[6 * I + J]; }
    constexpr double at(int I, int J) const { return m[6 * I + J]; }
    constexpr double operator()(int i, int j, int k, int l) const
    {
      return m[6 * voigt::of(i, j) + voigt::of(k, l)];
    }

    constexpr Tensor4& operator+=(const Tensor4& o)
    {
      for (std::size_t n = 0; n < 36; ++n) m[n] += o.m[n];
      return *this;
    }
    constexpr Tensor4& operator-=(const Tensor4& o)
    {
      for (std::size_t n = 0; n < 36; ++n) m[n] -= o.m[n];
      return *this;
    }
    constexpr Tensor4& operator*=(double s)
    {
      for (auto& v : m) v *= s;
      return *this;
    }
  };

  inline constexpr Tensor4 operator+(Tensor4 a, const Tensor4& b) { return a += b; }
  inline constexpr Tensor4 operator-(Tensor4 a, const Tensor4& b) { return a -= b; }
  inline constexpr Tensor4 operator*(double s, Tensor4 a) { return a *= s; }

  /// T : X for symmetric X.
  inline constexpr Tensor2 contract(const Tensor4& t, const Tensor2& x)
  {
    std::array<double, 6> xv{};
    for (int J = 0; J < 6; ++J)
    {
      const auto [k, l] = voigt::pairs[J];
      xv[J] = voigt::is_shear(J) ? x(k, l) + x(l, k) : x(k, l);
    }
    Tensor2 r;
    for (int I = 0; I < 6; ++I)
    {
      double s = 0.0;
      for (int J = 0; J < 6; ++J) s += t.at(I, J) * xv[J];
      const auto [i, j] = voigt::pairs[I];
      r(i, j) = s;
      r(j, i) = s;
    }
    return r;
  }

  /// Largest absolute component, used for relative error measures.
  inline double max_abs(const Tensor4& t)
  {
    double s = 0.0;
    for (double v : t.m) s = std::max(s, std::abs(v));
    return s;
  }
  inline double max_abs(const Tensor2& t)
  {
    double s = 0.0;
    for (double v : t.c) s = std::max(s, std::abs(v));
    return s;
  }

  struct FullTensor4
  {
    std::array<double, 81> c{};

    constexpr double& operator()(int i, int j, int k, int l) { return c[27 * i + 9 * j + 3 * k + l]; }
    constexpr double operator()(int i, int j, int k, int l) const
    {
      return c[27 * i + 9 * j + 3 * k + l];
    }
  };

  // ---------------------------------------------------------------------------
  // Products

  /// (A ⊗ B)_ijkl = A_ij B_kl. A and B must be symmetric for the minor-symmetric
  /// storage to be exact; use dyad_full otherwise.
  inline constexpr Tensor4 dyad(const Tensor2& a, const Tensor2& b)
  {
    Tensor4 r;
    for (int I = 0; I < 6; ++I)
      for (int J = 0; J < 6; ++J)
      {
        const auto [i, j] = voigt::pairs[I];
        const auto [k, l] = voigt::pairs[J];
        r.at(I, J) = a(i, j) * b(k, l);
      }
    return r;
  }

  inline constexpr FullTensor4 dyad_full(const Tensor2& a, const Tensor2& b)
  {
    FullTensor4 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) r(i, j, k, l) = a(i, j) * b(k, l);
    return r;
  }

  /// (A ⊙ B)_ijkl = 1/2 (A_ik B_jl + A_il B_jk).
  inline constexpr Tensor4 sym_outer(const Tensor2& a, const Tensor2& b)
  {
    Tensor4 r;
    for (int I = 0; I < 6; ++I)
      for (int J = 0; J < 6; ++J)
      {
        const auto [i, j] = voigt::pairs[I];
        const auto [k, l] = voigt::pairs[J];
        r.at(I, J) = 0.5 * (a(i, k) * b(j, l) + a(i, l) * b(j, k));
      }
    return r;
  }

  /// Returns {A ⊗̲ B, A ⊗̄ B} with components A_ik B_jl and A_il B_jk.
  inline constexpr std::pair<FullTensor4, FullTensor4> square_dyads(const Tensor2& a, const Tensor2& b)
  {
    FullTensor4 under, over;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l)
          {
            under(i, j, k, l) = a(i, k) * b(j, l);
            over(i, j, k, l) = a(i, l) * b(j, k);
          }
    return {under, over};
  }

  /// Fourth-order identity on symmetric tensors, S = I ⊙ I.
  inline constexpr Tensor4 identity_sym() { return sym_outer(Tensor2::identity(), Tensor2::identity()); }

  /// a ⊗ a ⊗ a ⊗ a for a vector a.
  inline constexpr Tensor4 fourfold(const Vec3& a)
  {
    Tensor4 r;
    for (int I = 0; I < 6; ++I)
      for (int J = 0; J < 6; ++J)
      {
        const auto [i, j] = voigt::pairs[I];
        const auto [k, l] = voigt::pairs[J];
        r.at(I, J) = a[i] * a[j] * a[k] * a[l];
      }
    return r;
  }

  /// c_ijkl = (1/J) F_iI F_jJ F_kK F_lL C_IJKL.
  inline Tensor4 push_forward(const Tensor4& cmat, const Tensor2& f, double jac)
  {
    if (!(jac > 0.0)) throw InvertedConfiguration("push_forward requires J > 0");
    // T(a, A) collects F_iI F_jJ over the (I,J) and (J,I) entries of pair A.
    std::array<double, 36> t{};
    for (int a = 0; a < 6; ++a)
    {
      const auto [i, j] = voigt::pairs[a];
      for (int A = 0; A < 6; ++A)
      {
        const auto [I, J] = voigt::pairs[A];
        t[6 * a + A] = voigt::is_shear(A) ? f(i, I) * f(j, J) + f(i, J) * f(j, I) : f(i, I) * f(j, I);
      }
    }
    std::array<double, 36> tc{};
    for (int a = 0; a < 6; ++a)
      for (int B = 0; B < 6; ++B)
      {
        double s = 0.0;
        for (int A = 0; A < 6; ++A) s += t[6 * a + A] * cmat.at(A, B);
        tc[6 * a + B] = s;
      }
    Tensor4 r;
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b)
      {
        double s = 0.0;
        for (int B = 0; B < 6; ++B) s += tc[6 * a + B] * t[6 * b + B];
        r.at(a, b) = s / jac;
      }
    return r;
  }
}  // namespace hcmm
