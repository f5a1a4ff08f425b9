#pragma once

// Element-level kernels in the current configuration (updated Lagrangian).
//
// The matrix volumetric energy is evaluated with the element mean dilatation
// Jbar = v / V instead of the pointwise Jacobian, so each element carries one
// volumetric constraint. The energy
//
//   E_vol = sum_g W_g U_g(Jbar),   W_g = w_g det(dX/dxi)
//
// yields the internal force (P / V) dv/dx and a symmetric stiffness with the
// second derivative of the current element volume. The isochoric matrix part
// and the fibers are integrated pointwise.

#include "hcmm/material.hpp"
#include "hcmm/shape.hpp"
#include "hcmm/tensor.hpp"

#include <array>
#include <span>

namespace hcmm
{
  inline constexpr int max_element_nodes = 8;
  inline constexpr int max_element_dofs = 3 * max_element_nodes;

  struct ElementResult
  {
    int ndof = 0;
    std::array<double, max_element_dofs> force{};
    std::array<double, max_element_dofs * max_element_dofs> stiffness{};  // row-major ndof x ndof

    double& K(int r, int c) { return stiffness[r * ndof + c]; }
    double K(int r, int c) const { return stiffness[r * ndof + c]; }
  };

  /// Pointwise kinematics at one quadrature point.
  struct PointKinematics
  {
    Tensor2 F;
    double ref_weight = 0.0;  // w det(dX/dxi)
  };

  namespace detail
  {
    template <class Shape>
    struct PointGeometry
    {
      std::array<std::array<double, 3>, Shape::num_nodes> dNdX{};
      double ref_weight = 0.0;
    };

    template <class Shape>
    PointGeometry<Shape> reference_geometry(std::span<const Vec3> X, const QuadPoint& q, int element)
    {
      std::array<double, Shape::num_nodes> N{};
      std::array<std::array<double, 3>, Shape::num_nodes> dN{};
      Shape::eval(q.xi, N, dN);
      Tensor2 J0;
      for (int a = 0; a < Shape::num_nodes; ++a)
        for (int i = 0; i < 3; ++i)
          for (int d = 0; d < 3; ++d) J0(i, d) += X[a][i] * dN[a][d];
      const double dj = det(J0);
      if (!(dj > 0.0)) throw InvertedConfiguration("non-positive reference Jacobian", element);
      const Tensor2 J0inv = inverse(J0);
      PointGeometry<Shape> g;
      g.ref_weight = q.weight * dj;
      for (int a = 0; a < Shape::num_nodes; ++a)
        for (int i = 0; i < 3; ++i)
          g.dNdX[a][i] = dN[a][0] * J0inv(0, i) + dN[a][1] * J0inv(1, i) + dN[a][2] * J0inv(2, i);
      return g;
    }

    template <class Shape>
    Tensor2 deformation_gradient(std::span<const Vec3> x, const PointGeometry<Shape>& g)
    {
      Tensor2 F;
      for (int a = 0; a < Shape::num_nodes; ++a)
        for (int i = 0; i < 3; ++i)
          for (int J = 0; J < 3; ++J) F(i, J) += x[a][i] * g.dNdX[a][J];
      return F;
    }
  }  // namespace detail

  template <class Shape>
  std::array<PointKinematics, Shape::num_points> point_kinematics(
      std::span<const Vec3> X, std::span<const Vec3> x, int element = -1)
  {
    std::array<PointKinematics, Shape::num_points> out{};
    const auto rule = Shape::rule();
    for (int g = 0; g < Shape::num_points; ++g)
    {
      const auto geo = detail::reference_geometry<Shape>(X, rule[g], element);
      out[g] = {detail::deformation_gradient<Shape>(x, geo), geo.ref_weight};
    }
    return out;
  }

  /// Internal force and consistent tangent of one element. `X` reference and
  /// `x` current nodal positions, `states` one entry per quadrature point.
  template <class Shape>
  void element_force_stiffness(std::span<const Vec3> X, std::span<const Vec3> x,
      std::span<const GaussPointState> states, const RegionParams& p, const ModelOptions& opt, bool with_tangent,
      ElementResult& out, int element = -1)
  {
    constexpr int nn = Shape::num_nodes;
    constexpr int nd = 3 * nn;
    constexpr int ng = Shape::num_points;
    out.ndof = nd;
    out.force.fill(0.0);
    if (with_tangent) std::fill(out.stiffness.begin(), out.stiffness.begin() + nd * nd, 0.0);

    const auto rule = Shape::rule();
    double V = 0.0, v = 0.0;
    std::array<Vec3, nn> g{};  // dv/dx_a
    std::array<double, ng> W{}, dvs{};
    std::array<std::array<Vec3, nn>, ng> dns{};

    for (int q = 0; q < ng; ++q)
    {
      const auto geo = detail::reference_geometry<Shape>(X, rule[q], element);
      const Tensor2 F = detail::deformation_gradient<Shape>(x, geo);
      const double J = det(F);
      if (!(J > 0.0)) throw InvertedConfiguration("inverted element", element);
      const Tensor2 Finv = inverse(F);

      // spatial gradients dN/dx = F^-T dN/dX
      auto& dn = dns[q];
      for (int a = 0; a < nn; ++a)
        for (int i = 0; i < 3; ++i)
          dn[a][i] = geo.dNdX[a][0] * Finv(0, i) + geo.dNdX[a][1] * Finv(1, i) + geo.dNdX[a][2] * Finv(2, i);
      const double dv = J * geo.ref_weight;
      W[q] = geo.ref_weight;
      dvs[q] = dv;
      V += geo.ref_weight;
      v += dv;

      const StressTangent st = evaluate_response(F, states[q], p, opt, VolumetricTerm::excluded);
      const Tensor2& s = st.sigma;

      std::array<Vec3, nn> sdn{};
      for (int a = 0; a < nn; ++a)
      {
        sdn[a] = s * dn[a];
        for (int i = 0; i < 3; ++i)
        {
          out.force[3 * a + i] += sdn[a][i] * dv;
          g[a][i] += dn[a][i] * dv;
        }
      }
      if (!with_tangent) continue;

      // K_ab(i,j) += dn_a[k] c_ikjl dn_b[l] dv + (dn_a . sigma dn_b) delta_ij dv
      std::array<double, 81> c{};
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
          for (int j = 0; j < 3; ++j)
            for (int l = 0; l < 3; ++l) c[27 * i + 9 * k + 3 * j + l] = st.c_spatial(i, k, j, l) * dv;
      for (int a = 0; a < nn; ++a)
      {
        std::array<double, 27> M{};  // M(i,j,l) = dn_a[k] c_ikjl
        for (int i = 0; i < 3; ++i)
          for (int k = 0; k < 3; ++k)
          {
            const double d = dn[a][k];
            for (int jl = 0; jl < 9; ++jl) M[9 * i + jl] += d * c[27 * i + 9 * k + jl];
          }
        for (int b = a; b < nn; ++b)
        {
          const double geo_ab = dot(sdn[a], dn[b]) * dv;
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
            {
              const double* m = &M[9 * i + 3 * j];
              out.K(3 * a + i, 3 * b + j) += m[0] * dn[b][0] + m[1] * dn[b][1] + m[2] * dn[b][2] + (i == j ? geo_ab : 0.0);
            }
        }
      }
    }

    const double Jbar = v / V;
    double P = 0.0, dP = 0.0;
    for (int q = 0; q < ng; ++q)
    {
      const VolumetricEnergy e = volumetric_energy(Jbar, states[q], p);
      P += W[q] * e.dU;
      dP += W[q] * e.d2U;
    }
    for (int a = 0; a < nn; ++a)
      for (int i = 0; i < 3; ++i) out.force[3 * a + i] += (P / V) * g[a][i];
    if (!with_tangent) return;

    // d2U/dJbar2 g g^T + (P / V) d2v/dx2
    const double kv = dP / (V * V);
    for (int a = 0; a < nn; ++a)
      for (int b = a; b < nn; ++b)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) out.K(3 * a + i, 3 * b + j) += kv * g[a][i] * g[b][j];
    for (int q = 0; q < ng; ++q)
    {
      const auto& dn = dns[q];
      const double s = (P / V) * dvs[q];
      for (int a = 0; a < nn; ++a)
        for (int b = a; b < nn; ++b)
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
              out.K(3 * a + i, 3 * b + j) += s * (dn[a][i] * dn[b][j] - dn[a][j] * dn[b][i]);
    }
    // mirror the upper block triangle
    for (int a = 0; a < nn; ++a)
      for (int b = a + 1; b < nn; ++b)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) out.K(3 * b + j, 3 * a + i) = out.K(3 * a + i, 3 * b + j);
  }

  /// Element mean dilatation v / V.
  template <class Shape>
  double mean_dilatation(std::span<const Vec3> X, std::span<const Vec3> x)
  {
    double V = 0.0, v = 0.0;
    for (const auto& pk : point_kinematics<Shape>(X, x))
    {
      V += pk.ref_weight;
      v += det(pk.F) * pk.ref_weight;
    }
    return v / V;
  }

  // ---------------------------------------------------------------------------
  // Follower pressure

  struct FacetResult
  {
    int nn = 0;
    std::array<double, 12> force{};
    std::array<double, 144> stiffness{};  // d force / d x, unsymmetrized, row-major
  };

  /// Pressure p acting along x_xi × x_eta on a facet with current nodal positions x.
  template <class Facet>
  void pressure_facet(std::span<const Vec3> x, double p, FacetResult& out)
  {
    constexpr int nn = Facet::num_nodes;
    out.nn = nn;
    out.force.fill(0.0);
    out.stiffness.fill(0.0);
    for (const auto& q : Facet::rule())
    {
      std::array<double, nn> N{};
      std::array<std::array<double, 2>, nn> dN{};
      Facet::eval(q.xi, N, dN);
      Vec3 t1{}, t2{};
      for (int a = 0; a < nn; ++a)
      {
        t1 = t1 + dN[a][0] * x[a];
        t2 = t2 + dN[a][1] * x[a];
      }
      const Vec3 n = cross(t1, t2);
      if (!(norm(n) > 0.0)) throw MeshError("degenerate pressure facet");
      const double w = p * q.weight;
      for (int a = 0; a < nn; ++a)
        for (int i = 0; i < 3; ++i) out.force[3 * a + i] += w * N[a] * n[i];
      // d n = N_b,xi (dx_b × t2) + N_b,eta (t1 × dx_b)
      for (int a = 0; a < nn; ++a)
        for (int b = 0; b < nn; ++b)
        {
          const double c1 = w * N[a] * dN[b][0];
          const double c2 = w * N[a] * dN[b][1];
          // dx × t2 = -[t2]x dx ; t1 × dx = [t1]x dx
          const std::array<std::array<double, 3>, 3> m = {{{0.0, c1 * t2[2] - c2 * t1[2], -c1 * t2[1] + c2 * t1[1]},
              {-c1 * t2[2] + c2 * t1[2], 0.0, c1 * t2[0] - c2 * t1[0]},
              {c1 * t2[1] - c2 * t1[1], -c1 * t2[0] + c2 * t1[0], 0.0}}};
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out.stiffness[(3 * a + i) * (3 * nn) + 3 * b + j] += m[i][j];
        }
    }
  }
}  // namespace hcmm
