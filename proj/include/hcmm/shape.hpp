#pragma once

// Isoparametric shape functions and quadrature rules for the solid elements
// and their pressure facets.

#include <array>
#include <cmath>

namespace hcmm
{
  struct QuadPoint
  {
    std::array<double, 3> xi{};
    double weight = 0.0;
  };

  /// Trilinear hexahedron with full 2x2x2 Gauss quadrature. Node order:
  /// (-1,-1,-1) (1,-1,-1) (1,1,-1) (-1,1,-1), then the same at zeta = +1.
  struct Hex8
  {
    static constexpr int num_nodes = 8;
    static constexpr int num_points = 8;

    static constexpr std::array<std::array<double, 3>, 8> corners = {{{-1, -1, -1}, {1, -1, -1}, {1, 1, -1},
        {-1, 1, -1}, {-1, -1, 1}, {1, -1, 1}, {1, 1, 1}, {-1, 1, 1}}};

    static std::array<QuadPoint, 8> rule()
    {
      const double g = 1.0 / std::sqrt(3.0);
      std::array<QuadPoint, 8> q{};
      for (int n = 0; n < 8; ++n)
        q[n] = {{g * corners[n][0], g * corners[n][1], g * corners[n][2]}, 1.0};
      return q;
    }

    static void eval(const std::array<double, 3>& xi, std::array<double, 8>& N,
        std::array<std::array<double, 3>, 8>& dN)
    {
      for (int a = 0; a < 8; ++a)
      {
        const double sx = corners[a][0], sy = corners[a][1], sz = corners[a][2];
        const double fx = 1.0 + sx * xi[0], fy = 1.0 + sy * xi[1], fz = 1.0 + sz * xi[2];
        N[a] = 0.125 * fx * fy * fz;
        dN[a] = {0.125 * sx * fy * fz, 0.125 * fx * sy * fz, 0.125 * fx * fy * sz};
      }
    }
  };

  /// Linear wedge: triangle (1 - xi - eta, xi, eta) times a linear interpolation
  /// in zeta. Nodes 0-2 at zeta = -1, nodes 3-5 at zeta = +1. Quadrature is the
  /// 3-point edge-midpoint triangle rule times 2-point Gauss in zeta.
  struct Wedge6
  {
    static constexpr int num_nodes = 6;
    static constexpr int num_points = 6;

    static std::array<QuadPoint, 6> rule()
    {
      const double g = 1.0 / std::sqrt(3.0);
      constexpr std::array<std::array<double, 2>, 3> tri = {{{0.5, 0.0}, {0.5, 0.5}, {0.0, 0.5}}};
      std::array<QuadPoint, 6> q{};
      int n = 0;
      for (double z : {-g, g})
        for (const auto& t : tri) q[n++] = {{t[0], t[1], z}, 1.0 / 6.0};
      return q;
    }

    static void eval(const std::array<double, 3>& xi, std::array<double, 6>& N,
        std::array<std::array<double, 3>, 6>& dN)
    {
      const std::array<double, 3> L = {1.0 - xi[0] - xi[1], xi[0], xi[1]};
      constexpr std::array<std::array<double, 2>, 3> dL = {{{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}}};
      for (int h = 0; h < 2; ++h)
      {
        const double s = h == 0 ? -1.0 : 1.0;
        const double fz = 0.5 * (1.0 + s * xi[2]);
        for (int t = 0; t < 3; ++t)
        {
          const int a = 3 * h + t;
          N[a] = L[t] * fz;
          dN[a] = {dL[t][0] * fz, dL[t][1] * fz, L[t] * 0.5 * s};
        }
      }
    }
  };

  /// Bilinear quadrilateral facet, 2x2 Gauss.
  struct Quad4
  {
    static constexpr int num_nodes = 4;
    static constexpr int num_points = 4;

    static std::array<QuadPoint, 4> rule()
    {
      const double g = 1.0 / std::sqrt(3.0);
      return {{{{-g, -g, 0}, 1.0}, {{g, -g, 0}, 1.0}, {{g, g, 0}, 1.0}, {{-g, g, 0}, 1.0}}};
    }

    static void eval(const std::array<double, 3>& xi, std::array<double, 4>& N,
        std::array<std::array<double, 2>, 4>& dN)
    {
      constexpr std::array<std::array<double, 2>, 4> c = {{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}};
      for (int a = 0; a < 4; ++a)
      {
        const double fx = 1.0 + c[a][0] * xi[0], fy = 1.0 + c[a][1] * xi[1];
        N[a] = 0.25 * fx * fy;
        dN[a] = {0.25 * c[a][0] * fy, 0.25 * fx * c[a][1]};
      }
    }
  };

  /// Linear triangle facet, 3-point rule.
  struct Tri3
  {
    static constexpr int num_nodes = 3;
    static constexpr int num_points = 3;

    static std::array<QuadPoint, 3> rule()
    {
      return {{{{0.5, 0.0, 0}, 1.0 / 6.0}, {{0.5, 0.5, 0}, 1.0 / 6.0}, {{0.0, 0.5, 0}, 1.0 / 6.0}}};
    }

    static void eval(const std::array<double, 3>& xi, std::array<double, 3>& N,
        std::array<std::array<double, 2>, 3>& dN)
    {
      N = {1.0 - xi[0] - xi[1], xi[0], xi[1]};
      dN = {{{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}}};
    }
  };
}  // namespace hcmm
