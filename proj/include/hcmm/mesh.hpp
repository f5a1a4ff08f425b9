#pragma once

// Structured mesh of a thin sector of a hemispherical shell.
//
// Coordinates: the polar axis is +z, the posterior pole sits at
// (0, 0, r) and the equator at z = 0. A node is addressed by its meridional
// station j (polar angle phi_j, j = 0 on the axis), its azimuthal plane p
// (0 at azimuth 0, 1 at the sector angle) and its through-thickness level k
// (k = 0 on the inner surface). Stations j >= 1 carry one node per plane;
// the axis station carries a single node shared by both planes.
//
// Elements between stations 0 and 1 are wedges, all others hexahedra.

#include "hcmm/errors.hpp"
#include "hcmm/shape.hpp"
#include "hcmm/tensor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace hcmm
{
  enum class Region : int
  {
    lc = 0,
    pps = 1,
    ps = 2
  };

  inline const char* region_name(Region r)
  {
    switch (r)
    {
      case Region::lc:
        return "lc";
      case Region::pps:
        return "pps";
      case Region::ps:
        return "ps";
    }
    return "?";
  }

  enum class ElementType
  {
    hex8,
    wedge6
  };

  struct MeshConfig
  {
    double inner_radius = 0.012;  // m
    double thickness = 0.0005;    // m
    double sector_angle_deg = 3.0;
    double lc_boundary_deg = 4.0;
    double pps_boundary_deg = 30.0;
    int lc_divisions = 2;
    int pps_divisions = 9;
    int ps_divisions = 20;
    int layers = 30;

    bool operator==(const MeshConfig&) const = default;

    int meridional_divisions() const { return lc_divisions + pps_divisions + ps_divisions; }

    void validate() const
    {
      if (!(inner_radius > 0.0)) throw InvalidParameter("mesh.inner_radius must be > 0");
      if (!(thickness > 0.0)) throw InvalidParameter("mesh.thickness must be > 0");
      if (!(sector_angle_deg > 0.0 && sector_angle_deg < 180.0))
        throw InvalidParameter("mesh.sector_angle_deg must lie in (0, 180): pole elements would be degenerate");
      if (!(lc_boundary_deg > 0.0 && lc_boundary_deg < pps_boundary_deg && pps_boundary_deg < 90.0))
        throw InvalidParameter("mesh region boundaries must satisfy 0 < lc < pps < 90 degrees");
      if (lc_divisions < 1 || pps_divisions < 1 || ps_divisions < 1)
        throw InvalidParameter("mesh divisions must be >= 1 per region");
      if (layers < 1) throw InvalidParameter("mesh.layers must be >= 1");
    }

    /// Splits `total` meridional divisions across the regions proportionally
    /// to their angular spans, with at least `min_lc` divisions in the LC.
    static MeshConfig with_total_divisions(int total, int layers, int min_lc = 2)
    {
      MeshConfig c;
      c.layers = layers;
      if (total < min_lc + 2) throw InvalidParameter("too few meridional divisions");
      const double lc_span = c.lc_boundary_deg;
      const double pps_span = c.pps_boundary_deg - c.lc_boundary_deg;
      const double ps_span = 90.0 - c.pps_boundary_deg;
      c.lc_divisions = std::max(min_lc, static_cast<int>(std::lround(total * lc_span / 90.0)));
      const int rest = total - c.lc_divisions;
      c.pps_divisions = std::max(1, static_cast<int>(std::lround(rest * pps_span / (pps_span + ps_span))));
      c.ps_divisions = rest - c.pps_divisions;
      if (c.ps_divisions < 1) throw InvalidParameter("too few meridional divisions");
      return c;
    }

    /// Every division count multiplied by `factor`.
    MeshConfig refined(int factor) const
    {
      MeshConfig c = *this;
      c.lc_divisions *= factor;
      c.pps_divisions *= factor;
      c.ps_divisions *= factor;
      c.layers *= factor;
      return c;
    }
  };

  struct Element
  {
    ElementType type = ElementType::hex8;
    std::array<int, 8> nodes{};
    Region region = Region::ps;

    int num_nodes() const { return type == ElementType::hex8 ? 8 : 6; }
    int num_points() const { return type == ElementType::hex8 ? Hex8::num_points : Wedge6::num_points; }
  };

  /// Local material frame at a quadrature point.
  struct MaterialFrame
  {
    Vec3 a0_fc;    // circumferential
    Vec3 a0_fm;    // meridional, pole to equator
    Vec3 a0_perp;  // radial (transmural)
  };

  /// Inner-surface facet. Node order makes x_xi × x_eta point into the tissue.
  struct PressureFacet
  {
    int element = -1;
    std::array<int, 4> nodes{};
    int num_nodes = 4;
  };

  /// Nodes whose displacement along `normal` is held at zero.
  struct ConstraintSet
  {
    std::string name;
    std::vector<int> nodes;
    Vec3 normal;
  };

  struct Mesh
  {
    MeshConfig config;
    std::vector<Vec3> nodes;
    std::vector<Element> elements;
    std::vector<std::vector<MaterialFrame>> frames;  // [element][quadrature point]
    std::vector<PressureFacet> pressure_facets;
    std::vector<ConstraintSet> constraints;
    Vec3 polar_axis{0.0, 0.0, 1.0};
    int apex_node = -1;                              // mid-surface node on the axis
    std::vector<std::pair<int, int>> pps_columns;   // (inner, outer) nodes of each PPS station
    std::vector<double> station_angles_deg;
    std::vector<std::string> warnings;

    int count(ElementType t) const
    {
      return static_cast<int>(std::count_if(
          elements.begin(), elements.end(), [t](const Element& e) { return e.type == t; }));
    }
    int num_points() const
    {
      int n = 0;
      for (const auto& e : elements) n += e.num_points();
      return n;
    }
  };

  namespace detail
  {
    inline double deg(double d) { return d * std::numbers::pi / 180.0; }

    struct NodeIndexer
    {
      int layers;
      int axis(int k) const { return k; }
      int at(int j, int p, int k) const
      {
        return j == 0 ? axis(k) : (layers + 1) + ((j - 1) * 2 + p) * (layers + 1) + k;
      }
    };

    template <class Shape>
    Vec3 interpolate(const std::vector<Vec3>& x, const Element& e, const std::array<double, 3>& xi)
    {
      std::array<double, Shape::num_nodes> N{};
      std::array<std::array<double, 3>, Shape::num_nodes> dN{};
      Shape::eval(xi, N, dN);
      Vec3 r{};
      for (int a = 0; a < Shape::num_nodes; ++a) r = r + N[a] * x[e.nodes[a]];
      return r;
    }

    template <class Shape>
    double min_jacobian(const std::vector<Vec3>& x, const Element& e)
    {
      double m = 1e300;
      for (const auto& q : Shape::rule())
      {
        std::array<double, Shape::num_nodes> N{};
        std::array<std::array<double, 3>, Shape::num_nodes> dN{};
        Shape::eval(q.xi, N, dN);
        Tensor2 jm;
        for (int a = 0; a < Shape::num_nodes; ++a)
          for (int i = 0; i < 3; ++i)
            for (int d = 0; d < 3; ++d) jm(i, d) += x[e.nodes[a]][i] * dN[a][d];
        m = std::min(m, det(jm));
      }
      return m;
    }
  }  // namespace detail

  /// Spherical frame at a point: meridional and circumferential tangents plus the radial direction.
  inline MaterialFrame spherical_frame(const Vec3& x)
  {
    const double r = norm(x);
    const double rho = std::hypot(x[0], x[1]);
    if (rho < 1e-14 * r) throw MeshError("material frame undefined on the polar axis");
    const double cp = x[2] / r, sp = rho / r;
    const double ct = x[0] / rho, st = x[1] / rho;
    MaterialFrame f;
    f.a0_perp = {sp * ct, sp * st, cp};
    f.a0_fm = {cp * ct, cp * st, -sp};
    f.a0_fc = {-st, ct, 0.0};
    return f;
  }

  inline double polar_angle_deg(const Vec3& x, const Vec3& axis = {0.0, 0.0, 1.0})
  {
    const double c = std::clamp(dot(x, axis) / norm(x), -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
  }

  inline double min_jacobian(const Mesh& m, const Element& e)
  {
    return e.type == ElementType::hex8 ? detail::min_jacobian<Hex8>(m.nodes, e)
                                       : detail::min_jacobian<Wedge6>(m.nodes, e);
  }

  inline std::vector<Vec3> quadrature_positions(const Mesh& m, const Element& e)
  {
    std::vector<Vec3> out;
    if (e.type == ElementType::hex8)
      for (const auto& q : Hex8::rule()) out.push_back(detail::interpolate<Hex8>(m.nodes, e, q.xi));
    else
      for (const auto& q : Wedge6::rule()) out.push_back(detail::interpolate<Wedge6>(m.nodes, e, q.xi));
    return out;
  }

  /// Fills the per-quadrature-point material frames. Quadrature points of the
  /// pole wedges lie strictly off the axis, so the frame is always defined.
  inline void material_frames(Mesh& m)
  {
    m.frames.assign(m.elements.size(), {});
    for (std::size_t e = 0; e < m.elements.size(); ++e)
      for (const Vec3& x : quadrature_positions(m, m.elements[e])) m.frames[e].push_back(spherical_frame(x));
  }

  /// Equator (zero displacement along the polar axis) and the two sector faces
  /// (zero displacement normal to the meridian plane).
  inline std::vector<ConstraintSet> constraint_sets(const Mesh& m) { return m.constraints; }

  inline Mesh generate(const MeshConfig& cfg)
  {
    cfg.validate();
    Mesh m;
    m.config = cfg;
    const int nt = cfg.layers;
    const int nm = cfg.meridional_divisions();
    const detail::NodeIndexer idx{nt};

    std::vector<double> phi(nm + 1);
    {
      int j = 0;
      const auto fill = [&](double a0, double a1, int n) {
        for (int s = 0; s < n; ++s) phi[j++] = a0 + (a1 - a0) * s / n;
      };
      fill(0.0, cfg.lc_boundary_deg, cfg.lc_divisions);
      fill(cfg.lc_boundary_deg, cfg.pps_boundary_deg, cfg.pps_divisions);
      fill(cfg.pps_boundary_deg, 90.0, cfg.ps_divisions);
      phi[nm] = 90.0;
    }
    m.station_angles_deg = phi;

    const double alpha = detail::deg(cfg.sector_angle_deg);
    m.nodes.resize(static_cast<std::size_t>((nt + 1) * (1 + 2 * nm)));
    for (int k = 0; k <= nt; ++k)
    {
      const double r = cfg.inner_radius + cfg.thickness * k / nt;
      m.nodes[idx.axis(k)] = {0.0, 0.0, r};
      for (int j = 1; j <= nm; ++j)
      {
        const double ph = detail::deg(phi[j]);
        // the equator sits exactly on z = 0
        const double cz = j == nm ? 0.0 : std::cos(ph);
        const double sz = j == nm ? 1.0 : std::sin(ph);
        for (int p = 0; p < 2; ++p)
        {
          const double th = p == 0 ? 0.0 : alpha;
          m.nodes[idx.at(j, p, k)] = {r * sz * std::cos(th), r * sz * std::sin(th), r * cz};
        }
      }
    }

    for (int j = 0; j < nm; ++j)
      for (int k = 0; k < nt; ++k)
      {
        Element e;
        if (j == 0)
        {
          e.type = ElementType::wedge6;
          e.nodes = {idx.axis(k), idx.at(1, 0, k), idx.at(1, 1, k), idx.axis(k + 1), idx.at(1, 0, k + 1),
              idx.at(1, 1, k + 1), -1, -1};
        }
        else
        {
          e.type = ElementType::hex8;
          e.nodes = {idx.at(j, 0, k), idx.at(j + 1, 0, k), idx.at(j + 1, 1, k), idx.at(j, 1, k),
              idx.at(j, 0, k + 1), idx.at(j + 1, 0, k + 1), idx.at(j + 1, 1, k + 1), idx.at(j, 1, k + 1)};
        }
        Vec3 c{};
        for (int a = 0; a < e.num_nodes(); ++a) c = c + m.nodes[e.nodes[a]];
        c = (1.0 / e.num_nodes()) * c;
        const double ang = polar_angle_deg(c);
        e.region = ang < cfg.lc_boundary_deg ? Region::lc : ang < cfg.pps_boundary_deg ? Region::pps : Region::ps;
        m.elements.push_back(e);

        if (k == 0)
        {
          PressureFacet f;
          f.element = static_cast<int>(m.elements.size()) - 1;
          if (e.type == ElementType::hex8)
          {
            f.nodes = {e.nodes[0], e.nodes[1], e.nodes[2], e.nodes[3]};
            f.num_nodes = 4;
          }
          else
          {
            f.nodes = {e.nodes[0], e.nodes[1], e.nodes[2], -1};
            f.num_nodes = 3;
          }
          m.pressure_facets.push_back(f);
        }
      }

    for (std::size_t e = 0; e < m.elements.size(); ++e)
      if (!(min_jacobian(m, m.elements[e]) > 0.0))
        throw MeshError("non-positive Jacobian in generated element " + std::to_string(e));

    material_frames(m);

    ConstraintSet equator{"equator", {}, m.polar_axis};
    ConstraintSet face0{"face_0", {}, {0.0, -1.0, 0.0}};
    ConstraintSet face1{"face_1", {}, {-std::sin(alpha), std::cos(alpha), 0.0}};
    for (int k = 0; k <= nt; ++k)
    {
      equator.nodes.push_back(idx.at(nm, 0, k));
      equator.nodes.push_back(idx.at(nm, 1, k));
      for (int j = 0; j <= nm; ++j)
      {
        face0.nodes.push_back(idx.at(j, 0, k));
        face1.nodes.push_back(idx.at(j, 1, k));
      }
    }
    for (auto* s : {&equator, &face0, &face1}) std::sort(s->nodes.begin(), s->nodes.end());
    m.constraints = {equator, face0, face1};

    m.apex_node = idx.axis(nt / 2);
    for (int j = 0; j <= nm; ++j)
      if (phi[j] >= cfg.lc_boundary_deg - 1e-9 && phi[j] <= cfg.pps_boundary_deg + 1e-9)
        m.pps_columns.emplace_back(idx.at(j, 0, 0), idx.at(j, 0, nt));

    double worst = 0.0;
    for (const auto& e : m.elements)
    {
      static constexpr std::array<std::array<int, 2>, 12> hex_edges = {
          {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6}, {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}}};
      static constexpr std::array<std::array<int, 2>, 9> wedge_edges = {
          {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}, {0, 3}, {1, 4}, {2, 5}}};
      double lo = 1e300, hi = 0.0;
      const auto edge = [&](int a, int b) {
        const double l = norm(m.nodes[e.nodes[a]] - m.nodes[e.nodes[b]]);
        lo = std::min(lo, l);
        hi = std::max(hi, l);
      };
      if (e.type == ElementType::hex8)
        for (const auto& ed : hex_edges) edge(ed[0], ed[1]);
      else
        for (const auto& ed : wedge_edges) edge(ed[0], ed[1]);
      worst = std::max(worst, hi / lo);
    }
    if (worst > 50.0)
      m.warnings.push_back("element aspect ratio " + std::to_string(worst) + " exceeds 50");
    return m;
  }

  /// Rigidly rotates the mesh together with its frames and constraint normals.
  inline Mesh rotated(const Mesh& m, const Tensor2& Q)
  {
    Mesh r = m;
    for (auto& x : r.nodes) x = Q * x;
    for (auto& fs : r.frames)
      for (auto& f : fs)
      {
        f.a0_fc = Q * f.a0_fc;
        f.a0_fm = Q * f.a0_fm;
        f.a0_perp = Q * f.a0_perp;
      }
    for (auto& c : r.constraints) c.normal = Q * c.normal;
    r.polar_axis = Q * r.polar_axis;
    return r;
  }
}  // namespace hcmm
