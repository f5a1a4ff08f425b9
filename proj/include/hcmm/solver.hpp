#pragma once

// Global finite-element model: DOF numbering with rotated constraint frames,
// sparse assembly, and the Newton solver with pressure substepping.

#include "hcmm/element.hpp"
#include "hcmm/errors.hpp"
#include "hcmm/material.hpp"
#include "hcmm/mesh.hpp"
#include "hcmm/parallel.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace hcmm
{
  using Vector = Eigen::VectorXd;
  using SparseMatrix = Eigen::SparseMatrix<double>;
  using RegionTable = std::array<RegionParams, 3>;

  inline RegionTable default_region_table()
  {
    return {lamina_cribrosa_params(), peripapillary_params(), peripheral_params()};
  }

  struct SolverConfig
  {
    double tol_r = 1e-8;
    double tol_u = 1e-10;
    double tol_abs = 1e-12;  // N; residual norm below this counts as converged at any load
    int max_iterations = 25;
    int max_cutbacks = 10;
    int ramp_steps = 5;
    int threads = 1;

    bool operator==(const SolverConfig&) const = default;
  };

  struct SolveReport
  {
    int iterations = 0;
    std::vector<double> residual_history;
    bool converged = false;
    std::vector<double> load_schedule;
    int cutbacks = 0;

    double final_residual() const { return residual_history.empty() ? 0.0 : residual_history.back(); }
  };

  class NonConvergence : public Error
  {
   public:
    NonConvergence(const std::string& what, SolveReport report) : Error(what), report_(std::move(report)) {}
    const SolveReport& report() const { return report_; }

   private:
    SolveReport report_;
  };

  /// Node-to-equation numbering. Each node carries an orthonormal frame whose
  /// leading columns are the constrained directions; only the remaining
  /// columns receive equation numbers.
  struct DofMap
  {
    std::vector<Tensor2> frame;  // columns are local directions in global coordinates
    std::vector<std::array<int, 3>> eq;
    std::vector<char> rotated;
    int num_equations = 0;
    int num_constrained = 0;

    static DofMap build(const Mesh& m)
    {
      const std::size_t n = m.nodes.size();
      std::vector<std::vector<Vec3>> normals(n);
      for (const auto& c : m.constraints)
        for (int a : c.nodes) normals[static_cast<std::size_t>(a)].push_back(normalized(c.normal));

      DofMap d;
      d.frame.assign(n, Tensor2::identity());
      d.eq.assign(n, {-1, -1, -1});
      d.rotated.assign(n, 0);
      for (std::size_t a = 0; a < n; ++a)
      {
        if (normals[a].empty())
        {
          for (int k = 0; k < 3; ++k) d.eq[a][k] = d.num_equations++;
          continue;
        }
        std::vector<Vec3> basis;
        const auto add = [&](Vec3 v) {
          for (const Vec3& b : basis) v = v - dot(v, b) * b;
          if (norm(v) < 1e-8) return false;
          basis.push_back(normalized(v));
          return true;
        };
        for (const Vec3& nrm : normals[a]) add(nrm);
        const int nc = static_cast<int>(basis.size());
        for (const Vec3& e : {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}})
          if (basis.size() < 3) add(e);
        for (int k = 0; k < 3; ++k)
          for (int i = 0; i < 3; ++i) d.frame[a](i, k) = basis[static_cast<std::size_t>(k)][i];
        d.rotated[a] = 1;
        for (int k = nc; k < 3; ++k) d.eq[a][k] = d.num_equations++;
        d.num_constrained += nc;
      }
      return d;
    }

    /// Adds the free-DOF increment dq (rotated frames) to the global displacement u.
    void add_increment(Vector& u, const Vector& dq, double scale = 1.0) const
    {
      for (std::size_t a = 0; a < eq.size(); ++a)
        for (int k = 0; k < 3; ++k)
        {
          const int e = eq[a][k];
          if (e < 0) continue;
          const double v = scale * dq[e];
          for (int i = 0; i < 3; ++i) u[3 * static_cast<Eigen::Index>(a) + i] += frame[a](i, k) * v;
        }
    }

    /// Component of the global vector v (3 per node) along local direction k.
    double local_component(const Vector& v, int node, int k) const
    {
      double s = 0.0;
      for (int i = 0; i < 3; ++i) s += frame[static_cast<std::size_t>(node)](i, k) * v[3 * node + i];
      return s;
    }

    std::string describe(int equation) const
    {
      for (std::size_t a = 0; a < eq.size(); ++a)
        for (int k = 0; k < 3; ++k)
          if (eq[a][k] == equation)
            return "node " + std::to_string(a) + " local direction " + std::to_string(k);
      return "equation " + std::to_string(equation);
    }
  };

  /// Assembled linear system in the free DOFs.
  struct System
  {
    Vector residual;  // internal minus external
    double norm_internal = 0.0;
    double norm_external = 0.0;
    SparseMatrix K;

    double relative_residual() const
    {
      const double r = residual.norm();
      const double ref = std::max(norm_internal, norm_external);
      return ref > 0.0 ? r / ref : r;
    }
  };

  class FeModel
  {
   public:
    Mesh mesh;
    RegionTable params;
    ModelOptions options;
    std::vector<GaussPointState> states;
    std::vector<int> state_offset;
    DofMap dofs;
    int threads = 1;

    FeModel(Mesh m, RegionTable p = default_region_table(), ModelOptions opt = {},
        GrowthMode mode = GrowthMode::transmural)
        : mesh(std::move(m)), params(p), options(opt)
    {
      for (const auto& r : params) r.validate("region");
      for (std::size_t e = 0; e < mesh.elements.size(); ++e)
      {
        state_offset.push_back(static_cast<int>(states.size()));
        const auto& el = mesh.elements[e];
        const RegionParams& rp = region_params(el.region);
        for (const auto& f : mesh.frames[e]) states.push_back(make_state(rp, f.a0_fc, f.a0_fm, f.a0_perp, mode));
      }
      dofs = DofMap::build(mesh);
      build_pattern();
    }

    FeModel(const FeModel& o)
        : mesh(o.mesh), params(o.params), options(o.options), states(o.states), state_offset(o.state_offset),
          dofs(o.dofs), threads(o.threads), pattern_(o.pattern_), elem_pos_(o.elem_pos_), facet_pos_(o.facet_pos_)
    {
    }

    const RegionParams& region_params(Region r) const { return params[static_cast<std::size_t>(r)]; }
    RegionParams& region_params(Region r) { return params[static_cast<std::size_t>(r)]; }

    int num_equations() const { return dofs.num_equations; }
    Vector zero_displacement() const { return Vector::Zero(3 * static_cast<Eigen::Index>(mesh.nodes.size())); }

    std::span<const GaussPointState> element_states(int e) const
    {
      const auto& el = mesh.elements[static_cast<std::size_t>(e)];
      return {states.data() + state_offset[static_cast<std::size_t>(e)], static_cast<std::size_t>(el.num_points())};
    }

    Vec3 current_position(const Vector& u, int a) const
    {
      const Vec3& X = mesh.nodes[static_cast<std::size_t>(a)];
      return {X[0] + u[3 * a], X[1] + u[3 * a + 1], X[2] + u[3 * a + 2]};
    }

    /// Internal force and tangent of one element in global coordinates.
    void element(const Vector& u, int e, bool tangent, ElementResult& out) const
    {
      const auto& el = mesh.elements[static_cast<std::size_t>(e)];
      const int nn = el.num_nodes();
      std::array<Vec3, 8> X{}, x{};
      for (int a = 0; a < nn; ++a)
      {
        X[a] = mesh.nodes[static_cast<std::size_t>(el.nodes[a])];
        x[a] = current_position(u, el.nodes[a]);
      }
      const RegionParams& rp = region_params(el.region);
      if (el.type == ElementType::hex8)
        element_force_stiffness<Hex8>({X.data(), 8}, {x.data(), 8}, element_states(e), rp, options, tangent, out, e);
      else
        element_force_stiffness<Wedge6>({X.data(), 6}, {x.data(), 6}, element_states(e), rp, options, tangent, out, e);
    }

    void facet(const Vector& u, int f, double p, FacetResult& out) const
    {
      const auto& pf = mesh.pressure_facets[static_cast<std::size_t>(f)];
      std::array<Vec3, 4> x{};
      for (int a = 0; a < pf.num_nodes; ++a) x[a] = current_position(u, pf.nodes[a]);
      if (pf.num_nodes == 4)
        pressure_facet<Quad4>({x.data(), 4}, p, out);
      else
        pressure_facet<Tri3>({x.data(), 3}, p, out);
    }

    /// Deformation gradient at every quadrature point, flattened like `states`.
    std::vector<Tensor2> point_deformation(const Vector& u) const
    {
      std::vector<Tensor2> F(states.size());
      for (std::size_t e = 0; e < mesh.elements.size(); ++e)
      {
        const auto& el = mesh.elements[e];
        std::array<Vec3, 8> X{}, x{};
        for (int a = 0; a < el.num_nodes(); ++a)
        {
          X[a] = mesh.nodes[static_cast<std::size_t>(el.nodes[a])];
          x[a] = current_position(u, el.nodes[a]);
        }
        const int off = state_offset[e];
        if (el.type == ElementType::hex8)
        {
          const auto pk = point_kinematics<Hex8>({X.data(), 8}, {x.data(), 8}, static_cast<int>(e));
          for (int g = 0; g < Hex8::num_points; ++g) F[static_cast<std::size_t>(off + g)] = pk[g].F;
        }
        else
        {
          const auto pk = point_kinematics<Wedge6>({X.data(), 6}, {x.data(), 6}, static_cast<int>(e));
          for (int g = 0; g < Wedge6::num_points; ++g) F[static_cast<std::size_t>(off + g)] = pk[g].F;
        }
      }
      return F;
    }

    /// Cauchy stress at every quadrature point, with the element's mean-dilatation
    /// pressure in place of the pointwise volumetric term.
    std::vector<Tensor2> point_stress(const Vector& u) const
    {
      const auto F = point_deformation(u);
      const auto W = point_volumes();
      std::vector<Tensor2> out(states.size());
      for (std::size_t e = 0; e < mesh.elements.size(); ++e)
      {
        const auto& el = mesh.elements[e];
        const RegionParams& rp = region_params(el.region);
        const auto off = static_cast<std::size_t>(state_offset[e]);
        const auto ng = static_cast<std::size_t>(el.num_points());
        double V = 0.0, v = 0.0;
        for (std::size_t g = off; g < off + ng; ++g)
        {
          V += W[g];
          v += det(F[g]) * W[g];
        }
        double P = 0.0;
        for (std::size_t g = off; g < off + ng; ++g) P += W[g] * volumetric_energy(v / V, states[g], rp).dU;
        for (std::size_t g = off; g < off + ng; ++g)
          out[g] = evaluate_response(F[g], states[g], rp, options, VolumetricTerm::excluded).sigma +
                   (P / V) * Tensor2::identity();
      }
      return out;
    }

    /// Reference volume weight (w det J0) of every quadrature point.
    std::vector<double> point_volumes() const
    {
      std::vector<double> w(states.size());
      const Vector u = zero_displacement();
      for (std::size_t e = 0; e < mesh.elements.size(); ++e)
      {
        const auto& el = mesh.elements[e];
        std::array<Vec3, 8> X{};
        for (int a = 0; a < el.num_nodes(); ++a) X[a] = mesh.nodes[static_cast<std::size_t>(el.nodes[a])];
        const int off = state_offset[e];
        if (el.type == ElementType::hex8)
        {
          const auto pk = point_kinematics<Hex8>({X.data(), 8}, {X.data(), 8});
          for (int g = 0; g < 8; ++g) w[static_cast<std::size_t>(off + g)] = pk[g].ref_weight;
        }
        else
        {
          const auto pk = point_kinematics<Wedge6>({X.data(), 6}, {X.data(), 6});
          for (int g = 0; g < 6; ++g) w[static_cast<std::size_t>(off + g)] = pk[g].ref_weight;
        }
      }
      return w;
    }

    /// Global internal and external nodal force vectors (3 per node, global axes).
    std::pair<Vector, Vector> nodal_forces(const Vector& u, double p) const
    {
      Vector fi = zero_displacement(), fe = zero_displacement();
      ElementResult er;
      for (int e = 0; e < static_cast<int>(mesh.elements.size()); ++e)
      {
        element(u, e, false, er);
        const auto& el = mesh.elements[static_cast<std::size_t>(e)];
        for (int a = 0; a < el.num_nodes(); ++a)
          for (int i = 0; i < 3; ++i) fi[3 * el.nodes[a] + i] += er.force[3 * a + i];
      }
      FacetResult fr;
      for (int f = 0; f < static_cast<int>(mesh.pressure_facets.size()); ++f)
      {
        facet(u, f, p, fr);
        const auto& pf = mesh.pressure_facets[static_cast<std::size_t>(f)];
        for (int a = 0; a < pf.num_nodes; ++a)
          for (int i = 0; i < 3; ++i) fe[3 * pf.nodes[a] + i] += fr.force[3 * a + i];
      }
      return {fi, fe};
    }

    /// Reaction forces (internal minus external) at every constrained node, global axes.
    Vector reactions(const Vector& u, double p) const
    {
      auto [fi, fe] = nodal_forces(u, p);
      Vector r = fi - fe;
      for (std::size_t a = 0; a < mesh.nodes.size(); ++a)
        if (!dofs.rotated[a])
          for (int i = 0; i < 3; ++i) r[3 * static_cast<Eigen::Index>(a) + i] = 0.0;
      return r;
    }

    /// Residual and (optionally) tangent in the free DOFs.
    void assemble(const Vector& u, double p, bool tangent, System& sys) const
    {
      if (p < 0.0) throw InvalidParameter("pressure must be non-negative");
      const int ne = static_cast<int>(mesh.elements.size());
      buffers_.resize(static_cast<std::size_t>(ne));
      parallel_for(ne, threads, [&](int e) { element(u, e, tangent, buffers_[static_cast<std::size_t>(e)]); });

      const Eigen::Index neq = dofs.num_equations;
      sys.residual = Vector::Zero(neq);
      Vector fint = Vector::Zero(neq), fext = Vector::Zero(neq);
      if (tangent)
      {
        sys.K = pattern_;
        std::fill(sys.K.valuePtr(), sys.K.valuePtr() + sys.K.nonZeros(), 0.0);
      }

      std::array<double, max_element_dofs> fl{};
      std::array<double, max_element_dofs * max_element_dofs> kl{};
      for (int e = 0; e < ne; ++e)
      {
        const auto& el = mesh.elements[static_cast<std::size_t>(e)];
        const auto& er = buffers_[static_cast<std::size_t>(e)];
        const int nn = el.num_nodes(), nd = 3 * nn;
        to_local(el.nodes.data(), nn, er.force.data(), er.stiffness.data(), tangent, fl.data(), kl.data());
        scatter(el.nodes.data(), nn, fl.data(), fint);
        if (tangent)
        {
          const auto& pos = elem_pos_[static_cast<std::size_t>(e)];
          double* val = sys.K.valuePtr();
          for (int r = 0; r < nd * nd; ++r)
            if (pos[static_cast<std::size_t>(r)] >= 0) val[pos[static_cast<std::size_t>(r)]] += kl[static_cast<std::size_t>(r)];
        }
      }

      FacetResult fr;
      std::array<double, 144> ks{};
      for (int f = 0; f < static_cast<int>(mesh.pressure_facets.size()); ++f)
      {
        facet(u, f, p, fr);
        const auto& pf = mesh.pressure_facets[static_cast<std::size_t>(f)];
        const int nd = 3 * pf.num_nodes;
        // symmetric part of the load stiffness, subtracted from the tangent
        for (int r = 0; r < nd; ++r)
          for (int c = 0; c < nd; ++c)
            ks[static_cast<std::size_t>(r * nd + c)] =
                -0.5 * (fr.stiffness[static_cast<std::size_t>(r * nd + c)] + fr.stiffness[static_cast<std::size_t>(c * nd + r)]);
        to_local(pf.nodes.data(), pf.num_nodes, fr.force.data(), ks.data(), tangent, fl.data(), kl.data());
        scatter(pf.nodes.data(), pf.num_nodes, fl.data(), fext);
        if (tangent)
        {
          const auto& pos = facet_pos_[static_cast<std::size_t>(f)];
          double* val = sys.K.valuePtr();
          for (int r = 0; r < nd * nd; ++r)
            if (pos[static_cast<std::size_t>(r)] >= 0) val[pos[static_cast<std::size_t>(r)]] += kl[static_cast<std::size_t>(r)];
        }
      }
      sys.residual = fint - fext;
      sys.norm_internal = fint.norm();
      sys.norm_external = fext.norm();
    }

    /// Factorizes K and solves K dq = rhs. The sparsity pattern is analyzed once.
    Vector linear_solve(const SparseMatrix& K, const Vector& rhs) const
    {
      if (!ldlt_)
      {
        ldlt_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>();
        ldlt_->analyzePattern(K);
      }
      ldlt_->factorize(K);
      if (ldlt_->info() != Eigen::Success) throw SingularMatrix("factorization failed");
      const Vector D = ldlt_->vectorD();
      const double scale = D.cwiseAbs().maxCoeff();
      for (Eigen::Index i = 0; i < D.size(); ++i)
        if (!(std::abs(D[i]) > 1e-14 * scale))
        {
          // D is in the permuted ordering
          const Eigen::Index orig = ldlt_->permutationPinv().indices()[i];
          std::ostringstream os;
          os << "singular stiffness: zero pivot at " << dofs.describe(static_cast<int>(orig))
             << " (unconstrained rigid mode or detached node)";
          throw SingularMatrix(os.str());
        }
      Vector x = ldlt_->solve(rhs);
      if (!x.allFinite()) throw SingularMatrix("linear solve produced non-finite values");
      return x;
    }

   private:
    SparseMatrix pattern_;
    std::vector<std::vector<int>> elem_pos_;
    std::vector<std::vector<int>> facet_pos_;
    mutable std::vector<ElementResult> buffers_;
    mutable std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> ldlt_;

    void to_local(const int* nodes, int nn, const double* f, const double* k, bool tangent, double* fl,
        double* kl) const
    {
      const int nd = 3 * nn;
      // fl = T^T f, kl = T^T k T with T block-diagonal in the nodal frames
      for (int a = 0; a < nn; ++a)
      {
        const Tensor2& Q = dofs.frame[static_cast<std::size_t>(nodes[a])];
        const bool rot = dofs.rotated[static_cast<std::size_t>(nodes[a])];
        for (int d = 0; d < 3; ++d)
          fl[3 * a + d] = rot ? Q(0, d) * f[3 * a] + Q(1, d) * f[3 * a + 1] + Q(2, d) * f[3 * a + 2] : f[3 * a + d];
      }
      if (!tangent) return;
      std::copy(k, k + nd * nd, kl);
      for (int a = 0; a < nn; ++a)
      {
        if (!dofs.rotated[static_cast<std::size_t>(nodes[a])]) continue;
        const Tensor2& Q = dofs.frame[static_cast<std::size_t>(nodes[a])];
        // rows of block a: kl[3a+d, :] = sum_i Q(i,d) kl[3a+i, :]
        for (int c = 0; c < nd; ++c)
        {
          double t[3];
          for (int d = 0; d < 3; ++d)
            t[d] = Q(0, d) * kl[(3 * a) * nd + c] + Q(1, d) * kl[(3 * a + 1) * nd + c] + Q(2, d) * kl[(3 * a + 2) * nd + c];
          for (int d = 0; d < 3; ++d) kl[(3 * a + d) * nd + c] = t[d];
        }
        for (int r = 0; r < nd; ++r)
        {
          double t[3];
          for (int d = 0; d < 3; ++d)
            t[d] = Q(0, d) * kl[r * nd + 3 * a] + Q(1, d) * kl[r * nd + 3 * a + 1] + Q(2, d) * kl[r * nd + 3 * a + 2];
          for (int d = 0; d < 3; ++d) kl[r * nd + 3 * a + d] = t[d];
        }
      }
    }

    void scatter(const int* nodes, int nn, const double* fl, Vector& out) const
    {
      for (int a = 0; a < nn; ++a)
        for (int d = 0; d < 3; ++d)
        {
          const int e = dofs.eq[static_cast<std::size_t>(nodes[a])][d];
          if (e >= 0) out[e] += fl[3 * a + d];
        }
    }

    std::vector<int> local_equations(const int* nodes, int nn) const
    {
      std::vector<int> q(static_cast<std::size_t>(3 * nn));
      for (int a = 0; a < nn; ++a)
        for (int d = 0; d < 3; ++d) q[static_cast<std::size_t>(3 * a + d)] = dofs.eq[static_cast<std::size_t>(nodes[a])][d];
      return q;
    }

    std::vector<int> positions(const std::vector<int>& q) const
    {
      const int nd = static_cast<int>(q.size());
      std::vector<int> pos(static_cast<std::size_t>(nd * nd), -1);
      const int* outer = pattern_.outerIndexPtr();
      const int* inner = pattern_.innerIndexPtr();
      for (int r = 0; r < nd; ++r)
        for (int c = 0; c < nd; ++c)
        {
          const int qr = q[static_cast<std::size_t>(r)], qc = q[static_cast<std::size_t>(c)];
          if (qr < 0 || qc < 0) continue;
          const int* lo = inner + outer[qc];
          const int* hi = inner + outer[qc + 1];
          const int* it = std::lower_bound(lo, hi, qr);
          pos[static_cast<std::size_t>(r * nd + c)] = static_cast<int>(it - inner);
        }
      return pos;
    }

    void build_pattern()
    {
      std::vector<Eigen::Triplet<double>> t;
      std::vector<std::vector<int>> eqs;
      for (const auto& el : mesh.elements) eqs.push_back(local_equations(el.nodes.data(), el.num_nodes()));
      for (const auto& q : eqs)
        for (int r : q)
          for (int c : q)
            if (r >= 0 && c >= 0) t.emplace_back(r, c, 0.0);
      pattern_.resize(dofs.num_equations, dofs.num_equations);
      pattern_.setFromTriplets(t.begin(), t.end());
      pattern_.makeCompressed();
      elem_pos_.clear();
      for (const auto& q : eqs) elem_pos_.push_back(positions(q));
      facet_pos_.clear();
      for (const auto& pf : mesh.pressure_facets) facet_pos_.push_back(positions(local_equations(pf.nodes.data(), pf.num_nodes)));
    }
  };

  /// Newton iteration at fixed pressure p with frozen internal state. `u` is
  /// updated in place; on failure it holds the last iterate.
  inline SolveReport newton_solve(const FeModel& model, Vector& u, double p, const SolverConfig& cfg = {})
  {
    SolveReport rep;
    rep.load_schedule.push_back(p);
    System sys;
    model.assemble(u, p, true, sys);
    double last_du = -1.0;
    for (int it = 1;; ++it)
    {
      rep.iterations = it;
      const double rel = sys.relative_residual();
      rep.residual_history.push_back(rel);
      if (!std::isfinite(rel)) throw NonConvergence("non-finite residual", rep);
      const bool small = rel < cfg.tol_r || sys.residual.norm() < cfg.tol_abs;
      if (small && (last_du < 0.0 || last_du < cfg.tol_u))
      {
        rep.converged = true;
        return rep;
      }
      if (it >= cfg.max_iterations) throw NonConvergence("Newton iteration limit reached", rep);
      if (rep.residual_history.size() > 3 && rel > 1e3 * rep.residual_history.front())
        throw NonConvergence("Newton iteration diverged", rep);

      const Vector dq = model.linear_solve(sys.K, -sys.residual);
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 8 && !accepted; ++ls, alpha *= 0.5)
      {
        Vector trial = u;
        model.dofs.add_increment(trial, dq, alpha);
        try
        {
          model.assemble(trial, p, true, sys);
          u = std::move(trial);
          accepted = true;
        }
        catch (const InvertedConfiguration&)
        {
        }
      }
      if (!accepted) throw NonConvergence("line search could not avoid inverted elements", rep);
      last_du = (alpha * 2.0) * dq.norm();
    }
  }

  /// Moves the pressure from p_from to p_to in `steps` equal increments,
  /// halving the increment on failure (at most cfg.max_cutbacks times).
  inline SolveReport solve_pressure(
      const FeModel& model, Vector& u, double p_from, double p_to, const SolverConfig& cfg, int steps = 1)
  {
    SolveReport total;
    if (steps < 1) steps = 1;
    double dp = (p_to - p_from) / steps;
    double p = p_from;
    const auto done = [&] { return dp == 0.0 || (dp > 0.0 ? p >= p_to : p <= p_to); };
    bool first = true;
    while (first || !done())
    {
      first = false;
      double p_next = p + dp;
      if (dp > 0.0 ? p_next > p_to : p_next < p_to) p_next = p_to;
      if (dp == 0.0) p_next = p_to;
      const Vector saved = u;
      try
      {
        const SolveReport r = newton_solve(model, u, p_next, cfg);
        total.iterations += r.iterations;
        total.residual_history.insert(total.residual_history.end(), r.residual_history.begin(), r.residual_history.end());
        total.load_schedule.push_back(p_next);
        p = p_next;
        if (dp == 0.0) break;
      }
      catch (const Error& err)
      {
        if (!dynamic_cast<const NonConvergence*>(&err) && !dynamic_cast<const InvertedConfiguration*>(&err) &&
            !dynamic_cast<const SingularMatrix*>(&err))
          throw;
        if (const auto* nc = dynamic_cast<const NonConvergence*>(&err))
        {
          const auto& h = nc->report().residual_history;
          total.residual_history.insert(total.residual_history.end(), h.begin(), h.end());
          total.iterations += nc->report().iterations;
        }
        u = saved;
        if (dp == 0.0 || ++total.cutbacks > cfg.max_cutbacks)
          throw NonConvergence(std::string("no convergence after load cutbacks: ") + err.what(), total);
        dp *= 0.5;
        first = true;
      }
    }
    total.converged = true;
    return total;
  }
}  // namespace hcmm
