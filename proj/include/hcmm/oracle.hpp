#pragma once

// Independent checks. The finite-difference oracles evaluate their own copy of
// the mixture energy in long double and share no constitutive code with
// material.hpp; they only read the state and parameter structs.

#include "hcmm/material.hpp"
#include "hcmm/solver.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace hcmm::oracle
{
  using Mat3 = Eigen::Matrix<long double, 3, 3>;
  using Vec3L = Eigen::Matrix<long double, 3, 1>;

  struct Check
  {
    std::string name;
    double error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
  };

  struct OracleReport
  {
    std::vector<Check> checks;

    void add(std::string name, double error, double tolerance)
    {
      checks.push_back({std::move(name), error, tolerance, error < tolerance});
    }
    bool all_pass() const
    {
      return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
    }
  };

  inline Mat3 to_mat(const Tensor2& t)
  {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = t(i, j);
    return m;
  }

  inline Vec3L to_vec(const Vec3& v) { return {v[0], v[1], v[2]}; }

  /// Mixture energy per reference volume as a function of the right Cauchy-Green tensor.
  inline long double energy(const Mat3& C, const GaussPointState& s, const RegionParams& p, bool tension_only = true)
  {
    const Vec3L n = to_vec(s.a0_perp);
    const long double theta = s.theta_g;
    // F_g = theta n n + (I - n n), F_g^-1 = (1/theta) n n + (I - n n)
    const Mat3 I = Mat3::Identity();
    const Mat3 Fg_inv = (1.0L / theta) * n * n.transpose() + (I - n * n.transpose());
    const Mat3 Ce = Fg_inv.transpose() * C * Fg_inv;
    const long double Je = std::sqrt(Ce.determinant());
    const long double I1bar = std::pow(Je, -2.0L / 3.0L) * Ce.trace();
    long double psi = s.rho0_m * s.c1_current * (I1bar - 3.0L) + s.rho0_m * p.K * (Je - 1.0L) * (Je - 1.0L);
    for (const FiberState* f : {&s.fiber_c, &s.fiber_m})
    {
      const Vec3L a = to_vec(f->a0);
      const Vec3L Fga = (I + (theta - 1.0L) * n * n.transpose()) * a;
      const long double lg = Fga.norm();
      const long double I4 = (a.transpose() * C * a)(0, 0) / (lg * lg * f->lambda_r * f->lambda_r);
      if (tension_only && I4 <= 1.0L) continue;
      const long double u = I4 - 1.0L;
      psi += f->rho0 * p.c3 / (2.0L * p.c4) * (std::exp(p.c4 * u * u) - 1.0L);
    }
    return psi;
  }

  /// Cauchy stress by central differences of the energy with respect to C.
  inline Mat3 fd_stress_l(const Mat3& F, const GaussPointState& s, const RegionParams& p, bool tension_only = true,
      long double h = 1e-6L)
  {
    const Mat3 C = F.transpose() * F;
    Mat3 dpsi = Mat3::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j)
      {
        Mat3 E = Mat3::Zero();
        E(i, j) += h;
        if (i != j) E(j, i) += h;
        const long double d = (energy(C + E, s, p, tension_only) - energy(C - E, s, p, tension_only)) / (2.0L * h);
        // symmetric off-diagonal perturbation picks up both (i,j) and (j,i)
        dpsi(i, j) = i == j ? d : 0.5L * d;
        dpsi(j, i) = dpsi(i, j);
      }
    return (2.0L / F.determinant()) * F * dpsi * F.transpose();
  }

  inline Tensor2 fd_stress_oracle(const Tensor2& F, const GaussPointState& s, const RegionParams& p,
      bool tension_only = true, double h = 1e-6)
  {
    const Mat3 S = fd_stress_l(to_mat(F), s, p, tension_only, h);
    Tensor2 out;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out(i, j) = static_cast<double>(S(i, j));
    return out;
  }

  /// Jaumann-rate tangent from perturbations F + (eps/2)(e_k e_l + e_l e_k) F of the Kirchhoff stress.
  inline FullTensor4 fd_tangent_oracle(const Tensor2& F, const GaussPointState& s, const RegionParams& p,
      bool tension_only = true, long double eps = 1e-6L)
  {
    const Mat3 Fm = to_mat(F);
    const long double J = Fm.determinant();
    FullTensor4 c;
    for (int k = 0; k < 3; ++k)
      for (int l = k; l < 3; ++l)
      {
        Mat3 D = Mat3::Zero();
        D(k, l) += 0.5L;
        D(l, k) += 0.5L;
        const Mat3 Fp = Fm + eps * D * Fm;
        const Mat3 Fn = Fm - eps * D * Fm;
        const Mat3 tp = Fp.determinant() * fd_stress_l(Fp, s, p, tension_only);
        const Mat3 tn = Fn.determinant() * fd_stress_l(Fn, s, p, tension_only);
        const Mat3 dc = (tp - tn) / (2.0L * eps * J);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
          {
            c(i, j, k, l) = static_cast<double>(dc(i, j));
            c(i, j, l, k) = static_cast<double>(dc(i, j));
          }
      }
    return c;
  }

  inline double relative_error(const Tensor2& a, const Tensor2& ref)
  {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 9; ++i)
    {
      num += (a.c[i] - ref.c[i]) * (a.c[i] - ref.c[i]);
      den += ref.c[i] * ref.c[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  }

  inline double relative_error(const Tensor4& a, const FullTensor4& ref)
  {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l)
          {
            const double d = a(i, j, k, l) - ref(i, j, k, l);
            num += d * d;
            den += ref(i, j, k, l) * ref(i, j, k, l);
          }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  }

  /// Membrane stress of a thin pressurized sphere.
  inline double laplace_oracle(double p, double R_mid, double t)
  {
    if (!(t > 0.0) || !(R_mid > 0.0)) throw InvalidParameter("laplace_oracle needs positive radius and thickness");
    return p * R_mid / (2.0 * t);
  }

  // ---------------------------------------------------------------------------
  // Random admissible states

  struct RandomState
  {
    Tensor2 F;
    GaussPointState state;
    RegionParams params;
  };

  /// Deformation, internal state and Table-1 parameter set drawn at random.
  /// Fiber elastic stretches are kept away from the tension gate at I4e = 1.
  inline RandomState random_state(std::mt19937_64& rng, int region)
  {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const auto uni = [&](double a, double b) { return a + (b - a) * U(rng); };
    RandomState r;
    r.params = region == 0 ? lamina_cribrosa_params() : region == 1 ? peripapillary_params() : peripheral_params();

    // orthonormal frame from a random rotation
    Eigen::Quaterniond q(uni(-1, 1), uni(-1, 1), uni(-1, 1), uni(-1, 1));
    q.normalize();
    const Eigen::Matrix3d R = q.toRotationMatrix();
    const Vec3 a_c{R(0, 0), R(1, 0), R(2, 0)}, a_m{R(0, 1), R(1, 1), R(2, 1)}, n{R(0, 2), R(1, 2), R(2, 2)};
    const GrowthMode mode = U(rng) < 0.5 ? GrowthMode::transmural : GrowthMode::mass_density;
    r.state = make_state(r.params, a_c, a_m, n, mode);
    r.state.fiber_c.rho0 *= uni(0.7, 1.5);
    r.state.fiber_m.rho0 *= uni(0.7, 1.5);
    r.state.c1_current = r.params.c1 * uni(0.15, 1.0);
    if (mode == GrowthMode::transmural) r.state.theta_g = uni(0.8, 1.3);

    for (int attempt = 0;; ++attempt)
    {
      Tensor2 F;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) F(i, j) = (i == j ? uni(0.85, 1.2) : uni(-0.15, 0.15));
      if (det(F) < 0.5) continue;
      r.state.fiber_c.lambda_r = uni(0.95, 1.02);
      r.state.fiber_m.lambda_r = uni(0.95, 1.02);
      const ElasticKinematics k = elastic_invariants(F, r.state);
      if (std::abs(k.fc.I4e - 1.0) < 1e-3 || std::abs(k.fm.I4e - 1.0) < 1e-3) continue;
      // keep the exponential moderate so the check is about the formulas, not overflow
      if (k.fc.I4e > 1.35 || k.fm.I4e > 1.35) continue;
      r.F = F;
      return r;
    }
  }

  // ---------------------------------------------------------------------------
  // Single material point under frozen deformation

  struct RelaxationSample
  {
    double day = 0.0;
    double delta_G = 0.0;
    double rho0 = 0.0;
    double lambda_r = 0.0;
  };

  struct RelaxationResult
  {
    std::vector<RelaxationSample> trajectory;
    bool converged = false;   // |DeltaG| < tol at the end
    bool diverged = false;    // |DeltaG| grew past 10x its start or left the admissible range
  };

  /// Integrates the mass and remodeling rate equations of one fiber family with
  /// the total fiber stretch held fixed, using classical RK4 with step dt.
  /// The fiber starts at elastic stretch lambda_e0 and homeostatic stretch lambda_h.
  inline RelaxationResult single_point_relaxation_oracle(const RegionParams& p, double lambda_e0, int sign = +1,
      double days = -1.0, double dt = 0.01, double tol = 1e-4)
  {
    if (days < 0.0) days = 10.0 * p.T;
    const double J = 1.0;
    const double rho_init = p.rho0_fc0;
    const auto stress = [&](double rho, double le) {
      const double I4 = le * le, u = I4 - 1.0;
      return I4 <= 1.0 ? 0.0 : (2.0 / J) * rho * p.c3 * I4 * u * std::exp(p.c4 * u * u);
    };
    const double sigma_h = stress(rho_init, p.lambda_h);
    // total stretch fixed: lambda_e = lambda_tot / lambda_r with lambda_r(0) = 1
    const double lambda_tot = lambda_e0;

    struct Y
    {
      double rho, lr;
    };
    const auto rhs = [&](const Y& y) {
      const double le = lambda_tot / y.lr;
      const double sf = stress(y.rho, le);
      const double dG = (sf - sigma_h) / sigma_h;
      const double rho_dot = y.rho * p.k_sigma * dG;
      // d sigma / d lambda_e at fixed density
      const double h = 1e-7 * le;
      const double ds = (stress(y.rho, le + h) - stress(y.rho, le - h)) / (2.0 * h);
      const double lr_dot = ds > 0.0 ? (rho_dot / y.rho + sign / p.T) * (sf - sigma_h) / ds * (y.lr / le) : 0.0;
      return Y{rho_dot, lr_dot};
    };

    RelaxationResult res;
    Y y{rho_init, 1.0};
    const auto sample = [&](double t) {
      const double le = lambda_tot / y.lr;
      res.trajectory.push_back({t, (stress(y.rho, le) - sigma_h) / sigma_h, y.rho, y.lr});
    };
    sample(0.0);
    const double g0 = std::abs(res.trajectory.front().delta_G);
    const long n = std::lround(days / dt);
    for (long i = 1; i <= n; ++i)
    {
      const Y k1 = rhs(y);
      const Y k2 = rhs({y.rho + 0.5 * dt * k1.rho, y.lr + 0.5 * dt * k1.lr});
      const Y k3 = rhs({y.rho + 0.5 * dt * k2.rho, y.lr + 0.5 * dt * k2.lr});
      const Y k4 = rhs({y.rho + dt * k3.rho, y.lr + dt * k3.lr});
      y.rho += dt / 6.0 * (k1.rho + 2 * k2.rho + 2 * k3.rho + k4.rho);
      y.lr += dt / 6.0 * (k1.lr + 2 * k2.lr + 2 * k3.lr + k4.lr);
      if (!(y.rho > 0.0) || !(y.lr > 0.0) || !std::isfinite(y.rho) || !std::isfinite(y.lr))
      {
        res.diverged = true;
        sample(i * dt);
        return res;
      }
      if (i % 100 == 0) sample(i * dt);
      if (std::abs(res.trajectory.back().delta_G) > 10.0 * std::max(g0, 1e-12) && g0 > 0.0)
      {
        res.diverged = true;
        return res;
      }
    }
    if (res.trajectory.back().day < days) sample(days);
    res.converged = std::abs(res.trajectory.back().delta_G) < tol;
    return res;
  }

  // ---------------------------------------------------------------------------
  // Checks shared by the verify verb and the acceptance binary

  struct ConstitutiveCheck
  {
    double max_stress_error = 0.0;
    double max_tangent_error = 0.0;
    int samples = 0;
  };

  /// Analytic stress and Jaumann tangent against the FD oracles on `n` random states
  /// cycling through the three regional parameter sets.
  inline ConstitutiveCheck check_constitutive(int n, std::uint64_t seed)
  {
    std::mt19937_64 rng(seed);
    ConstitutiveCheck c;
    for (int i = 0; i < n; ++i)
    {
      const RandomState r = random_state(rng, i % 3);
      const StressTangent st = total_stress_tangent(r.F, r.state, r.params);
      c.max_stress_error = std::max(c.max_stress_error, relative_error(st.sigma, fd_stress_oracle(r.F, r.state, r.params)));
      c.max_tangent_error = std::max(c.max_tangent_error, relative_error(st.c_jau, fd_tangent_oracle(r.F, r.state, r.params)));
      ++c.samples;
    }
    return c;
  }

  /// Largest relative difference between an element stiffness and central
  /// differences of its internal force vector.
  template <class Shape>
  double element_stiffness_fd_error(std::span<const Vec3> X, std::span<const Vec3> x,
      std::span<const GaussPointState> states, const RegionParams& p, double h = 1e-7)
  {
    constexpr int nd = 3 * Shape::num_nodes;
    ElementResult base, plus, minus;
    element_force_stiffness<Shape>(X, x, states, p, {}, true, base);
    std::vector<Vec3> xp(x.begin(), x.end()), xm(x.begin(), x.end());
    double num = 0.0, den = 0.0;
    for (int c = 0; c < nd; ++c)
    {
      xp = std::vector<Vec3>(x.begin(), x.end());
      xm = xp;
      xp[static_cast<std::size_t>(c / 3)][c % 3] += h;
      xm[static_cast<std::size_t>(c / 3)][c % 3] -= h;
      element_force_stiffness<Shape>(X, xp, states, p, {}, false, plus);
      element_force_stiffness<Shape>(X, xm, states, p, {}, false, minus);
      for (int r = 0; r < nd; ++r)
      {
        const double fd = (plus.force[r] - minus.force[r]) / (2.0 * h);
        const double k = 0.5 * (base.K(r, c) + base.K(c, r));
        num += (fd - k) * (fd - k);
        den += k * k;
      }
    }
    return std::sqrt(num / den);
  }

  /// Everything the `verify` verb reports: constitutive oracles, element and
  /// pressure stiffness, the thin-shell formula and the single-point relaxation.
  inline OracleReport run_oracle_suite(std::uint64_t seed, int samples = 100)
  {
    OracleReport rep;
    const ConstitutiveCheck cc = check_constitutive(samples, seed);
    rep.add("stress vs FD energy (" + std::to_string(cc.samples) + " states)", cc.max_stress_error, 1e-7);
    rep.add("Jaumann tangent vs FD (" + std::to_string(cc.samples) + " states)", cc.max_tangent_error, 1e-5);

    std::mt19937_64 rng(seed + 1);
    double matrix_only = 0.0, fiber_only = 0.0, gate = 0.0;
    for (int i = 0; i < 10; ++i)
    {
      RandomState r = random_state(rng, i % 3);
      RegionParams pm = r.params;
      pm.c3 = 0.0;
      const StressTangent m = total_stress_tangent(r.F, r.state, pm);
      matrix_only = std::max(matrix_only, relative_error(m.c_jau, fd_tangent_oracle(r.F, r.state, pm)));

      RegionParams pf = r.params;
      pf.K = 0.0;
      GaussPointState sf = r.state;
      sf.c1_current = 0.0;
      const StressTangent f = total_stress_tangent(r.F, sf, pf);
      fiber_only = std::max(fiber_only, relative_error(f.c_jau, fd_tangent_oracle(r.F, sf, pf)));

      // both families shortened: the fibers must add nothing
      GaussPointState sc = r.state;
      sc.fiber_c.lambda_r = 2.0;
      sc.fiber_m.lambda_r = 2.0;
      RegionParams p0 = r.params;
      p0.c3 = 0.0;
      const StressTangent with = total_stress_tangent(r.F, sc, r.params);
      const StressTangent without = total_stress_tangent(r.F, sc, p0);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) gate = std::max(gate, std::abs(with.sigma(i, j) - without.sigma(i, j)));
      for (int n = 0; n < 36; ++n) gate = std::max(gate, std::abs(with.c_jau.m[n] - without.c_jau.m[n]));
    }
    rep.add("matrix-only tangent vs FD", matrix_only, 1e-5);
    rep.add("fiber-only tangent vs FD", fiber_only, 1e-5);
    rep.add("compressed fibers contribute nothing", gate, 1e-300);

    {
      const RandomState r = random_state(rng, 1);
      const Tensor2 coarse = fd_stress_oracle(r.F, r.state, r.params, true, 1e-4);
      const Tensor2 fine = fd_stress_oracle(r.F, r.state, r.params, true, 5e-5);
      const Tensor2 exact = total_stress_tangent(r.F, r.state, r.params).sigma;
      const double e1 = relative_error(coarse, exact), e2 = relative_error(fine, exact);
      rep.add("FD stress error shrinks when the step is halved", e2 / e1, 1.0);
    }

    {
      std::vector<Vec3> X;
      for (const auto& c : Hex8::corners) X.push_back({0.5 * (c[0] + 1), 0.5 * (c[1] + 1), 0.5 * (c[2] + 1)});
      const std::vector<Vec3> W = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {0, 1, 1}};
      double hex = 0.0, wedge = 0.0;
      for (int i = 0; i < 3; ++i)
      {
        const RandomState r = random_state(rng, i);
        std::uniform_real_distribution<double> U(-0.03, 0.03);
        auto x = X;
        for (auto& v : x)
        {
          v = r.F * v;
          for (int k = 0; k < 3; ++k) v[k] += U(rng);
        }
        auto xw = W;
        for (auto& v : xw) v = r.F * v;
        const std::vector<GaussPointState> s8(Hex8::num_points, r.state), s6(Wedge6::num_points, r.state);
        hex = std::max(hex, element_stiffness_fd_error<Hex8>(X, x, s8, r.params));
        wedge = std::max(wedge, element_stiffness_fd_error<Wedge6>(W, xw, s6, r.params));
      }
      rep.add("hex stiffness vs FD of forces", hex, 1e-5);
      rep.add("wedge stiffness vs FD of forces", wedge, 1e-5);
    }

    rep.add("thin-shell stress p R / 2t", std::abs(laplace_oracle(1999.84, 0.01225, 0.0005) - 24498.04) / 24498.04, 1e-6);

    const RegionParams pps = peripapillary_params();
    const RelaxationResult plus = single_point_relaxation_oracle(pps, 1.012, +1);
    rep.add("relaxation with s = +1 returns to homeostasis", std::abs(plus.trajectory.back().delta_G), 1e-4);
    const RelaxationResult minus = single_point_relaxation_oracle(pps, 1.012, -1);
    rep.add("relaxation with s = -1 leaves homeostasis", minus.diverged ? 0.0 : 1.0, 0.5);
    return rep;
  }
}  // namespace hcmm::oracle
