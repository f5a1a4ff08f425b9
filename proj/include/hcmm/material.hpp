#pragma once

// Homogenized constrained mixture: a neo-Hookean ground matrix with a
// decoupled volumetric penalty and two exponential collagen fiber families
// (circumferential fc, meridional fm). Each constituent sees the total
// deformation through its own growth and remodeling kinematics
//
//   F = F_e F_g F_r,   F_r^matrix = I,
//
// and the stresses add by rule of mixture. Strain energies are per unit mass
// and scaled by reference densities, so all stresses come out in Pa.

#include "hcmm/errors.hpp"
#include "hcmm/tensor.hpp"

#include <cmath>
#include <string>

namespace hcmm
{
  enum class GrowthMode
  {
    transmural,
    mass_density
  };

  enum class SigmaHConvention
  {
    /// sigma_h is a partial Cauchy stress, compared against rho0_f-scaled fiber stress.
    partial_stress,
    /// sigma_h is stored per unit reference density and compared against sigma_f / rho0_f.
    mass_specific
  };

  /// Switches that select between model variants. Defaults are the production model.
  struct ModelOptions
  {
    /// Sign s of the turnover term in the remodeling law, rho_dot/rho0 + s/T.
    int remodeling_sign = +1;
    SigmaHConvention sigma_h_convention = SigmaHConvention::partial_stress;
    /// Collagen carries no load for I4e <= 1.
    bool tension_only = true;

    bool operator==(const ModelOptions&) const = default;
  };

  /// Constitutive and mechanobiological parameters of one tissue region.
  struct RegionParams
  {
    double c1 = 10.0;        // J/kg
    double K = 348.0;        // J/kg
    double c3 = 360.0;       // J/kg
    double c4 = 11.0;        // -
    double rho0_m = 500.0;   // kg/m^3
    double rho0_fm0 = 50.0;  // kg/m^3
    double rho0_fc0 = 450.0; // kg/m^3
    double k_sigma = 2e-4;   // 1/day
    double T = 100.0;        // day
    double lambda_h = 1.01;  // -
    bool gr_enabled = true;
    double matrix_weakening_factor = 0.15;

    bool operator==(const RegionParams&) const = default;

    void validate(const std::string& name = "region") const
    {
      auto need = [&](bool ok, const char* what) {
        if (!ok) throw InvalidParameter(name + ": " + what);
      };
      need(c1 > 0.0, "c1 must be > 0");
      need(K > 0.0, "K must be > 0");
      need(c3 > 0.0, "c3 must be > 0");
      need(c4 >= 0.0, "c4 must be >= 0");
      need(rho0_m > 0.0, "rho0_m must be > 0");
      need(rho0_fm0 > 0.0, "rho0_fm must be > 0");
      need(rho0_fc0 > 0.0, "rho0_fc must be > 0");
      need(k_sigma >= 0.0, "k_sigma must be >= 0");
      need(T > 0.0, "T must be > 0");
      need(lambda_h > 1.0, "lambda_h must be > 1");
      need(matrix_weakening_factor > 0.0 && matrix_weakening_factor <= 1.0,
          "weakening factor must lie in (0, 1]");
    }
  };

  /// Lamina cribrosa defaults.
  inline RegionParams lamina_cribrosa_params()
  {
    RegionParams p;
    p.c1 = 5.0;
    p.K = 174.0;
    p.c3 = 180.0;
    p.rho0_fm0 = 450.0;
    p.rho0_fc0 = 50.0;
    return p;
  }

  /// Peripapillary sclera defaults.
  inline RegionParams peripapillary_params() { return RegionParams{}; }

  /// Peripheral sclera defaults. No growth and remodeling by default.
  inline RegionParams peripheral_params()
  {
    RegionParams p;
    p.rho0_fm0 = 250.0;
    p.rho0_fc0 = 250.0;
    p.gr_enabled = false;
    return p;
  }

  struct FiberState
  {
    Vec3 a0{1.0, 0.0, 0.0};
    double rho0 = 0.0;
    double lambda_r = 1.0;
    double sigma_h = 0.0;
  };

  struct GaussPointState
  {
    FiberState fiber_c;
    FiberState fiber_m;
    Vec3 a0_perp{0.0, 0.0, 1.0};
    double theta_g = 1.0;
    GrowthMode growth_mode = GrowthMode::transmural;
    double rho0_m = 0.0;
    double rho0_total_initial = 0.0;
    double c1_current = 0.0;

    double rho0_total() const { return rho0_m + fiber_c.rho0 + fiber_m.rho0; }
  };

  /// Fresh point state with Table-1 densities, unit remodeling stretches and no homeostatic stress yet.
  inline GaussPointState make_state(const RegionParams& p, const Vec3& a0_fc, const Vec3& a0_fm,
      const Vec3& a0_perp, GrowthMode mode)
  {
    GaussPointState s;
    s.fiber_c = {a0_fc, p.rho0_fc0, 1.0, 0.0};
    s.fiber_m = {a0_fm, p.rho0_fm0, 1.0, 0.0};
    s.a0_perp = a0_perp;
    s.growth_mode = mode;
    s.rho0_m = p.rho0_m;
    s.rho0_total_initial = s.rho0_total();
    s.c1_current = p.c1;
    return s;
  }

  // ---------------------------------------------------------------------------
  // Inelastic kinematics

  inline Tensor2 growth_gradient(const GaussPointState& s)
  {
    if (s.growth_mode == GrowthMode::mass_density) return Tensor2::identity();
    const Tensor2 nn = outer(s.a0_perp, s.a0_perp);
    return s.theta_g * nn + (Tensor2::identity() - nn);
  }

  inline double growth_jacobian(const GaussPointState& s)
  {
    return s.growth_mode == GrowthMode::mass_density ? 1.0 : s.theta_g;
  }

  inline Tensor2 remodeling_gradient(const FiberState& f)
  {
    const Tensor2 aa = outer(f.a0, f.a0);
    return f.lambda_r * aa + (1.0 / std::sqrt(f.lambda_r)) * (Tensor2::identity() - aa);
  }

  struct FiberKinematics
  {
    double lambda_total = 1.0;  // |F a0|
    double lambda_g = 1.0;      // |F_g a0|
    double lambda_r = 1.0;
    double I4e = 1.0;
    double lambda_e = 1.0;
    Vec3 a{1.0, 0.0, 0.0};  // unit fiber direction, current configuration
  };

  struct ElasticKinematics
  {
    double J = 1.0;
    Tensor2 Fg;
    Tensor2 Fe_m;  // matrix elastic deformation F F_g^-1
    double Je = 1.0;
    Tensor2 Be_bar;
    double I1e_bar = 3.0;
    FiberKinematics fc;
    FiberKinematics fm;
  };

  inline FiberKinematics fiber_kinematics(const Tensor2& F, const Tensor2& Fg, const FiberState& f)
  {
    FiberKinematics k;
    const Vec3 Fa = F * f.a0;
    k.lambda_total = norm(Fa);
    k.lambda_g = norm(Fg * f.a0);
    k.lambda_r = f.lambda_r;
    k.lambda_e = k.lambda_total / (k.lambda_g * k.lambda_r);
    k.I4e = k.lambda_e * k.lambda_e;
    k.a = (1.0 / k.lambda_total) * Fa;
    return k;
  }

  inline ElasticKinematics elastic_invariants(const Tensor2& F, const GaussPointState& s)
  {
    ElasticKinematics k;
    k.J = det(F);
    if (!(k.J > 0.0)) throw InvertedConfiguration("det(F) <= 0 at material point");
    k.Fg = growth_gradient(s);
    k.Fe_m = F * inverse(k.Fg);
    k.Je = k.J / growth_jacobian(s);
    const Tensor2 Be = k.Fe_m * transpose(k.Fe_m);
    k.Be_bar = std::pow(k.Je, -2.0 / 3.0) * Be;
    k.I1e_bar = trace(k.Be_bar);
    k.fc = fiber_kinematics(F, k.Fg, s.fiber_c);
    k.fm = fiber_kinematics(F, k.Fg, s.fiber_m);
    return k;
  }

  // ---------------------------------------------------------------------------
  // Stresses

  inline Tensor2 matrix_iso_stress(const Tensor2& Fe_m, double J, double rho0_m, double c1)
  {
    const double Je = det(Fe_m);
    const Tensor2 Bb = std::pow(Je, -2.0 / 3.0) * (Fe_m * transpose(Fe_m));
    const double I1b = trace(Bb);
    return (2.0 / J) * rho0_m * c1 * (Bb - (I1b / 3.0) * Tensor2::identity());
  }

  inline Tensor2 matrix_vol_stress(double Je, double J, double rho0_m, double K)
  {
    return ((2.0 / J) * rho0_m * K * (Je - 1.0) * Je) * Tensor2::identity();
  }

  struct CollagenStress
  {
    Tensor2 sigma;
    double scalar = 0.0;  // a . sigma a
  };

  inline CollagenStress collagen_stress(double I4e, const Vec3& a, double J, double rho0_f, double c3,
      double c4, bool tension_only = true)
  {
    if (tension_only && I4e <= 1.0) return {};
    const double u = I4e - 1.0;
    const double s = (2.0 / J) * rho0_f * c3 * I4e * u * std::exp(c4 * u * u);
    return {s * outer(a, a), s};
  }

  // ---------------------------------------------------------------------------
  // Spatial tangents (Truesdell push-forward of 2 dS/dC; F_gr frozen)

  inline Tensor4 matrix_iso_tangent(const Tensor2& Be_bar, double I1e_bar, double J, double rho0_m, double c1)
  {
    const Tensor2 I = Tensor2::identity();
    Tensor4 c = (I1e_bar / 3.0) * dyad(I, I) + I1e_bar * identity_sym() - dyad(Be_bar, I) - dyad(I, Be_bar);
    return (4.0 / (3.0 * J)) * rho0_m * c1 * c;
  }

  inline Tensor4 matrix_vol_tangent(double Je, double J, double rho0_m, double K)
  {
    const Tensor2 I = Tensor2::identity();
    return 4.0 * rho0_m * K * (Je / J) * ((Je - 0.5) * dyad(I, I) - (Je - 1.0) * identity_sym());
  }

  inline Tensor4 collagen_tangent(double I4e, const Vec3& a, double J, double rho0_f, double c3, double c4,
      bool tension_only = true)
  {
    if (tension_only && I4e <= 1.0) return {};
    const double u = I4e - 1.0;
    const double s = (4.0 / J) * rho0_f * c3 * I4e * I4e * (1.0 + 2.0 * c4 * u * u) * std::exp(c4 * u * u);
    return s * fourfold(a);
  }

  /// sigma ⊙ I + I ⊙ sigma, the stress-dependent terms that turn the Truesdell
  /// tangent into the Jaumann-rate tangent.
  inline Tensor4 jaumann_correction(const Tensor2& sigma)
  {
    const Tensor2 I = Tensor2::identity();
    return sym_outer(sigma, I) + sym_outer(I, sigma);
  }

  struct StressTangent
  {
    Tensor2 sigma;
    Tensor4 c_jau;
    Tensor4 c_spatial;  // Truesdell tangent, c_jau minus the stress terms
    double sigma_fc = 0.0;
    double sigma_fm = 0.0;
    double J = 1.0;
    double Je = 1.0;
  };

  enum class VolumetricTerm
  {
    pointwise,
    excluded  // the element supplies the volumetric response (mean dilatation)
  };

  inline StressTangent evaluate_response(const Tensor2& F, const GaussPointState& s, const RegionParams& p,
      const ModelOptions& opt = {}, VolumetricTerm vol = VolumetricTerm::pointwise)
  {
    const ElasticKinematics k = elastic_invariants(F, s);
    StressTangent r;
    r.J = k.J;
    r.Je = k.Je;

    const double c1 = s.c1_current;
    const Tensor2 I = Tensor2::identity();
    r.sigma = (2.0 / k.J) * s.rho0_m * c1 * (k.Be_bar - (k.I1e_bar / 3.0) * I);
    r.c_spatial = matrix_iso_tangent(k.Be_bar, k.I1e_bar, k.J, s.rho0_m, c1);

    if (vol == VolumetricTerm::pointwise)
    {
      r.sigma += matrix_vol_stress(k.Je, k.J, s.rho0_m, p.K);
      r.c_spatial += matrix_vol_tangent(k.Je, k.J, s.rho0_m, p.K);
    }

    const auto add_fiber = [&](const FiberKinematics& fk, const FiberState& f, double& scalar) {
      const CollagenStress cs = collagen_stress(fk.I4e, fk.a, k.J, f.rho0, p.c3, p.c4, opt.tension_only);
      r.sigma += cs.sigma;
      scalar = cs.scalar;
      r.c_spatial += collagen_tangent(fk.I4e, fk.a, k.J, f.rho0, p.c3, p.c4, opt.tension_only);
    };
    add_fiber(k.fc, s.fiber_c, r.sigma_fc);
    add_fiber(k.fm, s.fiber_m, r.sigma_fm);

    r.c_jau = r.c_spatial + jaumann_correction(r.sigma);
    return r;
  }

  /// Total Cauchy stress and Jaumann-rate tangent with the internal state frozen.
  inline StressTangent total_stress_tangent(
      const Tensor2& F, const GaussPointState& s, const RegionParams& p, const ModelOptions& opt = {})
  {
    return evaluate_response(F, s, p, opt, VolumetricTerm::pointwise);
  }

  /// Volumetric energy rho0_m K (Je - 1)^2 per reference volume, Je = J / det(F_g),
  /// with first and second derivatives with respect to J.
  struct VolumetricEnergy
  {
    double U = 0.0;
    double dU = 0.0;
    double d2U = 0.0;
  };

  inline VolumetricEnergy volumetric_energy(double J, const GaussPointState& s, const RegionParams& p)
  {
    const double jg = growth_jacobian(s);
    const double je = J / jg;
    return {s.rho0_m * p.K * (je - 1.0) * (je - 1.0), 2.0 * s.rho0_m * p.K * (je - 1.0) / jg,
        2.0 * s.rho0_m * p.K / (jg * jg)};
  }

  // ---------------------------------------------------------------------------
  // Growth and remodeling laws

  inline double growth_stimulus(double sigma_f, double sigma_h)
  {
    if (!(sigma_h > 0.0)) throw UninitializedHomeostasis("growth stimulus needs sigma_h > 0");
    return (sigma_f - sigma_h) / sigma_h;
  }

  inline double mass_rate(double rho0_f, double k_sigma, double delta_G) { return rho0_f * k_sigma * delta_G; }

  /// dW/dlambda and d2W/dlambda2 of the fiber energy per unit mass as a function of elastic stretch.
  struct FiberEnergyDerivatives
  {
    double d1 = 0.0;
    double d2 = 0.0;
  };

  inline FiberEnergyDerivatives fiber_energy_derivatives(double lambda_e, double c3, double c4)
  {
    const double u = lambda_e * lambda_e - 1.0;
    const double e = std::exp(c4 * u * u);
    const double l2 = lambda_e * lambda_e;
    return {2.0 * c3 * lambda_e * u * e, 2.0 * c3 * e * (u + 2.0 * l2 + 4.0 * c4 * l2 * u * u)};
  }

  /// Homeostatic stress in the comparison convention: partial Cauchy stress or per unit density.
  inline double effective_sigma_h(const FiberState& f, const ModelOptions& opt)
  {
    return opt.sigma_h_convention == SigmaHConvention::mass_specific ? f.sigma_h * f.rho0 : f.sigma_h;
  }

  /// d(sigma_f)/d(lambda_e) at frozen J and density; zero when the tension gate is closed.
  inline double fiber_stress_stiffness(
      const FiberKinematics& fk, const FiberState& f, const RegionParams& p, double J, const ModelOptions& opt)
  {
    if (opt.tension_only && fk.I4e <= 1.0) return 0.0;
    const auto d = fiber_energy_derivatives(fk.lambda_e, p.c3, p.c4);
    return (f.rho0 / J) * (d.d1 + fk.lambda_e * d.d2);
  }

  /// Rate of the remodeling stretch. Returns 0 where the fiber stiffness
  /// degenerates, which happens only for unloaded fibers.
  inline double remodeling_rate(const FiberState& f, const FiberKinematics& fk, double sigma_f, double rho_dot,
      const RegionParams& p, double J, const ModelOptions& opt = {})
  {
    const double stiff = fiber_stress_stiffness(fk, f, p, J, opt);
    const double floor = 1e-10 * f.rho0 * p.c3 / J;
    if (!(stiff > floor) || !(fk.lambda_e > 0.0)) return 0.0;
    const double turnover = rho_dot / f.rho0 + static_cast<double>(opt.remodeling_sign) / p.T;
    return turnover * (sigma_f - effective_sigma_h(f, opt)) / stiff * (f.lambda_r / fk.lambda_e);
  }

  struct FiberRates
  {
    double delta_G = 0.0;
    double sigma_f = 0.0;
    double rho_dot = 0.0;
    double lambda_r_dot = 0.0;
  };

  struct GrowthRates
  {
    FiberRates fc;
    FiberRates fm;
  };

  inline double stimulus_for(const FiberState& f, double sigma_f, const ModelOptions& opt)
  {
    if (opt.sigma_h_convention == SigmaHConvention::mass_specific)
      return growth_stimulus(sigma_f / f.rho0, f.sigma_h);
    return growth_stimulus(sigma_f, f.sigma_h);
  }

  /// Stimuli and rates at the (converged) deformation F. Rates vanish where G&R is disabled;
  /// the stimuli are reported regardless.
  inline GrowthRates compute_rates(
      const Tensor2& F, const GaussPointState& s, const RegionParams& p, const ModelOptions& opt = {})
  {
    const ElasticKinematics k = elastic_invariants(F, s);
    GrowthRates r;
    const auto one = [&](const FiberKinematics& fk, const FiberState& f) {
      FiberRates fr;
      fr.sigma_f = collagen_stress(fk.I4e, fk.a, k.J, f.rho0, p.c3, p.c4, opt.tension_only).scalar;
      fr.delta_G = stimulus_for(f, fr.sigma_f, opt);
      if (p.gr_enabled)
      {
        fr.rho_dot = mass_rate(f.rho0, p.k_sigma, fr.delta_G);
        fr.lambda_r_dot = remodeling_rate(f, fk, fr.sigma_f, fr.rho_dot, p, k.J, opt);
      }
      return fr;
    };
    r.fc = one(k.fc, s.fiber_c);
    r.fm = one(k.fm, s.fiber_m);
    return r;
  }

  /// Forward-Euler update of densities and remodeling stretches over dt days.
  inline GaussPointState advance_state(
      const GaussPointState& s, const GrowthRates& rates, double dt, const RegionParams& p)
  {
    if (!(dt > 0.0)) throw InvalidParameter("advance_state requires dt > 0");
    if (!p.gr_enabled) return s;
    GaussPointState n = s;
    n.fiber_c.rho0 += rates.fc.rho_dot * dt;
    n.fiber_m.rho0 += rates.fm.rho_dot * dt;
    n.fiber_c.lambda_r += rates.fc.lambda_r_dot * dt;
    n.fiber_m.lambda_r += rates.fm.lambda_r_dot * dt;
    if (!(n.fiber_c.rho0 > 0.0) || !(n.fiber_m.rho0 > 0.0))
      throw StateCollapse("collagen reference density dropped to zero");
    if (!(n.fiber_c.lambda_r > 0.0) || !(n.fiber_m.lambda_r > 0.0))
      throw StateCollapse("remodeling stretch dropped to zero");
    n.theta_g = n.growth_mode == GrowthMode::transmural ? n.rho0_total() / n.rho0_total_initial : 1.0;
    return n;
  }

  inline double homeostatic_fiber_stress(double lambda_h, double J, double rho0_f, double c3, double c4)
  {
    const double I4 = lambda_h * lambda_h;
    const double u = I4 - 1.0;
    return (2.0 / J) * rho0_f * c3 * I4 * u * std::exp(c4 * u * u);
  }

  /// Resets each family's remodeling stretch so that the elastic fiber stretch
  /// equals lambda_h under F, and stores sigma_h at that stretch.
  inline GaussPointState init_homeostatic(
      const GaussPointState& s, const Tensor2& F, const RegionParams& p, const ModelOptions& opt = {})
  {
    GaussPointState n = s;
    const double J = det(F);
    if (!(J > 0.0)) throw InvertedConfiguration("init_homeostatic: det(F) <= 0");
    const Tensor2 Fg = growth_gradient(s);
    for (FiberState* f : {&n.fiber_c, &n.fiber_m})
    {
      const double lt = norm(F * f->a0);
      const double lg = norm(Fg * f->a0);
      f->lambda_r = lt / (lg * p.lambda_h);
      const double sh = homeostatic_fiber_stress(p.lambda_h, J, f->rho0, p.c3, p.c4);
      f->sigma_h = opt.sigma_h_convention == SigmaHConvention::mass_specific ? sh / f->rho0 : sh;
    }
    return n;
  }

  /// Sets the remodeling stretch so that the fibers carry the homeostatic
  /// stretch in the undeformed configuration (F = I).
  inline GaussPointState prestretch_fibers(const GaussPointState& s, const RegionParams& p)
  {
    return init_homeostatic(s, Tensor2::identity(), p);
  }

  /// Freezes sigma_h at the fiber stress the point currently carries under F.
  inline GaussPointState capture_homeostatic_stress(
      const GaussPointState& s, const Tensor2& F, const RegionParams& p, const ModelOptions& opt = {})
  {
    GaussPointState n = s;
    const ElasticKinematics k = elastic_invariants(F, s);
    const auto one = [&](const FiberKinematics& fk, FiberState& f) {
      const double sf = collagen_stress(fk.I4e, fk.a, k.J, f.rho0, p.c3, p.c4, opt.tension_only).scalar;
      if (!(sf > 0.0)) throw UninitializedHomeostasis("fiber unloaded while capturing homeostatic stress");
      f.sigma_h = opt.sigma_h_convention == SigmaHConvention::mass_specific ? sf / f.rho0 : sf;
    };
    one(k.fc, n.fiber_c);
    one(k.fm, n.fiber_m);
    return n;
  }
}  // namespace hcmm
