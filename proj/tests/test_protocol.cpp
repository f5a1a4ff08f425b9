#include "hcmm/protocol.hpp"

#include <gtest/gtest.h>

using namespace hcmm;

namespace
{
  ScenarioSpec short_spec(int id, double days, double every)
  {
    ScenarioSpec s = ScenarioSpec::preset(id);
    s.duration_days = days;
    s.output_every_days = every;
    return s;
  }

  double max_abs_dG(const Simulation& sim, bool pps_only = false)
  {
    double m = 0.0;
    for (std::size_t k = 0; k < sim.rates.size(); ++k)
    {
      if (pps_only && sim.region_at(k) != Region::pps) continue;
      m = std::max({m, std::abs(sim.rates[k].fc.delta_G), std::abs(sim.rates[k].fm.delta_G)});
    }
    return m;
  }

  TimeSeriesRecord rec(double day, double dG, double h)
  {
    TimeSeriesRecord r;
    r.day = day;
    r.max_dG_circ = dG;
    r.max_dG_merid = 0.5 * dG;
    r.thickness_mm = h;
    return r;
  }

  /// Equilibrated (step 1 only) scenario-2 simulation on the default mesh, shared by several tests.
  const Simulation& equilibrated()
  {
    static const Simulation sim = [] {
      Simulation s(generate(MeshConfig{}), default_region_table(), short_spec(2, 20.0, 10.0));
      s.step1_equilibrate();
      return s;
    }();
    return sim;
  }
}  // namespace

TEST(ScenarioSpec, PresetsMatchScenarioTable)
{
  EXPECT_DOUBLE_EQ(ScenarioSpec::preset(1).k_sigma, 2e-4);
  EXPECT_EQ(ScenarioSpec::preset(1).growth_mode, GrowthMode::transmural);
  EXPECT_DOUBLE_EQ(ScenarioSpec::preset(2).k_sigma, 2e-3);
  EXPECT_EQ(ScenarioSpec::preset(2).growth_mode, GrowthMode::transmural);
  EXPECT_DOUBLE_EQ(ScenarioSpec::preset(3).k_sigma, 2e-3);
  EXPECT_EQ(ScenarioSpec::preset(3).growth_mode, GrowthMode::mass_density);
  for (int id : {1, 2, 3})
  {
    const auto s = ScenarioSpec::preset(id);
    EXPECT_DOUBLE_EQ(s.duration_days, 5000.0);
    EXPECT_DOUBLE_EQ(s.weakening_factor, 0.15);
    EXPECT_NEAR(s.pressure_pa(), 1999.83, 1e-9);
    EXPECT_NO_THROW(s.validate());
  }
  EXPECT_THROW(ScenarioSpec::preset(0), InvalidParameter);
  EXPECT_THROW(ScenarioSpec::preset(4), InvalidParameter);
}

TEST(ScenarioSpec, ValidationRejectsBadValues)
{
  const auto bad = [](auto mutate) {
    ScenarioSpec s;
    mutate(s);
    return s;
  };
  EXPECT_THROW(bad([](ScenarioSpec& s) { s.dt_days = 0.0; }).validate(), InvalidParameter);
  EXPECT_THROW(bad([](ScenarioSpec& s) { s.duration_days = 1.0; }).validate(), InvalidParameter);
  EXPECT_THROW(bad([](ScenarioSpec& s) { s.weakening_factor = 0.0; }).validate(), InvalidParameter);
  EXPECT_THROW(bad([](ScenarioSpec& s) { s.weakening_factor = 1.5; }).validate(), InvalidParameter);
  EXPECT_THROW(bad([](ScenarioSpec& s) { s.k_sigma = -1e-3; }).validate(), InvalidParameter);
  EXPECT_NO_THROW(bad([](ScenarioSpec& s) { s.weakening_factor = 1.0; }).validate());
}

// ---------------------------------------------------------------------------
// Outcome measures

TEST(Measures, UndeformedThicknessIsHalfMillimetre)
{
  const Mesh m = generate(MeshConfig{});
  const Vector u = Vector::Zero(3 * static_cast<Eigen::Index>(m.nodes.size()));
  EXPECT_NEAR(measure_pps_thickness(m, u), 0.5, 1e-12);
}

TEST(Measures, UniformRadialShiftKeepsThickness)
{
  const Mesh m = generate(MeshConfig{});
  Vector u(3 * static_cast<Eigen::Index>(m.nodes.size()));
  for (std::size_t a = 0; a < m.nodes.size(); ++a)
  {
    const Vec3 n = normalized(m.nodes[a]);
    for (int i = 0; i < 3; ++i) u[3 * static_cast<Eigen::Index>(a) + i] = 3e-4 * n[i];
  }
  EXPECT_NEAR(measure_pps_thickness(m, u), 0.5, 1e-12);
  EXPECT_NEAR(apex_displacement_mm(m, u), 0.3, 1e-12);
}

TEST(Measures, InitialFiberFractions)
{
  const FeModel model(generate(MeshConfig{}));
  const auto [c, m] = measure_fiber_fractions(model, model.point_volumes());
  EXPECT_NEAR(c, 90.0, 1e-10);
  EXPECT_NEAR(m, 10.0, 1e-10);

  RegionTable t = default_region_table();
  t[static_cast<std::size_t>(Region::pps)].rho0_fc0 = 250.0;
  t[static_cast<std::size_t>(Region::pps)].rho0_fm0 = 250.0;
  const FeModel equal(generate(MeshConfig{}), t);
  const auto [c2, m2] = measure_fiber_fractions(equal, equal.point_volumes());
  EXPECT_NEAR(c2, 50.0, 1e-10);
  EXPECT_NEAR(m2, 50.0, 1e-10);
}

TEST(Measures, RegionStrainOfUniaxialStretch)
{
  const Tensor2 F = Tensor2::diagonal(1.06, 1.0, 1.0);
  EXPECT_NEAR(max_principal_log_strain(F), std::log(1.06), 1e-14);
  EXPECT_NEAR(max_principal_log_strain(Tensor2::identity()), 0.0, 1e-15);
}

// ---------------------------------------------------------------------------
// Classification

TEST(Classify, RisingStimulusIsUnstableWithTippingDay)
{
  std::vector<TimeSeriesRecord> r;
  for (int d = 0; d <= 5000; d += 50)
  {
    const double dG = d < 1500 ? 0.5 * std::exp(-d / 300.0) + 0.01 : 0.01 + 1e-4 * (d - 1500);
    r.push_back(rec(d, dG, 0.5 - 0.00005 * d));
  }
  const Outcome o = classify(r);
  EXPECT_EQ(o.classification, Classification::unstable);
  ASSERT_TRUE(o.tipping_day.has_value());
  EXPECT_NEAR(*o.tipping_day, 1500.0, 50.0);
}

TEST(Classify, DecayingStimulusIsStableWithStabilizationDay)
{
  std::vector<TimeSeriesRecord> r;
  for (int d = 0; d <= 5000; d += 50)
    r.push_back(rec(d, 0.8 * std::exp(-d / 400.0), 0.35 + 0.15 * std::exp(-d / 500.0)));
  const Outcome o = classify(r);
  EXPECT_EQ(o.classification, Classification::stable);
  ASSERT_TRUE(o.stabilization_day.has_value());
  // 0.15 exp(-d/500) < 0.0035 from d ~ 1880
  EXPECT_NEAR(*o.stabilization_day, 1900.0, 50.0);
  EXPECT_FALSE(o.tipping_day.has_value());
}

TEST(Classify, ShortSeriesDefaultsToStable)
{
  EXPECT_EQ(classify({}).classification, Classification::stable);
  EXPECT_EQ(classify({rec(0, 1.0, 0.5)}).classification, Classification::stable);
}

// ---------------------------------------------------------------------------
// Steps 1 and 2

TEST(Step1, StimulusVanishesAtEquilibrium)
{
  const Simulation& sim = equilibrated();
  EXPECT_LT(max_abs_dG(sim), 1e-8);
  for (std::size_t k = 0; k < sim.model.states.size(); ++k)
  {
    EXPECT_GT(sim.model.states[k].fiber_c.sigma_h, 0.0);
    EXPECT_GT(sim.model.states[k].fiber_m.sigma_h, 0.0);
  }
  EXPECT_GT(apex_displacement_mm(sim.model.mesh, sim.u), 0.0);
}

TEST(Step2, UnitWeakeningLeavesStimulusAtZero)
{
  Simulation sim = equilibrated();
  sim.spec.weakening_factor = 1.0;
  const Vector u0 = sim.u;
  sim.step2_weaken();
  EXPECT_LT(max_abs_dG(sim), 1e-8);
  EXPECT_EQ((sim.u - u0).norm(), 0.0);
}

TEST(Step2, DefaultWeakeningRaisesPpsStimulusAndSparesPeripheralSclera)
{
  Simulation sim = equilibrated();
  sim.step2_weaken();
  double max_pps = -1.0;
  for (std::size_t k = 0; k < sim.rates.size(); ++k)
  {
    const RegionParams& p = sim.params_at(k);
    const auto& s = sim.model.states[k];
    if (sim.region_at(k) == Region::ps)
      EXPECT_EQ(s.c1_current, p.c1);
    else
      EXPECT_DOUBLE_EQ(s.c1_current, 0.15 * p.c1);
    if (sim.region_at(k) == Region::pps) max_pps = std::max({max_pps, sim.rates[k].fc.delta_G, sim.rates[k].fm.delta_G});
  }
  EXPECT_GT(max_pps, 0.0);
  const auto& ps = sim.model.region_params(Region::ps);
  EXPECT_EQ(ps.c1, default_region_table()[static_cast<std::size_t>(Region::ps)].c1);
}

// ---------------------------------------------------------------------------
// Time loop

TEST(TimeLoop, HomeostasisHoldsWithoutWeakening)
{
  Simulation sim = equilibrated();
  sim.spec.weakening_factor = 1.0;
  sim.spec.duration_days = 200.0;
  sim.spec.output_every_days = 50.0;
  sim.step2_weaken();
  const auto recs = sim.step3_timeloop();
  ASSERT_EQ(recs.size(), 5u);
  for (const auto& r : recs)
  {
    EXPECT_LT(std::abs(r.thickness_mm - recs.front().thickness_mm), 1e-3 * recs.front().thickness_mm);
    EXPECT_LT(std::abs(r.apex_mm - recs.front().apex_mm), 1e-3 * std::abs(recs.front().apex_mm));
    EXPECT_LT(std::abs(r.max_dG_circ), 1e-3);
    EXPECT_LT(std::abs(r.max_dG_merid), 1e-3);
  }
  EXPECT_DOUBLE_EQ(recs.back().day, 200.0);
}

TEST(TimeLoop, ZeroGrowthRateKeepsTrajectoryConstant)
{
  Simulation sim = equilibrated();
  sim.spec.weakening_factor = 1.0;
  sim.spec.k_sigma = 0.0;
  sim.spec.duration_days = 50.0;
  sim.spec.output_every_days = 10.0;
  sim.step2_weaken();
  const auto rho0 = sim.model.states;
  const auto recs = sim.step3_timeloop();
  ASSERT_EQ(recs.size(), 6u);
  for (const auto& r : recs)
  {
    EXPECT_NEAR(r.thickness_mm, recs.front().thickness_mm, 1e-9);
    EXPECT_NEAR(r.circ_pct, 90.0, 1e-9);
  }
  for (std::size_t k = 0; k < rho0.size(); ++k)
  {
    EXPECT_NEAR(sim.model.states[k].fiber_c.rho0, rho0[k].fiber_c.rho0, 1e-9 * rho0[k].fiber_c.rho0);
    EXPECT_NEAR(sim.model.states[k].fiber_m.rho0, rho0[k].fiber_m.rho0, 1e-9 * rho0[k].fiber_m.rho0);
  }
}

TEST(TimeLoop, WeakenedRunConservesSpatialDensityAndConfinesGrowth)
{
  Simulation sim = equilibrated();
  const auto before = sim.model.states;
  sim.step2_weaken();
  const auto recs = sim.step3_timeloop();
  EXPECT_EQ(recs.size(), 3u);
  EXPECT_GT(sim.stats.steps, 0);
  bool grew = false;
  for (std::size_t k = 0; k < sim.model.states.size(); ++k)
  {
    const auto& s = sim.model.states[k];
    if (sim.region_at(k) == Region::ps)
    {
      EXPECT_EQ(s.fiber_c.rho0, before[k].fiber_c.rho0);
      EXPECT_EQ(s.fiber_m.lambda_r, before[k].fiber_m.lambda_r);
      EXPECT_EQ(s.theta_g, 1.0);
      continue;
    }
    // transmural growth: mass per grown volume stays at its initial value
    EXPECT_NEAR(s.rho0_total() / s.theta_g, s.rho0_total_initial, 1e-10 * s.rho0_total_initial);
    grew = grew || s.theta_g != 1.0;
  }
  EXPECT_TRUE(grew);
}

TEST(TimeLoop, MassDensityGrowthLeavesVolumeUngrown)
{
  Simulation sim(generate(MeshConfig{}), default_region_table(), short_spec(3, 10.0, 10.0));
  sim.step1_equilibrate();
  sim.step2_weaken();
  sim.step3_timeloop();
  bool density_changed = false;
  for (std::size_t k = 0; k < sim.model.states.size(); ++k)
  {
    EXPECT_EQ(sim.model.states[k].theta_g, 1.0);
    density_changed = density_changed || sim.model.states[k].rho0_total() != sim.model.states[k].rho0_total_initial;
  }
  EXPECT_TRUE(density_changed);
}

TEST(TimeLoop, AdaptiveStepRespectsIncrementLimits)
{
  Simulation sim = equilibrated();
  sim.step2_weaken();
  for (int n = 0; n < 5; ++n)
  {
    const auto rates = sim.rates;
    const auto prev = sim.model.states;
    const double dt = sim.advance(sim.spec.dt_days);
    EXPECT_LE(dt, sim.spec.dt_days);
    for (std::size_t k = 0; k < prev.size(); ++k)
    {
      const auto& a = prev[k];
      const auto& b = sim.model.states[k];
      EXPECT_LE(std::abs(b.fiber_c.lambda_r - a.fiber_c.lambda_r), 0.01 + 1e-15);
      EXPECT_LE(std::abs(b.fiber_m.lambda_r - a.fiber_m.lambda_r), 0.01 + 1e-15);
      EXPECT_LE(std::abs(b.fiber_c.rho0 - a.fiber_c.rho0) / a.fiber_c.rho0, 0.01 + 1e-15);
      EXPECT_LE(std::abs(b.fiber_m.rho0 - a.fiber_m.rho0) / a.fiber_m.rho0, 0.01 + 1e-15);
    }
  }
}

TEST(TimeLoop, RunawayBelowMinimumStepIsStateCollapse)
{
  Simulation sim = equilibrated();
  sim.step2_weaken();
  // right after weakening the fastest point needs about two days per 1% change
  sim.spec.min_dt_days = 2.5;
  try
  {
    sim.advance(sim.spec.dt_days);
    FAIL() << "expected StateCollapse";
  }
  catch (const StateCollapse& e)
  {
    const std::string what = e.what();
    EXPECT_NE(what.find("runaway growth at day 0"), std::string::npos) << what;
    EXPECT_NE(what.find("element"), std::string::npos) << what;
  }
  EXPECT_EQ(sim.day, 0.0);
  EXPECT_EQ(sim.stats.steps, 0);
}
