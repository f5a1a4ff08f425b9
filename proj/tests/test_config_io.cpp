#include "hcmm/config.hpp"
#include "hcmm/output.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hcmm;
namespace fs = std::filesystem;

namespace
{
  // Reference material constants, region by region: c1, K, c3, c4, rho_m, rho_fm, rho_fc, T, lambda_h.
  struct Row
  {
    const char* region;
    double c1, K, c3, c4, rho_m, rho_fm, rho_fc, T, lambda_h;
  };
  constexpr Row reference_rows[] = {
      {"lc", 5, 174, 180, 11, 500, 450, 50, 100, 1.01},
      {"pps", 10, 348, 360, 11, 500, 50, 450, 100, 1.01},
      {"ps", 10, 348, 360, 11, 500, 250, 250, 100, 1.01},
  };

  fs::path scratch(const std::string& name)
  {
    const fs::path p = fs::temp_directory_path() / ("hcmm_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }

  std::string slurp(const fs::path& p)
  {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
  }

  /// A short scenario-2 run that writes CSV, day-0 and final snapshots and the summary into `dir`.
  ScenarioResult short_run(const fs::path& dir, RunConfig& cfg)
  {
    cfg.scenario = ScenarioSpec::preset(2);
    cfg.scenario.duration_days = 20.0;
    cfg.scenario.output_every_days = 10.0;
    ScenarioResult r = run_scenario(generate(cfg.mesh), cfg.regions, cfg.scenario, cfg.model, cfg.solver, cfg.step1_mode,
        [&](const Simulation& sim, const TimeSeriesRecord&) { write_snapshot(dir, sim); });
    write_timeseries(dir / "timeseries.csv", r.records);
    write_summary(dir / "summary.json", cfg, r);
    return r;
  }

  struct RunFixture
  {
    fs::path dir = scratch("run");
    RunConfig cfg;
    ScenarioResult result = short_run(dir, cfg);
  };

  const RunFixture& run_fixture()
  {
    static const RunFixture f;
    return f;
  }
}  // namespace

// ---------------------------------------------------------------------------
// Configuration

TEST(Config, EmptyDocumentGivesDefaults)
{
  const RunConfig c = parse_config("");
  EXPECT_EQ(c, RunConfig{});
  EXPECT_EQ(c.scenario, ScenarioSpec::preset(1));
  EXPECT_EQ(c.model.remodeling_sign, 1);
  EXPECT_TRUE(c.model.tension_only);
  EXPECT_EQ(c.model.sigma_h_convention, SigmaHConvention::partial_stress);
  EXPECT_EQ(parse_config("  # only a comment\n\n"), RunConfig{});
}

TEST(Config, DefaultsMatchReferenceConstants)
{
  const RunConfig c;
  for (std::size_t r = 0; r < 3; ++r)
  {
    const Row& t = reference_rows[r];
    const RegionParams& p = c.regions[r];
    SCOPED_TRACE(t.region);
    EXPECT_EQ(region_name(static_cast<Region>(r)), std::string(t.region));
    EXPECT_EQ(p.c1, t.c1);
    EXPECT_EQ(p.K, t.K);
    EXPECT_EQ(p.c3, t.c3);
    EXPECT_EQ(p.c4, t.c4);
    EXPECT_EQ(p.rho0_m, t.rho_m);
    EXPECT_EQ(p.rho0_fm0, t.rho_fm);
    EXPECT_EQ(p.rho0_fc0, t.rho_fc);
    EXPECT_EQ(p.T, t.T);
    EXPECT_EQ(p.lambda_h, t.lambda_h);
  }
  EXPECT_EQ(c.mesh.inner_radius, 0.012);
  EXPECT_EQ(c.mesh.thickness, 0.0005);
  EXPECT_EQ(c.mesh.sector_angle_deg, 3.0);
}

TEST(Config, NegativeUncrimpingRateRejectedWithLine)
{
  try
  {
    parse_config("mesh.layers = 30\npps.c4 = -1\n");
    FAIL() << "expected ConfigError";
  }
  catch (const ConfigError& e)
  {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("c4"), std::string::npos) << e.what();
  }
}

TEST(Config, ScenarioThreeEquivalence)
{
  const RunConfig c = parse_config("scenario.k_sigma = 2e-3\nscenario.growth_mode = mass_density\n");
  ScenarioSpec s3 = ScenarioSpec::preset(3);
  s3.id = 1;
  EXPECT_EQ(c.scenario, s3);
  EXPECT_EQ(parse_config("scenario.id = 3").scenario, ScenarioSpec::preset(3));
}

TEST(Config, ScenarioKeysOverridePresetInAnyOrder)
{
  const RunConfig a = parse_config("scenario.k_sigma = 1e-3\nscenario.id = 2\n");
  const RunConfig b = parse_config("scenario.id = 2\nscenario.k_sigma = 1e-3\n");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.scenario.k_sigma, 1e-3);
  EXPECT_EQ(parse_config("scenario.id = 2", 3).scenario, ScenarioSpec::preset(3));
}

TEST(Config, MalformedInputCarriesLineNumbers)
{
  const auto line_of = [](const std::string& text) {
    try
    {
      parse_config(text);
    }
    catch (const ConfigError& e)
    {
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line_of("mesh.layers = 30\nnot a pair\n"), 2);
  EXPECT_EQ(line_of("\n\nmesh.bogus = 1\n"), 3);
  EXPECT_EQ(line_of("lc.c1 = ten\n"), 1);
  EXPECT_EQ(line_of("mesh.layers = 3.5\n"), 1);
  EXPECT_EQ(line_of("lc.c1 = 5\nlc.c1 = 6\n"), 2);
  EXPECT_EQ(line_of("scenario.weakened_regions = lc, retina\n"), 1);
  EXPECT_EQ(line_of("scenario.id = 7\n"), 1);
  EXPECT_EQ(line_of("model.remodeling_sign = 2\n"), 1);
  EXPECT_EQ(line_of("solver.threads = 1\nscenario.min_dt_days = 0\n"), 2);
  EXPECT_EQ(line_of("bogus = 1\n"), 1);
}

TEST(Config, DefaultsRoundTrip)
{
  const RunConfig c;
  EXPECT_EQ(parse_config(serialize_config(c)), c);
}

TEST(Config, EditedConfigurationRoundTrips)
{
  RunConfig c;
  c.mesh.layers = 4;
  c.regions[1].c3 = 123.456789012345;
  c.scenario = ScenarioSpec::preset(3);
  c.scenario.weakened_regions = {Region::pps};
  c.scenario.gr_regions = {};
  c.solver.threads = 3;
  c.output.dir = "results/run-7";
  c.output.snapshot_every_days = 250.0;
  c.model.remodeling_sign = -1;
  c.model.sigma_h_convention = SigmaHConvention::mass_specific;
  c.model.tension_only = false;
  c.step1_mode = Step1Mode::fixed_point;
  const std::string text = serialize_config(c);
  EXPECT_EQ(parse_config(text), c);
  EXPECT_EQ(serialize_config(parse_config(text)), text);
}

// ---------------------------------------------------------------------------
// Number formatting and CSV

TEST(Output, DecimalFormattingHasNineSignificantDigits)
{
  EXPECT_EQ(format_decimal(0.5), "0.500000000");
  EXPECT_EQ(format_decimal(90.0), "90.0000000");
  EXPECT_EQ(format_decimal(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_decimal(-2.5e-5), "-0.0000250000000");
  EXPECT_EQ(format_decimal(5000.0), "5000.00000");
  EXPECT_EQ(format_decimal(0.0), "0.00000000");
  EXPECT_EQ(format_decimal(123456789012.0), "123456789012");
}

TEST(Output, TimeseriesRoundTrip)
{
  std::vector<TimeSeriesRecord> recs;
  for (int i = 0; i <= 4; ++i)
    recs.push_back({50.0 * i, 0.1 / (i + 1), -0.02 * i, 0.45 - 0.01 * i, 90.0 - i, 10.0 + i, 0.6 + 0.001 * i});
  const fs::path dir = scratch("csv");
  write_timeseries(dir / "t.csv", recs);
  const std::string text = slurp(dir / "t.csv");
  EXPECT_EQ(text.find('\r'), std::string::npos);
  const std::string body = text.substr(text.find('\n') + 1);
  EXPECT_EQ(body.find('e'), std::string::npos);
  EXPECT_EQ(text.find('"'), std::string::npos);
  std::istringstream is(text);
  const auto back = read_timeseries(is);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i)
  {
    EXPECT_NEAR(back[i].thickness_mm, recs[i].thickness_mm, 1e-8 * recs[i].thickness_mm);
    EXPECT_NEAR(back[i].max_dG_circ, recs[i].max_dG_circ, 1e-8 * std::abs(recs[i].max_dG_circ));
    EXPECT_NEAR(back[i].circ_pct, recs[i].circ_pct, 1e-7);
  }
  EXPECT_THROW(write_timeseries(dir / "empty.csv", {}), InvalidParameter);
}

TEST(Output, RunCsvHasHeaderAndOneRowPerOutputDay)
{
  const auto& f = run_fixture();
  std::ifstream is(f.dir / "timeseries.csv");
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header,
      "day,max_dG_circ_pps,max_dG_merid_pps,mean_pps_thickness_mm,circ_fraction_pct,merid_fraction_pct,apex_disp_mm");
  is.seekg(0);
  const auto recs = read_timeseries(is);
  // duration / cadence + 1
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].day, 0.0);
  EXPECT_EQ(recs[2].day, 20.0);
  EXPECT_NEAR(recs[0].circ_pct, 90.0, 1e-7);
  EXPECT_NEAR(recs[0].merid_pct, 10.0, 1e-7);
  // deformed day-0 thickness, below the undeformed 0.5 mm
  EXPECT_GT(recs[0].thickness_mm, 0.40);
  EXPECT_LT(recs[0].thickness_mm, 0.5);
}

// ---------------------------------------------------------------------------
// VTK and summary

TEST(Output, SnapshotsParseWithExpectedCounts)
{
  const auto& f = run_fixture();
  for (const char* name : {"snapshot_0.vtk", "snapshot_10.vtk", "snapshot_20.vtk"})
  {
    std::ifstream is(f.dir / name);
    ASSERT_TRUE(is) << name;
    const VtkGrid g = read_vtk(is);
    EXPECT_EQ(g.points.size(), 1953u);
    EXPECT_EQ(g.cells.size(), 930u);
    EXPECT_EQ(std::count(g.cell_types.begin(), g.cell_types.end(), 12), 900);
    EXPECT_EQ(std::count(g.cell_types.begin(), g.cell_types.end(), 13), 30);
    for (const char* field :
        {"region", "dG_circ", "dG_merid", "thickness_stretch", "rho0_fc", "rho0_fm", "lambda_r_circ", "lambda_r_merid"})
      EXPECT_EQ(g.cell_scalars.count(field), 1u) << field;
    EXPECT_EQ(g.point_vectors.at("displacement").size(), 1953u);
  }
}

TEST(Output, EquilibriumSnapshotHasVanishingStimulus)
{
  Simulation sim(generate(MeshConfig{}), default_region_table(), ScenarioSpec::preset(2));
  sim.step1_equilibrate();
  const fs::path dir = scratch("equilibrium");
  const fs::path path = write_snapshot(dir, sim);
  EXPECT_EQ(path.filename(), "snapshot_0.vtk");
  std::ifstream is(path);
  const VtkGrid g = read_vtk(is);
  ASSERT_EQ(g.cells.size(), 930u);
  for (const char* field : {"dG_circ", "dG_merid"})
    for (double v : g.cell_scalars.at(field)) EXPECT_LT(std::abs(v), 1e-8) << field;
  for (double v : g.cell_scalars.at("thickness_stretch")) EXPECT_LT(v, 1.0);
}

TEST(Output, VtkReaderRejectsBrokenFiles)
{
  std::istringstream bad1("not a vtk file\n");
  EXPECT_THROW(read_vtk(bad1), std::runtime_error);
  std::istringstream bad2(
      "# vtk DataFile Version 3.0\nt\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS 1 double\n0 0 0\nCELLS 1 2\n1 5\n");
  EXPECT_THROW(read_vtk(bad2), std::runtime_error);
}

TEST(Output, SummaryCarriesOutcomeAndConfigEcho)
{
  const auto& f = run_fixture();
  std::ifstream is(f.dir / "summary.json");
  const auto j = nlohmann::json::parse(is);
  EXPECT_EQ(j.at("scenario"), 2);
  const std::string cls = j.at("classification");
  EXPECT_TRUE(cls == "stable" || cls == "unstable");
  EXPECT_EQ(j.at("records"), 3);
  EXPECT_DOUBLE_EQ(j.at("undeformed_thickness_mm").get<double>(), 0.5);
  EXPECT_NEAR(j.at("final_thickness_mm").get<double>(), f.result.records.back().thickness_mm, 1e-12);
  EXPECT_NEAR(j.at("thickness_reduction_pct").get<double>(),
      100.0 * (1.0 - f.result.records.back().thickness_mm / f.result.records.front().thickness_mm), 1e-9);
  EXPECT_EQ(j.at("config").at("scenario").at("k_sigma"), 2e-3);
  EXPECT_EQ(j.at("config").at("pps").at("rho0_fc"), 450.0);
  EXPECT_EQ(j.at("config").at("model").at("tension_only"), true);
  EXPECT_GT(j.at("solver").at("newton_iterations").get<int>(), 0);
}

TEST(Output, ZeroGrowthSummaryIsStableWithoutThinning)
{
  RunConfig cfg;
  cfg.scenario.k_sigma = 0.0;
  cfg.scenario.weakening_factor = 1.0;
  cfg.scenario.duration_days = 20.0;
  cfg.scenario.output_every_days = 10.0;
  const ScenarioResult r = run_scenario(generate(cfg.mesh), cfg.regions, cfg.scenario, cfg.model, cfg.solver);
  const auto j = summary_json(cfg, r);
  EXPECT_EQ(j.at("classification"), "stable");
  EXPECT_NEAR(j.at("thickness_reduction_pct").get<double>(), 0.0, 1e-9);
}

TEST(Output, RepeatedRunsAreByteIdentical)
{
  const auto& f = run_fixture();
  const fs::path dir = scratch("repeat");
  RunConfig cfg;
  short_run(dir, cfg);
  for (const char* name : {"timeseries.csv", "summary.json", "snapshot_20.vtk"})
    EXPECT_EQ(slurp(dir / name), slurp(f.dir / name)) << name;
}
