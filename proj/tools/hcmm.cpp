// Command line front end: generate-mesh, run, verify, report.

#include "hcmm/config.hpp"
#include "hcmm/oracle.hpp"
#include "hcmm/output.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace hcmm;

namespace
{
  enum ExitCode
  {
    ok = 0,
    failure = 1,
    config_error = 2,
    nonconvergence = 3,
    state_collapse = 4
  };

  struct Options
  {
    std::string config;
    std::optional<int> scenario;
    std::optional<std::string> out;
    std::optional<double> snapshot_every;
    std::optional<int> threads;
    std::uint64_t seed = 1;
    int samples = 100;
  };

  std::string read_file(const std::string& path)
  {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot read config file " + path, 0);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }

  RunConfig load(const Options& o)
  {
    RunConfig c = parse_config(o.config.empty() ? std::string() : read_file(o.config), o.scenario);
    if (o.out) c.output.dir = *o.out;
    if (o.snapshot_every) c.output.snapshot_every_days = *o.snapshot_every;
    if (o.threads) c.solver.threads = *o.threads;
    try
    {
      c.validate();
    }
    catch (const InvalidParameter& e)
    {
      throw ConfigError(e.what(), 0);
    }
    return c;
  }

  bool on_cadence(double day, double every)
  {
    if (!(every > 0.0)) return false;
    const double k = std::round(day / every);
    return std::abs(day - k * every) < 1e-6;
  }

  int cmd_generate_mesh(const Options& o)
  {
    const RunConfig c = load(o);
    ScenarioSpec spec = c.scenario;
    Simulation sim(generate(c.mesh), c.regions, spec, c.model, c.solver, c.step1_mode);
    const auto& m = sim.model.mesh;
    int hex = 0;
    for (const auto& e : m.elements) hex += e.type == ElementType::hex8;
    const auto path = fs::path(c.output.dir) / "mesh.vtk";
    auto os = open_output(path);
    write_vtk(os, m, sim.u, cell_fields(sim), 0.0);
    std::printf("nodes %zu\nelements %zu (hex %d, wedge %zu)\nequations %d\nwrote %s\n", m.nodes.size(), m.elements.size(),
        hex, m.elements.size() - static_cast<std::size_t>(hex), sim.model.num_equations(), path.string().c_str());
    return ok;
  }

  int cmd_run(const Options& o)
  {
    const RunConfig c = load(o);
    const fs::path dir = c.output.dir;
    {
      auto os = open_output(dir / "effective.cfg");
      os << serialize_config(c);
    }
    Simulation sim(generate(c.mesh), c.regions, c.scenario, c.model, c.solver, c.step1_mode);
    ScenarioResult result;
    const auto flush_partial = [&] {
      if (!result.records.empty()) write_timeseries(dir / "timeseries.csv", result.records);
    };
    try
    {
      result.step1 = sim.step1_equilibrate();
      std::printf("step 1: strain lc %.4f pps %.4f ps %.4f, apex %.4f mm, thickness %.4f mm\n", result.step1.strains[0],
          result.step1.strains[1], result.step1.strains[2], result.step1.apex_mm, result.step1.thickness_mm);
      if (c.output.snapshot_every_days > 0.0) write_snapshot(dir, sim);
      sim.step2_weaken();
      sim.step3_timeloop([&](const Simulation& s, const TimeSeriesRecord& r) {
        result.records.push_back(r);
        std::printf("day %8.1f  dG %+.5f %+.5f  thickness %.4f mm  circ %.2f%%\n", r.day, r.max_dG_circ, r.max_dG_merid,
            r.thickness_mm, r.circ_pct);
        std::fflush(stdout);
        if (r.day > 0.0 && on_cadence(r.day, c.output.snapshot_every_days)) write_snapshot(dir, s);
      });
    }
    catch (const NonConvergence& e)
    {
      flush_partial();
      std::fprintf(stderr, "solver nonconvergence at day %.4f: %s\n", sim.day, e.what());
      return nonconvergence;
    }
    catch (const StateCollapse& e)
    {
      flush_partial();
      std::fprintf(stderr, "state collapse: %s\n", e.what());
      return state_collapse;
    }
    result.outcome = classify(result.records);
    result.stats = sim.stats;
    write_timeseries(dir / "timeseries.csv", result.records);
    write_summary(dir / "summary.json", c, result);
    std::printf("%s, final thickness %.4f mm\n", to_string(result.outcome.classification),
        result.records.back().thickness_mm);
    return ok;
  }

  int cmd_verify(const Options& o)
  {
    const auto rep = oracle::run_oracle_suite(o.seed, o.samples);
    ordered_json j;
    j["seed"] = o.seed;
    j["samples"] = o.samples;
    std::printf("%-44s %12s %12s  %s\n", "check", "error", "tolerance", "result");
    for (const auto& ch : rep.checks)
    {
      std::printf("%-44s %12.3e %12.3e  %s\n", ch.name.c_str(), ch.error, ch.tolerance, ch.pass ? "PASS" : "FAIL");
      j["checks"].push_back({{"name", ch.name}, {"error", ch.error}, {"tolerance", ch.tolerance}, {"pass", ch.pass}});
    }
    j["all_pass"] = rep.all_pass();
    if (o.out)
    {
      auto os = open_output(fs::path(*o.out) / "verify.json");
      os << j.dump(2) << '\n';
    }
    return rep.all_pass() ? ok : failure;
  }

  int cmd_report(const Options& o)
  {
    const fs::path dir = o.out.value_or("out");
    std::ifstream js(dir / "summary.json");
    if (!js) throw std::runtime_error("no summary.json in " + dir.string());
    const auto s = ordered_json::parse(js);
    std::ifstream cs(dir / "timeseries.csv");
    if (!cs) throw std::runtime_error("no timeseries.csv in " + dir.string());
    const auto recs = read_timeseries(cs);
    const auto show = [](const ordered_json& v) { return v.is_null() ? std::string("-") : v.dump(); };
    std::printf("scenario            %s\n", s["scenario"].dump().c_str());
    std::printf("classification      %s\n", s["classification"].get<std::string>().c_str());
    std::printf("tipping day         %s\n", show(s["tipping_day"]).c_str());
    std::printf("stabilization day   %s\n", show(s["stabilization_day"]).c_str());
    std::printf("thickness           %.4f -> %.4f mm (%.1f%% reduction)\n", s["initial_thickness_mm"].get<double>(),
        s["final_thickness_mm"].get<double>(), s["thickness_reduction_pct"].get<double>());
    std::printf("fiber fractions     %.2f / %.2f %%\n", s["final_circ_fraction_pct"].get<double>(),
        s["final_merid_fraction_pct"].get<double>());
    std::printf("records             %zu (days %.0f to %.0f)\n", recs.size(), recs.front().day, recs.back().day);
    double peak = recs.front().max_dG();
    double peak_day = recs.front().day;
    for (const auto& r : recs)
      if (r.max_dG() > peak) peak = r.max_dG(), peak_day = r.day;
    std::printf("peak PPS stimulus   %.5f at day %.0f\n", peak, peak_day);
    return ok;
  }
}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Growth and remodeling of the posterior eye wall"};
  app.require_subcommand(1);
  Options o;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "configuration file")->check(CLI::ExistingFile);
    sub->add_option("--scenario", o.scenario, "scenario preset")->check(CLI::IsMember({1, 2, 3}));
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* gen = app.add_subcommand("generate-mesh", "write the undeformed mesh and print its size");
  add_common(gen);
  auto* run = app.add_subcommand("run", "run steps 1 to 3 and write the time series, summary and snapshots");
  add_common(run);
  run->add_option("--snapshot-every", o.snapshot_every, "snapshot cadence in days, 0 disables")->check(CLI::NonNegativeNumber);
  auto* verify = app.add_subcommand("verify", "run the oracle suite");
  verify->add_option("--seed", o.seed, "seed for the randomized states");
  verify->add_option("--samples", o.samples, "random states per check")->check(CLI::PositiveNumber);
  verify->add_option("--out", o.out, "directory for verify.json");
  auto* report = app.add_subcommand("report", "summarize an existing output directory");
  report->add_option("--out", o.out, "output directory of a finished run");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try
  {
    if (*gen) return cmd_generate_mesh(o);
    if (*run) return cmd_run(o);
    if (*verify) return cmd_verify(o);
    return cmd_report(o);
  }
  catch (const ConfigError& e)
  {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return config_error;
  }
  catch (const NonConvergence& e)
  {
    std::fprintf(stderr, "solver nonconvergence: %s\n", e.what());
    return nonconvergence;
  }
  catch (const StateCollapse& e)
  {
    std::fprintf(stderr, "state collapse: %s\n", e.what());
    return state_collapse;
  }
  catch (const std::exception& e)
  {
    std::fprintf(stderr, "error: %s\n", e.what());
    return failure;
  }
}
