#pragma once

// Run configuration: a flat list of `section.key = value` lines.
//
//   # comment (also allowed after a value)
//   mesh.layers = 30
//   pps.c1 = 10
//   scenario.k_sigma = 2e-3
//   scenario.weakened_regions = lc, pps
//
// Unknown keys and malformed lines are errors carrying the line number.
// Keys that are absent keep their defaults. `scenario.id` selects a preset
// first; every other scenario key then overrides it, whatever the order.

#include "hcmm/protocol.hpp"

#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

namespace hcmm
{
  struct OutputConfig
  {
    std::string dir = "out";
    double snapshot_every_days = 0.0;  // 0 disables snapshots

    bool operator==(const OutputConfig&) const = default;
  };

  struct RunConfig
  {
    MeshConfig mesh;
    RegionTable regions = default_region_table();
    ScenarioSpec scenario;
    SolverConfig solver;
    OutputConfig output;
    ModelOptions model;
    Step1Mode step1_mode = Step1Mode::prestretch;

    bool operator==(const RunConfig&) const = default;

    void validate() const
    {
      mesh.validate();
      for (std::size_t r = 0; r < regions.size(); ++r) regions[r].validate(region_name(static_cast<Region>(r)));
      scenario.validate();
      if (!(solver.tol_r > 0.0) || !(solver.tol_u > 0.0) || !(solver.tol_abs >= 0.0)) throw InvalidParameter("solver tolerances must be > 0");
      if (solver.max_iterations < 1) throw InvalidParameter("solver.max_iterations must be >= 1");
      if (solver.max_cutbacks < 0) throw InvalidParameter("solver.max_cutbacks must be >= 0");
      if (solver.ramp_steps < 1) throw InvalidParameter("solver.ramp_steps must be >= 1");
      if (solver.threads < 1) throw InvalidParameter("solver.threads must be >= 1");
      if (model.remodeling_sign != 1 && model.remodeling_sign != -1)
        throw InvalidParameter("model.remodeling_sign must be +1 or -1");
      if (!(output.snapshot_every_days >= 0.0)) throw InvalidParameter("output.snapshot_every_days must be >= 0");
    }
  };

  namespace detail
  {
    inline std::string_view trim(std::string_view s)
    {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string_view::npos) return {};
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    }

    /// Shortest text that parses back to the same value.
    inline std::string format_double(double v)
    {
      char buf[32];
      const auto r = std::to_chars(buf, buf + sizeof buf, v);
      return std::string(buf, r.ptr);
    }

    inline std::string region_list(const std::vector<Region>& rs)
    {
      if (rs.empty()) return "none";
      std::string s;
      for (std::size_t i = 0; i < rs.size(); ++i) s += (i ? ", " : "") + std::string(region_name(rs[i]));
      return s;
    }

    class ConfigReader
    {
     public:
      ConfigReader(std::string key, std::string_view value, int line) : key_(std::move(key)), value_(value), line_(line) {}

      [[noreturn]] void fail(const std::string& what) const
      {
        throw ConfigError("line " + std::to_string(line_) + ": " + key_ + ": " + what, line_);
      }

      double number() const
      {
        double v = 0.0;
        const auto* b = value_.data();
        const auto* e = b + value_.size();
        if (!value_.empty() && *b == '+') ++b;
        const auto r = std::from_chars(b, e, v);
        if (r.ec != std::errc{} || r.ptr != e) fail("expected a number, got '" + std::string(value_) + "'");
        return v;
      }

      int integer() const
      {
        int v = 0;
        const auto* b = value_.data();
        const auto* e = b + value_.size();
        if (!value_.empty() && *b == '+') ++b;
        const auto r = std::from_chars(b, e, v);
        if (r.ec != std::errc{} || r.ptr != e) fail("expected an integer, got '" + std::string(value_) + "'");
        return v;
      }

      bool boolean() const
      {
        if (value_ == "true") return true;
        if (value_ == "false") return false;
        fail("expected true or false, got '" + std::string(value_) + "'");
      }

      std::string text() const { return std::string(value_); }

      template <class E>
      E choice(std::initializer_list<std::pair<const char*, E>> options) const
      {
        std::string names;
        for (const auto& [n, e] : options)
        {
          if (value_ == n) return e;
          names += (names.empty() ? "" : ", ") + std::string(n);
        }
        fail("expected one of " + names + ", got '" + std::string(value_) + "'");
      }

      std::vector<Region> regions() const
      {
        std::vector<Region> out;
        if (value_ == "none") return out;
        std::string_view rest = value_;
        while (!rest.empty())
        {
          const auto comma = rest.find(',');
          const auto item = trim(rest.substr(0, comma));
          Region r = Region::lc;
          if (item == "lc")
            r = Region::lc;
          else if (item == "pps")
            r = Region::pps;
          else if (item == "ps")
            r = Region::ps;
          else
            fail("unknown region '" + std::string(item) + "' (expected lc, pps, ps or none)");
          if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
          if (comma == std::string_view::npos) break;
          rest = rest.substr(comma + 1);
        }
        std::sort(out.begin(), out.end());
        return out;
      }

     private:
      std::string key_;
      std::string_view value_;
      int line_;
    };
  }  // namespace detail

  /// Parses a configuration document. `scenario_override`, when given, replaces
  /// `scenario.id` before the preset is applied.
  inline RunConfig parse_config(std::string_view text, std::optional<int> scenario_override = {})
  {
    struct Entry
    {
      std::string value;
      int line;
    };
    std::map<std::string, Entry> entries;
    std::vector<std::string> order;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size())
    {
      const auto nl = text.find('\n', pos);
      std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'", line_no);
      const std::string key(detail::trim(line.substr(0, eq)));
      const std::string value(detail::trim(line.substr(eq + 1)));
      if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": missing key", line_no);
      if (value.empty()) throw ConfigError("line " + std::to_string(line_no) + ": " + key + ": missing value", line_no);
      if (entries.count(key)) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key " + key, line_no);
      entries[key] = {value, line_no};
      order.push_back(key);
    }

    RunConfig c;
    int id = 1;
    if (const auto it = entries.find("scenario.id"); it != entries.end())
      id = detail::ConfigReader("scenario.id", it->second.value, it->second.line).integer();
    if (scenario_override) id = *scenario_override;
    try
    {
      c.scenario = ScenarioSpec::preset(id);
    }
    catch (const InvalidParameter& e)
    {
      const int ln = entries.count("scenario.id") ? entries["scenario.id"].line : 0;
      throw ConfigError("line " + std::to_string(ln) + ": scenario.id: " + e.what(), ln);
    }

    for (const std::string& key : order)
    {
      const Entry& en = entries[key];
      const detail::ConfigReader r(key, en.value, en.line);
      const auto dot = key.find('.');
      const std::string sec = key.substr(0, dot == std::string::npos ? 0 : dot);
      const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);

      if (sec == "mesh")
      {
        auto& m = c.mesh;
        if (name == "inner_radius_m") m.inner_radius = r.number();
        else if (name == "thickness_m") m.thickness = r.number();
        else if (name == "sector_angle_deg") m.sector_angle_deg = r.number();
        else if (name == "lc_boundary_deg") m.lc_boundary_deg = r.number();
        else if (name == "pps_boundary_deg") m.pps_boundary_deg = r.number();
        else if (name == "lc_divisions") m.lc_divisions = r.integer();
        else if (name == "pps_divisions") m.pps_divisions = r.integer();
        else if (name == "ps_divisions") m.ps_divisions = r.integer();
        else if (name == "layers") m.layers = r.integer();
        else r.fail("unknown key");
      }
      else if (sec == "lc" || sec == "pps" || sec == "ps")
      {
        auto& p = c.regions[sec == "lc" ? 0 : sec == "pps" ? 1 : 2];
        if (name == "c1") p.c1 = r.number();
        else if (name == "K") p.K = r.number();
        else if (name == "c3") p.c3 = r.number();
        else if (name == "c4") p.c4 = r.number();
        else if (name == "rho0_m") p.rho0_m = r.number();
        else if (name == "rho0_fm") p.rho0_fm0 = r.number();
        else if (name == "rho0_fc") p.rho0_fc0 = r.number();
        else if (name == "T") p.T = r.number();
        else if (name == "lambda_h") p.lambda_h = r.number();
        else r.fail("unknown key");
      }
      else if (sec == "scenario")
      {
        auto& s = c.scenario;
        if (name == "id") s.id = id;
        else if (name == "k_sigma") s.k_sigma = r.number();
        else if (name == "growth_mode")
          s.growth_mode = r.choice<GrowthMode>({{"transmural", GrowthMode::transmural}, {"mass_density", GrowthMode::mass_density}});
        else if (name == "duration_days") s.duration_days = r.number();
        else if (name == "dt_days") s.dt_days = r.number();
        else if (name == "min_dt_days") s.min_dt_days = r.number();
        else if (name == "weakening_factor") s.weakening_factor = r.number();
        else if (name == "weakened_regions") s.weakened_regions = r.regions();
        else if (name == "gr_regions") s.gr_regions = r.regions();
        else if (name == "output_every_days") s.output_every_days = r.number();
        else if (name == "pressure_mmhg") s.pressure_mmhg = r.number();
        else r.fail("unknown key");
      }
      else if (sec == "solver")
      {
        auto& s = c.solver;
        if (name == "tol_r") s.tol_r = r.number();
        else if (name == "tol_u") s.tol_u = r.number();
        else if (name == "tol_abs") s.tol_abs = r.number();
        else if (name == "max_iterations") s.max_iterations = r.integer();
        else if (name == "max_cutbacks") s.max_cutbacks = r.integer();
        else if (name == "ramp_steps") s.ramp_steps = r.integer();
        else if (name == "threads") s.threads = r.integer();
        else r.fail("unknown key");
      }
      else if (sec == "output")
      {
        if (name == "dir") c.output.dir = r.text();
        else if (name == "snapshot_every_days") c.output.snapshot_every_days = r.number();
        else r.fail("unknown key");
      }
      else if (sec == "model")
      {
        if (name == "remodeling_sign") c.model.remodeling_sign = r.integer();
        else if (name == "sigma_h_convention")
          c.model.sigma_h_convention = r.choice<SigmaHConvention>(
              {{"partial_stress", SigmaHConvention::partial_stress}, {"mass_specific", SigmaHConvention::mass_specific}});
        else if (name == "tension_only") c.model.tension_only = r.boolean();
        else if (name == "step1_mode")
          c.step1_mode = r.choice<Step1Mode>({{"prestretch", Step1Mode::prestretch}, {"fixed_point", Step1Mode::fixed_point}});
        else r.fail("unknown key");
      }
      else
        r.fail("unknown key");
    }

    try
    {
      c.validate();
    }
    catch (const InvalidParameter& e)
    {
      // point at the line of the first key mentioned in the message, if any
      int ln = 0;
      const std::string msg = e.what();
      for (const auto& [k, en] : entries)
      {
        const auto d = k.find('.');
        const std::string sec = k.substr(0, d), leaf = k.substr(d + 1);
        if (msg.find(k) != std::string::npos || (msg.rfind(sec + ":", 0) == 0 && msg.find(" " + leaf + " ") != std::string::npos))
        {
          ln = en.line;
          break;
        }
      }
      throw ConfigError((ln ? "line " + std::to_string(ln) + ": " : std::string()) + "invalid configuration: " + msg, ln);
    }
    return c;
  }

  /// Writes every key, so the output is a complete echo of the effective configuration.
  inline std::string serialize_config(const RunConfig& c)
  {
    using detail::format_double;
    std::ostringstream os;
    os << "# mesh (lengths in m, angles in degrees)\n";
    os << "mesh.inner_radius_m = " << format_double(c.mesh.inner_radius) << "\n";
    os << "mesh.thickness_m = " << format_double(c.mesh.thickness) << "\n";
    os << "mesh.sector_angle_deg = " << format_double(c.mesh.sector_angle_deg) << "\n";
    os << "mesh.lc_boundary_deg = " << format_double(c.mesh.lc_boundary_deg) << "\n";
    os << "mesh.pps_boundary_deg = " << format_double(c.mesh.pps_boundary_deg) << "\n";
    os << "mesh.lc_divisions = " << c.mesh.lc_divisions << "\n";
    os << "mesh.pps_divisions = " << c.mesh.pps_divisions << "\n";
    os << "mesh.ps_divisions = " << c.mesh.ps_divisions << "\n";
    os << "mesh.layers = " << c.mesh.layers << "\n";
    for (std::size_t r = 0; r < c.regions.size(); ++r)
    {
      const std::string s = region_name(static_cast<Region>(r));
      const auto& p = c.regions[r];
      os << "\n# " << s << " material (J/kg, kg/m^3, days)\n";
      os << s << ".c1 = " << format_double(p.c1) << "\n";
      os << s << ".K = " << format_double(p.K) << "\n";
      os << s << ".c3 = " << format_double(p.c3) << "\n";
      os << s << ".c4 = " << format_double(p.c4) << "\n";
      os << s << ".rho0_m = " << format_double(p.rho0_m) << "\n";
      os << s << ".rho0_fm = " << format_double(p.rho0_fm0) << "\n";
      os << s << ".rho0_fc = " << format_double(p.rho0_fc0) << "\n";
      os << s << ".T = " << format_double(p.T) << "\n";
      os << s << ".lambda_h = " << format_double(p.lambda_h) << "\n";
    }
    const auto& s = c.scenario;
    os << "\n# scenario\n";
    os << "scenario.id = " << s.id << "\n";
    os << "scenario.k_sigma = " << format_double(s.k_sigma) << "\n";
    os << "scenario.growth_mode = " << (s.growth_mode == GrowthMode::transmural ? "transmural" : "mass_density") << "\n";
    os << "scenario.duration_days = " << format_double(s.duration_days) << "\n";
    os << "scenario.dt_days = " << format_double(s.dt_days) << "\n";
    os << "scenario.min_dt_days = " << format_double(s.min_dt_days) << "\n";
    os << "scenario.weakening_factor = " << format_double(s.weakening_factor) << "\n";
    os << "scenario.weakened_regions = " << detail::region_list(s.weakened_regions) << "\n";
    os << "scenario.gr_regions = " << detail::region_list(s.gr_regions) << "\n";
    os << "scenario.output_every_days = " << format_double(s.output_every_days) << "\n";
    os << "scenario.pressure_mmhg = " << format_double(s.pressure_mmhg) << "\n";
    os << "\n# solver\n";
    os << "solver.tol_r = " << format_double(c.solver.tol_r) << "\n";
    os << "solver.tol_u = " << format_double(c.solver.tol_u) << "\n";
    os << "solver.tol_abs = " << format_double(c.solver.tol_abs) << "\n";
    os << "solver.max_iterations = " << c.solver.max_iterations << "\n";
    os << "solver.max_cutbacks = " << c.solver.max_cutbacks << "\n";
    os << "solver.ramp_steps = " << c.solver.ramp_steps << "\n";
    os << "solver.threads = " << c.solver.threads << "\n";
    os << "\n# output\n";
    os << "output.dir = " << c.output.dir << "\n";
    os << "output.snapshot_every_days = " << format_double(c.output.snapshot_every_days) << "\n";
    os << "\n# model variants\n";
    os << "model.remodeling_sign = " << c.model.remodeling_sign << "\n";
    os << "model.sigma_h_convention = "
       << (c.model.sigma_h_convention == SigmaHConvention::partial_stress ? "partial_stress" : "mass_specific") << "\n";
    os << "model.tension_only = " << (c.model.tension_only ? "true" : "false") << "\n";
    os << "model.step1_mode = " << (c.step1_mode == Step1Mode::prestretch ? "prestretch" : "fixed_point") << "\n";
    return os.str();
  }
}  // namespace hcmm
