#pragma once

// Time-series CSV, legacy VTK snapshots (with a small reader used to check
// them) and the JSON run summary.

#include "hcmm/config.hpp"
#include "hcmm/protocol.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace hcmm
{
  using ordered_json = nlohmann::ordered_json;

  inline const char* timeseries_header =
      "day,max_dG_circ_pps,max_dG_merid_pps,mean_pps_thickness_mm,circ_fraction_pct,merid_fraction_pct,apex_disp_mm";

  /// Fixed-point decimal with `digits` significant digits, never an exponent.
  inline std::string format_decimal(double v, int digits = 9)
  {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    if (v == 0.0) v = 0.0;  // drop the sign of -0
    int decimals = digits - 1;
    if (v != 0.0)
    {
      // exponent after rounding, so 9.999999999 counts as 10
      char e[64];
      std::snprintf(e, sizeof e, "%.*e", digits - 1, v);
      const int mag = std::atoi(std::strchr(e, 'e') + 1);
      decimals = std::max(0, digits - 1 - mag);
    }
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    if (s == "-0" || s.find_first_not_of("-0.") == std::string::npos) s = s[0] == '-' ? s.substr(1) : s;
    return s;
  }

  inline std::ofstream open_output(const std::filesystem::path& path)
  {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return os;
  }

  inline std::string timeseries_row(const TimeSeriesRecord& r)
  {
    std::string s;
    for (double v : {r.day, r.max_dG_circ, r.max_dG_merid, r.thickness_mm, r.circ_pct, r.merid_pct, r.apex_mm})
    {
      if (!s.empty()) s += ',';
      s += format_decimal(v);
    }
    return s;
  }

  inline void write_timeseries(const std::filesystem::path& path, const std::vector<TimeSeriesRecord>& recs)
  {
    if (recs.empty()) throw InvalidParameter("write_timeseries needs at least one record");
    auto os = open_output(path);
    os << timeseries_header << '\n';
    for (const auto& r : recs) os << timeseries_row(r) << '\n';
    if (!os) throw std::runtime_error("write failed: " + path.string());
  }

  // ---------------------------------------------------------------------------
  // VTK legacy snapshots

  struct CellFields
  {
    std::vector<double> dG_circ, dG_merid, thickness_stretch, rho0_fc, rho0_fm, lambda_r_circ, lambda_r_merid;
  };

  inline CellFields cell_fields(const Simulation& sim)
  {
    const auto& m = sim.model.mesh;
    const auto F = sim.model.point_deformation(sim.u);
    CellFields c;
    for (std::size_t e = 0; e < m.elements.size(); ++e)
    {
      const int n = m.elements[e].num_points();
      double s[7] = {0, 0, 0, 0, 0, 0, 0};
      for (int g = 0; g < n; ++g)
      {
        const auto k = static_cast<std::size_t>(sim.model.state_offset[e] + g);
        const auto& st = sim.model.states[k];
        if (k < sim.rates.size())
        {
          s[0] += sim.rates[k].fc.delta_G;
          s[1] += sim.rates[k].fm.delta_G;
        }
        s[2] += norm(F[k] * st.a0_perp);
        s[3] += st.fiber_c.rho0;
        s[4] += st.fiber_m.rho0;
        s[5] += st.fiber_c.lambda_r;
        s[6] += st.fiber_m.lambda_r;
      }
      c.dG_circ.push_back(s[0] / n);
      c.dG_merid.push_back(s[1] / n);
      c.thickness_stretch.push_back(s[2] / n);
      c.rho0_fc.push_back(s[3] / n);
      c.rho0_fm.push_back(s[4] / n);
      c.lambda_r_circ.push_back(s[5] / n);
      c.lambda_r_merid.push_back(s[6] / n);
    }
    return c;
  }

  inline std::string snapshot_name(double day)
  {
    return "snapshot_" + std::to_string(static_cast<long>(std::llround(day))) + ".vtk";
  }

  inline void write_vtk(std::ostream& os, const Mesh& m, const Vector& u, const CellFields& f, double day)
  {
    const auto num = [](double v) { return format_decimal(v, 12); };
    os << "# vtk DataFile Version 3.0\n";
    os << "posterior pole growth and remodeling, day " << num(day) << "\n";
    os << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << m.nodes.size() << " double\n";
    for (std::size_t a = 0; a < m.nodes.size(); ++a)
    {
      const auto i = static_cast<Eigen::Index>(3 * a);
      os << num(m.nodes[a][0] + u[i]) << ' ' << num(m.nodes[a][1] + u[i + 1]) << ' ' << num(m.nodes[a][2] + u[i + 2]) << '\n';
    }
    std::size_t size = 0;
    for (const auto& e : m.elements) size += static_cast<std::size_t>(e.num_nodes() + 1);
    os << "CELLS " << m.elements.size() << ' ' << size << '\n';
    for (const auto& e : m.elements)
    {
      if (e.type == ElementType::hex8)
      {
        os << 8;
        for (int a = 0; a < 8; ++a) os << ' ' << e.nodes[a];
      }
      else
      {
        // VTK wants the first triangle's normal pointing away from the second one
        os << 6 << ' ' << e.nodes[0] << ' ' << e.nodes[2] << ' ' << e.nodes[1] << ' ' << e.nodes[3] << ' ' << e.nodes[5]
           << ' ' << e.nodes[4];
      }
      os << '\n';
    }
    os << "CELL_TYPES " << m.elements.size() << '\n';
    for (const auto& e : m.elements) os << (e.type == ElementType::hex8 ? 12 : 13) << '\n';

    os << "POINT_DATA " << m.nodes.size() << '\n';
    os << "VECTORS displacement double\n";
    for (std::size_t a = 0; a < m.nodes.size(); ++a)
    {
      const auto i = static_cast<Eigen::Index>(3 * a);
      os << num(u[i]) << ' ' << num(u[i + 1]) << ' ' << num(u[i + 2]) << '\n';
    }

    os << "CELL_DATA " << m.elements.size() << '\n';
    os << "SCALARS region int 1\nLOOKUP_TABLE default\n";
    for (const auto& e : m.elements) os << static_cast<int>(e.region) << '\n';
    const auto scalars = [&](const char* name, const std::vector<double>& v) {
      os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (double x : v) os << num(x) << '\n';
    };
    scalars("dG_circ", f.dG_circ);
    scalars("dG_merid", f.dG_merid);
    scalars("thickness_stretch", f.thickness_stretch);
    scalars("rho0_fc", f.rho0_fc);
    scalars("rho0_fm", f.rho0_fm);
    scalars("lambda_r_circ", f.lambda_r_circ);
    scalars("lambda_r_merid", f.lambda_r_merid);
  }

  inline std::filesystem::path write_snapshot(const std::filesystem::path& dir, const Simulation& sim)
  {
    const auto path = dir / snapshot_name(sim.day);
    auto os = open_output(path);
    write_vtk(os, sim.model.mesh, sim.u, cell_fields(sim), sim.day);
    if (!os) throw std::runtime_error("write failed: " + path.string());
    return path;
  }

  /// Contents of a legacy ASCII unstructured-grid file.
  struct VtkGrid
  {
    std::vector<std::array<double, 3>> points;
    std::vector<std::vector<int>> cells;
    std::vector<int> cell_types;
    std::map<std::string, std::vector<std::array<double, 3>>> point_vectors;
    std::map<std::string, std::vector<double>> cell_scalars;
  };

  /// Reads the subset of the legacy format the writer produces and checks its counts.
  inline VtkGrid read_vtk(std::istream& is)
  {
    const auto fail = [](const std::string& what) -> void { throw std::runtime_error("vtk: " + what); };
    std::string line;
    std::getline(is, line);
    if (line.rfind("# vtk DataFile Version", 0) != 0) fail("missing version header");
    std::getline(is, line);  // title
    std::getline(is, line);
    if (line.rfind("ASCII", 0) != 0) fail("only ASCII files are supported");
    std::string tok;
    is >> tok;
    if (tok != "DATASET") fail("expected DATASET");
    is >> tok;
    if (tok != "UNSTRUCTURED_GRID") fail("expected UNSTRUCTURED_GRID");

    VtkGrid g;
    std::string section;
    std::size_t n_points = 0, n_cells = 0;
    while (is >> tok)
    {
      if (tok == "POINTS")
      {
        std::string type;
        is >> n_points >> type;
        g.points.resize(n_points);
        for (auto& p : g.points) is >> p[0] >> p[1] >> p[2];
      }
      else if (tok == "CELLS")
      {
        std::size_t size = 0;
        is >> n_cells >> size;
        std::size_t read = 0;
        g.cells.resize(n_cells);
        for (auto& c : g.cells)
        {
          int k = 0;
          is >> k;
          c.resize(static_cast<std::size_t>(k));
          for (int& v : c)
          {
            is >> v;
            if (v < 0 || static_cast<std::size_t>(v) >= n_points) fail("cell refers to a missing point");
          }
          read += static_cast<std::size_t>(k) + 1;
        }
        if (read != size) fail("CELLS size mismatch");
      }
      else if (tok == "CELL_TYPES")
      {
        std::size_t n = 0;
        is >> n;
        if (n != n_cells) fail("CELL_TYPES count mismatch");
        g.cell_types.resize(n);
        for (int& t : g.cell_types) is >> t;
      }
      else if (tok == "POINT_DATA" || tok == "CELL_DATA")
      {
        std::size_t n = 0;
        is >> n;
        if (n != (tok == "POINT_DATA" ? n_points : n_cells)) fail(tok + " count mismatch");
        section = tok;
      }
      else if (tok == "VECTORS")
      {
        std::string name, type;
        is >> name >> type;
        if (section != "POINT_DATA") fail("VECTORS only supported as point data");
        auto& v = g.point_vectors[name];
        v.resize(n_points);
        for (auto& p : v) is >> p[0] >> p[1] >> p[2];
      }
      else if (tok == "SCALARS")
      {
        std::string name, type;
        int comps = 1;
        is >> name >> type >> comps;
        std::string lt, lname;
        is >> lt >> lname;
        if (lt != "LOOKUP_TABLE") fail("expected LOOKUP_TABLE");
        if (section != "CELL_DATA") fail("SCALARS only supported as cell data");
        auto& v = g.cell_scalars[name];
        v.resize(n_cells);
        for (double& x : v) is >> x;
      }
      else
        fail("unexpected token " + tok);
      if (is.fail()) fail("malformed data near " + tok);
    }
    return g;
  }

  // ---------------------------------------------------------------------------
  // JSON summary

  inline ordered_json config_to_json(const RunConfig& c)
  {
    ordered_json j = ordered_json::object();
    std::istringstream is(serialize_config(c));
    std::string line;
    while (std::getline(is, line))
    {
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find(" = ");
      const std::string key = line.substr(0, eq), value = line.substr(eq + 3);
      const auto dot = key.find('.');
      ordered_json& sec = j[key.substr(0, dot)];
      char* end = nullptr;
      const double d = std::strtod(value.c_str(), &end);
      if (end && *end == '\0' && !value.empty())
        sec[key.substr(dot + 1)] = d;
      else if (value == "true" || value == "false")
        sec[key.substr(dot + 1)] = value == "true";
      else
        sec[key.substr(dot + 1)] = value;
    }
    return j;
  }

  inline ordered_json summary_json(const RunConfig& cfg, const ScenarioResult& r)
  {
    ordered_json j;
    const auto& first = r.records.front();
    const auto& last = r.records.back();
    const auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
    j["scenario"] = cfg.scenario.id;
    j["classification"] = to_string(r.outcome.classification);
    j["tipping_day"] = opt(r.outcome.tipping_day);
    j["stabilization_day"] = opt(r.outcome.stabilization_day);
    j["initial_thickness_mm"] = first.thickness_mm;
    j["final_thickness_mm"] = last.thickness_mm;
    j["thickness_reduction_pct"] = 100.0 * (first.thickness_mm - last.thickness_mm) / first.thickness_mm;
    j["undeformed_thickness_mm"] = 1e3 * cfg.mesh.thickness;
    j["final_circ_fraction_pct"] = last.circ_pct;
    j["final_merid_fraction_pct"] = last.merid_pct;
    j["final_max_dG_circ_pps"] = last.max_dG_circ;
    j["final_max_dG_merid_pps"] = last.max_dG_merid;
    j["final_apex_disp_mm"] = last.apex_mm;
    j["step1"] = {{"mean_first_principal_log_strain_lc", r.step1.strains[0]},
        {"mean_first_principal_log_strain_pps", r.step1.strains[1]},
        {"mean_first_principal_log_strain_ps", r.step1.strains[2]}, {"apex_disp_mm", r.step1.apex_mm},
        {"pps_thickness_mm", r.step1.thickness_mm}};
    j["solver"] = {{"mechanical_solves", r.stats.solves}, {"newton_iterations", r.stats.newton_iterations},
        {"load_cutbacks", r.stats.load_cutbacks}, {"time_steps", r.stats.steps}, {"dt_halvings", r.stats.dt_halvings},
        {"min_dt_days", r.stats.min_dt}, {"fixed_point_passes", r.stats.fixed_point_passes}};
    j["records"] = r.records.size();
    j["config"] = config_to_json(cfg);
    return j;
  }

  inline void write_summary(const std::filesystem::path& path, const RunConfig& cfg, const ScenarioResult& r)
  {
    auto os = open_output(path);
    os << summary_json(cfg, r).dump(2) << '\n';
    if (!os) throw std::runtime_error("write failed: " + path.string());
  }

  /// Reads a time-series CSV written by write_timeseries.
  inline std::vector<TimeSeriesRecord> read_timeseries(std::istream& is)
  {
    std::string line;
    if (!std::getline(is, line) || line != timeseries_header) throw std::runtime_error("unexpected CSV header");
    std::vector<TimeSeriesRecord> out;
    int ln = 1;
    while (std::getline(is, line))
    {
      ++ln;
      if (line.empty()) continue;
      std::array<double, 7> v{};
      std::size_t pos = 0;
      for (int k = 0; k < 7; ++k)
      {
        const auto comma = line.find(',', pos);
        const std::string field = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        char* end = nullptr;
        v[static_cast<std::size_t>(k)] = std::strtod(field.c_str(), &end);
        if (field.empty() || *end != '\0') throw std::runtime_error("bad CSV field on line " + std::to_string(ln));
        pos = comma == std::string::npos ? line.size() + 1 : comma + 1;
      }
      out.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6]});
    }
    return out;
  }
}  // namespace hcmm
