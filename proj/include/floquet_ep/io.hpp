#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "floquet_ep/errors.hpp"
#include "floquet_ep/sweep.hpp"
#include "floquet_ep/version.hpp"

namespace floquet_ep {

namespace io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr std::string_view kPhaseHeader = "omega,gamma,max_im_eps";
inline constexpr std::string_view kContourHeader = "contour_id,omega,gamma,kind";
inline constexpr std::string_view kBerryHeader = "gamma,band,re_theta,im_theta,flags";

/// %.12e, with non-finite values spelled nan / inf / -inf.
inline std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

inline double parse_value(std::string_view s, const std::string& where) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || s.empty())
    throw FormatError(where + ": bad number '" + std::string(s) + "'");
  return v;
}

inline int parse_int(std::string_view s, const std::string& where) {
  int v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || s.empty())
    throw FormatError(where + ": bad integer '" + std::string(s) + "'");
  return v;
}

/// Sidecar of data.csv is data.meta.json.
inline fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".meta.json");
  return p;
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed: " + path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// LF-terminated lines; CR anywhere or a missing final newline is malformed.
inline std::vector<std::string_view> split_lines(std::string_view text, const std::string& where) {
  if (text.find('\r') != std::string_view::npos) throw FormatError(where + ": CR line endings");
  if (text.empty() || text.back() != '\n') throw FormatError(where + ": missing trailing newline");
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t c = line.find(',', start);
    out.push_back(line.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start));
    if (c == std::string_view::npos) break;
    start = c + 1;
  }
  return out;
}

inline json model_json(const ModelTemplate& m) {
  return {{"preset", m.name}, {"J", m.J}, {"beta", m.beta}, {"family", to_string(m.family)}};
}

inline ModelTemplate model_from_json(const json& j) {
  ModelTemplate m;
  m.name = j.at("preset").get<std::string>();
  m.J = j.at("J").get<double>();
  m.beta = j.at("beta").get<int>();
  m.family = parse_family(j.at("family").get<std::string>());
  return m;
}

inline json grid_json(const GridSpec& g) {
  return {{"gamma_min", g.gamma_min}, {"gamma_max", g.gamma_max}, {"gamma_count", g.gamma_count},
          {"omega_min", g.omega_min}, {"omega_max", g.omega_max}, {"omega_count", g.omega_count},
          {"engine", to_string(g.engine)}};
}

inline GridSpec grid_from_json(const json& j) {
  GridSpec g;
  g.gamma_min = j.at("gamma_min").get<double>();
  g.gamma_max = j.at("gamma_max").get<double>();
  g.gamma_count = j.at("gamma_count").get<int>();
  g.omega_min = j.at("omega_min").get<double>();
  g.omega_max = j.at("omega_max").get<double>();
  g.omega_count = j.at("omega_count").get<int>();
  g.engine = parse_engine(j.at("engine").get<std::string>());
  return g;
}

inline json header_json(std::string_view kind) {
  return {{"format", std::string(kind)}, {"format_version", kFileFormatVersion}, {"tool_version", kToolVersion}};
}

/// Parses a sidecar and checks its kind and version.
inline json read_sidecar(const fs::path& csv, std::string_view kind) {
  const fs::path p = sidecar_path(csv);
  json j;
  try {
    j = json::parse(read_text(p));
  } catch (const json::exception& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kind) throw FormatError(p.string() + ": not a " + std::string(kind) + " sidecar");
  if (!j.contains("format_version") || !j["format_version"].is_number_integer() ||
      j["format_version"].get<int>() != kFileFormatVersion)
    throw FormatError(p.string() + ": unsupported format version");
  return j;
}

template <typename F>
auto guarded(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(where + ": " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(where + ": " + e.what());
  }
}

}  // namespace io

/// Phase-diagram CSV text (no sidecar).
inline std::string phase_diagram_csv(const PhaseDiagram& d) {
  std::string out(io::kPhaseHeader);
  out += '\n';
  out.reserve(out.size() + d.values.size() * 60);
  for (int j = 0; j < d.grid.omega_count; ++j) {
    const std::string w = io::format_value(d.grid.omega(j)) + ',';
    for (int i = 0; i < d.grid.gamma_count; ++i) {
      out += w;
      out += io::format_value(d.grid.gamma(i));
      out += ',';
      out += io::format_value(d.at(j, i));
      out += '\n';
    }
  }
  return out;
}

inline void save_phase_diagram(const PhaseDiagram& d, const io::fs::path& csv, int cutoff = 20) {
  io::json j = io::header_json("phase-diagram");
  j["model"] = io::model_json(d.model);
  j["grid"] = io::grid_json(d.grid);
  j["engine"] = to_string(d.grid.engine);
  j["cutoff"] = cutoff;
  j["metadata"] = d.metadata;
  io::json errs = io::json::array();
  for (const auto& e : d.errors) errs.push_back({{"omega_index", e.omega_index}, {"gamma_index", e.gamma_index}, {"message", e.message}});
  j["errors"] = errs;
  io::write_text(csv, phase_diagram_csv(d));
  io::write_text(io::sidecar_path(csv), io::dump(j));
}

inline PhaseDiagram load_phase_diagram(const io::fs::path& csv) {
  const std::string where = csv.string();
  const auto meta = io::read_sidecar(csv, "phase-diagram");
  PhaseDiagram d = io::guarded(where, [&] {
    PhaseDiagram p;
    p.model = io::model_from_json(meta.at("model"));
    p.grid = io::grid_from_json(meta.at("grid"));
    p.grid.validate();
    p.metadata = meta.at("metadata").get<std::map<std::string, std::string>>();
    for (const auto& e : meta.at("errors"))
      p.errors.push_back({e.at("omega_index").get<int>(), e.at("gamma_index").get<int>(), e.at("message").get<std::string>()});
    return p;
  });
  const std::string text = io::read_text(csv);
  const auto lines = io::split_lines(text, where);
  if (lines.front() != io::kPhaseHeader) throw FormatError(where + ": bad header");
  if (lines.size() != d.grid.size() + 1) throw FormatError(where + ": row count does not match the grid");
  d.values.resize(d.grid.size());
  for (std::size_t k = 0; k < d.grid.size(); ++k) {
    const auto f = io::split_fields(lines[k + 1]);
    const std::string at = where + ":" + std::to_string(k + 2);
    if (f.size() != 3) throw FormatError(at + ": expected 3 fields");
    const int j = static_cast<int>(k / d.grid.gamma_count), i = static_cast<int>(k % d.grid.gamma_count);
    if (f[0] != io::format_value(d.grid.omega(j)) || f[1] != io::format_value(d.grid.gamma(i)))
      throw FormatError(at + ": coordinates do not match the grid");
    const double v = io::parse_value(f[2], at);
    if (!(std::isnan(v) || (v >= 0.0 && std::isfinite(v)))) throw FormatError(at + ": max_im_eps must be >= 0 or nan");
    d.values[k] = v;
  }
  return d;
}

inline DegeneracyKind parse_degeneracy_kind(std::string_view s) {
  if (s == "EP") return DegeneracyKind::EP;
  if (s == "Diabolic") return DegeneracyKind::Diabolic;
  throw FormatError("unknown degeneracy kind: " + std::string(s));
}

inline std::string ep_contours_csv(const EPContourSet& set) {
  std::string out(io::kContourHeader);
  out += '\n';
  for (const auto& c : set.contours)
    for (const auto& p : c.points)
      out += std::to_string(c.id) + ',' + io::format_value(p.omega) + ',' + io::format_value(p.gamma) + ',' +
             to_string(c.kind) + '\n';
  return out;
}

inline void save_ep_contours(const EPContourSet& set, const ModelTemplate& model, const GridSpec& grid,
                             const io::fs::path& csv) {
  io::json j = io::header_json("ep-contours");
  j["model"] = io::model_json(model);
  j["grid"] = io::grid_json(grid);
  j["tolerance"] = set.tolerance;
  j["log"] = set.log;
  io::write_text(csv, ep_contours_csv(set));
  io::write_text(io::sidecar_path(csv), io::dump(j));
}

struct LoadedContours {
  EPContourSet set;
  ModelTemplate model;
  GridSpec grid;
};

/// Points come back with f = NaN; the CSV does not carry the indicator.
inline LoadedContours load_ep_contours(const io::fs::path& csv) {
  const std::string where = csv.string();
  const auto meta = io::read_sidecar(csv, "ep-contours");
  LoadedContours out = io::guarded(where, [&] {
    LoadedContours l;
    l.model = io::model_from_json(meta.at("model"));
    l.grid = io::grid_from_json(meta.at("grid"));
    l.set.tolerance = meta.at("tolerance").get<double>();
    l.set.log = meta.at("log").get<std::vector<std::string>>();
    return l;
  });
  const std::string text = io::read_text(csv);
  const auto lines = io::split_lines(text, where);
  if (lines.front() != io::kContourHeader) throw FormatError(where + ": bad header");
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const std::string at = where + ":" + std::to_string(k + 1);
    const auto f = io::split_fields(lines[k]);
    if (f.size() != 4) throw FormatError(at + ": expected 4 fields");
    const int id = io::parse_int(f[0], at);
    const auto kind = parse_degeneracy_kind(f[3]);
    EPPoint p{io::parse_value(f[1], at), io::parse_value(f[2], at), kind, std::numeric_limits<double>::quiet_NaN()};
    auto& cs = out.set.contours;
    if (cs.empty() || cs.back().id != id) {
      if (id != static_cast<int>(cs.size())) throw FormatError(at + ": contour ids must be consecutive from 0");
      cs.push_back({id, kind, {}});
    }
    if (cs.back().kind != kind) throw FormatError(at + ": mixed kinds in one contour");
    cs.back().points.push_back(p);
  }
  return out;
}

inline std::string berry_csv(const BerryCurve& c) {
  std::string out(io::kBerryHeader);
  out += '\n';
  for (const auto& r : c.rows)
    out += io::format_value(r.gamma) + ',' + std::to_string(r.band) + ',' + io::format_value(r.theta.real()) + ',' +
           io::format_value(r.theta.imag()) + ',' + r.flags + '\n';
  return out;
}

inline void save_berry_curve(const BerryCurve& c, const io::fs::path& csv) {
  io::json j = io::header_json("berry");
  j["model"] = io::model_json(c.model);
  j["steps"] = c.steps;
  j["richardson"] = c.richardson;
  j["metadata"] = c.metadata;
  io::write_text(csv, berry_csv(c));
  io::write_text(io::sidecar_path(csv), io::dump(j));
}

inline BerryCurve load_berry_curve(const io::fs::path& csv) {
  const std::string where = csv.string();
  const auto meta = io::read_sidecar(csv, "berry");
  BerryCurve c = io::guarded(where, [&] {
    BerryCurve b;
    b.model = io::model_from_json(meta.at("model"));
    b.steps = meta.at("steps").get<int>();
    b.richardson = meta.at("richardson").get<bool>();
    b.metadata = meta.at("metadata").get<std::map<std::string, std::string>>();
    return b;
  });
  const std::string text = io::read_text(csv);
  const auto lines = io::split_lines(text, where);
  if (lines.front() != io::kBerryHeader) throw FormatError(where + ": bad header");
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const std::string at = where + ":" + std::to_string(k + 1);
    const auto f = io::split_fields(lines[k]);
    if (f.size() != 5) throw FormatError(at + ": expected 5 fields");
    const int band = io::parse_int(f[1], at);
    if (band != 0 && band != 1) throw FormatError(at + ": band must be 0 or 1");
    if (f[4].empty()) throw FormatError(at + ": empty flags");
    c.rows.push_back({io::parse_value(f[0], at), band, {io::parse_value(f[2], at), io::parse_value(f[3], at)},
                      std::string(f[4])});
  }
  return c;
}

}  // namespace floquet_ep
