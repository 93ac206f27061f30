#pragma once

#include <filesystem>
#include <set>
#include <string>

#include <json.hpp>

#include "floquet_ep/errors.hpp"
#include "floquet_ep/io.hpp"
#include "floquet_ep/sweep.hpp"

namespace floquet_ep {

inline constexpr int kConfigSchemaVersion = 1;

struct Range {
  double min = 0.0;
  double max = 1.0;
  int count = 2;

  bool operator==(const Range&) const = default;
};

/// Everything one CLI run needs; serialized as a single JSON document.
struct RunConfig {
  ModelTemplate model;
  SweepEngine engine = SweepEngine::MonodromyPiecewise;
  int cutoff = 20;
  int integrate_steps = 200000;
  int berry_steps = 8192;
  bool richardson = true;
  int spectrum_samples = 1024;
  Range gamma{0.0, 1.0, 51};
  Range omega{0.2, 3.0, 50};
  bool overlay_contours = false;
  std::string output_dir = "out";
  int threads = 0;  // 0: FLOQUET_EP_THREADS or hardware concurrency

  [[nodiscard]] GridSpec grid() const {
    return {gamma.min, gamma.max, gamma.count, omega.min, omega.max, omega.count, engine};
  }

  [[nodiscard]] std::vector<double> gammas() const {
    std::vector<double> out(gamma.count);
    for (int i = 0; i < gamma.count; ++i) out[i] = grid().gamma(i);
    return out;
  }

  void validate() const {
    if (!is_known_preset(model.name)) throw ConfigError("unknown preset: " + model.name);
    if (model.beta < 1) throw ConfigError("beta must be an integer >= 1");
    if (!std::isfinite(model.J)) throw ConfigError("J must be finite");
    grid().validate();
    if (cutoff < 1) throw ConfigError("cutoff must be >= 1");
    if (integrate_steps < 1) throw ConfigError("integrate_steps must be >= 1");
    if (berry_steps < 256) throw ConfigError("berry_steps must be >= 256");
    if (spectrum_samples < 64) throw ConfigError("spectrum_samples must be >= 64");
    if (threads < 0) throw ConfigError("threads must be >= 0");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  }

  bool operator==(const RunConfig& o) const {
    return model.name == o.model.name && model.J == o.model.J && model.beta == o.model.beta &&
           model.family == o.model.family && engine == o.engine && cutoff == o.cutoff &&
           integrate_steps == o.integrate_steps && berry_steps == o.berry_steps && richardson == o.richardson &&
           spectrum_samples == o.spectrum_samples && gamma == o.gamma && omega == o.omega &&
           overlay_contours == o.overlay_contours && output_dir == o.output_dir && threads == o.threads;
  }
};

inline nlohmann::json to_json(const RunConfig& c) {
  auto range = [](const Range& r) { return nlohmann::json{{"min", r.min}, {"max", r.max}, {"count", r.count}}; };
  return {{"schema_version", kConfigSchemaVersion},
          {"model", io::model_json(c.model)},
          {"engine", to_string(c.engine)},
          {"cutoff", c.cutoff},
          {"integrate_steps", c.integrate_steps},
          {"berry_steps", c.berry_steps},
          {"richardson", c.richardson},
          {"spectrum_samples", c.spectrum_samples},
          {"gamma", range(c.gamma)},
          {"omega", range(c.omega)},
          {"overlay_contours", c.overlay_contours},
          {"output_dir", c.output_dir},
          {"threads", c.threads}};
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

/// Integer-valued field; 1.5 or "3" are errors rather than silently converted.
inline int int_or(const nlohmann::json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
  return j[key].get<int>();
}

inline double number_or(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(std::string(key) + " must be a number");
  return j[key].get<double>();
}

}  // namespace detail

/// Strict parse: schema_version and model are required, other keys default; unknown keys are errors.
inline RunConfig config_from_json(const nlohmann::json& j) {
  try {
    detail::reject_unknown_keys(j,
                                {"schema_version", "model", "engine", "cutoff", "integrate_steps", "berry_steps",
                                 "richardson", "spectrum_samples", "gamma", "omega", "overlay_contours", "output_dir",
                                 "threads"},
                                "config");
    if (!j.contains("schema_version")) throw ConfigError("missing schema_version");
    if (j["schema_version"] != kConfigSchemaVersion)
      throw ConfigError("unsupported schema_version " + j["schema_version"].dump());
    if (!j.contains("model")) throw ConfigError("missing model");
    const auto& m = j["model"];
    detail::reject_unknown_keys(m, {"preset", "J", "beta", "family"}, "model");
    RunConfig c;
    c.model.name = m.at("preset").get<std::string>();
    c.model.J = detail::number_or(m, "J", 1.0);
    c.model.beta = detail::int_or(m, "beta", 1);
    c.model.family = parse_family(m.value("family", std::string("square")));
    c.engine = parse_engine(j.value("engine", std::string(to_string(c.engine))));
    c.cutoff = detail::int_or(j, "cutoff", c.cutoff);
    c.integrate_steps = detail::int_or(j, "integrate_steps", c.integrate_steps);
    c.berry_steps = detail::int_or(j, "berry_steps", c.berry_steps);
    c.richardson = j.value("richardson", c.richardson);
    c.spectrum_samples = detail::int_or(j, "spectrum_samples", c.spectrum_samples);
    auto range = [&](const char* key, Range r) {
      if (!j.contains(key)) return r;
      detail::reject_unknown_keys(j[key], {"min", "max", "count"}, key);
      r.min = detail::number_or(j[key], "min", r.min);
      r.max = detail::number_or(j[key], "max", r.max);
      r.count = detail::int_or(j[key], "count", r.count);
      return r;
    };
    c.gamma = range("gamma", c.gamma);
    c.omega = range("omega", c.omega);
    c.overlay_contours = j.value("overlay_contours", c.overlay_contours);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.threads = detail::int_or(j, "threads", c.threads);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline RunConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline std::string serialize_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

inline RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text);
}

}  // namespace floquet_ep
