#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>

#include "floquet_ep/acceptance.hpp"
#include "floquet_ep/config.hpp"
#include "floquet_ep/io.hpp"
#include "floquet_ep/render.hpp"
#include "floquet_ep/sweep.hpp"
#include "floquet_ep/version.hpp"

namespace fs = std::filesystem;
using namespace floquet_ep;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitVerification = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<std::string> engine;
  std::optional<int> cutoff;
  std::optional<int> steps;
};

void progress(const std::string& msg) { std::fprintf(stderr, "[floquet-ep] %s\n", msg.c_str()); }

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// --threads, then a nonzero config value, then FLOQUET_EP_THREADS, then the hardware count.
int resolve_threads(const Overrides& o, const RunConfig& c) {
  if (o.threads) return *o.threads;
  if (c.threads > 0) return c.threads;
  if (const char* env = std::getenv("FLOQUET_EP_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 4096) throw ConfigError("FLOQUET_EP_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

enum class Command { PhaseDiagram, EPContours, Berry, SpectrumScan };

RunConfig load_run_config(const Overrides& o, Command cmd) {
  if (o.config_path.empty()) throw ConfigError("--config is required");
  RunConfig c = load_config(o.config_path);
  if (o.out) c.output_dir = *o.out;
  if (o.engine) c.engine = parse_engine(*o.engine);
  if (o.cutoff) c.cutoff = *o.cutoff;
  if (o.steps) {
    switch (cmd) {
      case Command::Berry: c.berry_steps = *o.steps; break;
      case Command::SpectrumScan: c.spectrum_samples = *o.steps; break;
      default: c.integrate_steps = *o.steps; break;
    }
  }
  c.threads = resolve_threads(o, c);
  c.validate();
  return c;
}

SweepOptions sweep_options(const RunConfig& c) {
  return {.threads = c.threads, .cutoff = c.cutoff, .integrate_steps = c.integrate_steps};
}

void write_svg(const fs::path& p, const std::string& svg) {
  io::write_text(p, svg);
  progress("wrote " + p.string());
}

int cmd_phase_diagram(const RunConfig& c) {
  const fs::path dir = c.output_dir;
  progress("phase diagram: " + c.model.name + " beta=" + std::to_string(c.model.beta) + ", " +
           std::to_string(c.omega.count) + "x" + std::to_string(c.gamma.count) + " grid, engine " + to_string(c.engine) +
           ", " + std::to_string(c.threads) + " threads");
  const auto t0 = std::chrono::steady_clock::now();
  auto d = phase_diagram(c.model, c.grid(), sweep_options(c));
  progress("evaluated in " +
           std::to_string(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()) + " s, " +
           std::to_string(d.errors.size()) + " failed cells");
  d.metadata["timestamp"] = utc_timestamp();
  d.metadata["threads"] = std::to_string(c.threads);
  save_phase_diagram(d, dir / "phase_diagram.csv", c.cutoff);
  progress("wrote " + (dir / "phase_diagram.csv").string());
  std::optional<EPContourSet> overlay;
  if (c.overlay_contours) {
    if (c.engine == SweepEngine::Floquet) throw ConfigError("overlay_contours needs a monodromy engine");
    overlay = trace_ep_contours(c.model, c.grid(), sweep_options(c));
    save_ep_contours(*overlay, c.model, c.grid(), dir / "ep_contours.csv");
  }
  write_svg(dir / "phase_diagram.svg", heatmap_svg(d, overlay ? &*overlay : nullptr));
  return kExitOk;
}

int cmd_ep_contours(const RunConfig& c) {
  const fs::path dir = c.output_dir;
  progress("EP contours: " + c.model.name + " beta=" + std::to_string(c.model.beta) + ", engine " + to_string(c.engine));
  const auto set = trace_ep_contours(c.model, c.grid(), sweep_options(c));
  for (const auto& line : set.log) progress(line);
  std::size_t points = 0;
  for (const auto& p : set.contours) points += p.points.size();
  progress(std::to_string(set.contours.size()) + " polylines, " + std::to_string(points) + " points");
  save_ep_contours(set, c.model, c.grid(), dir / "ep_contours.csv");
  progress("wrote " + (dir / "ep_contours.csv").string());
  write_svg(dir / "ep_contours.svg", contours_svg(set, c.model, c.grid()));
  return kExitOk;
}

int cmd_berry(const RunConfig& c) {
  const fs::path dir = c.output_dir;
  progress("Berry phases: " + c.model.name + " beta=" + std::to_string(c.model.beta) + ", " +
           std::to_string(c.gamma.count) + " gamma values, " + std::to_string(c.berry_steps) + " steps" +
           (c.richardson ? " + Richardson" : ""));
  auto curve = berry_sweep(c.model, c.gammas(), {.steps = c.berry_steps, .richardson = c.richardson}, c.threads);
  curve.metadata["timestamp"] = utc_timestamp();
  save_berry_curve(curve, dir / "berry.csv");
  progress("wrote " + (dir / "berry.csv").string() + " (step-doubling delta max " +
           curve.metadata["step_doubling_delta_max"] + ")");
  write_svg(dir / "berry.svg", berry_svg(curve));
  return kExitOk;
}

int cmd_spectrum_scan(const RunConfig& c) {
  const fs::path dir = c.output_dir;
  progress("spectrum scan: " + c.model.name + " beta=" + std::to_string(c.model.beta));
  const auto s = spectrum_region_scan(c.model, c.gamma.min, c.gamma.max, c.gamma.count, c.spectrum_samples);
  std::string csv = "gamma,region\n";
  for (std::size_t k = 0; k < s.gammas.size(); ++k)
    csv += io::format_value(s.gammas[k]) + ',' + to_string(s.regions[k]) + '\n';
  io::json meta = io::header_json("spectrum-scan");
  meta["model"] = io::model_json(c.model);
  meta["samples"] = c.spectrum_samples;
  meta["thresholds"] = s.thresholds;
  io::write_text(dir / "spectrum_scan.csv", csv);
  io::write_text(io::sidecar_path(dir / "spectrum_scan.csv"), io::dump(meta));
  for (double t : s.thresholds) progress("threshold gamma = " + io::format_value(t));
  progress("wrote " + (dir / "spectrum_scan.csv").string());
  return kExitOk;
}

int cmd_verify(const std::string& level, const Overrides& o, bool mutate) {
  acceptance::Options opts;
  opts.level = level == "fast" ? acceptance::Level::Fast : acceptance::Level::Full;
  opts.mutate_z_sign = mutate;
  RunConfig defaults;
  opts.threads = resolve_threads(o, defaults);
  const auto ids = acceptance::criteria_for(opts.level);
  std::printf("floquet-ep %s verify (%s)\n", kToolVersion, level.c_str());
  int failed = 0;
  for (int id : ids) {
    const auto r = acceptance::run_criterion(id, opts);
    std::printf("%s\n", acceptance::format_line(r).c_str());
    std::fflush(stdout);
    failed += !r.passed;
  }
  std::printf("%zu criteria, %zu passed, %d failed\n", ids.size(), ids.size() - failed, failed);
  return failed ? kExitVerification : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability phase diagrams, EP contours and complex Berry phases of driven non-Hermitian two-level models"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  Overrides o;
  auto add_common = [&o](CLI::App* sub, bool needs_config) {
    auto* cfg = sub->add_option("--config", o.config_path, "JSON run configuration");
    if (needs_config) cfg->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (overrides output_dir)");
    sub->add_option("--threads", o.threads, "worker threads (default: FLOQUET_EP_THREADS, else all cores)")
        ->check(CLI::Range(1, 4096));
    sub->add_option("--engine", o.engine, "floquet | monodromy-piecewise | monodromy-integrate");
    sub->add_option("--cutoff", o.cutoff, "Floquet harmonic cutoff N")->check(CLI::PositiveNumber);
    sub->add_option("--steps", o.steps, "steps per period: Berry loop points, RK4 steps, or spectrum samples")
        ->check(CLI::PositiveNumber);
  };

  auto* pd = app.add_subcommand("phase-diagram", "max Im eps over the (omega, gamma) grid: CSV + JSON + SVG heatmap");
  auto* ep = app.add_subcommand("ep-contours", "EP contours from the monodromy indicator: CSV + JSON + SVG");
  auto* berry = app.add_subcommand("berry", "complex Berry phases along the gamma range: CSV + JSON + SVG");
  auto* scan = app.add_subcommand("spectrum-scan", "instantaneous-spectrum regions and thresholds along gamma");
  auto* verify = app.add_subcommand("verify", "run the acceptance criteria and print a pass/fail report");
  for (auto* s : {pd, ep, berry, scan}) add_common(s, true);
  add_common(verify, false);
  std::string level = "fast";
  bool mutate = false;
  verify->add_option("--level", level, "fast | full")->check(CLI::IsMember({"fast", "full"}));
  verify->add_flag("--mutate-z-sign", mutate, "self-test: corrupt the Z-term sign on the analytic side");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (verify->parsed()) return cmd_verify(level, o, mutate);
    if (pd->parsed()) return cmd_phase_diagram(load_run_config(o, Command::PhaseDiagram));
    if (ep->parsed()) return cmd_ep_contours(load_run_config(o, Command::EPContours));
    if (berry->parsed()) return cmd_berry(load_run_config(o, Command::Berry));
    if (scan->parsed()) return cmd_spectrum_scan(load_run_config(o, Command::SpectrumScan));
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
