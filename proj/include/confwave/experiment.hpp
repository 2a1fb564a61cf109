#pragma once

// Experiment orchestration: JSON configuration, run directories with
// deterministic artifacts (manifest, binary fields, CSV series, JSON
// summaries), the forward/transform/fit pipelines and parameter sweeps.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "confwave/conformal.hpp"
#include "confwave/diagnostics.hpp"
#include "confwave/errors.hpp"
#include "confwave/grid.hpp"
#include "confwave/io.hpp"
#include "confwave/solver.hpp"
#include "confwave/version.hpp"

namespace confwave {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct EvolveConfig {
  int store_every = 1;
  int energy_every = 4;
  int probe_every = 1;
  int bound_every = 0;
  bool nonlinearity = true;
};

struct TransformConfig {
  double h = 0.0;      // 0: inherit grid.h
  double lambda = 0.9;
  double t_end = -0.05;
  double r_max = 2.0;
  double slice_delta = 0.0; // 0: forward grid step
  std::vector<double> flux_t0 = {-0.9, -0.5, -0.2, -0.1};
};

struct ExperimentConfig {
  double p = 3.0;
  InitialDataSpec data;
  GridSpec grid;
  EvolveConfig evolve;
  TransformConfig transform;
  std::vector<double> probes = {0.1};
  std::vector<std::pair<double, double>> windows;
  std::string outputs = "out";
  long seed = 0; // reserved for future randomized data; unused
  std::vector<double> snapshot_times;
  double energy_drift_tolerance = 1e-3;
  bool snap_time = true;

  void validate() const {
    grid.validate();
    data.validate_shape();
    if (!(p > 2.0) || !(p < 5.0))
      throw ConfigurationError("p", "power must lie in (2, 5)");
    for (double r : probes)
      if (!(r >= 0.0) || !(r < grid.r_max))
        throw ConfigurationError("probes", "probe radius must lie in [0, r_max)");
    for (const auto& w : windows)
      if (!(w.second > w.first))
        throw ConfigurationError("windows", "window must have t_hi > t_lo");
    if (outputs.empty())
      throw ConfigurationError("outputs", "output directory must be set");
  }
};

namespace detail {

template <class T>
T get_field(const json& j, const std::string& key, const T& fallback,
            bool required = false) {
  if (!j.contains(key)) {
    if (required) throw ConfigurationError(key, "missing required field");
    return fallback;
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigurationError(key, std::string("bad value: ") + e.what());
  }
}

} // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.p = detail::get_field<double>(j, "p", c.p);
  if (j.contains("data")) {
    const auto& d = j.at("data");
    c.data.amplitude = detail::get_field<double>(d, "amplitude", 1.0);
    c.data.support_radius = detail::get_field<double>(d, "support_radius", 0.4);
    c.data.smoothness_exponent = detail::get_field<int>(d, "smoothness_exponent", 4);
    c.data.velocity_amplitude = detail::get_field<double>(d, "velocity_amplitude", 0.0);
    const std::string prof = detail::get_field<std::string>(d, "profile", "bump");
    if (prof != "bump")
      throw ConfigurationError("data.profile", "unknown profile '" + prof + "'");
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    c.grid.t_start = detail::get_field<double>(g, "t_start", 1.0);
    c.grid.t_end = detail::get_field<double>(g, "t_end", 2.0, true);
    c.grid.r_max = detail::get_field<double>(g, "r_max", 4.0, true);
    c.grid.h = detail::get_field<double>(g, "h", 1.0 / 128, true);
    c.grid.lambda = detail::get_field<double>(g, "lambda", 0.9);
  } else {
    throw ConfigurationError("grid", "missing required section");
  }
  if (j.contains("evolve")) {
    const auto& e = j.at("evolve");
    c.evolve.store_every = detail::get_field<int>(e, "store_every", 1);
    c.evolve.energy_every = detail::get_field<int>(e, "energy_every", 4);
    c.evolve.probe_every = detail::get_field<int>(e, "probe_every", 1);
    c.evolve.bound_every = detail::get_field<int>(e, "bound_every", 0);
    c.evolve.nonlinearity = detail::get_field<bool>(e, "nonlinearity", true);
  }
  if (j.contains("transform")) {
    const auto& t = j.at("transform");
    c.transform.h = detail::get_field<double>(t, "h", 0.0);
    c.transform.lambda = detail::get_field<double>(t, "lambda", 0.9);
    c.transform.t_end = detail::get_field<double>(t, "t_end", -0.05);
    c.transform.r_max = detail::get_field<double>(t, "r_max", 2.0);
    c.transform.slice_delta = detail::get_field<double>(t, "slice_delta", 0.0);
    c.transform.flux_t0 = detail::get_field<std::vector<double>>(
        t, "flux_t0", c.transform.flux_t0);
  }
  c.probes = detail::get_field<std::vector<double>>(j, "probes", c.probes);
  if (j.contains("windows")) {
    for (const auto& w : j.at("windows")) {
      if (!w.is_array() || w.size() != 2)
        throw ConfigurationError("windows", "each window is a [t_lo, t_hi] pair");
      c.windows.emplace_back(w[0].get<double>(), w[1].get<double>());
    }
  }
  c.outputs = detail::get_field<std::string>(j, "outputs", c.outputs);
  c.seed = detail::get_field<long>(j, "seed", 0);
  c.snapshot_times =
      detail::get_field<std::vector<double>>(j, "snapshot_times", {});
  c.energy_drift_tolerance =
      detail::get_field<double>(j, "energy_drift_tolerance", 1e-3);
  c.snap_time = detail::get_field<bool>(j, "snap_time", true);
  return c;
}

inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["p"] = c.p;
  j["data"] = {{"amplitude", c.data.amplitude},
               {"support_radius", c.data.support_radius},
               {"smoothness_exponent", c.data.smoothness_exponent},
               {"velocity_amplitude", c.data.velocity_amplitude},
               {"profile", "bump"}};
  j["grid"] = {{"t_start", c.grid.t_start},
               {"t_end", c.grid.t_end},
               {"r_max", c.grid.r_max},
               {"h", c.grid.h},
               {"lambda", c.grid.lambda}};
  j["evolve"] = {{"store_every", c.evolve.store_every},
                 {"energy_every", c.evolve.energy_every},
                 {"probe_every", c.evolve.probe_every},
                 {"bound_every", c.evolve.bound_every},
                 {"nonlinearity", c.evolve.nonlinearity}};
  j["transform"] = {{"h", c.transform.h},
                    {"lambda", c.transform.lambda},
                    {"t_end", c.transform.t_end},
                    {"r_max", c.transform.r_max},
                    {"slice_delta", c.transform.slice_delta},
                    {"flux_t0", c.transform.flux_t0}};
  j["probes"] = c.probes;
  json wins = json::array();
  for (const auto& w : c.windows) wins.push_back({w.first, w.second});
  j["windows"] = wins;
  j["outputs"] = c.outputs;
  j["seed"] = c.seed;
  j["snapshot_times"] = c.snapshot_times;
  j["energy_drift_tolerance"] = c.energy_drift_tolerance;
  j["snap_time"] = c.snap_time;
  return j;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigurationError("config", "cannot open " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigurationError("config",
                             std::string("JSON parse error: ") + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Helpers shared by the subcommands
// ---------------------------------------------------------------------------

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& s) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!os) throw IoError("short write: " + path.string());
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return j;
}

inline void write_manifest(const std::filesystem::path& dir,
                           const std::string& command,
                           const ExperimentConfig& cfg) {
  json j;
  j["version"] = kVersion;
  j["command"] = command;
  j["config"] = config_to_json(cfg);
  write_json(dir / "manifest.json", j);
}

} // namespace detail

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateSummary {
  std::filesystem::path dir;
  GridSpec grid; // after snapping
  double energy_drift = 0.0;
  bool drift_ok = true;
  bool all_zero = false;
  double max_abs_phi = 0.0;
  long steps = 0;
};

inline SimulateSummary run_simulate(ExperimentConfig cfg) {
  if (cfg.snap_time)
    cfg.grid.t_end =
        snap_t_end(cfg.grid.t_start, cfg.grid.t_end, cfg.grid.h,
                   cfg.grid.lambda, 2);
  cfg.validate();

  EvolveOptions opt;
  opt.store_every = cfg.evolve.store_every;
  opt.energy_every = cfg.evolve.energy_every;
  opt.probe_radii = cfg.probes;
  opt.probe_every = cfg.evolve.probe_every;
  opt.bound_every = cfg.evolve.bound_every;
  opt.nonlinearity = cfg.evolve.nonlinearity;

  const auto rep = evolve_forward(cfg.data, cfg.grid, cfg.p, opt);

  const std::filesystem::path dir(cfg.outputs);
  std::filesystem::create_directories(dir);
  detail::write_manifest(dir, "simulate", cfg);
  write_field_binary(rep.field, dir / "field.bin");
  write_energy_csv(rep.energy_series, dir / "energy.csv");

  if (!rep.probes.empty()) {
    CsvWriter csv("t,r_probe,phi");
    for (const auto& ps : rep.probes)
      for (std::size_t i = 0; i < ps.times.size(); ++i) {
        csv.begin_row();
        csv.cell(ps.times[i]);
        csv.cell(ps.r);
        csv.cell(ps.values[i]);
        csv.end_row();
      }
    csv.save(dir / "probes.csv");
  }
  if (!rep.bound.times.empty()) {
    CsvWriter csv("t,B,running_max");
    for (std::size_t i = 0; i < rep.bound.times.size(); ++i) {
      csv.begin_row();
      csv.cell(rep.bound.times[i]);
      csv.cell(rep.bound.values[i]);
      csv.cell(rep.bound.running_max[i]);
      csv.end_row();
    }
    csv.save(dir / "bound.csv");
  }

  // snapshots: first and last stored level plus any configured times
  std::vector<long> levels = {0, rep.field.stored_levels() - 1};
  for (double t : cfg.snapshot_times) {
    const long lv = static_cast<long>(
        std::llround((t - cfg.grid.t_start) / rep.field.stored_dt()));
    if (lv >= 0 && lv < rep.field.stored_levels()) levels.push_back(lv);
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  write_field_csv(rep.field, dir / "snapshots.csv", levels);

  SimulateSummary sum;
  sum.dir = dir;
  sum.grid = cfg.grid;
  sum.steps = rep.steps;
  sum.max_abs_phi = rep.max_abs_phi;
  sum.all_zero = rep.max_abs_phi == 0.0;
  if (rep.energy_series.size() >= 2 && rep.energy_series.front().total > 0.0) {
    const double e0 = rep.energy_series.front().total;
    for (const auto& e : rep.energy_series)
      sum.energy_drift =
          std::max(sum.energy_drift, std::abs(e.total - e0) / e0);
  }
  sum.drift_ok = sum.energy_drift < cfg.energy_drift_tolerance;

  json s;
  s["all_zero"] = sum.all_zero;
  s["energy_drift"] = sum.energy_drift;
  s["energy_drift_tolerance"] = cfg.energy_drift_tolerance;
  s["drift_ok"] = sum.drift_ok;
  s["max_abs_phi"] = sum.max_abs_phi;
  s["steps"] = sum.steps;
  s["nonlinearity_evaluations"] = rep.nonlinearity_evaluations;
  s["grid"] = {{"t_end", cfg.grid.t_end},
               {"steps", cfg.grid.steps()},
               {"radial_nodes", cfg.grid.radial_nodes()}};
  detail::write_json(dir / "summary.json", s);
  return sum;
}

// ---------------------------------------------------------------------------
// transform
// ---------------------------------------------------------------------------

struct TransformSummary {
  std::filesystem::path dir;
  double e0 = 0.0;
  double flux_max_ratio = 0.0;
  double dual_max_discrepancy = 0.0;
  double divergence_residual = 0.0;
  double psi_sup = 0.0;
  bool pseudo_energy_monotone = true;
};

inline TransformSummary run_transform(const std::filesystem::path& run_dir,
                                      std::optional<TransformConfig> override_cfg =
                                          std::nullopt) {
  const json manifest = detail::read_json(run_dir / "manifest.json");
  ExperimentConfig cfg = config_from_json(manifest.at("config"));
  if (override_cfg) cfg.transform = *override_cfg;
  const SpacetimeField forward = read_field_binary(run_dir / "field.bin");
  const ConformalChart chart{cfg.p, 1e-4};
  chart.validate();

  GridSpec strip;
  strip.t_start = -1.0;
  strip.h = cfg.transform.h > 0.0 ? cfg.transform.h : forward.spec().h;
  strip.lambda = cfg.transform.lambda;
  strip.r_max = cfg.transform.r_max;
  strip.t_end = snap_t_end(-1.0, cfg.transform.t_end, strip.h, strip.lambda);
  strip.validate();

  const double delta = cfg.transform.slice_delta > 0.0 ? cfg.transform.slice_delta
                                                       : forward.spec().h;
  const TimeSlice slice = build_transformed_initial_slice(
      forward, chart, cfg.data.support_radius, strip, delta);

  EvolveOptions opt;
  opt.energy_every = std::max(1, cfg.evolve.energy_every);
  const auto strip_rep = evolve_transformed(slice, strip, cfg.p, chart, opt);
  const auto pushed = push_solution(forward, chart, strip, PushMode::partial);

  TransformSummary sum;
  const std::filesystem::path dir = run_dir / "transform";
  std::filesystem::create_directories(dir);
  sum.dir = dir;
  detail::write_manifest(dir, "transform", cfg);
  write_field_binary(strip_rep.field, dir / "psi_field.bin");
  write_field_binary(pushed.field, dir / "psi_push.bin");
  write_energy_csv(strip_rep.energy_series, dir / "pseudo_energy.csv");

  // dual-evolution discrepancy over the causally valid covered region
  {
    const auto& ev = strip_rep.field;
    const long nr = ev.radial_nodes();
    const double h = ev.spec().h;
    const double lam = ev.spec().lambda;
    for (long n = 0; n < ev.stored_levels(); ++n) {
      const double t = ev.time_of(n);
      const double margin = (1.0 / lam - 1.0) * (t + 1.0) + 8.0 * h;
      for (long j = 1; j < nr; ++j) {
        const double r = ev.radius(j);
        if (r < 0.05 || r > -t - margin) continue;
        if (!pushed.is_covered(n, j)) continue;
        const double a = ev.chi(n, j) / r;
        const double b = pushed.field.chi(n, j) / r;
        sum.dual_max_discrepancy =
            std::max(sum.dual_max_discrepancy, std::abs(a - b));
      }
    }
  }

  // flux table
  std::vector<FluxRecord> fluxes;
  for (double t0 : cfg.transform.flux_t0) {
    if (!(t0 > -1.0) || t0 >= strip.t_end) continue;
    fluxes.push_back(lightcone_flux(strip_rep.field, chart, t0, cfg.p));
    sum.flux_max_ratio = std::max(sum.flux_max_ratio, fluxes.back().ratio);
  }
  write_flux_csv(fluxes, dir / "flux.csv");
  sum.e0 = fluxes.empty()
               ? pseudo_energy(slice_at(strip_rep.field, 0), chart, cfg.p).total
               : fluxes.front().e0;

  // pseudo-energy monotonicity (up to scheme-order wiggle)
  if (strip_rep.energy_series.size() >= 2) {
    const double e0 = strip_rep.energy_series.front().total;
    const double tol = 1e-6 + 10.0 * strip.h * strip.h * std::max(e0, 1.0);
    for (std::size_t i = 1; i < strip_rep.energy_series.size(); ++i)
      if (strip_rep.energy_series[i].total >
          strip_rep.energy_series[i - 1].total + tol)
        sum.pseudo_energy_monotone = false;
  }

  const auto res = divergence_identity_residual(strip_rep.field, chart, cfg.p);
  sum.divergence_residual = res.max_residual;

  const auto sup = uniform_bound_report(strip_rep.field);
  sum.psi_sup = sup.overall;
  {
    CsvWriter csv("t,sup_psi");
    for (std::size_t i = 0; i < sup.times.size(); ++i) {
      csv.begin_row();
      csv.cell(sup.times[i]);
      csv.cell(sup.sup[i]);
      csv.end_row();
    }
    csv.save(dir / "psi_bound.csv");
  }

  // combined long-format diagnostics series
  {
    std::vector<DiagnosticsSeries> series;
    DiagnosticsSeries pe{"pseudo_energy", {}, {}};
    for (const auto& e : strip_rep.energy_series) {
      pe.t.push_back(e.t);
      pe.value.push_back(e.total);
    }
    series.push_back(std::move(pe));
    series.push_back({"sup_psi", sup.times, sup.sup});
    DiagnosticsSeries fx{"flux_ratio", {}, {}};
    for (const auto& f : fluxes) {
      fx.t.push_back(f.t0);
      fx.value.push_back(f.ratio);
    }
    series.push_back(std::move(fx));
    write_series_csv(series, dir / "diagnostics.csv");
  }

  json s;
  s["e0"] = sum.e0;
  s["flux_max_ratio"] = sum.flux_max_ratio;
  s["dual_max_discrepancy"] = sum.dual_max_discrepancy;
  s["divergence_residual"] = sum.divergence_residual;
  s["psi_sup"] = sum.psi_sup;
  s["pseudo_energy_monotone"] = sum.pseudo_energy_monotone;
  s["strip"] = {{"h", strip.h},
                {"t_end", strip.t_end},
                {"r_max", strip.r_max},
                {"lambda", strip.lambda}};
  detail::write_json(dir / "transform_summary.json", s);
  return sum;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitSummary {
  std::filesystem::path dir;
  std::vector<DecayFit> fits;
};

inline FitSummary run_fit(const std::filesystem::path& run_dir,
                          std::vector<double> probes = {},
                          std::vector<std::pair<double, double>> windows = {}) {
  const json manifest = detail::read_json(run_dir / "manifest.json");
  ExperimentConfig cfg = config_from_json(manifest.at("config"));
  if (probes.empty()) probes = cfg.probes;
  if (windows.empty()) windows = cfg.windows;
  if (probes.empty()) throw UsageError("no probe radii given or configured");
  if (windows.empty()) throw UsageError("no fit windows given or configured");

  const SpacetimeField field = read_field_binary(run_dir / "field.bin");

  // recorded probe series are denser than the stored field; prefer them
  std::vector<ProbeSeries> recorded;
  if (std::filesystem::exists(run_dir / "probes.csv")) {
    std::ifstream is(run_dir / "probes.csv");
    std::string line;
    std::getline(is, line); // header
    while (std::getline(is, line)) {
      const auto c1 = line.find(',');
      const auto c2 = line.find(',', c1 + 1);
      if (c1 == std::string::npos || c2 == std::string::npos) continue;
      const double t = std::strtod(line.c_str(), nullptr);
      const double r = std::strtod(line.c_str() + c1 + 1, nullptr);
      const double v = std::strtod(line.c_str() + c2 + 1, nullptr);
      auto it = std::find_if(recorded.begin(), recorded.end(),
                             [r](const ProbeSeries& p) { return p.r == r; });
      if (it == recorded.end()) {
        recorded.push_back({r, {}, {}});
        it = recorded.end() - 1;
      }
      it->times.push_back(t);
      it->values.push_back(v);
    }
  }

  FitSummary sum;
  sum.dir = run_dir;
  for (double r : probes) {
    for (const auto& w : windows) {
      const auto rec =
          std::find_if(recorded.begin(), recorded.end(),
                       [r](const ProbeSeries& p) { return p.r == r; });
      const double horizon =
          rec != recorded.end() ? rec->times.back() : field.last_time();
      if (w.first < field.spec().t_start - 1e-12 || w.second > horizon + 1e-12)
        throw DomainError("fit window outside the evolved horizon");
      if (rec != recorded.end()) {
        double scale = 0.0;
        for (double v : rec->values) scale = std::max(scale, std::abs(v));
        sum.fits.push_back(tail_fit_from_series(rec->times, rec->values, r,
                                                w.first, w.second, scale));
      } else {
        sum.fits.push_back(tail_exponent_fit(field, r, w.first, w.second));
      }
    }
  }
  write_fits_csv(sum.fits, run_dir / "fits.csv");

  const auto bound = decay_bound_monitor(field, cfg.p);
  CsvWriter csv("t,B,running_max");
  for (std::size_t i = 0; i < bound.times.size(); ++i) {
    csv.begin_row();
    csv.cell(bound.times[i]);
    csv.cell(bound.values[i]);
    csv.cell(bound.running_max[i]);
    csv.end_row();
  }
  csv.save(run_dir / "bound_from_field.csv");

  json s;
  json fit_rows = json::array();
  for (const auto& f : sum.fits)
    fit_rows.push_back({{"r_probe", f.r_probe},
                        {"t_lo", f.t_lo},
                        {"t_hi", f.t_hi},
                        {"exponent", f.exponent},
                        {"amplitude", f.amplitude},
                        {"rms_residual", f.rms_residual},
                        {"oscillation_flagged", f.oscillation_flagged},
                        {"points", f.points}});
  s["fits"] = fit_rows;
  s["decay_bound_max"] =
      bound.running_max.empty() ? 0.0 : bound.running_max.back();
  detail::write_json(run_dir / "fit_summary.json", s);
  return sum;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

enum class SweepAxis { p, amplitude, h };

inline SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "p") return SweepAxis::p;
  if (s == "amplitude") return SweepAxis::amplitude;
  if (s == "h") return SweepAxis::h;
  throw UsageError("unknown sweep axis '" + s + "' (p | amplitude | h)");
}

struct SweepRow {
  double value = 0.0;
  bool failed = false;
  std::string error;
  double energy_drift = 0.0;
  double max_abs_phi = 0.0;
  double tail_exponent = 0.0;
  bool has_tail = false;
  double linear_error = 0.0;
  bool has_linear_error = false;
};

struct SweepSummary {
  std::filesystem::path dir;
  std::vector<SweepRow> rows;
};

inline long sweep_worker_count() {
  if (const char* env = std::getenv("CONFWAVE_WORKERS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<long>(hc);
}

inline std::string sweep_value_slug(SweepAxis axis, double value) {
  std::string s;
  switch (axis) {
    case SweepAxis::p: s = "p="; break;
    case SweepAxis::amplitude: s = "A="; break;
    case SweepAxis::h: s = "h="; break;
  }
  append_double(s, value);
  return s;
}

inline SweepSummary run_sweep(const ExperimentConfig& base, SweepAxis axis,
                              std::vector<double> values,
                              const std::filesystem::path& out_dir,
                              long workers = 0) {
  if (values.empty()) throw UsageError("sweep needs a non-empty value list");
  std::sort(values.begin(), values.end());

  // every instantiated config must be valid up front
  std::vector<ExperimentConfig> cfgs;
  for (double v : values) {
    ExperimentConfig c = base;
    switch (axis) {
      case SweepAxis::p: c.p = v; break;
      case SweepAxis::amplitude: c.data.amplitude = v; break;
      case SweepAxis::h: c.grid.h = v; break;
    }
    c.outputs = (out_dir / "runs" / sweep_value_slug(axis, v)).string();
    if (c.snap_time)
      c.grid.t_end = snap_t_end(c.grid.t_start, base.grid.t_end, c.grid.h,
                                c.grid.lambda, 2);
    c.validate();
    cfgs.push_back(std::move(c));
  }

  std::filesystem::create_directories(out_dir);
  SweepSummary sum;
  sum.dir = out_dir;
  sum.rows.resize(values.size());

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cfgs.size()) return;
      SweepRow row;
      row.value = values[i];
      try {
        const auto sim = run_simulate(cfgs[i]);
        row.energy_drift = sim.energy_drift;
        row.max_abs_phi = sim.max_abs_phi;
        // oracle error for effectively-linear validation rows
        if (!cfgs[i].evolve.nonlinearity || cfgs[i].data.amplitude <= 1e-5) {
          const SpacetimeField f = read_field_binary(sim.dir / "field.bin");
          const long last = f.stored_levels() - 1;
          const double t = f.time_of(last);
          double worst = 0.0;
          for (long jn = 0; jn < f.radial_nodes(); ++jn) {
            const double r = f.radius(jn);
            const double num =
                jn == 0 ? detail::axis_derivative(f.chi(last, 1),
                                                  f.chi(last, 2),
                                                  f.chi(last, 3), f.spec().h)
                        : f.chi(last, jn) / r;
            worst = std::max(worst,
                             std::abs(num - exact_linear_solution(
                                                cfgs[i].data, t, r)));
          }
          row.linear_error = worst;
          row.has_linear_error = true;
        }
        if (!cfgs[i].windows.empty() && !cfgs[i].probes.empty()) {
          const auto fits = run_fit(sim.dir);
          if (!fits.fits.empty()) {
            row.tail_exponent = fits.fits.front().exponent;
            row.has_tail = true;
          }
        }
      } catch (const Error& e) {
        row.failed = true;
        row.error = std::string(error_kind_name(e.kind())) + ": " + e.what();
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
      sum.rows[i] = std::move(row);
    }
  };

  long nworkers = workers > 0 ? workers : sweep_worker_count();
  nworkers = std::min<long>(nworkers, static_cast<long>(cfgs.size()));
  if (nworkers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (long k = 0; k < nworkers; ++k) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  // aggregate in canonical (sorted-by-value) order
  CsvWriter csv(
      "value,status,energy_drift,max_abs_phi,tail_exponent,linear_error,order_"
      "linear,order_drift,error");
  for (std::size_t i = 0; i < sum.rows.size(); ++i) {
    const auto& r = sum.rows[i];
    csv.begin_row();
    csv.cell(r.value);
    csv.cell(std::string(r.failed ? "failed" : "ok"));
    if (r.failed) {
      csv.cell(std::string(""));
      csv.cell(std::string(""));
      csv.cell(std::string(""));
      csv.cell(std::string(""));
      csv.cell(std::string(""));
      csv.cell(std::string(""));
      csv.cell(r.error);
      csv.end_row();
      continue;
    }
    csv.cell(r.energy_drift);
    csv.cell(r.max_abs_phi);
    if (r.has_tail)
      csv.cell(r.tail_exponent);
    else
      csv.cell(std::string(""));
    if (r.has_linear_error)
      csv.cell(r.linear_error);
    else
      csv.cell(std::string(""));
    // convergence-order columns for the h axis (finer row versus previous
    // coarser row; values ascend, so the previous row is the finer one)
    if (axis == SweepAxis::h && i + 1 < sum.rows.size() &&
        !sum.rows[i + 1].failed) {
      const auto& coarser = sum.rows[i + 1];
      if (r.has_linear_error && coarser.has_linear_error &&
          r.linear_error > 0.0)
        csv.cell(std::log2(coarser.linear_error / r.linear_error));
      else
        csv.cell(std::string(""));
      if (r.energy_drift > 0.0 && coarser.energy_drift > 0.0)
        csv.cell(std::log2(coarser.energy_drift / r.energy_drift));
      else
        csv.cell(std::string(""));
    } else {
      csv.cell(std::string(""));
      csv.cell(std::string(""));
    }
    csv.cell(std::string(""));
    csv.end_row();
  }
  csv.save(out_dir / "sweep.csv");

  detail::write_manifest(out_dir, "sweep", base);
  return sum;
}

} // namespace confwave
