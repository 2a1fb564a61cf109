// confwave: radial defocusing wave laboratory.
//
// Subcommands: simulate, transform, fit, sweep, validate.
// Exit codes: 0 success, 1 configuration error, 2 numerical failure
// (blow-up / NaN / noise floor), 3 coverage error.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "confwave/acceptance.hpp"
#include "confwave/experiment.hpp"
#include "confwave/version.hpp"

namespace {

using namespace confwave;

struct CommonOverrides {
  std::optional<double> p, amplitude, velocity, support_radius, h, t_end;
  std::optional<std::string> out;
};

void apply_overrides(ExperimentConfig& cfg, const CommonOverrides& o) {
  if (o.p) cfg.p = *o.p;
  if (o.amplitude) cfg.data.amplitude = *o.amplitude;
  if (o.velocity) cfg.data.velocity_amplitude = *o.velocity;
  if (o.support_radius) cfg.data.support_radius = *o.support_radius;
  if (o.h) cfg.grid.h = *o.h;
  if (o.t_end) cfg.grid.t_end = *o.t_end;
  if (o.out) cfg.outputs = *o.out;
}

void add_override_flags(CLI::App* cmd, CommonOverrides& o) {
  cmd->add_option("--p", o.p, "override nonlinearity power");
  cmd->add_option("--amplitude", o.amplitude, "override data amplitude");
  cmd->add_option("--velocity-amplitude", o.velocity,
                  "override velocity amplitude");
  cmd->add_option("--support-radius", o.support_radius,
                  "override data support radius");
  cmd->add_option("--grid-h", o.h, "override spatial step");
  cmd->add_option("--t-end", o.t_end, "override final time");
  cmd->add_option("--out", o.out, "override output directory");
}

int print_results(const std::vector<CriterionResult>& results) {
  bool all = true;
  for (const auto& r : results) {
    std::printf("[%s] %02d %-28s %s\n", r.pass ? "PASS" : "FAIL", r.id,
                r.name.c_str(), r.details.c_str());
    all = all && r.pass;
  }
  std::printf("%s: %zu/%zu criteria passed\n", all ? "OK" : "FAILURE",
              static_cast<std::size_t>(
                  std::count_if(results.begin(), results.end(),
                                [](const auto& r) { return r.pass; })),
              results.size());
  return all ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"confwave: radial defocusing semilinear wave laboratory"};
  app.set_version_flag("--version", confwave::kVersion);
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "evolve the forward problem");
  std::string sim_config;
  CommonOverrides sim_o;
  sim->add_option("--config", sim_config, "JSON configuration file")
      ->required();
  add_override_flags(sim, sim_o);

  // transform
  auto* tra = app.add_subcommand(
      "transform", "push a forward run through the conformal map and evolve "
                   "the transformed equation");
  std::string tra_run;
  std::optional<double> tra_h, tra_tend, tra_rmax;
  tra->add_option("--run", tra_run, "forward run directory")->required();
  tra->add_option("--strip-h", tra_h, "strip grid step (default: forward h)");
  tra->add_option("--strip-t-end", tra_tend, "strip final time (< 0)");
  tra->add_option("--strip-r-max", tra_rmax, "strip outer radius");

  // fit
  auto* fit = app.add_subcommand("fit", "tail fits and decay-bound series");
  std::string fit_run;
  std::vector<double> fit_probes;
  std::vector<double> fit_window_flat;
  fit->add_option("--run", fit_run, "run directory")->required();
  fit->add_option("--probe", fit_probes, "probe radius (repeatable)");
  fit->add_option("--window", fit_window_flat,
                  "fit window t_lo t_hi (repeatable pair)")
      ->expected(-2);

  // sweep
  auto* swp = app.add_subcommand("sweep", "run a parameter sweep");
  std::string swp_config, swp_axis, swp_out;
  std::vector<double> swp_values;
  long swp_workers = 0;
  swp->add_option("--config", swp_config, "JSON configuration template")
      ->required();
  swp->add_option("--axis", swp_axis, "sweep axis: p | amplitude | h")
      ->required();
  swp->add_option("--values", swp_values, "axis values")->required();
  swp->add_option("--out", swp_out, "sweep output directory")->required();
  swp->add_option("--workers", swp_workers,
                  "worker count (default: CONFWAVE_WORKERS or hardware)");

  // validate
  auto* val = app.add_subcommand("validate", "run the acceptance suite");
  std::vector<int> val_ids;
  val->add_option("--criterion", val_ids,
                  "run only the given criterion ids (1..11)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*sim) {
      ExperimentConfig cfg = load_config(sim_config);
      apply_overrides(cfg, sim_o);
      const auto sum = run_simulate(cfg);
      std::printf("simulate: %s (steps=%ld, max|phi|=%s, drift=%s)\n",
                  sum.dir.c_str(), sum.steps,
                  format_double(sum.max_abs_phi).c_str(),
                  format_double(sum.energy_drift).c_str());
      return 0;
    }
    if (*tra) {
      std::optional<TransformConfig> over;
      if (tra_h || tra_tend || tra_rmax) {
        const auto manifest = detail::read_json(
            std::filesystem::path(tra_run) / "manifest.json");
        TransformConfig t = config_from_json(manifest.at("config")).transform;
        if (tra_h) t.h = *tra_h;
        if (tra_tend) t.t_end = *tra_tend;
        if (tra_rmax) t.r_max = *tra_rmax;
        over = t;
      }
      const auto sum = run_transform(tra_run, over);
      std::printf("transform: %s (E0=%s, flux max ratio=%s, dual disc=%s)\n",
                  sum.dir.c_str(), format_double(sum.e0).c_str(),
                  format_double(sum.flux_max_ratio).c_str(),
                  format_double(sum.dual_max_discrepancy).c_str());
      return 0;
    }
    if (*fit) {
      std::vector<std::pair<double, double>> windows;
      if (fit_window_flat.size() % 2 != 0)
        throw UsageError("--window takes pairs: t_lo t_hi");
      for (std::size_t i = 0; i + 1 < fit_window_flat.size(); i += 2)
        windows.emplace_back(fit_window_flat[i], fit_window_flat[i + 1]);
      const auto sum = run_fit(fit_run, fit_probes, windows);
      for (const auto& f : sum.fits)
        std::printf("fit: r=%s window=[%s,%s] exponent=%s%s\n",
                    format_double(f.r_probe).c_str(),
                    format_double(f.t_lo).c_str(),
                    format_double(f.t_hi).c_str(),
                    format_double(f.exponent).c_str(),
                    f.oscillation_flagged ? " (oscillatory)" : "");
      return 0;
    }
    if (*swp) {
      const ExperimentConfig base = load_config(swp_config);
      const auto sum = run_sweep(base, sweep_axis_from_string(swp_axis),
                                 swp_values, swp_out, swp_workers);
      long failed = 0;
      for (const auto& r : sum.rows) failed += r.failed ? 1 : 0;
      std::printf("sweep: %s (%zu rows, %ld failed)\n", sum.dir.c_str(),
                  sum.rows.size(), failed);
      return 0;
    }
    if (*val) {
      return print_results(confwave::run_acceptance(val_ids));
    }
  } catch (const confwave::Error& e) {
    std::fprintf(stderr, "confwave: error kind=%s exit=%d message=\"%s\"\n",
                 confwave::error_kind_name(e.kind()), e.exit_code(), e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "confwave: error kind=internal exit=1 message=\"%s\"\n",
                 e.what());
    return 1;
  }
  return 0;
}
