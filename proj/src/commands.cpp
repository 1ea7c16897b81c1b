#include "paraspec/commands.hpp"

#include <chrono>
#include <cmath>

#include "json.hpp"
#include "paraspec/artifacts.hpp"
#include "paraspec/conditions.hpp"
#include "paraspec/errors.hpp"
#include "paraspec/rng.hpp"
#include "paraspec/spectral.hpp"
#include "paraspec/twisted.hpp"

namespace paraspec {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

void record_run(const fs::path& dir, const std::string& hash, const std::string& command, const CommandOutput& out,
                Clock::time_point start) {
  ojson run;
  const fs::path path = dir / "run.json";
  if (fs::exists(path)) {
    try {
      run = ojson::parse(read_file(path));
    } catch (const nlohmann::json::exception&) {
      run = ojson();
    }
  }
  if (!run.is_object() || run.value("config_hash", "") != hash) run = ojson::object();
  run["config_hash"] = hash;
  run["code_version"] = kCodeVersion;
  ojson entry;
  entry["wall_time_s"] = std::chrono::duration<double>(Clock::now() - start).count();
  entry["files"] = out.files;
  entry["caveats"] = out.caveats;
  run["commands"][command] = entry;
  write_file(path, run.dump(2) + "\n");
}

std::string write_config_copy(const RunContext& ctx, const std::string& hash) {
  return write_file(ctx.out / "config.ini", "# config_hash=" + hash + "\n" + to_ini(ctx.config));
}

void check_upstream_hash(const std::string& text, const std::string& file, const std::string& hash) {
  const std::string found = csv_comment_value(text, "config_hash");
  if (found != hash)
    throw MissingArtifact(file + " was produced by config " + found + ", not " + hash + "; rerun correlate");
}

std::vector<std::string> row(std::initializer_list<double> v) {
  std::vector<std::string> out;
  for (double x : v) out.push_back(format_double(x));
  return out;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const NumericalError*>(&e)) return 3;
  return 1;
}

// ---------------------------------------------------------------------------

CommandOutput cmd_simulate(const RunContext& ctx) {
  const auto start = Clock::now();
  const ExperimentConfig& c = ctx.config;
  const std::string hash = config_hash(c);
  const System system = build_system(c, ctx.workers);
  CsvTable t;
  t.comments.push_back("system=" + describe(system));
  const std::size_t n_orbits = static_cast<std::size_t>(c.simulate.n_orbits);
  std::vector<std::vector<std::vector<std::string>>> rows(n_orbits);

  if (const auto* f = std::get_if<FurstenbergSpec>(&system)) {
    t.header = {"orbit", "n"};
    for (int a = 0; a < f->d; ++a) t.header.push_back("x" + std::to_string(a));
    parallel_for(n_orbits, ctx.workers, [&](std::size_t o) {
      SampleRng rng(c.seed, Stream::simulate, o);
      TorusPoint x;
      for (int a = 0; a < f->d; ++a) x.coords.push_back(rng.uniform());
      for (long n = 0; n <= c.simulate.steps; ++n) {
        std::vector<std::string> r = {std::to_string(o), std::to_string(n)};
        for (double v : x.coords) r.push_back(format_double(v));
        rows[o].push_back(std::move(r));
        x = furstenberg_apply(*f, x);
      }
    });
  } else if (is_map_system(system)) {
    const ActiveMap map(to_map_system(system));
    const bool rotation = std::holds_alternative<RotationControl>(system);
    t.header = rotation ? std::vector<std::string>{"orbit", "n", "x"}
                        : std::vector<std::string>{"orbit", "n", "x", "theta"};
    parallel_for(n_orbits, ctx.workers, [&](std::size_t o) {
      SampleRng rng(c.seed, Stream::simulate, o);
      double x = rng.uniform();
      double theta = rotation ? 0.0 : rng.uniform();
      for (long n = 0; n <= c.simulate.steps; ++n) {
        std::vector<std::string> r = {std::to_string(o), std::to_string(n), format_double(x)};
        if (!rotation) r.push_back(format_double(theta));
        rows[o].push_back(std::move(r));
        theta = frac(theta + frac(map.phase(std::span<const double>(&x, 1))));
        map.forward(std::span<double>(&x, 1));
      }
    });
  } else {
    const bool twisted = std::holds_alternative<TwistedFlow>(system);
    const TimeChange& alpha =
        twisted ? std::get<TwistedFlow>(system).alpha : std::get<TimeChangedFlow>(system).alpha;
    t.header = {"orbit", "t", "re", "im", twisted ? "theta" : "sigma"};
    const long steps = static_cast<long>(std::floor(c.simulate.T / c.simulate.dt + 1e-9));
    parallel_for(n_orbits, ctx.workers, [&](std::size_t o) {
      SampleRng rng(c.seed, Stream::simulate, o);
      const ModularPoint x0 = sample_modular_point(rng, alpha.y_cap);
      const double theta0 = twisted ? rng.uniform() : 0.0;
      for (long s = 0; s <= steps; ++s) {
        const double tt = static_cast<double>(s) * c.simulate.dt;
        std::complex<double> z;
        double aux;
        if (twisted) {
          const TwistedPoint p = twisted_flow({x0, theta0}, tt, alpha, c.tol);
          z = p.base.z;
          aux = p.theta;
        } else {
          const FlowResult r = s == 0 ? FlowResult{x0, 0.0} : time_changed_flow_detail(x0, tt, alpha, c.tol);
          z = r.point.z;
          aux = r.sigma;
        }
        rows[o].push_back({std::to_string(o), format_double(tt), format_double(z.real()), format_double(z.imag()),
                           format_double(aux)});
      }
    });
  }
  for (auto& block : rows)
    for (auto& r : block) t.rows.push_back(std::move(r));
  CommandOutput out;
  out.files.push_back(write_file(ctx.out / "orbits.csv", render_csv(t, hash)));
  out.files.push_back(write_config_copy(ctx, hash));
  record_run(ctx.out, hash, "simulate", out, start);
  return out;
}

CommandOutput cmd_correlate(const RunContext& ctx) {
  const auto start = Clock::now();
  const ExperimentConfig& c = ctx.config;
  const std::string hash = config_hash(c);
  const System system = build_system(c, ctx.workers);
  CorrelationSeries series;
  CommandOutput out;
  if (is_map_system(system)) {
    const int dim = c.scenario == Scenario::furstenberg ? c.map.j - 1 : 1;
    const FourierObservable psi = parse_trig_poly(c.correlation.psi, dim);
    series = correlation_map(to_map_system(system), psi, c.correlation.N, c.correlation.grid_log2,
                             {false, ctx.workers});
  } else {
    FlowCorrelationOptions o;
    o.observable = c.correlation.observable;
    o.T = c.correlation.T;
    o.dt = c.correlation.dt;
    o.n_samples = c.correlation.n_samples;
    o.seed = c.seed;
    o.workers = ctx.workers;
    o.tol = c.tol;
    series = correlation_flow(system, o);
    out.caveats.push_back("Monte Carlo correlation: error bars are batch-means standard errors (16 batches)");
  }
  out.files.push_back(write_file(ctx.out / "correlation.csv", render_correlation_csv(series, hash)));
  out.files.push_back(write_config_copy(ctx, hash));
  record_run(ctx.out, hash, "correlate", out, start);
  return out;
}

CommandOutput cmd_conditions(const RunContext& ctx) {
  const auto start = Clock::now();
  const ExperimentConfig& c = ctx.config;
  const std::string hash = config_hash(c);
  const System system = build_system(c, ctx.workers);
  ConditionOptions o;
  o.times = log_time_grid(c.conditions.t_min, c.conditions.t_max, c.conditions.per_decade, is_map_system(system));
  o.n_samples = c.conditions.n_samples;
  o.seed = c.seed;
  o.tol = c.tol;
  o.workers = ctx.workers;
  o.derivative_step = c.conditions.derivative_step;
  const ConditionReport r = evaluate_conditions(system, o);
  CommandOutput out;
  out.caveats = r.caveats;
  out.files.push_back(write_file(ctx.out / "conditions.json", render_condition_report(r, hash)));
  out.files.push_back(write_config_copy(ctx, hash));
  record_run(ctx.out, hash, "conditions", out, start);
  return out;
}

CommandOutput cmd_spectrum(const RunContext& ctx) {
  const auto start = Clock::now();
  const ExperimentConfig& c = ctx.config;
  const std::string hash = config_hash(c);
  const std::string text = read_file(ctx.out / "correlation.csv");
  check_upstream_hash(text, "correlation.csv", hash);
  const CorrelationSeries series = parse_correlation_csv(text);
  const SpectralEstimate est =
      spectral_estimate(series, parse_window(c.spectrum.window), c.spectrum.pad, c.spectrum.bochner_m, c.seed);
  CommandOutput out;

  CsvTable dens;
  dens.comments.push_back("window=" + c.spectrum.window + " pad=" + std::to_string(c.spectrum.pad));
  dens.header = {"freq", "density"};
  for (std::size_t k = 0; k < est.density.freq.size(); ++k)
    dens.rows.push_back(row({est.density.freq[k], est.density.density[k]}));
  out.files.push_back(write_file(ctx.out / "spectrum.csv", render_csv(dens, hash)));

  CsvTable pn;
  pn.header = {"time", "cumulative"};
  for (std::size_t k = 0; k < est.partial_norm.times.size(); ++k)
    pn.rows.push_back(row({est.partial_norm.times[k], est.partial_norm.cumulative[k]}));
  out.files.push_back(write_file(ctx.out / "partial_norm.csv", render_csv(pn, hash)));

  CsvTable env;
  env.header = {"time", "envelope"};
  for (std::size_t k = 0; k < est.decay.env_times.size(); ++k)
    env.rows.push_back(row({est.decay.env_times[k], est.decay.env_values[k]}));
  out.files.push_back(write_file(ctx.out / "envelope.csv", render_csv(env, hash)));

  ojson j;
  j["config_hash"] = hash;
  j["system"] = series.system_desc;
  j["estimator"] = series.estimator.method;
  ojson l2;
  l2["verdict"] = to_string(est.partial_norm.verdict);
  l2["total"] = est.partial_norm.total;
  l2["decade_ends"] = est.partial_norm.decade_ends;
  l2["decade_increments"] = est.partial_norm.decade_increments;
  l2["rule"] = "BOUNDED iff the last-decade increment < 5% of the total; GROWING iff increments are nondecreasing";
  j["l2_partial_norm"] = l2;
  ojson dj;
  dj["window"] = c.spectrum.window;
  dj["pad"] = c.spectrum.pad;
  dj["min_value"] = est.density.min_value;
  dj["mass"] = est.density.mass;
  dj["c0"] = est.density.c0;
  dj["mass_error"] = est.density.mass_error;
  dj["mass_check"] = est.density.mass_error <= kMassTolerance ? "PASS" : "FAIL";
  dj["ripple"] = std::isfinite(est.density.ripple) ? ojson(est.density.ripple) : ojson(nullptr);
  dj["nonnegative"] = est.density_nonneg;
  j["density"] = dj;
  ojson fit;
  if (est.decay_available) {
    fit["beta_hat"] = est.decay.beta_hat;
    fit["ci"] = {est.decay.ci_low, est.decay.ci_high};
    fit["n_points"] = est.decay.n_points;
    fit["n_bins"] = est.decay.n_bins;
    fit["unreliable"] = est.decay.unreliable;
    fit["no_decay"] = est.decay.no_decay;
  } else {
    fit = nullptr;
  }
  j["decay"] = fit;
  ojson b;
  b["m"] = est.bochner.m;
  b["min_eigenvalue"] = est.bochner.min_eigenvalue;
  b["bound"] = est.bochner.bound;
  b["verdict"] = est.bochner.pass ? "PASS" : "FAIL";
  j["bochner"] = b;
  out.files.push_back(write_file(ctx.out / "spectrum.json", j.dump(2) + "\n"));

  out.files.push_back(write_file(
      ctx.out / "density.svg",
      render_svg_plot("spectral density", "frequency", "density",
                      {{"density", est.density.freq, est.density.density}}, false, false, hash)));
  out.files.push_back(write_file(
      ctx.out / "partial_norm.svg",
      render_svg_plot("partial L2 norm", "T", "cumulative |c|^2",
                      {{"partial norm", est.partial_norm.times, est.partial_norm.cumulative}}, false, false, hash)));
  std::vector<double> abs_t, abs_c;
  for (std::size_t k = 0; k < series.size(); ++k) {
    if (series.times[k] <= 0.0) continue;
    abs_t.push_back(series.times[k]);
    abs_c.push_back(std::abs(series.values[k]));
  }
  out.files.push_back(write_file(
      ctx.out / "envelope.svg",
      render_svg_plot("correlation envelope", "t", "|c(t)|",
                      {{"|c|", abs_t, abs_c}, {"bin-max envelope", est.decay.env_times, est.decay.env_values}}, true,
                      true, hash)));
  out.caveats.push_back("L2 thresholds (5% last-decade rule) are a finite-horizon convention");
  out.files.push_back(write_config_copy(ctx, hash));
  record_run(ctx.out, hash, "spectrum", out, start);
  return out;
}

// ---------------------------------------------------------------------------

CommandOutput cmd_report(const fs::path& dir) {
  const auto start = Clock::now();
  const std::string corr_text = read_file(dir / "correlation.csv");
  const ojson spec = ojson::parse(read_file(dir / "spectrum.json"));
  const std::string hash = spec.value("config_hash", "");
  check_upstream_hash(corr_text, "correlation.csv", hash);
  std::optional<ojson> cond;
  if (fs::exists(dir / "conditions.json")) {
    cond = ojson::parse(read_file(dir / "conditions.json"));
    if (cond->value("config_hash", "") != hash) throw MissingArtifact("conditions.json belongs to another config");
  }

  std::string md;
  md += "# Run report\n\n";
  md += "config_hash: `" + hash + "`\n\n";
  md += "System: " + spec.value("system", "") + "\n\n";
  md += "## Spectral signature (absolute continuity via square-integrable correlations)\n\n";
  const std::string l2 = spec["l2_partial_norm"]["verdict"];
  const char* reading = l2 == "BOUNDED"   ? "consistent with absolutely continuous spectrum at this horizon"
                        : l2 == "GROWING" ? "inconsistent with absolutely continuous spectrum at this horizon "
                                            "(pure point signature)"
                                          : "undetermined at this horizon";
  md += "- partial L2 norm: **" + l2 + "**, " + reading + "\n";
  md += "- total partial norm: " + format_double(spec["l2_partial_norm"]["total"].get<double>()) + "\n";
  if (!spec["decay"].is_null()) {
    const auto& d = spec["decay"];
    md += "- decay exponent beta_hat = " + format_double(d["beta_hat"].get<double>()) + " (95% CI " +
          format_double(d["ci"][0].get<double>()) + " .. " + format_double(d["ci"][1].get<double>()) + ")";
    if (d["no_decay"].get<bool>()) md += ", flagged: no decay";
    if (d["unreliable"].get<bool>()) md += ", flagged: UNRELIABLE";
    md += "\n";
  } else {
    md += "- decay exponent: not fitted (too few points in the last two decades)\n";
  }
  md += "- density mass check: " + spec["density"]["mass_check"].get<std::string>() +
        " (relative error " + format_double(spec["density"]["mass_error"].get<double>()) + ")\n";
  md += "- Bochner positivity (Toeplitz m = " + std::to_string(spec["bochner"]["m"].get<int>()) + "): " +
        spec["bochner"]["verdict"].get<std::string>() + ", min eigenvalue " +
        format_double(spec["bochner"]["min_eigenvalue"].get<double>()) + "\n\n";
  md += "Absolute continuity is reported as consistent or inconsistent, never proved.\n\n";

  md += "## Commutator hypotheses (conditions (i)-(iii))\n\n";
  if (cond) {
    md += "- operators: " + cond->value("b1", "") + ", " + cond->value("b2", "") + "\n";
    for (const char* key : {"i", "ii", "iii"}) {
      const auto& cj = (*cond)["conditions"][key];
      md += std::string("- condition (") + key + "): **" + cj["verdict"].get<std::string>() + "**, estimate " +
            (cj["estimate"].is_null() ? std::string("n/a") : format_double(cj["estimate"].get<double>())) + "; " +
            cj["rule"].get<std::string>() + "\n";
    }
    if (!(*cond)["kushnirenko"].is_null())
      md += "- Kushnirenko condition sup|X alpha / alpha| < 1 (informational): " +
            (*cond)["kushnirenko"]["verdict"].get<std::string>() + ", estimate " +
            format_double((*cond)["kushnirenko"]["sup_estimate"].get<double>()) + "\n";
    md += "- overall: **" + cond->value("overall", "") + "**\n\n";
    md += "Caveats:\n\n";
    for (const auto& cv : (*cond)["caveats"]) md += "- " + cv.get<std::string>() + "\n";
  } else {
    md += "Not evaluated for this run (no conditions.json).\n";
  }
  md += "\n## Artifacts\n\n";
  for (const char* f : {"correlation.csv", "spectrum.csv", "partial_norm.csv", "envelope.csv", "spectrum.json",
                        "conditions.json", "orbits.csv", "density.svg", "partial_norm.svg", "envelope.svg"})
    if (fs::exists(dir / f)) md += std::string("- [") + f + "](" + f + ")\n";

  CommandOutput out;
  out.files.push_back(write_file(dir / "report.md", md));
  record_run(dir, hash, "report", out, start);
  return out;
}

}  // namespace paraspec
