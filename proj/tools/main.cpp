// branchsim — command-line front end.
//
// Subcommands run the built-in scenarios and the physical-regime calculators,
// or execute an arbitrary JSON scenario config, and emit deterministic JSON /
// CSV / gnuplot tables.  Timing goes to stderr so identical invocations stay
// byte-identical on stdout and in files.
//
// Exit codes: 0 success, 1 usage error, 2 config validation error,
// 3 capacity error, 4 numerical/invariant or I/O failure.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <numbers>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include <branchsim/config_io.hpp>
#include <branchsim/physical.hpp>
#include <branchsim/runner.hpp>
#include <branchsim/version.hpp>

namespace {

using namespace branchsim;

struct OutputOptions {
  std::string out_path;         // empty = stdout
  std::string format = "json";  // json | csv | plot
  std::string table = "auto";   // auto | series | counts  (csv/plot only)
  bool plot_data = false;
  bool print_config = false;
};

void add_output_options(CLI::App* sub, OutputOptions& o) {
  sub->add_option("--out", o.out_path, "Write to this file instead of stdout");
  sub->add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"json", "csv", "plot"}));
  sub->add_flag("--plot-data", o.plot_data,
                "Emit a gnuplot-compatible whitespace table (same as --format plot)");
  sub->add_option("--table", o.table, "Which table csv/plot emits")
      ->check(CLI::IsMember({"auto", "series", "counts"}));
  sub->add_flag("--print-config", o.print_config,
                "Print the fully resolved scenario config and exit");
}

// Writes through a file or stdout, failing loudly: a short write must not
// masquerade as success.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot open output file: " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  void finish() {
    stream().flush();
    if (!stream()) throw std::runtime_error("write failed");
  }

 private:
  std::ofstream file_;
};

void emit_json(const Json& j, const OutputOptions& o) {
  Sink sink(o.out_path);
  sink.stream() << j.dump(2) << '\n';
  sink.finish();
}

void emit_record(const RunRecord& rec, const OutputOptions& o, const std::string& default_table) {
  if (o.format == "json" && !o.plot_data) {
    emit_json(to_json(rec), o);
    return;
  }
  const TableStyle style =
      (o.format == "plot" || o.plot_data) ? TableStyle::kPlot : TableStyle::kCsv;
  const std::string table = o.table == "auto" ? default_table : o.table;
  Sink sink(o.out_path);
  if (table == "counts")
    write_counts_table(rec, sink.stream(), style);
  else
    write_series_table(rec, sink.stream(), style);
  sink.finish();
}

// Resolve --print-config / run / emit for a fully built scenario.  Returns
// true if the scenario actually ran.
bool run_and_emit(const ScenarioConfig& cfg, const OutputOptions& o,
                  const std::string& default_table) {
  if (o.print_config) {
    emit_json(to_json(cfg), o);
    return false;
  }
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec = run_scenario(cfg);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::fprintf(stderr, "# %s: %llu events in %.3f s (wall)\n", cfg.name.c_str(),
               static_cast<unsigned long long>(rec.events), rec.wall_seconds);
  emit_record(rec, o, default_table);
  return true;
}

// ---------------------------------------------------------------------------
// run: execute a JSON scenario config with flag overrides

struct RunArgs {
  std::string config_path;
  OutputOptions out;
  // Overrides; only the ones the user set are applied.
  double horizon = 0, z = 0, tau = 0, g = 0, hybrid_threshold = 0;
  std::string mode, policy, z_preset, name;
  std::uint64_t seed = 0, cap = 0;
  int spd = 0;
  std::vector<double> sample_times;
};

void setup_run(CLI::App& app, RunArgs& a) {
  CLI::App* sub = app.add_subcommand("run", "Run a scenario described by a JSON config file");
  sub->add_option("--config", a.config_path, "Scenario config JSON")->required();
  sub->add_option("--horizon", a.horizon, "Override horizon (time units of tau)");
  sub->add_option("--mode", a.mode, "Override engine mode")
      ->check(CLI::IsMember({"exact", "aggregated", "hybrid"}));
  sub->add_option("--z", a.z, "Override split fraction Z");
  sub->add_option("--z-preset", a.z_preset, "Override Z preset (e.g. golden)");
  sub->add_option("--tau", a.tau, "Override tau");
  sub->add_option("--g", a.g, "Override g (0 = normalize so the first event fires at t=0)");
  sub->add_option("--residual-policy", a.policy, "Override residual counting policy")
      ->check(CLI::IsMember({"countAsSplit", "countAsOne", "exclude"}));
  sub->add_option("--seed", a.seed, "Override seed");
  sub->add_option("--name", a.name, "Override scenario name");
  sub->add_option("--samples-per-decade", a.spd, "Override mean-series sampling density");
  sub->add_option("--sample-time", a.sample_times, "Add explicit sample times (repeatable)");
  sub->add_option("--exact-cap", a.cap, "Override exact-mode population cap");
  sub->add_option("--hybrid-threshold", a.hybrid_threshold,
                  "Override hybrid handoff threshold (residual count fraction)");
  add_output_options(sub, a.out);
  sub->callback([&a, sub] {
    std::ifstream in(a.config_path);
    if (!in) throw ConfigError("cannot read config file: " + a.config_path);
    Json doc = Json::parse(in, nullptr, true, true);  // allow comments
    ScenarioConfig cfg = scenario_from_json(doc);
    Json overlay = Json::object();
    if (sub->count("--horizon")) overlay["horizon"] = a.horizon;
    if (sub->count("--mode")) overlay["mode"] = a.mode;
    if (sub->count("--z")) overlay["z"] = a.z;
    if (sub->count("--z-preset")) overlay["zPreset"] = a.z_preset;
    if (sub->count("--tau")) overlay["tau"] = a.tau;
    if (sub->count("--g")) {
      if (a.g > 0)
        overlay["g"] = a.g;
      else
        overlay["g"] = "normalize-first-event";
    }
    if (sub->count("--residual-policy")) overlay["residualPolicy"] = a.policy;
    if (sub->count("--seed")) overlay["seed"] = a.seed;
    if (sub->count("--name")) overlay["name"] = a.name;
    if (sub->count("--samples-per-decade")) overlay["samplesPerDecade"] = a.spd;
    if (sub->count("--sample-time")) overlay["sampleTimes"] = a.sample_times;
    if (sub->count("--exact-cap")) overlay["exactPopulationCap"] = a.cap;
    if (sub->count("--hybrid-threshold")) overlay["hybridResidualThreshold"] = a.hybrid_threshold;
    cfg = scenario_from_json(overlay, cfg);
    run_and_emit(cfg, a.out, cfg.mode == RunMode::kExact ? "counts" : "series");
  });
}

// ---------------------------------------------------------------------------
// eq5 / eq6: the built-in paired-cell scenarios

struct PairArgs {
  int doublings = 10;
  double tau = 1.0;
  std::string policy;
  OutputOptions out;
};

void setup_pair(CLI::App& app, const char* cmd, const char* help, PairArgs& a, bool biased) {
  CLI::App* sub = app.add_subcommand(cmd, help);
  sub->add_option("--doublings", a.doublings, "Number of doubling cycles to run")
      ->check(CLI::Range(1, 40));
  sub->add_option("--tau", a.tau, "Time constant tau");
  sub->add_option("--residual-policy", a.policy, "Residual counting policy")
      ->check(CLI::IsMember({"countAsSplit", "countAsOne", "exclude"}));
  add_output_options(sub, a.out);
  sub->callback([&a, biased] {
    ScenarioConfig cfg =
        biased ? build_biased_pair(a.doublings, a.tau) : build_symmetric_pair(a.doublings, a.tau);
    if (!a.policy.empty()) cfg.residual_policy = residual_policy_from_string(a.policy);
    run_and_emit(cfg, a.out, "counts");
  });
}

// ---------------------------------------------------------------------------
// gaussian: two wave packets spread over many cells

struct GaussianArgs {
  double width_a = 400.0, width_b = 100.0, measure_a = 2.0 / 3.0, measure_b = 1.0 / 3.0;
  bool gaussian_weights = false;
  int shells = 32;
  double z = 0.5, tau = 1.0, horizon = 0.0;
  std::vector<double> sample_times;
  OutputOptions out;
};

void setup_gaussian(CLI::App& app, GaussianArgs& a) {
  CLI::App* sub = app.add_subcommand(
      "gaussian", "Two packets spread over cell populations proportional to width^3");
  sub->add_option("--width-a", a.width_a, "Packet A width in cell units");
  sub->add_option("--width-b", a.width_b, "Packet B width in cell units");
  sub->add_option("--measure-a", a.measure_a, "Packet A total measure");
  sub->add_option("--measure-b", a.measure_b, "Packet B total measure");
  sub->add_flag("--gaussian-weights", a.gaussian_weights,
                "Use radial-shell Gaussian cell weights instead of uniform cells");
  sub->add_option("--shells", a.shells, "Number of radial shells with --gaussian-weights");
  sub->add_option("--z", a.z, "Split fraction Z");
  sub->add_option("--tau", a.tau, "Time constant tau");
  sub->add_option("--horizon", a.horizon, "Run horizon (default: first A event + 20.5 T)");
  sub->add_option("--sample-time", a.sample_times,
                  "Sample times (default: first A event + 20 T, bracketed by a quarter cycle)");
  add_output_options(sub, a.out);
  sub->callback([&a] {
    ScenarioConfig cfg = build_gaussian_pair(a.width_a, a.width_b, a.measure_a, a.measure_b,
                                             a.gaussian_weights, a.shells, a.z, a.tau);
    const double T = cfg.tau * std::numbers::ln2;
    double first_a = first_event_time(cfg);
    for (const auto& [fam, t] : family_first_events(cfg))
      if (fam == "A") first_a = t;
    // The cells fire in synchronized clusters, so a sample placed exactly on
    // the nominal time t_firstA + 20T sits on a cluster and is numerically
    // ill-conditioned; bracketing it by a quarter cycle on each side samples
    // the well-defined states just before and just after.
    cfg.sample_times = a.sample_times.empty()
                           ? std::vector<double>{first_a + 19.75 * T, first_a + 20.25 * T}
                           : a.sample_times;
    double latest = 0.0;
    for (double s : cfg.sample_times) latest = std::max(latest, s);
    cfg.horizon = a.horizon > 0.0 ? a.horizon : std::max(latest + 0.5 * T, first_a + 20.5 * T);
    run_and_emit(cfg, a.out, "counts");
  });
}

// ---------------------------------------------------------------------------
// golden: the long irrational-ratio reference run

struct GoldenArgs {
  double horizon = 8000.0;
  int spd = 64, strata = 16;
  std::uint64_t seed = 1;
  OutputOptions out;
};

void setup_golden(CLI::App& app, GoldenArgs& a) {
  CLI::App* sub =
      app.add_subcommand("golden", "Long single-family run at the golden split fraction");
  sub->add_option("--horizon", a.horizon, "Run horizon in units of tau");
  sub->add_option("--samples-per-decade", a.spd, "Mean-series sampling density");
  sub->add_option("--strata", a.strata,
                  "Initial cells stratified over the stationary level density");
  sub->add_option("--seed", a.seed, "Seed (recorded; the run itself is deterministic)");
  add_output_options(sub, a.out);
  sub->callback([&a] {
    ScenarioConfig cfg = build_golden_mean(a.horizon, a.strata, a.seed);
    cfg.samples_per_decade = a.spd;
    run_and_emit(cfg, a.out, "series");
  });
}

// ---------------------------------------------------------------------------
// multiparticle: merged branching clocks

struct MultiArgs {
  int n = 100;
  std::uint64_t events = 10000, seed = 1;
  double z = 0.5, tau1 = 1.0;
  bool emit_times = false;
  OutputOptions out;
};

void setup_multiparticle(CLI::App& app, MultiArgs& a) {
  CLI::App* sub = app.add_subcommand(
      "multiparticle", "Merged event stream of N independent branching clocks");
  sub->add_option("--n", a.n, "Number of particles")->check(CLI::PositiveNumber);
  sub->add_option("--events", a.events, "Target number of merged events");
  sub->add_option("--seed", a.seed, "Seed for the deterministic phase assignment");
  sub->add_option("--z", a.z, "Split fraction Z");
  sub->add_option("--tau1", a.tau1, "Single-particle time constant");
  sub->add_flag("--emit-times", a.emit_times, "Include the full event time list in JSON output");
  add_output_options(sub, a.out);
  sub->callback([&a] {
    const SplitParameter sp = make_split_parameter(a.z);
    const double horizon =
        horizon_for_events(a.n, sp, a.tau1, a.events);
    const MultiparticleStream stream = multiparticle_stream(a.n, sp, a.tau1, a.seed, horizon);
    const double cycle = mean_cycle(sp, a.tau1);
    if (a.out.format == "json" && !a.out.plot_data) {
      Json j;
      j["toolVersion"] = std::string(kToolVersion);
      j["n"] = a.n;
      j["z"] = sp.z;
      j["tau1"] = a.tau1;
      j["seed"] = a.seed;
      j["cycle"] = cycle;
      j["expectedMeanInterval"] = cycle / a.n;
      j["events"] = stream.events.size();
      j["meanInterval"] = stream.mean_interval;
      j["intervalTimesN"] = stream.mean_interval * a.n;
      if (a.emit_times) j["times"] = stream.events;
      emit_json(j, a.out);
    } else {
      Sink sink(a.out.out_path);
      const TableStyle style =
          (a.out.format == "plot" || a.out.plot_data) ? TableStyle::kPlot : TableStyle::kCsv;
      if (style == TableStyle::kPlot) sink.stream() << "# ";
      sink.stream() << "t\n";
      for (double t : stream.events) sink.stream() << fmt17(t) << '\n';
      sink.finish();
    }
  });
}

// ---------------------------------------------------------------------------
// regime: physical-parameter calculators with optional parallel sweeps

struct RegimeArgs {
  std::string calc = "spreading";  // spreading | threshold | quadratic | interval
  double mass_g = 1.67262192e-24;  // proton, in grams (CGS at the boundary)
  double width_cm = 1e-5;
  double rate_per_s = 1e-16;
  double hbar = 1.054571817e-34;
  std::string scaling = "massIndependent";
  double epsilon = 1e-45;
  double tau_eff_s = 0.0;    // quadratic: defaults to tau1
  double object_mass_g = 0.1;  // interval
  std::string sweep_axis;    // mass-g | width-cm | rate-per-s | object-mass-g | tau-eff-s
  std::vector<double> sweep_values;
  std::string sweep_range;  // lo:hi:n, log-spaced
  unsigned threads = 0;
  OutputOptions out;
};

PhysicalParams params_of(const RegimeArgs& a) {
  PhysicalParams p;
  p.mass_kg = a.mass_g * 1e-3;
  p.width_m = a.width_cm * 1e-2;
  p.rate_per_s = a.rate_per_s;
  p.hbar = a.hbar;
  p.rate_scaling = rate_scaling_from_string(a.scaling);
  p.epsilon = a.epsilon;
  p.validate();
  return p;
}

Json regime_point(const RegimeArgs& a, const std::string& axis, double value) {
  RegimeArgs pt = a;
  if (axis == "mass-g")
    pt.mass_g = value;
  else if (axis == "width-cm")
    pt.width_cm = value;
  else if (axis == "rate-per-s")
    pt.rate_per_s = value;
  else if (axis == "object-mass-g")
    pt.object_mass_g = value;
  else if (axis == "tau-eff-s")
    pt.tau_eff_s = value;
  else if (!axis.empty())
    throw ConfigError("unknown sweep axis: " + axis);

  const PhysicalParams p = params_of(pt);
  Json r;
  r["params"] = to_json(p);
  if (pt.calc == "spreading") {
    const SpreadingDelayResult s = spreading_delay(p);
    r["t0"] = s.t0;
    r["tau1"] = s.tau1;
    r["rebranchesBeforeSpreading"] = s.rebranches;
    r["nextBranchTime"] = io_detail::num_or_null(s.next_branch_time);
    r["delayFactor"] = s.delay_factor;
    r["dilutionMinimumTime"] = s.dilution_minimum_time;
    r["cellsCovered"] = s.cells_covered;
    r["asymptoticValid"] = s.asymptotic_valid;
  } else if (pt.calc == "threshold") {
    const double kg = mass_threshold(p);
    r["thresholdKg"] = kg;
    r["thresholdG"] = kg * 1e3;
  } else if (pt.calc == "quadratic") {
    const double tau_eff = pt.tau_eff_s > 0.0 ? pt.tau_eff_s : p.tau1();
    r["tauEff"] = tau_eff;
    r["t0"] = p.t0();
    r["ratio"] = quadratic_spread_ratio(tau_eff, p.t0());
  } else if (pt.calc == "interval") {
    r["objectMassKg"] = pt.object_mass_g * 1e-3;
    r["intervalS"] = branch_interval(p, pt.object_mass_g * 1e-3);
  } else {
    throw ConfigError("unknown calc: " + pt.calc);
  }
  return r;
}

std::vector<double> sweep_grid(const RegimeArgs& a) {
  if (!a.sweep_values.empty()) return a.sweep_values;
  if (a.sweep_range.empty()) return {};
  double lo = 0, hi = 0;
  int n = 0;
  if (std::sscanf(a.sweep_range.c_str(), "%lf:%lf:%d", &lo, &hi, &n) != 3 || n < 2 ||
      !(lo > 0) || !(hi > lo))
    throw ConfigError("sweep range must be lo:hi:n with 0 < lo < hi and n >= 2");
  std::vector<double> grid(static_cast<std::size_t>(n));
  const double step = (std::log(hi) - std::log(lo)) / (n - 1);
  for (int i = 0; i < n; ++i) grid[static_cast<std::size_t>(i)] = std::exp(std::log(lo) + i * step);
  return grid;
}

unsigned worker_count(const RegimeArgs& a) {
  if (const char* env = std::getenv("BRANCHSIM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  if (a.threads >= 1) return a.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

void setup_regime(CLI::App& app, RegimeArgs& a) {
  CLI::App* sub = app.add_subcommand(
      "regime", "Physical-regime calculators (CGS units at the flag boundary)");
  sub->add_option("--calc", a.calc, "Which quantity to compute")
      ->check(CLI::IsMember({"spreading", "threshold", "quadratic", "interval"}));
  sub->add_option("--mass-g", a.mass_g, "Particle mass in grams (default: proton)");
  sub->add_option("--width-cm", a.width_cm, "Cell width in centimeters");
  sub->add_option("--rate-per-s", a.rate_per_s, "Single-particle rate 1/tau1 in 1/s");
  sub->add_option("--hbar", a.hbar, "Planck constant over 2 pi, J s");
  sub->add_option("--scaling", a.scaling, "How 1/tau scales with mass")
      ->check(CLI::IsMember({"massIndependent", "proportionalToMass"}));
  sub->add_option("--epsilon", a.epsilon, "Dimensionless rate-operator coefficient");
  sub->add_option("--tau-eff-s", a.tau_eff_s, "Effective branch time for --calc quadratic (s)");
  sub->add_option("--object-mass-g", a.object_mass_g, "Object mass for --calc interval (g)");
  sub->add_option("--sweep", a.sweep_axis, "Sweep axis")
      ->check(CLI::IsMember({"mass-g", "width-cm", "rate-per-s", "object-mass-g", "tau-eff-s"}));
  sub->add_option("--sweep-values", a.sweep_values, "Explicit sweep values (repeatable)");
  sub->add_option("--sweep-range", a.sweep_range, "Log-spaced sweep grid lo:hi:n");
  sub->add_option("--threads", a.threads, "Worker pool size (BRANCHSIM_THREADS overrides)");
  add_output_options(sub, a.out);
  sub->callback([&a] {
    const std::vector<double> grid = sweep_grid(a);
    if (a.sweep_axis.empty() != grid.empty())
      throw ConfigError("--sweep requires --sweep-values or --sweep-range (and vice versa)");
    Json result;
    if (grid.empty()) {
      result = regime_point(a, "", 0.0);
      result["calc"] = a.calc;
      result["toolVersion"] = std::string(kToolVersion);
    } else {
      std::vector<Json> rows(grid.size());
      std::atomic<std::size_t> next{0};
      const unsigned workers =
          std::min<unsigned>(worker_count(a), static_cast<unsigned>(grid.size()));
      auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < grid.size(); i = next.fetch_add(1)) {
          rows[i] = regime_point(a, a.sweep_axis, grid[i]);
          rows[i]["sweepValue"] = grid[i];
        }
      };
      std::vector<std::thread> pool;
      for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
      work();
      for (auto& th : pool) th.join();
      result["toolVersion"] = std::string(kToolVersion);
      result["calc"] = a.calc;
      result["sweepAxis"] = a.sweep_axis;
      result["points"] = rows;
    }
    if (a.out.format == "json" && !a.out.plot_data) {
      emit_json(result, a.out);
    } else {
      // Flat table: one row per point (or the single point), numeric columns only.
      Sink sink(a.out.out_path);
      const TableStyle style =
          (a.out.format == "plot" || a.out.plot_data) ? TableStyle::kPlot : TableStyle::kCsv;
      const char sep = style == TableStyle::kCsv ? ',' : ' ';
      const Json rows = grid.empty() ? Json::array({result}) : result["points"];
      std::vector<std::string> cols;
      for (const auto& [key, val] : rows.front().items())
        if (val.is_number() || val.is_boolean()) cols.push_back(key);
      if (style == TableStyle::kPlot) sink.stream() << "# ";
      for (std::size_t i = 0; i < cols.size(); ++i)
        sink.stream() << (i ? std::string(1, sep) : "") << cols[i];
      sink.stream() << '\n';
      for (const auto& row : rows) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
          if (i) sink.stream() << sep;
          const Json& v = row.at(cols[i]);
          sink.stream() << (v.is_boolean() ? std::string(v.get<bool>() ? "1" : "0")
                                           : fmt17(v.get<double>()));
        }
        sink.stream() << '\n';
      }
      sink.finish();
    }
  });
}

// ---------------------------------------------------------------------------
// analyze: recompute summary statistics from a saved record

struct AnalyzeArgs {
  std::string record_path;
  OutputOptions out;
};

void setup_analyze(CLI::App& app, AnalyzeArgs& a) {
  CLI::App* sub =
      app.add_subcommand("analyze", "Recompute summary statistics from a saved run record");
  sub->add_option("--record", a.record_path, "RunRecord JSON file")->required();
  add_output_options(sub, a.out);
  sub->callback([&a] {
    std::ifstream in(a.record_path);
    if (!in) throw ConfigError("cannot read record file: " + a.record_path);
    RunRecord rec = record_from_json(Json::parse(in));
    rec.envelopes.clear();
    rec.fitted_exponent = std::numeric_limits<double>::quiet_NaN();
    annotate_series_statistics(rec);
    if (rec.histogram) rec.density_distance = density_distance(*rec.histogram, rec.config.split());
    if (a.out.print_config) {
      emit_json(to_json(rec.config), a.out);
      return;
    }
    emit_record(rec, a.out, rec.engine == "exact" ? "counts" : "series");
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic simulator of threshold-driven branching dynamics"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  RunArgs run_args;
  PairArgs eq5_args, eq6_args;
  GaussianArgs gaussian_args;
  GoldenArgs golden_args;
  MultiArgs multi_args;
  RegimeArgs regime_args;
  AnalyzeArgs analyze_args;

  setup_run(app, run_args);
  setup_pair(app, "eq5", "Symmetric two-cell scenario: equal measures, paired splittings",
             eq5_args, false);
  setup_pair(app, "eq6", "Biased two-cell scenario: measures 2/3 and 1/3, count ratio 2",
             eq6_args, true);
  setup_gaussian(app, gaussian_args);
  setup_golden(app, golden_args);
  setup_multiparticle(app, multi_args);
  setup_regime(app, regime_args);
  setup_analyze(app, analyze_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const CapacityError& e) {
    std::fprintf(stderr, "capacity error: %s\n", e.what());
    return 3;
  } catch (const InvariantError& e) {
    std::fprintf(stderr, "invariant failure: %s\n", e.what());
    return 4;
  } catch (const Json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}
