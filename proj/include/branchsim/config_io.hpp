#pragma once
// JSON and CSV serialization for configs and run records.
//
// One canonical JSON schema mirrors the config structs field for field; flag
// handling in the front end is "parse file, overlay present keys", so the
// same function parses both full documents and sparse overlays.  All output
// is deterministic: ordered keys, shortest round-trip floats in JSON, %.17g
// in CSV, UNIX newlines, and no timing or host information anywhere.
//
// Counts are serialized exactly (decimal strings) while they fit the exact
// integer budget, and as {"logCount": ...} once the engine has demoted them
// to log space; the reader restores whichever form it finds.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <branchsim/physical.hpp>
#include <branchsim/runner.hpp>
#include <branchsim/scenario.hpp>
#include <branchsim/stats.hpp>

#include <json.hpp>

namespace branchsim {

using Json = nlohmann::ordered_json;

inline RunMode run_mode_from_string(const std::string& s) {
  if (s == "exact") return RunMode::kExact;
  if (s == "aggregated") return RunMode::kAggregated;
  if (s == "hybrid") return RunMode::kHybrid;
  throw ConfigError("unknown mode '" + s + "' (expected exact|aggregated|hybrid)");
}

inline ResidualPolicy residual_policy_from_string(const std::string& s) {
  if (s == "countAsSplit") return ResidualPolicy::kCountAsSplit;
  if (s == "countAsOne") return ResidualPolicy::kCountAsOne;
  if (s == "exclude") return ResidualPolicy::kExclude;
  throw ConfigError("unknown residualPolicy '" + s +
                    "' (expected countAsSplit|countAsOne|exclude)");
}

inline RateScaling rate_scaling_from_string(const std::string& s) {
  if (s == "massIndependent") return RateScaling::kMassIndependent;
  if (s == "proportionalToMass") return RateScaling::kProportionalToMass;
  throw ConfigError("unknown rateScaling '" + s +
                    "' (expected massIndependent|proportionalToMass)");
}

namespace io_detail {

// NaN/inf have no JSON representation; they serialize as null and read back
// as NaN ("not set").
inline Json num_or_null(double v) {
  return std::isfinite(v) ? Json(v) : Json(nullptr);
}

inline double num_from(const Json& j, const char* key,
                       double fallback = std::numeric_limits<double>::quiet_NaN()) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<double>();
}

inline Json count_entry(const std::string& family, const BigCount& n) {
  Json e;
  e["family"] = family;
  if (n.is_exact())
    e["count"] = n.to_string();
  else
    e["logCount"] = n.log_value();
  return e;
}

inline std::pair<std::string, BigCount> count_entry_from(const Json& e) {
  BigCount n;
  if (e.contains("count"))
    n = BigCount(BigInt(e.at("count").get<std::string>()));
  else if (e.contains("logCount"))
    n = BigCount::from_log(e.at("logCount").get<double>());
  return {e.at("family").get<std::string>(), n};
}

}  // namespace io_detail

// ---------------------------------------------------------------------------
// ScenarioConfig

inline Json to_json(const ScenarioConfig& cfg) {
  Json j;
  j["name"] = cfg.name;
  Json comps = Json::array();
  for (const auto& comp : cfg.components) {
    Json c;
    c["family"] = comp.family;
    Json cells = Json::array();
    for (const auto& grp : comp.cells) {
      Json g;
      g["count"] = grp.count;
      g["m0"] = grp.m0;
      cells.push_back(std::move(g));
    }
    c["cells"] = std::move(cells);
    comps.push_back(std::move(c));
  }
  j["components"] = std::move(comps);
  if (!cfg.z_preset.empty())
    j["zPreset"] = cfg.z_preset;
  else
    j["z"] = cfg.z;
  j["ratioTolerance"] = cfg.ratio_tolerance;
  j["tau"] = cfg.tau;
  if (cfg.g > 0.0)
    j["g"] = cfg.g;
  else
    j["g"] = "normalize-first-event";
  j["mode"] = to_string(cfg.mode);
  j["residualPolicy"] = to_string(cfg.residual_policy);
  j["horizon"] = cfg.horizon;
  j["sampleTimes"] = cfg.sample_times;
  j["samplesPerDecade"] = cfg.samples_per_decade;
  j["seed"] = cfg.seed;
  j["exactPopulationCap"] = cfg.exact_population_cap;
  j["hybridResidualThreshold"] = cfg.hybrid_residual_threshold;
  return j;
}

// Reads the keys present in `j` onto `base`; absent keys keep their current
// values.  Full documents and sparse overlays go through the same path.
inline ScenarioConfig scenario_from_json(const Json& j, ScenarioConfig base = {}) {
  if (!j.is_object()) throw ConfigError("scenario config must be a JSON object");
  if (j.contains("name")) base.name = j.at("name").get<std::string>();
  if (j.contains("components")) {
    base.components.clear();
    for (const auto& c : j.at("components")) {
      Component comp;
      comp.family = c.at("family").get<std::string>();
      for (const auto& g : c.at("cells")) {
        CellGroup grp;
        grp.count = g.contains("count") ? g.at("count").get<std::uint64_t>() : 1;
        grp.m0 = g.at("m0").get<double>();
        comp.cells.push_back(grp);
      }
      base.components.push_back(std::move(comp));
    }
  }
  if (j.contains("zPreset")) {
    base.z_preset = j.at("zPreset").get<std::string>();
  } else if (j.contains("z")) {
    base.z = j.at("z").get<double>();
    base.z_preset.clear();
  }
  if (j.contains("ratioTolerance")) base.ratio_tolerance = j.at("ratioTolerance").get<double>();
  if (j.contains("tau")) base.tau = j.at("tau").get<double>();
  if (j.contains("g")) {
    const auto& g = j.at("g");
    if (g.is_string()) {
      if (g.get<std::string>() != "normalize-first-event")
        throw ConfigError("g must be a positive number or \"normalize-first-event\"");
      base.g = 0.0;
    } else {
      base.g = g.get<double>();
      if (!(base.g > 0.0))
        throw ConfigError("g must be a positive number or \"normalize-first-event\"");
    }
  }
  if (j.contains("mode")) base.mode = run_mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("residualPolicy"))
    base.residual_policy = residual_policy_from_string(j.at("residualPolicy").get<std::string>());
  if (j.contains("horizon")) base.horizon = j.at("horizon").get<double>();
  if (j.contains("sampleTimes")) base.sample_times = j.at("sampleTimes").get<std::vector<double>>();
  if (j.contains("samplesPerDecade")) base.samples_per_decade = j.at("samplesPerDecade").get<int>();
  if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("exactPopulationCap"))
    base.exact_population_cap = j.at("exactPopulationCap").get<std::uint64_t>();
  if (j.contains("hybridResidualThreshold"))
    base.hybrid_residual_threshold = j.at("hybridResidualThreshold").get<double>();
  return base;
}

// ---------------------------------------------------------------------------
// PhysicalParams

inline Json to_json(const PhysicalParams& p) {
  Json j;
  j["massKg"] = p.mass_kg;
  j["widthM"] = p.width_m;
  j["ratePerS"] = p.rate_per_s;
  j["hbar"] = p.hbar;
  j["rateScaling"] = to_string(p.rate_scaling);
  j["epsilon"] = p.epsilon;
  return j;
}

inline PhysicalParams physical_from_json(const Json& j, PhysicalParams base = {}) {
  if (!j.is_object()) throw ConfigError("physical params must be a JSON object");
  if (j.contains("massKg")) base.mass_kg = j.at("massKg").get<double>();
  if (j.contains("widthM")) base.width_m = j.at("widthM").get<double>();
  if (j.contains("ratePerS")) base.rate_per_s = j.at("ratePerS").get<double>();
  if (j.contains("hbar")) base.hbar = j.at("hbar").get<double>();
  if (j.contains("rateScaling"))
    base.rate_scaling = rate_scaling_from_string(j.at("rateScaling").get<std::string>());
  if (j.contains("epsilon")) base.epsilon = j.at("epsilon").get<double>();
  return base;
}

// ---------------------------------------------------------------------------
// RunRecord

namespace io_detail {

inline Json mean_sample_json(const MeanSample& s, double ln_limit) {
  Json e;
  e["t"] = s.t;
  e["lnMeanM"] = s.ln_mean_level;
  e["meanM"] = std::exp(s.ln_mean_level);
  e["lnDeviation"] = s.ln_mean_level - ln_limit;
  e["aliveClasses"] = s.alive_classes;
  e["totalLogCount"] = s.ln_count;
  return e;
}

inline MeanSample mean_sample_from(const Json& e) {
  return {e.at("t").get<double>(), e.at("lnMeanM").get<double>(),
          e.at("totalLogCount").get<double>(), e.at("aliveClasses").get<std::uint64_t>()};
}

inline Json counts_row_json(const SnapshotCounts& row) {
  Json e;
  e["t"] = row.t;
  Json fams = Json::array();
  for (const auto& [fam, n] : row.family_counts) fams.push_back(count_entry(fam, n));
  e["families"] = std::move(fams);
  e["residualComponents"] = row.residual_components;
  e["ratio"] = num_or_null(row.ratio);
  return e;
}

inline SnapshotCounts counts_row_from(const Json& e) {
  SnapshotCounts row;
  row.t = e.at("t").get<double>();
  for (const auto& f : e.at("families")) row.family_counts.push_back(count_entry_from(f));
  row.residual_components = e.at("residualComponents").get<std::uint64_t>();
  row.ratio = num_from(e, "ratio");
  return row;
}

}  // namespace io_detail

inline Json to_json(const RunRecord& rec) {
  const double ln_limit = std::log(limiting_mean(rec.config.split()));
  Json j;
  j["toolVersion"] = rec.tool_version;
  j["engine"] = rec.engine;
  j["config"] = to_json(rec.config);
  j["firstEventTime"] = io_detail::num_or_null(rec.first_event_time);
  Json firsts = Json::object();
  for (const auto& [fam, t] : rec.family_firsts) firsts[fam] = t;
  j["familyFirstEvents"] = std::move(firsts);
  j["handoffTime"] = io_detail::num_or_null(rec.handoff_time);
  j["finalTime"] = rec.final_time;
  j["events"] = rec.events;
  j["maxConservationDrift"] = rec.max_conservation_drift;
  Json finals = Json::array();
  for (const auto& [fam, n] : rec.final_counts) finals.push_back(io_detail::count_entry(fam, n));
  j["finalCounts"] = std::move(finals);
  j["finalResidualComponents"] = rec.final_residual_components;
  j["finalRatio"] = io_detail::num_or_null(rec.final_ratio);

  Json summary = Json::object();
  Json envs = Json::object();
  for (const auto& env : rec.envelopes) envs[env.label] = env.max_abs_deviation;
  summary["envelopes"] = std::move(envs);
  summary["fittedExponent"] = io_detail::num_or_null(rec.fitted_exponent);
  summary["densityDistance"] = io_detail::num_or_null(rec.density_distance);
  summary["limitingMean"] = std::exp(ln_limit);
  j["summary"] = std::move(summary);

  Json samples = Json::array();
  for (const auto& s : rec.samples) samples.push_back(io_detail::mean_sample_json(s, ln_limit));
  j["samples"] = std::move(samples);
  Json counts = Json::array();
  for (const auto& row : rec.counts) counts.push_back(io_detail::counts_row_json(row));
  j["counts"] = std::move(counts);
  Json series = Json::array();
  for (const auto& s : rec.series) series.push_back(io_detail::mean_sample_json(s, ln_limit));
  j["series"] = std::move(series);
  if (rec.histogram) {
    Json h;
    h["edges"] = rec.histogram->edges;
    h["weights"] = rec.histogram->weights;
    h["normalized"] = rec.histogram->normalized;
    j["histogram"] = std::move(h);
  }
  return j;
}

inline RunRecord record_from_json(const Json& j) {
  RunRecord rec;
  rec.tool_version = j.at("toolVersion").get<std::string>();
  rec.engine = j.at("engine").get<std::string>();
  rec.config = scenario_from_json(j.at("config"));
  rec.first_event_time = io_detail::num_from(j, "firstEventTime");
  if (j.contains("familyFirstEvents"))
    for (const auto& [fam, t] : j.at("familyFirstEvents").items())
      rec.family_firsts.emplace_back(fam, t.get<double>());
  rec.handoff_time = io_detail::num_from(j, "handoffTime");
  rec.final_time = io_detail::num_from(j, "finalTime", 0.0);
  rec.events = j.at("events").get<std::uint64_t>();
  rec.max_conservation_drift = io_detail::num_from(j, "maxConservationDrift", 0.0);
  for (const auto& f : j.at("finalCounts"))
    rec.final_counts.push_back(io_detail::count_entry_from(f));
  if (j.contains("finalResidualComponents"))
    rec.final_residual_components = j.at("finalResidualComponents").get<std::uint64_t>();
  rec.final_ratio = io_detail::num_from(j, "finalRatio");
  if (j.contains("summary")) {
    const Json& s = j.at("summary");
    rec.fitted_exponent = io_detail::num_from(s, "fittedExponent");
    rec.density_distance = io_detail::num_from(s, "densityDistance");
    if (s.contains("envelopes"))
      for (const auto& [label, v] : s.at("envelopes").items())
        rec.envelopes.push_back({label, Window{}, v.get<double>()});
  }
  for (const auto& e : j.at("samples")) rec.samples.push_back(io_detail::mean_sample_from(e));
  for (const auto& e : j.at("counts")) rec.counts.push_back(io_detail::counts_row_from(e));
  for (const auto& e : j.at("series")) rec.series.push_back(io_detail::mean_sample_from(e));
  if (j.contains("histogram")) {
    LevelHistogram h;
    h.edges = j.at("histogram").at("edges").get<std::vector<double>>();
    h.weights = j.at("histogram").at("weights").get<std::vector<double>>();
    h.normalized = j.at("histogram").at("normalized").get<bool>();
    rec.histogram = std::move(h);
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Flat tables (CSV and gnuplot-style whitespace variants)

enum class TableStyle { kCsv, kPlot };

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Exact counts print as plain integers; demoted counts print as scientific
// notation reconstructed from the log value (the exponent is exact, the
// mantissa carries the log's precision).
inline std::string count_field(const BigCount& n) {
  if (n.is_exact()) return n.to_string();
  const double l10 = n.log_value() / std::log(10.0);
  double e = std::floor(l10);
  double mant = std::pow(10.0, l10 - e);
  if (mant >= 10.0) {
    mant /= 10.0;
    e += 1.0;
  }
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12ge%+d", mant, static_cast<int>(e));
  return buf;
}

namespace io_detail {

inline void write_row(std::ostream& os, const std::vector<std::string>& fields, char sep) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << sep;
    os << fields[i];
  }
  os << '\n';
}

inline void write_header(std::ostream& os, const std::vector<std::string>& names,
                         TableStyle style) {
  if (style == TableStyle::kPlot) os << "# ";
  write_row(os, names, style == TableStyle::kCsv ? ',' : ' ');
}

}  // namespace io_detail

// Mean-series table: one row per envelope point (falls back to the sparse
// sample list when the run produced no dense series).
inline void write_series_table(const RunRecord& rec, std::ostream& os,
                               TableStyle style = TableStyle::kCsv) {
  const char sep = style == TableStyle::kCsv ? ',' : ' ';
  const double ln_limit = std::log(limiting_mean(rec.config.split()));
  io_detail::write_header(os, {"t", "meanM", "lnDeviation", "aliveClasses", "totalLogCount"},
                          style);
  const MeanSeries& rows = rec.series.empty() ? rec.samples : rec.series;
  for (const MeanSample& s : rows)
    io_detail::write_row(os,
                         {fmt17(s.t), fmt17(std::exp(s.ln_mean_level)),
                          fmt17(s.ln_mean_level - ln_limit), std::to_string(s.alive_classes),
                          fmt17(s.ln_count)},
                         sep);
}

// Per-sample labeled counts for the first two families.
inline void write_counts_table(const RunRecord& rec, std::ostream& os,
                               TableStyle style = TableStyle::kCsv) {
  const char sep = style == TableStyle::kCsv ? ',' : ' ';
  io_detail::write_header(os, {"t", "countA", "countB", "residualCount", "ratio"}, style);
  for (const SnapshotCounts& row : rec.counts) {
    const std::string a =
        row.family_counts.size() > 0 ? count_field(row.family_counts[0].second) : "0";
    const std::string b =
        row.family_counts.size() > 1 ? count_field(row.family_counts[1].second) : "0";
    io_detail::write_row(
        os, {fmt17(row.t), a, b, std::to_string(row.residual_components), fmt17(row.ratio)}, sep);
  }
}

}  // namespace branchsim
