#pragma once
// Aggregated class-mode engine.
//
// Every sub-branch descending from one initial population is determined up to
// identity by how many times it took the fresh-branch side (a) and the
// residual side (b): all (a,b) siblings share the measure m0 z^a (1-z)^b and
// the threshold time t*(a,b).  The engine therefore evolves a table
// ClassKey -> count instead of individual sub-branches, which is what makes
// horizons of thousands of tau reachable: the alive frontier stays ~10^4-10^5
// classes while the underlying sub-branch count reaches e^{5000} and beyond.
//
// One event = one class firing: its whole count n moves to the two children,
//   (a+1, b) += n      (freshly labeled pieces, measure factor z)
//   (a, b+1) += n      (continuing residual pieces, factor 1-z)
// and the class disappears.  Total count grows by n; total measure is
// untouched (z + (1-z) = 1), which is checked against the frozen initial
// total by periodic table scans.
//
// Because t*(a,b) is strictly increasing in both a and b, every parent fires
// strictly before its children, so a child's count is complete by the time
// its own event pops.  Events are ordered by (t, component, a, b); genuinely
// coincident times (symmetric splits produce whole generations at one t)
// come out of identical arithmetic and tie-break canonically on the key, and
// the result is order-independent because distinct classes never interact.

#include <algorithm>
#include <cstdint>
#include <map>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "branchsim/bigcount.hpp"
#include "branchsim/errors.hpp"
#include "branchsim/measure.hpp"
#include "branchsim/scenario.hpp"

namespace branchsim {

// One initial cell group flattened out of the scenario: `multiplicity`
// identical cells, each of initial per-cell measure exp(log_m0).
struct Population {
  std::int32_t id = 0;
  std::string family;
  std::uint64_t multiplicity = 1;
  double log_m0 = 0.0;
};

inline std::vector<Population> flatten_populations(const ScenarioConfig& cfg) {
  std::vector<Population> pops;
  for (const auto& comp : cfg.components)
    for (const auto& grp : comp.cells)
      pops.push_back({static_cast<std::int32_t>(pops.size()), comp.family, grp.count,
                      std::log(grp.m0)});
  return pops;
}

// Observer hooks default to no-ops; engine.run() inlines the callbacks.
struct NullObserver {
  void on_pre_event(double /*t*/, double /*ln_mean_level*/, double /*ln_count*/,
                    std::size_t /*alive*/) {}
  void on_post_event(double /*t*/, double /*ln_mean_level*/, double /*ln_count*/,
                     std::size_t /*alive*/) {}
};

class AggregatedEngine {
 public:
  using Table = std::unordered_map<ClassKey, BigCount, ClassKeyHash>;

  explicit AggregatedEngine(const ScenarioConfig& cfg)
      : AggregatedEngine(cfg, initial_entries(cfg), 0.0) {}

  // Seeded construction, also used by the hybrid handoff: `entries` are the
  // alive classes at `start_time` (all of their threshold times must still be
  // in the future).
  AggregatedEngine(const ScenarioConfig& cfg,
                   const std::vector<std::pair<ClassKey, std::uint64_t>>& entries,
                   double start_time)
      : sp_(cfg.split()),
        tau_(cfg.tau),
        log_g_(cfg.log_g_effective()),
        populations_(flatten_populations(cfg)),
        time_(start_time) {
    table_.reserve(1 << 17);
    std::vector<double> count_terms, measure_terms;
    for (const auto& [key, n] : entries) {
      if (n == 0) continue;
      if (key.component < 0 ||
          static_cast<std::size_t>(key.component) >= populations_.size())
        throw ConfigError("class entry references unknown population");
      auto [it, fresh] = table_.try_emplace(key, BigCount{});
      it->second += BigCount(n);
      if (fresh) schedule(key);
      count_terms.push_back(std::log(static_cast<double>(n)));
      measure_terms.push_back(std::log(static_cast<double>(n)) + log_measure_of(key));
    }
    if (table_.empty()) throw ConfigError("engine seeded with no alive classes");
    ln_count_total_ = log_sum_exp(count_terms);
    ln_measure_total_ = log_sum_exp(measure_terms);
  }

  // --- inspection ----------------------------------------------------------

  const SplitParameter& split() const { return sp_; }
  double tau() const { return tau_; }
  double log_g() const { return log_g_; }
  const std::vector<Population>& populations() const { return populations_; }
  const Table& table() const { return table_; }
  std::size_t alive_classes() const { return table_.size(); }
  std::uint64_t events_processed() const { return events_; }
  double time() const { return time_; }
  double next_event_time() const {
    return queue_.empty() ? std::numeric_limits<double>::infinity() : queue_.top().t;
  }

  double ln_count_total() const { return ln_count_total_; }
  double ln_measure_total() const { return ln_measure_total_; }
  // ln of the count-weighted mean measure.
  double ln_mean_measure() const { return ln_measure_total_ - ln_count_total_; }
  // ln of the count-weighted mean level m g e^{t/tau} at instant t.
  double ln_mean_level(double t) const {
    return t / tau_ + log_g_ + ln_measure_total_ - ln_count_total_;
  }

  double log_measure_of(const ClassKey& k) const {
    // Single canonical expression; scheduling and event-time assertion both
    // go through here so they agree bit-for-bit.
    return populations_[static_cast<std::size_t>(k.component)].log_m0 +
           static_cast<double>(k.a) * sp_.log_z +
           static_cast<double>(k.b) * sp_.log_one_minus_z;
  }
  double branch_time_of(const ClassKey& k) const {
    return branch_time_log(log_measure_of(k), log_g_, tau_);
  }

  // Count totals per family (multiplicity-scaled, like the table itself).
  std::map<std::string, BigCount> family_counts() const {
    std::map<std::string, BigCount> out;
    for (const auto& [key, n] : table_)
      out[populations_[static_cast<std::size_t>(key.component)].family] += n;
    return out;
  }

  // --- stepping ------------------------------------------------------------

  // Process the next event. Returns false when the queue is exhausted.
  template <class Obs>
  bool step(Obs&& obs) {
    if (queue_.empty()) return false;
    const Event ev = queue_.top();
    queue_.pop();
    const auto it = table_.find(ev.key);
    if (it == table_.end() || it->second.is_zero())
      throw InvariantError("scheduled class missing from table at its event time");
    if (std::abs(ev.t - branch_time_of(ev.key)) > 1e-9 * tau_)
      throw InvariantError("event time disagrees with class threshold time");

    obs.on_pre_event(ev.t, ln_mean_level(ev.t), ln_count_total_, table_.size());

    const BigCount n = std::move(it->second);
    table_.erase(it);
    const ClassKey child_a{ev.key.component, ev.key.a + 1, ev.key.b};
    const ClassKey child_b{ev.key.component, ev.key.a, ev.key.b + 1};
    for (const ClassKey& child : {child_a, child_b}) {
      auto [cit, fresh] = table_.try_emplace(child, BigCount{});
      cit->second += n;
      if (fresh) schedule(child);
    }
    ln_count_total_ = log_add(ln_count_total_, n.log_value());
    time_ = ev.t;
    ++events_;

    obs.on_post_event(ev.t, ln_mean_level(ev.t), ln_count_total_, table_.size());

    if ((events_ & (kScanInterval - 1)) == 0) check_conservation();
    return true;
  }

  bool step() {
    NullObserver nil;
    return step(nil);
  }

  // Process all events strictly before `horizon`.
  template <class Obs>
  void run_until(double horizon, Obs&& obs) {
    while (!queue_.empty() && queue_.top().t < horizon) step(obs);
  }
  void run_until(double horizon) {
    NullObserver nil;
    run_until(horizon, nil);
  }

  // --- conservation ----------------------------------------------------------

  // Recompute total measure and total count from the table (keys scanned in
  // sorted order so the reduction is permutation-independent) and compare to
  // the running accumulators.  Total measure against the frozen initial value
  // is the physical conservation law and gets the tight tolerance; the count
  // accumulator is an O(events) chain of log-adds, so its bound is looser.
  double check_conservation() {
    std::vector<ClassKey> keys;
    keys.reserve(table_.size());
    for (const auto& [key, n] : table_) keys.push_back(key);
    std::sort(keys.begin(), keys.end());
    std::vector<double> count_terms, measure_terms;
    count_terms.reserve(keys.size());
    measure_terms.reserve(keys.size());
    for (const ClassKey& key : keys) {
      const double ln_n = table_.find(key)->second.log_value();
      count_terms.push_back(ln_n);
      measure_terms.push_back(ln_n + log_measure_of(key));
    }
    const double measure_drift = std::abs(log_sum_exp(measure_terms) - ln_measure_total_);
    const double count_drift = std::abs(log_sum_exp(count_terms) - ln_count_total_);
    max_measure_drift_ = std::max(max_measure_drift_, measure_drift);
    if (measure_drift > 1e-9)
      throw InvariantError("total measure drifted by |dln| = " + std::to_string(measure_drift));
    if (count_drift > 1e-6)
      throw InvariantError("count accumulator drifted by |dln| = " + std::to_string(count_drift));
    return measure_drift;
  }

  double max_conservation_drift() const { return max_measure_drift_; }

 private:
  struct Event {
    double t;
    ClassKey key;
    friend auto operator<=>(const Event&, const Event&) = default;
  };

  static std::vector<std::pair<ClassKey, std::uint64_t>> initial_entries(
      const ScenarioConfig& cfg) {
    cfg.validate();
    if (cfg.mode == RunMode::kExact)
      throw ConfigError("scenario requests exact mode; use ExactEngine");
    std::vector<std::pair<ClassKey, std::uint64_t>> entries;
    std::int32_t id = 0;
    for (const auto& comp : cfg.components)
      for (const auto& grp : comp.cells)
        entries.push_back({ClassKey{id++, 0, 0}, grp.count});
    return entries;
  }

  void schedule(const ClassKey& key) {
    const double t = branch_time_of(key);
    if (t + 1e-9 * tau_ < time_)
      throw InvariantError("newly created class would fire in the past");
    queue_.push({t, key});
  }

  static constexpr std::uint64_t kScanInterval = std::uint64_t{1} << 20;

  SplitParameter sp_;
  double tau_;
  double log_g_;
  std::vector<Population> populations_;
  Table table_;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
  double time_ = 0.0;
  std::uint64_t events_ = 0;
  double ln_count_total_ = kLogZero;
  double ln_measure_total_ = kLogZero;
  double max_measure_drift_ = 0.0;
};

}  // namespace branchsim
