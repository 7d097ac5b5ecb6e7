#pragma once
// Exact labeled-sub-branch engine.
//
// Every sub-branch is held individually: the pure ("single") sub-branches,
// each lying along one pointer cell with a distinct label history, plus the
// one residual superposition that still spans all initial cells and never
// acquires a label of its own.  This is the ground-truth mode: it reproduces
// the small-scale count formulas literally (2^J - 1 pure pieces per outcome
// after J paired batches, and so on), at the price of a population that
// doubles every cycle — the configurable population cap is what stops it.
//
// Per cell, the (a, b) split-exponent census of this engine's population is
// exactly the aggregated engine's class table, which is what makes the
// exact-vs-aggregated cross-checks and the hybrid handoff lossless.

#include <algorithm>
#include <cstdint>
#include <map>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "branchsim/bigcount.hpp"
#include "branchsim/errors.hpp"
#include "branchsim/measure.hpp"
#include "branchsim/scenario.hpp"

namespace branchsim {

// Label history as a chain: a label points at the label it split from.  Label
// 0 is the initial branch itself (no event).  The chain (cell, time) pairs
// read back the full event list of a sub-branch.
struct LabelNode {
  std::uint32_t parent = 0;
  std::int32_t cell = -1;
  double time = 0.0;
};

// A pure sub-branch: all of its measure on one cell.
struct SingleBranch {
  std::uint32_t label = 0;
  std::int32_t cell = 0;
  std::uint32_t a = 0;  // fresh-branch side taken a times (z factors)
  std::uint32_t b = 0;  // residual side taken b times (1-z factors)
  double log_m = 0.0;
};

// The residual superposition's content on one cell.  It only ever takes the
// residual side, so its split exponents are (0, b).
struct ResidualHolding {
  std::int32_t cell = 0;
  std::uint32_t b = 0;
  double log_m = 0.0;
};

struct ExactSnapshot {
  double t = 0.0;
  std::vector<SingleBranch> singles;
  std::vector<ResidualHolding> residual;
  std::uint32_t labels_used = 1;
};

class ExactEngine {
 public:
  struct Cell {
    std::int32_t id = 0;
    std::int32_t population = 0;  // index into flatten_populations(cfg)
    std::string family;
    double log_m0 = 0.0;
  };

  explicit ExactEngine(const ScenarioConfig& cfg)
      : sp_(cfg.split()), tau_(cfg.tau), cap_(cfg.exact_population_cap) {
    cfg.validate();
    log_g_ = cfg.log_g_effective();
    std::int32_t pop = 0;
    for (const auto& comp : cfg.components) {
      for (const auto& grp : comp.cells) {
        if (cells_.size() + grp.count > cap_)
          throw CapacityError(
              "scenario expands to more cells than the exact population cap; "
              "use aggregated mode");
        for (std::uint64_t i = 0; i < grp.count; ++i) {
          const auto id = static_cast<std::int32_t>(cells_.size());
          cells_.push_back({id, pop, comp.family, std::log(grp.m0)});
          residual_.push_back({id, 0, std::log(grp.m0)});
        }
        ++pop;
      }
    }
    labels_.push_back({});  // label 0: the initial branch
    std::vector<double> base;
    for (const auto& h : residual_) base.push_back(h.log_m);
    ln_measure_base_ = log_sum_exp(base);
    for (std::size_t i = 0; i < residual_.size(); ++i)
      schedule(residual_[i].log_m, residual_[i].cell, -1 - static_cast<std::int64_t>(i));
  }

  const SplitParameter& split() const { return sp_; }
  double tau() const { return tau_; }
  double log_g() const { return log_g_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<LabelNode>& labels() const { return labels_; }
  const std::vector<SingleBranch>& singles() const { return singles_; }
  const std::vector<ResidualHolding>& residual() const { return residual_; }
  double time() const { return time_; }
  std::uint64_t events_processed() const { return events_; }
  double next_event_time() const {
    return queue_.empty() ? std::numeric_limits<double>::infinity() : queue_.top().t;
  }

  // One event: the targeted sub-branch (or residual holding) crosses the
  // threshold and sheds a freshly labeled piece carrying fraction z.
  bool step() {
    if (queue_.empty()) return false;
    const Event ev = queue_.top();
    queue_.pop();
    if (singles_.size() + residual_.size() + 1 > cap_)
      throw CapacityError("exact population cap exceeded at t = " + std::to_string(ev.t) +
                          "; use aggregated or hybrid mode");
    const auto fresh_label = static_cast<std::uint32_t>(labels_.size());
    if (ev.slot >= 0) {
      SingleBranch& s = singles_[static_cast<std::size_t>(ev.slot)];
      check_at_threshold(ev.t, s.log_m);
      labels_.push_back({s.label, s.cell, ev.t});
      singles_.push_back({fresh_label, s.cell, s.a + 1, s.b, s.log_m + sp_.log_z});
      // (push may have invalidated s; re-fetch)
      SingleBranch& src = singles_[static_cast<std::size_t>(ev.slot)];
      src.b += 1;
      src.log_m += sp_.log_one_minus_z;
      schedule(src.log_m, src.cell, ev.slot);
      const auto& born = singles_.back();
      schedule(born.log_m, born.cell, static_cast<std::int64_t>(singles_.size()) - 1);
    } else {
      ResidualHolding& h = residual_[static_cast<std::size_t>(-1 - ev.slot)];
      check_at_threshold(ev.t, h.log_m);
      labels_.push_back({0, h.cell, ev.t});
      singles_.push_back({fresh_label, h.cell, 1, h.b, h.log_m + sp_.log_z});
      h.b += 1;
      h.log_m += sp_.log_one_minus_z;
      schedule(h.log_m, h.cell, ev.slot);
      const auto& born = singles_.back();
      schedule(born.log_m, born.cell, static_cast<std::int64_t>(singles_.size()) - 1);
    }
    time_ = ev.t;
    ++events_;
    return true;
  }

  // Process events strictly before each requested sample instant, snapshot,
  // then drain the remainder strictly before the horizon.
  std::vector<ExactSnapshot> run(double horizon, std::vector<double> sample_times) {
    std::sort(sample_times.begin(), sample_times.end());
    std::vector<ExactSnapshot> out;
    for (double s : sample_times) {
      if (s > horizon) break;
      while (!queue_.empty() && queue_.top().t < s) step();
      check_conservation();
      out.push_back({s, singles_, residual_, static_cast<std::uint32_t>(labels_.size())});
    }
    while (!queue_.empty() && queue_.top().t < horizon) step();
    check_conservation();
    return out;
  }

  // Total measure across singles and residual against the initial total.
  double check_conservation() {
    std::vector<double> terms;
    terms.reserve(singles_.size() + residual_.size());
    for (const auto& s : singles_) terms.push_back(s.log_m);
    for (const auto& h : residual_) terms.push_back(h.log_m);
    const double drift = std::abs(log_sum_exp(terms) - ln_measure_base_);
    max_drift_ = std::max(max_drift_, drift);
    if (drift > 1e-9)
      throw InvariantError("total measure drifted by |dln| = " + std::to_string(drift));
    return drift;
  }
  double max_conservation_drift() const { return max_drift_; }

  // Fraction of the population that is still the residual superposition,
  // counting each residual cell holding once.
  double residual_relative_count() const {
    return static_cast<double>(residual_.size()) /
           static_cast<double>(singles_.size() + residual_.size());
  }

  // Aggregated-table view of the current population (the hybrid handoff and
  // the exact-vs-aggregated cross-checks both consume this).
  std::vector<std::pair<ClassKey, std::uint64_t>> class_census() const {
    std::map<ClassKey, std::uint64_t> acc;
    for (const auto& s : singles_)
      acc[ClassKey{cells_[static_cast<std::size_t>(s.cell)].population, s.a, s.b}] += 1;
    for (const auto& h : residual_)
      acc[ClassKey{cells_[static_cast<std::size_t>(h.cell)].population, 0, h.b}] += 1;
    return {acc.begin(), acc.end()};
  }

 private:
  struct Event {
    double t = 0.0;
    std::int32_t cell = 0;
    std::int64_t slot = 0;  // >= 0: singles_[slot]; < 0: residual_[-1 - slot]
    friend auto operator<=>(const Event&, const Event&) = default;
  };

  void schedule(double log_m, std::int32_t cell, std::int64_t slot) {
    queue_.push({branch_time_log(log_m, log_g_, tau_), cell, slot});
  }

  void check_at_threshold(double t, double log_m) const {
    // level = m g e^{t/tau} must be 1 when the event fires.
    const double log_level = log_m + log_g_ + t / tau_;
    if (std::abs(log_level) > 1e-9)
      throw InvariantError("event fired off threshold: |ln level| = " +
                           std::to_string(std::abs(log_level)));
  }

  SplitParameter sp_;
  double tau_;
  double log_g_ = 0.0;
  std::uint64_t cap_;
  std::vector<Cell> cells_;
  std::vector<LabelNode> labels_;
  std::vector<SingleBranch> singles_;
  std::vector<ResidualHolding> residual_;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
  double time_ = 0.0;
  std::uint64_t events_ = 0;
  double ln_measure_base_ = 0.0;
  double max_drift_ = 0.0;
};

// Family -> sub-branch count for a snapshot, under the chosen residual
// policy.  kCountAsSplit adds one count to every family the residual still
// spans; kCountAsOne books it once under "superposition"; kExclude drops it.
inline std::map<std::string, BigCount> outcome_counts(const ExactSnapshot& snap,
                                                      const std::vector<ExactEngine::Cell>& cells,
                                                      ResidualPolicy policy) {
  std::map<std::string, BigCount> out;
  for (const auto& s : snap.singles)
    out[cells[static_cast<std::size_t>(s.cell)].family] += BigCount(1);
  switch (policy) {
    case ResidualPolicy::kCountAsSplit: {
      std::map<std::string, bool> seen;
      for (const auto& h : snap.residual) {
        const std::string& fam = cells[static_cast<std::size_t>(h.cell)].family;
        if (!seen[fam]) {
          out[fam] += BigCount(1);
          seen[fam] = true;
        }
      }
      break;
    }
    case ResidualPolicy::kCountAsOne:
      if (!snap.residual.empty()) out["superposition"] += BigCount(1);
      break;
    case ResidualPolicy::kExclude:
      break;
  }
  return out;
}

}  // namespace branchsim
