#pragma once
// State-vector toy: the branching update applied literally to an explicit
// amplitude vector.
//
// This is the ground-truth oracle for the reduced measure-splitting rule the
// engines use.  The state lives on basis vectors |cell, label>, the trigger
// operator for a sub-branch is the time-renormalized one-dimensional
// projector P(t) = p(t) |cell,label><cell,label| with p(t) = g e^{t/tau},
// and the update is evaluated exactly as written, expectation quotients and
// all:
//
//   |Phi> -> [ sqrt(Z) <P> / <P^2> ] C(t) P |Phi>
//            + { |Phi> - [ (1 - sqrt(1-Z)) <P> / <P^2> ] P |Phi> },
//
// where C(t) moves the projected piece to a fresh label.  The quotients
// collapse algebraically to sqrt(Z) alpha on the fresh label and
// sqrt(1-Z) alpha left behind, which is what the reduced rule encodes as
// measures; the point of this module is to compute the uncollapsed form and
// let the tests confirm the agreement numerically.
//
// Amplitudes are signed reals: the update only ever consumes them through
// <P> and <P^2>, so phases ride along untouched.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "branchsim/errors.hpp"
#include "branchsim/exact_engine.hpp"  // LabelNode
#include "branchsim/measure.hpp"

namespace branchsim {

struct ToyState {
  double tau = 1.0;
  double g = 1.0;
  std::vector<LabelNode> labels;  // label 0 = the initial branch
  // (cell, label) -> signed amplitude; absent means zero.
  std::map<std::pair<std::int32_t, std::uint32_t>, double> amp;

  double norm_squared() const {
    double s = 0.0;
    for (const auto& [k, a] : amp) s += a * a;
    return s;
  }
};

// Initial state: one amplitude per cell, all on label 0.  Signs are free
// (phases); measures are the squares.
inline ToyState make_toy_state(const std::vector<double>& amplitudes, double g, double tau) {
  if (!(g > 0.0) || !(tau > 0.0)) throw std::domain_error("toy state: g and tau must be > 0");
  ToyState st;
  st.tau = tau;
  st.g = g;
  st.labels.push_back({});
  for (std::size_t c = 0; c < amplitudes.size(); ++c) {
    if (amplitudes[c] != 0.0)
      st.amp[{static_cast<std::int32_t>(c), 0}] = amplitudes[c];
  }
  return st;
}

struct ToyEvent {
  double t = 0.0;
  std::int32_t cell = 0;
  std::uint32_t label = 0;
  friend auto operator<=>(const ToyEvent&, const ToyEvent&) = default;
};

// Earliest upcoming threshold crossing, ties broken on (cell, label) — the
// same canonical order the exact engine uses.
inline ToyEvent next_branch_event(const ToyState& st) {
  bool found = false;
  ToyEvent best{};
  for (const auto& [key, a] : st.amp) {
    const ToyEvent ev{branch_time(LogMeasure::from_linear(a * a), st.g, st.tau), key.first,
                      key.second};
    if (!found || ev < best) {
      best = ev;
      found = true;
    }
  }
  if (!found) throw std::logic_error("toy state is empty");
  return best;
}

// Apply the branching update at time t to the (cell, label) component.
// Returns the fresh label.  Throws InvariantError if the component is not at
// threshold (precondition M(t) = 1 within 1e-9) or if the update fails to
// preserve the norm within 1e-12.
inline std::uint32_t apply_branch_vector(ToyState& st, std::int32_t cell, std::uint32_t label,
                                         double t, const SplitParameter& sp) {
  const auto it = st.amp.find({cell, label});
  if (it == st.amp.end()) throw InvariantError("toy branch target has zero amplitude");
  const double alpha = it->second;
  const double p = st.g * std::exp(t / st.tau);  // P(t)^2 = p P(t)
  const double level = p * alpha * alpha;        // M(t) = <Phi| P(t) |Phi>
  if (std::abs(level - 1.0) > 1e-9)
    throw InvariantError("toy branch applied off threshold: M = " + std::to_string(level));
  const double norm_before = st.norm_squared();

  // <P>, <P^2>, and the component of P|Phi> along |cell,label>.
  const double exp_p = p * alpha * alpha;
  const double exp_p2 = p * p * alpha * alpha;
  const double p_phi = p * alpha;

  const auto fresh = static_cast<std::uint32_t>(st.labels.size());
  st.labels.push_back({label, cell, t});
  st.amp[{cell, fresh}] = std::sqrt(sp.z) * (exp_p / exp_p2) * p_phi;
  it->second = alpha - (1.0 - std::sqrt(1.0 - sp.z)) * (exp_p / exp_p2) * p_phi;

  const double norm_after = st.norm_squared();
  if (std::abs(norm_after - norm_before) > 1e-12)
    throw InvariantError("toy branch changed the state norm by " +
                         std::to_string(norm_after - norm_before));
  return fresh;
}

// Drive the toy through its next `events` threshold crossings.
inline void run_toy(ToyState& st, int events, const SplitParameter& sp) {
  for (int i = 0; i < events; ++i) {
    const ToyEvent ev = next_branch_event(st);
    apply_branch_vector(st, ev.cell, ev.label, ev.t, sp);
  }
}

// Per-(cell, label) measures |amplitude|^2, for comparison against the
// reduced-rule engines.
inline std::map<std::pair<std::int32_t, std::uint32_t>, double> toy_measures(const ToyState& st) {
  std::map<std::pair<std::int32_t, std::uint32_t>, double> out;
  for (const auto& [key, a] : st.amp) out[key] = a * a;
  return out;
}

}  // namespace branchsim
