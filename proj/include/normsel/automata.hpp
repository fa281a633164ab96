#ifndef NORMSEL_AUTOMATA_HPP
#define NORMSEL_AUTOMATA_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "normsel/digits.hpp"
#include "normsel/rational.hpp"

namespace normsel {

using StateId = std::uint32_t;

/// When a run flags a step as selected, and which state's window names the
/// occurring block. StateAfterStep: step n is selected iff the state after
/// consuming a_n lies in the selection set, and that state's window is the
/// block (leap and modulo systems). DigitBelowTop: step n is selected iff
/// a_n < base-1, and the window comes from the state before the step
/// (remove system, whose selection event is the digit test itself).
enum class SelectionTiming { StateAfterStep, DigitBelowTop };

/// Finite-state component of a skew product over the base-b shift:
/// states with exact rational weights, a total digit-indexed transition
/// map, and a distinguished selection set. Builder automata also carry
/// per-state structured labels (window, optional counter) used for block
/// recognition; imported automata have only printable labels.
struct AugmentedAutomaton {
  enum class Family { Generic, Leap, Remove, Modulo };

  int base = 2;
  StateId start = 0;
  Family family = Family::Generic;
  SelectionTiming timing = SelectionTiming::StateAfterStep;
  int window_len = 0;  // k; 0 when states carry no windows
  int modulo_N = 0, modulo_L = 0;

  std::vector<std::string> labels;
  std::vector<std::vector<Digit>> windows;  // [b_1..b_k] per state (may be empty)
  std::vector<int> counters;                // counter value per state, -1 when absent
  std::vector<StateId> delta_table;         // state * base + digit
  std::vector<Rational> weights;
  std::vector<std::uint8_t> selected;       // selection-set membership

  std::size_t num_states() const { return labels.size(); }
  StateId step(StateId s, Digit d) const {
    return delta_table[static_cast<std::size_t>(s) * base + d];
  }
  std::size_t selection_count() const;
  void validate() const;  // totality, weight sum 1, index ranges
};

// Builders for the three selection-rule systems. State spaces:
//   leap:   (l, [b_1..b_k]) with 0 <= l <= b_k,  b^k (b+1)/2 states
//   remove: [b_1..b_k] with digits in 0..b-2,    (b-1)^k states
//   modulo: (l, [b_1..b_k]) with l in Z_N,       N b^k states
// All use uniform weights and the all-zero start state.
AugmentedAutomaton build_leap_automaton(int base, int k);
AugmentedAutomaton build_remove_automaton(int base, int k);
AugmentedAutomaton build_modulo_automaton(int base, int k, int N, int L);

/// A digit string together with the endpoints it connects; construction
/// re-simulates the string and throws std::logic_error on mismatch.
struct TraversalCertificate {
  StateId from = 0, to = 0;
  std::vector<Digit> string;

  static TraversalCertificate checked(const AugmentedAutomaton& a, StateId from, StateId to,
                                      std::vector<Digit> string);
};

struct TransitivityResult {
  bool transitive = false;
  std::optional<std::pair<StateId, StateId>> unreachable_pair;
};

/// True iff every ordered state pair is connected by some digit string.
TransitivityResult check_transitivity(const AugmentedAutomaton& a);

/// Shortest witness string from `from` to `to` (breadth-first); throws
/// std::invalid_argument if no string exists.
TraversalCertificate bfs_certificate(const AugmentedAutomaton& a, StateId from, StateId to);

/// The explicit leap traversing string [1^l, b'_1, 1^{b'_1}, ..., b'_k,
/// 1^{b'_k - l'}]; verified by simulation on construction.
TraversalCertificate traversing_string_leap(const AugmentedAutomaton& a, StateId from, StateId to);

/// The explicit modulo string [1^{l-b'_1 mod N}, b'_1, 1^{-b'_2 mod N},
/// ..., b'_k, 1^{l'-L mod N}] when it simulates correctly; otherwise the
/// BFS witness, with used_formula = false and the attempted string kept
/// for reporting.
struct ModuloTraversal {
  TraversalCertificate certificate;
  bool used_formula = false;
  std::vector<Digit> formula_string;
};
ModuloTraversal traversing_string_modulo(const AugmentedAutomaton& a, StateId from, StateId to);

/// Per-state balance of the measure-preservation equation
/// Σ_{(j,M): δ(j,M)=M'} w(M)/b = w(M'), in exact rationals.
struct BalanceEntry {
  StateId state = 0;
  Rational inflow;
  Rational weight;
  int in_degree = 0;
};

struct MeasureResult {
  bool preserved = false;
  std::optional<StateId> violating_state;
  std::vector<BalanceEntry> balance;
  // With uniform weights the balance equation is equivalent to every
  // state having digit-indexed in-degree exactly b; computed separately
  // so the two routes can be compared.
  bool uniform_in_degree = false;
};

MeasureResult check_measure_preservation(const AugmentedAutomaton& a);

/// Per-state visit counts over the states reached after each step.
struct StateVisitCensus {
  std::vector<std::uint64_t> visits;
  std::uint64_t total_steps = 0;
};

struct StepEvent {
  std::uint64_t step = 0;  // 1-based
  Digit digit = 0;
  StateId state_before = 0, state_after = 0;
  bool selected = false;
  std::span<const Digit> target_block;  // nonempty only when selected and windows exist
};

/// Drives the automaton along the stream, invoking fn once per consumed
/// digit. Memory use is O(1); accumulate whatever the caller needs.
template <typename Fn>
void for_each_step(const AugmentedAutomaton& a, DigitSource& in, StateId start, Fn&& fn) {
  if (in.base() != a.base)
    throw std::invalid_argument("stream base " + std::to_string(in.base()) +
                                " does not match automaton base " + std::to_string(a.base));
  const bool digit_timing = a.timing == SelectionTiming::DigitBelowTop;
  StateId cur = start;
  std::uint64_t step = 0;
  while (auto d = in.next()) {
    ++step;
    StateId prev = cur;
    cur = a.step(prev, *d);
    bool sel = digit_timing ? (*d < a.base - 1) : static_cast<bool>(a.selected[cur]);
    std::span<const Digit> block;
    if (sel && a.window_len > 0) block = a.windows[digit_timing ? prev : cur];
    fn(StepEvent{step, *d, prev, cur, sel, block});
  }
}

struct AutomatonRun {
  StateVisitCensus census;
  std::vector<std::uint64_t> selected_steps;
  std::map<std::vector<Digit>, std::uint64_t> target_counts;
  std::uint64_t selection_count = 0;
};

AutomatonRun run_with_automaton(const AugmentedAutomaton& a, DigitSource& in, StateId start);

/// States recognizing an occurrence of `block` (window equality plus the
/// family's selection condition).
std::vector<StateId> target_states(const AugmentedAutomaton& a, std::span<const Digit> block);
std::vector<StateId> selection_states(const AugmentedAutomaton& a);

/// Target-visit count over selection-visit count, exact; throws on a zero
/// denominator.
Rational visit_ratio(const StateVisitCensus& census, std::span<const StateId> targets,
                     std::span<const StateId> selections);

/// Σ weights over targets / Σ weights over selections (the limit the
/// visit ratio converges to).
Rational weight_ratio(const AugmentedAutomaton& a, std::span<const StateId> targets,
                      std::span<const StateId> selections);

// Text export format, one automaton per file:
//   base=<b> states=<n> start=<id>
//   n lines: <id> <label> <weight_num>/<weight_den> <selected 0|1>
//   n lines: b successor ids for state 0..n-1
void save_automaton(const AugmentedAutomaton& a, const std::filesystem::path& path);
AugmentedAutomaton load_automaton(const std::filesystem::path& path);

}  // namespace normsel

#endif
