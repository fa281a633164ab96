#include "normsel/automata.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

namespace normsel {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw std::invalid_argument(msg); }

std::uint64_t checked_pow(std::uint64_t b, int e, const char* what) {
  unsigned __int128 v = 1;
  for (int i = 0; i < e; ++i) {
    v *= b;
    if (v > (static_cast<unsigned __int128>(1) << 40))
      throw std::invalid_argument(std::string(what) + ": state space too large");
  }
  return static_cast<std::uint64_t>(v);
}

std::vector<Digit> decode_window(std::uint64_t code, int radix, int k) {
  std::vector<Digit> w(k);
  for (int i = k - 1; i >= 0; --i) {
    w[i] = static_cast<Digit>(code % radix);
    code /= radix;
  }
  return w;  // w[0] = b_1, ..., w[k-1] = b_k
}

std::string window_text(std::span<const Digit> w) {
  std::string s = "[";
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(w[i]);
  }
  return s + "]";
}

StateId simulate(const AugmentedAutomaton& a, StateId from, std::span<const Digit> string) {
  StateId cur = from;
  for (Digit d : string) cur = a.step(cur, d);
  return cur;
}

}  // namespace

std::size_t AugmentedAutomaton::selection_count() const {
  std::size_t n = 0;
  for (std::uint8_t s : selected) n += s;
  return n;
}

void AugmentedAutomaton::validate() const {
  if (base < 2) bad("automaton base must be >= 2");
  const std::size_t n = num_states();
  if (n == 0) bad("automaton needs at least one state");
  if (delta_table.size() != n * static_cast<std::size_t>(base))
    bad("transition table must be total: expected " + std::to_string(n * base) + " entries");
  for (StateId t : delta_table)
    if (t >= n) bad("transition target out of range");
  if (weights.size() != n || selected.size() != n) bad("per-state arrays must cover all states");
  if (start >= n) bad("start state out of range");
  Rational sum;
  for (const Rational& w : weights) {
    if (w <= Rational(0)) bad("state weights must be positive");
    sum += w;
  }
  if (sum != Rational(1)) bad("state weights must sum to exactly 1, got " + sum.to_string());
  if (!windows.empty() && windows.size() != n) bad("windows must cover all states");
}

AugmentedAutomaton build_leap_automaton(int base, int k) {
  if (base < 2) bad("leap automaton needs base >= 2");
  if (k < 1) bad("leap automaton needs k >= 1");
  const std::uint64_t wcount = checked_pow(base, k, "leap automaton");

  // id(code, l) = offset[code] + l with one block of (b_k + 1) states
  // per window value.
  std::vector<std::uint64_t> offset(wcount + 1, 0);
  for (std::uint64_t code = 0; code < wcount; ++code)
    offset[code + 1] = offset[code] + (code % base) + 1;
  const std::uint64_t total = offset[wcount];

  AugmentedAutomaton a;
  a.base = base;
  a.family = AugmentedAutomaton::Family::Leap;
  a.timing = SelectionTiming::StateAfterStep;
  a.window_len = k;
  a.labels.reserve(total);
  a.windows.reserve(total);
  a.counters.reserve(total);
  a.weights.assign(total, Rational(1, static_cast<std::int64_t>(total)));
  a.selected.assign(total, 0);
  a.delta_table.assign(total * base, 0);

  for (std::uint64_t code = 0; code < wcount; ++code) {
    std::vector<Digit> w = decode_window(code, base, k);
    const Digit last = w[k - 1];
    for (Digit l = 0; l <= last; ++l) {
      const StateId id = static_cast<StateId>(offset[code] + l);
      a.labels.push_back("(" + std::to_string(l) + "," + window_text(w) + ")");
      a.windows.push_back(w);
      a.counters.push_back(l);
      if (l == last) a.selected[id] = 1;
      for (Digit j = 0; j < base; ++j) {
        StateId succ;
        if (l >= 1) {
          succ = static_cast<StateId>(offset[code] + l - 1);
        } else {
          const std::uint64_t shifted = (code * base + j) % wcount;  // [b_2..b_k, j]
          succ = static_cast<StateId>(offset[shifted] + j);          // new counter = j <= new b_k
        }
        a.delta_table[static_cast<std::size_t>(id) * base + j] = succ;
      }
    }
  }
  a.start = static_cast<StateId>(offset[0]);  // (0, [0,...,0])
  a.validate();
  return a;
}

AugmentedAutomaton build_remove_automaton(int base, int k) {
  if (base < 3) bad("remove automaton needs base >= 3");
  if (k < 1) bad("remove automaton needs k >= 1");
  const int radix = base - 1;
  const std::uint64_t total = checked_pow(radix, k, "remove automaton");

  AugmentedAutomaton a;
  a.base = base;
  a.family = AugmentedAutomaton::Family::Remove;
  a.timing = SelectionTiming::DigitBelowTop;
  a.window_len = k;
  a.weights.assign(total, Rational(1, static_cast<std::int64_t>(total)));
  a.selected.assign(total, 1);  // selection is the digit test, not a state subset
  a.delta_table.assign(total * base, 0);

  for (std::uint64_t code = 0; code < total; ++code) {
    std::vector<Digit> w = decode_window(code, radix, k);
    a.labels.push_back(window_text(w));
    a.windows.push_back(std::move(w));
    a.counters.push_back(-1);
    for (Digit j = 0; j < base; ++j) {
      const std::uint64_t succ = j < radix ? (code * radix + j) % total : code;
      a.delta_table[static_cast<std::size_t>(code) * base + j] = static_cast<StateId>(succ);
    }
  }
  a.start = 0;  // [0,...,0]
  a.validate();
  return a;
}

AugmentedAutomaton build_modulo_automaton(int base, int k, int N, int L) {
  if (base < 2) bad("modulo automaton needs base >= 2");
  if (k < 1) bad("modulo automaton needs k >= 1");
  if (N < 2 || L < 0 || L >= N) bad("modulo automaton needs N >= 2 and 0 <= L < N");
  const std::uint64_t wcount = checked_pow(base, k, "modulo automaton");
  const std::uint64_t total = wcount * N;

  AugmentedAutomaton a;
  a.base = base;
  a.family = AugmentedAutomaton::Family::Modulo;
  a.timing = SelectionTiming::StateAfterStep;
  a.window_len = k;
  a.modulo_N = N;
  a.modulo_L = L;
  a.weights.assign(total, Rational(1, static_cast<std::int64_t>(total)));
  a.selected.assign(total, 0);
  a.delta_table.assign(total * base, 0);

  // id = code * N + l
  for (std::uint64_t code = 0; code < wcount; ++code) {
    std::vector<Digit> w = decode_window(code, base, k);
    for (int l = 0; l < N; ++l) {
      const StateId id = static_cast<StateId>(code * N + l);
      a.labels.push_back("(" + std::to_string(l) + "," + window_text(w) + ")");
      a.windows.push_back(w);
      a.counters.push_back(l);
      if (l == L) a.selected[id] = 1;
      for (Digit j = 0; j < base; ++j) {
        const int l2 = (l + j) % N;
        const std::uint64_t code2 = l2 == L ? (code * base + j) % wcount : code;
        a.delta_table[static_cast<std::size_t>(id) * base + j] =
            static_cast<StateId>(code2 * N + l2);
      }
    }
  }
  a.start = static_cast<StateId>(0 * N + 0);  // (0, [0,...,0])
  a.validate();
  return a;
}

TraversalCertificate TraversalCertificate::checked(const AugmentedAutomaton& a, StateId from,
                                                   StateId to, std::vector<Digit> string) {
  StateId end = simulate(a, from, string);
  if (end != to)
    throw std::logic_error("traversal certificate from " + a.labels[from] + " claims " +
                           a.labels[to] + " but simulation ends at " + a.labels[end]);
  TraversalCertificate c;
  c.from = from;
  c.to = to;
  c.string = std::move(string);
  return c;
}

namespace {

// Breadth-first search from `from`; parents[v] = (prev state, digit).
std::vector<std::pair<std::int64_t, Digit>> bfs_parents(const AugmentedAutomaton& a, StateId from) {
  std::vector<std::pair<std::int64_t, Digit>> parent(a.num_states(), {-2, 0});
  parent[from] = {-1, 0};
  std::deque<StateId> queue{from};
  while (!queue.empty()) {
    StateId cur = queue.front();
    queue.pop_front();
    for (Digit j = 0; j < a.base; ++j) {
      StateId nxt = a.step(cur, j);
      if (parent[nxt].first != -2) continue;
      parent[nxt] = {static_cast<std::int64_t>(cur), j};
      queue.push_back(nxt);
    }
  }
  return parent;
}

}  // namespace

TransitivityResult check_transitivity(const AugmentedAutomaton& a) {
  const std::size_t n = a.num_states();
  for (StateId from = 0; from < n; ++from) {
    auto parent = bfs_parents(a, from);
    for (StateId to = 0; to < n; ++to) {
      if (parent[to].first == -2)
        return {false, std::make_pair(from, to)};
    }
  }
  return {true, std::nullopt};
}

TraversalCertificate bfs_certificate(const AugmentedAutomaton& a, StateId from, StateId to) {
  auto parent = bfs_parents(a, from);
  if (parent[to].first == -2)
    bad("no traversing string from " + a.labels[from] + " to " + a.labels[to]);
  std::vector<Digit> string;
  StateId cur = to;
  while (parent[cur].first != -1) {
    string.push_back(parent[cur].second);
    cur = static_cast<StateId>(parent[cur].first);
  }
  std::reverse(string.begin(), string.end());
  return TraversalCertificate::checked(a, from, to, std::move(string));
}

TraversalCertificate traversing_string_leap(const AugmentedAutomaton& a, StateId from,
                                            StateId to) {
  if (a.family != AugmentedAutomaton::Family::Leap) bad("traversing_string_leap: not a leap automaton");
  const int l_from = a.counters[from];
  const int l_to = a.counters[to];
  const std::vector<Digit>& w_to = a.windows[to];
  std::vector<Digit> s;
  s.insert(s.end(), static_cast<std::size_t>(l_from), Digit{1});
  for (int i = 0; i < a.window_len; ++i) {
    s.push_back(w_to[i]);
    const int ones = i + 1 < a.window_len ? w_to[i] : w_to[i] - l_to;
    s.insert(s.end(), static_cast<std::size_t>(ones), Digit{1});
  }
  return TraversalCertificate::checked(a, from, to, std::move(s));
}

ModuloTraversal traversing_string_modulo(const AugmentedAutomaton& a, StateId from, StateId to) {
  if (a.family != AugmentedAutomaton::Family::Modulo)
    bad("traversing_string_modulo: not a modulo automaton");
  const int N = a.modulo_N;
  const int L = a.modulo_L;
  auto mod = [N](int v) { return ((v % N) + N) % N; };
  const int l_from = a.counters[from];
  const int l_to = a.counters[to];
  const std::vector<Digit>& w_to = a.windows[to];

  std::vector<Digit> s;
  s.insert(s.end(), static_cast<std::size_t>(mod(l_from - w_to[0])), Digit{1});
  s.push_back(w_to[0]);
  for (int i = 1; i < a.window_len; ++i) {
    s.insert(s.end(), static_cast<std::size_t>(mod(-w_to[i])), Digit{1});
    s.push_back(w_to[i]);
  }
  s.insert(s.end(), static_cast<std::size_t>(mod(l_to - L)), Digit{1});

  ModuloTraversal result;
  result.formula_string = s;
  if (simulate(a, from, s) == to) {
    result.certificate = TraversalCertificate::checked(a, from, to, std::move(s));
    result.used_formula = true;
  } else {
    result.certificate = bfs_certificate(a, from, to);
    result.used_formula = false;
  }
  return result;
}

MeasureResult check_measure_preservation(const AugmentedAutomaton& a) {
  const std::size_t n = a.num_states();
  const Rational inv_base(1, a.base);
  std::vector<Rational> inflow(n);
  std::vector<int> in_degree(n, 0);
  for (StateId s = 0; s < n; ++s) {
    const Rational share = a.weights[s] * inv_base;
    for (Digit j = 0; j < a.base; ++j) {
      StateId t = a.step(s, j);
      inflow[t] += share;
      ++in_degree[t];
    }
  }
  MeasureResult r;
  r.preserved = true;
  r.uniform_in_degree = true;
  r.balance.reserve(n);
  for (StateId s = 0; s < n; ++s) {
    r.balance.push_back({s, inflow[s], a.weights[s], in_degree[s]});
    if (inflow[s] != a.weights[s]) {
      r.preserved = false;
      if (!r.violating_state) r.violating_state = s;
    }
    if (in_degree[s] != a.base) r.uniform_in_degree = false;
  }
  return r;
}

AutomatonRun run_with_automaton(const AugmentedAutomaton& a, DigitSource& in, StateId start) {
  AutomatonRun run;
  run.census.visits.assign(a.num_states(), 0);
  for_each_step(a, in, start, [&](const StepEvent& e) {
    ++run.census.visits[e.state_after];
    ++run.census.total_steps;
    if (e.selected) {
      run.selected_steps.push_back(e.step);
      ++run.selection_count;
      if (!e.target_block.empty())
        ++run.target_counts[std::vector<Digit>(e.target_block.begin(), e.target_block.end())];
    }
  });
  return run;
}

std::vector<StateId> target_states(const AugmentedAutomaton& a, std::span<const Digit> block) {
  if (a.window_len == 0) bad("automaton has no windows; cannot mark target states");
  if (static_cast<int>(block.size()) != a.window_len)
    bad("target block length must equal the automaton window length");
  std::vector<StateId> out;
  for (StateId s = 0; s < a.num_states(); ++s) {
    if (!a.selected[s]) continue;
    if (std::equal(block.begin(), block.end(), a.windows[s].begin(), a.windows[s].end()))
      out.push_back(s);
  }
  return out;
}

std::vector<StateId> selection_states(const AugmentedAutomaton& a) {
  std::vector<StateId> out;
  for (StateId s = 0; s < a.num_states(); ++s)
    if (a.selected[s]) out.push_back(s);
  return out;
}

Rational visit_ratio(const StateVisitCensus& census, std::span<const StateId> targets,
                     std::span<const StateId> selections) {
  std::uint64_t t = 0, s = 0;
  for (StateId id : targets) t += census.visits[id];
  for (StateId id : selections) s += census.visits[id];
  if (s == 0) bad("visit_ratio: zero selection visits");
  return Rational(static_cast<std::int64_t>(t), static_cast<std::int64_t>(s));
}

Rational weight_ratio(const AugmentedAutomaton& a, std::span<const StateId> targets,
                      std::span<const StateId> selections) {
  Rational t, s;
  for (StateId id : targets) t += a.weights[id];
  for (StateId id : selections) s += a.weights[id];
  if (s == Rational(0)) bad("weight_ratio: empty selection set");
  return t / s;
}

void save_automaton(const AugmentedAutomaton& a, const std::filesystem::path& path) {
  a.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "base=" << a.base << " states=" << a.num_states() << " start=" << a.start << "\n";
  for (StateId s = 0; s < a.num_states(); ++s)
    out << s << " " << a.labels[s] << " " << a.weights[s].to_string() << " "
        << (a.selected[s] ? 1 : 0) << "\n";
  for (StateId s = 0; s < a.num_states(); ++s) {
    for (Digit j = 0; j < a.base; ++j) {
      if (j) out << " ";
      out << a.step(s, j);
    }
    out << "\n";
  }
}

AugmentedAutomaton load_automaton(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open automaton file " + path.string());
  std::string line;
  if (!std::getline(in, line)) bad("automaton file: missing header");
  int base = 0;
  unsigned long n = 0, start = 0;
  if (std::sscanf(line.c_str(), "base=%d states=%lu start=%lu", &base, &n, &start) != 3)
    bad("automaton file: header must be 'base=<b> states=<n> start=<id>'");
  AugmentedAutomaton a;
  a.base = base;
  a.start = static_cast<StateId>(start);
  a.labels.resize(n);
  a.weights.assign(n, Rational(0, 1));
  a.selected.assign(n, 0);
  for (unsigned long i = 0; i < n; ++i) {
    if (!std::getline(in, line)) bad("automaton file: missing state line " + std::to_string(i));
    std::istringstream row(line);
    unsigned long id;
    std::string label, weight;
    int sel;
    if (!(row >> id >> label >> weight >> sel) || id >= n)
      bad("automaton file: bad state line '" + line + "'");
    a.labels[id] = label;
    a.weights[id] = Rational::parse(weight);
    a.selected[id] = sel ? 1 : 0;
  }
  a.delta_table.assign(n * static_cast<std::size_t>(base), 0);
  for (unsigned long s = 0; s < n; ++s) {
    if (!std::getline(in, line))
      bad("automaton file: missing transition row for state " + std::to_string(s));
    std::istringstream row(line);
    for (int j = 0; j < base; ++j) {
      unsigned long t;
      if (!(row >> t) || t >= n)
        bad("automaton file: bad transition row for state " + std::to_string(s));
      a.delta_table[s * base + j] = static_cast<StateId>(t);
    }
  }
  a.validate();
  return a;
}

}  // namespace normsel
