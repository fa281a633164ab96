#include "normsel/rules.hpp"

#include <fstream>
#include <sstream>

namespace normsel {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw std::invalid_argument(msg); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

long long parse_ll(const std::string& text, const std::string& what) {
  try {
    std::size_t idx = 0;
    long long v = std::stoll(text, &idx);
    if (idx != text.size()) bad("bad " + what + " value '" + text + "'");
    return v;
  } catch (const std::logic_error&) {
    bad("bad " + what + " value '" + text + "'");
  }
}

// key=value,key=value parameter list
std::vector<std::pair<std::string, std::string>> parse_params(const std::string& s) {
  std::vector<std::pair<std::string, std::string>> out;
  if (s.empty()) return out;
  for (const std::string& item : split(s, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) bad("expected key=value, got '" + item + "'");
    out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return out;
}

}  // namespace

void PrefixDfa::validate() const {
  if (num_symbols < 1) bad("dfa: num_symbols must be >= 1");
  if (accepting.empty()) bad("dfa: needs at least one state");
  if (delta.size() != static_cast<std::size_t>(num_states()) * num_symbols)
    bad("dfa: transition table must cover every (state, digit) pair");
  if (start >= num_states()) bad("dfa: start state out of range");
  for (std::uint32_t t : delta)
    if (t >= num_states()) bad("dfa: transition target out of range");
}

PrefixDfa PrefixDfa::cyclic_counter(int period, int accept_residue, int num_symbols) {
  if (period < 1 || accept_residue < 0 || accept_residue >= period)
    bad("cyclic_counter: need 0 <= accept_residue < period");
  PrefixDfa dfa;
  dfa.num_symbols = num_symbols;
  dfa.start = 0;
  dfa.accepting.assign(period, false);
  dfa.accepting[accept_residue] = true;
  dfa.delta.resize(static_cast<std::size_t>(period) * num_symbols);
  for (int s = 0; s < period; ++s)
    for (int d = 0; d < num_symbols; ++d)
      dfa.delta[static_cast<std::size_t>(s) * num_symbols + d] = (s + 1) % period;
  dfa.validate();
  return dfa;
}

PrefixDfa PrefixDfa::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dfa file " + path.string());
  std::string line;
  if (!std::getline(in, line)) bad("dfa file: missing header line");
  unsigned long n = 0, start = 0;
  if (std::sscanf(line.c_str(), "states=%lu start=%lu", &n, &start) != 2)
    bad("dfa file: header must be 'states=<n> start=<id>'");
  if (!std::getline(in, line)) bad("dfa file: missing accepting line");
  const std::string prefix = "accepting=";
  if (line.rfind(prefix, 0) != 0) bad("dfa file: second line must be 'accepting=<ids>'");
  PrefixDfa dfa;
  dfa.start = static_cast<std::uint32_t>(start);
  dfa.accepting.assign(n, false);
  std::string ids = line.substr(prefix.size());
  if (!ids.empty()) {
    for (const std::string& tok : split(ids, ',')) {
      long long id = parse_ll(tok, "accepting id");
      if (id < 0 || static_cast<unsigned long>(id) >= n) bad("dfa file: accepting id out of range");
      dfa.accepting[static_cast<std::size_t>(id)] = true;
    }
  }
  std::vector<std::vector<std::uint32_t>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::vector<std::uint32_t> succ;
    long long v;
    while (row >> v) {
      if (v < 0) bad("dfa file: negative successor id");
      succ.push_back(static_cast<std::uint32_t>(v));
    }
    rows.push_back(std::move(succ));
  }
  if (rows.size() != n) bad("dfa file: expected " + std::to_string(n) + " transition rows");
  dfa.num_symbols = static_cast<int>(rows[0].size());
  for (const auto& row : rows) {
    if (row.size() != rows[0].size()) bad("dfa file: ragged transition rows");
    dfa.delta.insert(dfa.delta.end(), row.begin(), row.end());
  }
  dfa.validate();
  return dfa;
}

void PrefixDfa::save(const std::filesystem::path& path) const {
  validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "states=" << num_states() << " start=" << start << "\n";
  out << "accepting=";
  bool first = true;
  for (std::uint32_t s = 0; s < num_states(); ++s) {
    if (!accepting[s]) continue;
    if (!first) out << ",";
    out << s;
    first = false;
  }
  out << "\n";
  for (std::uint32_t s = 0; s < num_states(); ++s) {
    for (int d = 0; d < num_symbols; ++d) {
      if (d) out << " ";
      out << step(s, d);
    }
    out << "\n";
  }
}

void SelectionRule::validate(int input_base) const {
  if (input_base < 2) bad("input base must be >= 2");
  switch (kind) {
    case Kind::Arithmetic:
      if (k < 1 || m < 1) bad("arithmetic rule needs k >= 1 and m >= 1");
      break;
    case Kind::Leap:
      if (n1 < 1) bad("leap rule needs n1 >= 1");
      break;
    case Kind::RemoveTop:
      if (input_base < 3) bad("remove_top needs input base >= 3 (output base b-1 must be >= 2)");
      break;
    case Kind::Modulo:
      if (N < 2 || L < 0 || L >= N) bad("modulo rule needs N >= 2 and 0 <= L < N");
      break;
    case Kind::DfaPrefix:
      if (!dfa) bad("dfa_prefix rule has no automaton");
      dfa->validate();
      if (dfa->num_symbols != input_base)
        bad("dfa alphabet size " + std::to_string(dfa->num_symbols) + " does not match base " +
            std::to_string(input_base));
      break;
    case Kind::TwoSidedZero:
      if (input_base != 2) bad("two_sided_zero is defined for base 2 only");
      break;
  }
}

std::string SelectionRule::to_string() const {
  switch (kind) {
    case Kind::Arithmetic:
      return "arithmetic:k=" + std::to_string(k) + ",m=" + std::to_string(m);
    case Kind::Leap:
      return "leap:n1=" + std::to_string(n1);
    case Kind::RemoveTop:
      return "remove_top";
    case Kind::Modulo:
      return "modulo:L=" + std::to_string(L) + ",N=" + std::to_string(N);
    case Kind::DfaPrefix:
      return "dfa:<loaded>";
    case Kind::TwoSidedZero:
      return "two_sided_zero";
  }
  return "?";
}

SelectionRule SelectionRule::parse(const std::string& descriptor) {
  auto colon = descriptor.find(':');
  std::string name = descriptor.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : descriptor.substr(colon + 1);
  if (name == "arithmetic") {
    int k = 0, m = 0;
    for (auto& [key, val] : parse_params(rest)) {
      if (key == "k")
        k = static_cast<int>(parse_ll(val, "k"));
      else if (key == "m")
        m = static_cast<int>(parse_ll(val, "m"));
      else
        bad("arithmetic: unknown parameter '" + key + "'");
    }
    if (k == 0 || m == 0) bad("arithmetic needs k=<int>,m=<int>");
    return arithmetic_rule(k, m);
  }
  if (name == "leap") {
    std::uint64_t n1 = 1;
    for (auto& [key, val] : parse_params(rest)) {
      if (key == "n1")
        n1 = static_cast<std::uint64_t>(parse_ll(val, "n1"));
      else
        bad("leap: unknown parameter '" + key + "'");
    }
    return leap_rule(n1);
  }
  if (name == "remove_top") {
    if (!rest.empty()) bad("remove_top takes no parameters");
    return remove_top_rule();
  }
  if (name == "modulo") {
    int L = -1, N = 0;
    for (auto& [key, val] : parse_params(rest)) {
      if (key == "L")
        L = static_cast<int>(parse_ll(val, "L"));
      else if (key == "N")
        N = static_cast<int>(parse_ll(val, "N"));
      else
        bad("modulo: unknown parameter '" + key + "'");
    }
    if (L < 0 || N == 0) bad("modulo needs L=<int>,N=<int>");
    return modulo_rule(L, N);
  }
  if (name == "dfa") {
    if (rest.empty()) bad("dfa rule needs a file path: dfa:<path>");
    return dfa_prefix_rule(PrefixDfa::load(rest));
  }
  if (name == "two_sided_zero") {
    if (!rest.empty()) bad("two_sided_zero takes no parameters");
    return two_sided_zero_rule();
  }
  bad("unknown rule '" + name + "'");
}

SelectionRule arithmetic_rule(int k, int m) {
  SelectionRule r;
  r.kind = SelectionRule::Kind::Arithmetic;
  r.k = k;
  r.m = m;
  if (k < 1 || m < 1) bad("arithmetic rule needs k >= 1 and m >= 1");
  return r;
}

SelectionRule leap_rule(std::uint64_t n1) {
  SelectionRule r;
  r.kind = SelectionRule::Kind::Leap;
  r.n1 = n1;
  if (n1 < 1) bad("leap rule needs n1 >= 1");
  return r;
}

SelectionRule remove_top_rule() {
  SelectionRule r;
  r.kind = SelectionRule::Kind::RemoveTop;
  return r;
}

SelectionRule modulo_rule(int L, int N) {
  SelectionRule r;
  r.kind = SelectionRule::Kind::Modulo;
  r.L = L;
  r.N = N;
  if (N < 2 || L < 0 || L >= N) bad("modulo rule needs N >= 2 and 0 <= L < N");
  return r;
}

SelectionRule dfa_prefix_rule(PrefixDfa dfa) {
  dfa.validate();
  SelectionRule r;
  r.kind = SelectionRule::Kind::DfaPrefix;
  r.dfa = std::make_shared<const PrefixDfa>(std::move(dfa));
  return r;
}

SelectionRule two_sided_zero_rule() {
  SelectionRule r;
  r.kind = SelectionRule::Kind::TwoSidedZero;
  return r;
}

std::uint64_t select_stream(const SelectionRule& rule, DigitSource& in, SelectionSink& sink) {
  const int base = in.base();
  rule.validate(base);
  std::uint64_t pos = 0;

  switch (rule.kind) {
    case SelectionRule::Kind::Arithmetic: {
      const std::uint64_t k = static_cast<std::uint64_t>(rule.k);
      const std::uint64_t m = static_cast<std::uint64_t>(rule.m);
      while (auto d = in.next()) {
        ++pos;
        if (pos >= k && (pos - k) % m == 0) sink.on_selected(pos, *d);
      }
      break;
    }
    case SelectionRule::Kind::Leap: {
      std::uint64_t next_index = rule.n1;
      while (auto d = in.next()) {
        ++pos;
        if (pos == next_index) {
          sink.on_selected(pos, *d);
          next_index = pos + 1 + static_cast<std::uint64_t>(*d);
        }
      }
      break;
    }
    case SelectionRule::Kind::RemoveTop: {
      const Digit top = base - 1;
      while (auto d = in.next()) {
        ++pos;
        if (*d < top) sink.on_selected(pos, *d);
      }
      break;
    }
    case SelectionRule::Kind::Modulo: {
      int sum = 0;
      while (auto d = in.next()) {
        ++pos;
        sum = (sum + *d) % rule.N;
        if (sum == rule.L) sink.on_selected(pos, *d);
      }
      break;
    }
    case SelectionRule::Kind::DfaPrefix: {
      const PrefixDfa& dfa = *rule.dfa;
      std::uint32_t state = dfa.start;
      while (auto d = in.next()) {
        ++pos;
        if (dfa.accepting[state]) sink.on_selected(pos, *d);
        state = dfa.step(state, *d);
      }
      break;
    }
    case SelectionRule::Kind::TwoSidedZero: {
      // Position n (>= 2) is selected iff a_{n-1} = 0 and a_{n+1} = 0,
      // so the decision for n is made when a_{n+1} arrives; the final
      // position is never selected.
      Digit before = 0, at = 0;  // a_{p-2}, a_{p-1} once pos >= 2
      while (auto d = in.next()) {
        ++pos;
        if (pos >= 3 && before == 0 && *d == 0) sink.on_selected(pos - 1, at);
        before = at;
        at = *d;
      }
      break;
    }
  }
  return pos;
}

namespace {
class CollectSink final : public SelectionSink {
 public:
  CollectSink(Selection& sel) : sel_(sel) {}
  void on_selected(std::uint64_t index, Digit d) override {
    sel_.indices.push_back(index);
    sel_.output.push_back(d);
  }

 private:
  Selection& sel_;
};
}  // namespace

Selection select(const SelectionRule& rule, DigitSource& in) {
  Selection sel;
  sel.output_base = rule.output_base(in.base());
  CollectSink sink(sel);
  sel.input_positions_scanned = select_stream(rule, in, sink);
  return sel;
}

}  // namespace normsel
