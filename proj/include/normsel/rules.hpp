#ifndef NORMSEL_RULES_HPP
#define NORMSEL_RULES_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "normsel/digits.hpp"

namespace normsel {

/// Deterministic finite automaton over digit alphabets, used by the
/// prefix-selection rule: position n is selected iff the state reached
/// after the first n-1 digits is accepting.
struct PrefixDfa {
  int num_symbols = 2;
  std::uint32_t start = 0;
  std::vector<std::uint32_t> delta;  // state * num_symbols + digit
  std::vector<bool> accepting;

  std::uint32_t num_states() const { return static_cast<std::uint32_t>(accepting.size()); }
  std::uint32_t step(std::uint32_t state, Digit d) const {
    return delta[static_cast<std::size_t>(state) * num_symbols + d];
  }
  void validate() const;

  /// states 0..period-1 counting positions mod period; accepting
  /// {accept_residue}. With accept_residue = (k-1) mod m this reproduces
  /// the arithmetic rule exactly whenever k <= m.
  static PrefixDfa cyclic_counter(int period, int accept_residue, int num_symbols);

  // File format: line 1 "states=<n> start=<id>", line 2 "accepting=<ids>"
  // (comma-separated, possibly empty), then one line per state with
  // num_symbols digit-indexed successor ids.
  static PrefixDfa load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

/// A one-pass selection rule over an input stream of a fixed base.
/// Parameter values are validated at construction; stream-dependent
/// requirements (base agreement) at selection time.
struct SelectionRule {
  enum class Kind { Arithmetic, Leap, RemoveTop, Modulo, DfaPrefix, TwoSidedZero };

  Kind kind = Kind::Arithmetic;
  int k = 1, m = 1;                     // Arithmetic: n ≡ k (mod m), n >= k
  std::uint64_t n1 = 1;                 // Leap start index
  int L = 0, N = 2;                     // Modulo: prefix sum ≡ L (mod N)
  std::shared_ptr<const PrefixDfa> dfa; // DfaPrefix

  int lookahead() const { return kind == Kind::TwoSidedZero ? 1 : 0; }
  int output_base(int input_base) const {
    return kind == Kind::RemoveTop ? input_base - 1 : input_base;
  }
  void validate(int input_base) const;  // throws std::invalid_argument
  std::string to_string() const;

  // Descriptor grammar: arithmetic:k=<int>,m=<int> | leap:n1=<int> |
  // remove_top | modulo:L=<int>,N=<int> | dfa:<path> | two_sided_zero.
  // "leap" alone defaults to n1=1.
  static SelectionRule parse(const std::string& descriptor);
};

SelectionRule arithmetic_rule(int k, int m);
SelectionRule leap_rule(std::uint64_t n1 = 1);
SelectionRule remove_top_rule();
SelectionRule modulo_rule(int L, int N);
SelectionRule dfa_prefix_rule(PrefixDfa dfa);
SelectionRule two_sided_zero_rule();

/// Result of running a rule over a finite stream: the increasing 1-based
/// index sequence, the selected digits in the rule's output base, and how
/// many input positions were scanned.
struct Selection {
  std::vector<std::uint64_t> indices;
  int output_base = 10;
  std::vector<Digit> output;
  std::uint64_t input_positions_scanned = 0;
};

/// Receives each selected (index, digit) pair in stream order.
class SelectionSink {
 public:
  virtual ~SelectionSink() = default;
  virtual void on_selected(std::uint64_t index, Digit output_digit) = 0;
};

/// Single-pass streaming selection; buffers at most rule.lookahead()
/// digits. Returns the number of input positions scanned.
std::uint64_t select_stream(const SelectionRule& rule, DigitSource& in, SelectionSink& sink);

/// Materializing convenience over select_stream.
Selection select(const SelectionRule& rule, DigitSource& in);

}  // namespace normsel

#endif
