#ifndef NORMSEL_STATS_HPP
#define NORMSEL_STATS_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "normsel/automata.hpp"
#include "normsel/digits.hpp"
#include "normsel/rules.hpp"

namespace normsel {

/// Counts of every overlapping digit block of length 1..kmax over a
/// stream. Blocks are stored sparsely, keyed by their base-b value. The
/// census keeps its chunk's first and last kmax-1 digits so that two
/// censuses merge into exactly the census of the concatenated stream.
struct BlockCensus {
  int base = 2;
  int kmax = 1;
  std::uint64_t positions = 0;
  std::vector<std::unordered_map<std::uint64_t, std::uint64_t>> counts;  // [j-1]
  std::vector<Digit> head, tail;  // up to kmax-1 digits each

  std::uint64_t windows(int j) const {
    return positions >= static_cast<std::uint64_t>(j) ? positions - j + 1 : 0;
  }
  std::uint64_t count(std::span<const Digit> block) const;
  static std::uint64_t pack(std::span<const Digit> block, int base);
};

BlockCensus census(DigitSource& in, int kmax);
BlockCensus census(std::span<const Digit> digits, int base, int kmax);

/// Exact: equals the census of chunk1 ++ chunk2.
BlockCensus merge(const BlockCensus& c1, const BlockCensus& c2);

/// Σ over all base^j blocks of (count - E)^2 / E with E = windows(j)/base^j.
double chi_square(const BlockCensus& c, int j);

/// max over all base^j blocks of |count/windows(j) - base^{-j}|.
double max_deviation(const BlockCensus& c, int j);

struct LengthStats {
  int j = 1;
  double max_deviation = 0;
  double chi_square = 0;
  std::uint64_t dof = 0;  // base^j - 1
};

struct ReportConfig {
  // Per-length max-deviation thresholds entering the verdict. Defaults
  // frozen from seeded-uniform calibration at 10^6 digits.
  std::map<int, double> thresholds{{1, 0.01}, {2, 0.02}};
};

struct NormalityReport {
  int base = 2;
  int kmax = 1;
  std::uint64_t positions = 0;
  std::vector<LengthStats> lengths;
  std::optional<double> selection_density;
  std::map<int, double> thresholds;
  bool consistent_with_normal = false;
  std::string verdict() const {
    return consistent_with_normal ? "consistent-with-normal" : "non-normal";
  }
  std::string to_json() const;
};

/// Deviations, chi-squares, density and verdict; throws
/// std::invalid_argument("empty stream") on a zero-position census.
NormalityReport report(const BlockCensus& c, const ReportConfig& config = {},
                       const Selection* selection = nullptr);

/// CSV rows "length,block,count,frequency" covering every block of every
/// length 1..kmax.
void write_block_csv(const BlockCensus& c, std::ostream& out);

/// Compares each length-k block's frequency in the rule output against
/// the automaton visit ratio from the same input stream. The two agree up
/// to boundary effects bounded by (k + warm-up)/selection_count with a
/// warm-up of k selections.
struct CrossCheckEntry {
  std::vector<Digit> block;
  double direct_frequency = 0;
  double visit_ratio = 0;
  double discrepancy = 0;
};

struct CrossCheckReport {
  int k = 1;
  int base = 10;  // output base the blocks live in
  std::uint64_t selection_count = 0;
  double bound = 0;
  double max_discrepancy = 0;
  bool within_bound = false;
  std::vector<CrossCheckEntry> entries;
  std::string to_json() const;
};

CrossCheckReport cross_check_ratio(const BlockCensus& rule_output_census, const AutomatonRun& run,
                                   int k);

/// Formats a block for reports: packed characters for base <= 36,
/// comma-separated decimals otherwise.
std::string block_text(std::span<const Digit> block, int base);

}  // namespace normsel

#endif
