#include "normsel/stats.hpp"

#include <cmath>
#include <ostream>

#include "json.hpp"

namespace normsel {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw std::invalid_argument(msg); }

void check_packable(int base, int kmax) {
  long double v = 1;
  for (int i = 0; i < kmax; ++i) v *= base;
  if (v >= std::pow(2.0L, 64))
    bad("kmax " + std::to_string(kmax) + " too large for base " + std::to_string(base) +
        " (blocks must pack into 64 bits)");
}

double pow_double(int base, int e) {
  double v = 1;
  for (int i = 0; i < e; ++i) v *= base;
  return v;
}

std::uint64_t pow_u64(int base, int e) {
  std::uint64_t v = 1;
  for (int i = 0; i < e; ++i) v *= static_cast<std::uint64_t>(base);
  return v;
}

void unpack(std::uint64_t code, int base, int j, std::vector<Digit>& out) {
  out.assign(j, 0);
  for (int i = j - 1; i >= 0; --i) {
    out[i] = static_cast<Digit>(code % base);
    code /= base;
  }
}

class CensusBuilder {
 public:
  CensusBuilder(int base, int kmax) {
    if (base < 2) bad("census base must be >= 2");
    if (kmax < 1) bad("census kmax must be >= 1");
    check_packable(base, kmax);
    c_.base = base;
    c_.kmax = kmax;
    c_.counts.resize(kmax);
    codes_.assign(kmax + 1, 0);
  }

  void push(Digit d) {
    if (d < 0 || d >= c_.base)
      bad("digit " + std::to_string(d) + " out of range for base " + std::to_string(c_.base));
    const std::uint64_t seen = c_.positions;
    const int longest = static_cast<int>(std::min<std::uint64_t>(c_.kmax, seen + 1));
    for (int j = longest; j >= 2; --j) codes_[j] = codes_[j - 1] * c_.base + d;
    codes_[1] = static_cast<std::uint64_t>(d);
    for (int j = 1; j <= longest; ++j) ++c_.counts[j - 1][codes_[j]];
    if (c_.head.size() + 1 < static_cast<std::size_t>(c_.kmax)) c_.head.push_back(d);
    if (c_.kmax > 1) {
      tail_.push_back(d);
      if (tail_.size() >= static_cast<std::size_t>(c_.kmax)) tail_.erase(tail_.begin());
    }
    ++c_.positions;
  }

  BlockCensus finish() {
    c_.tail = tail_;
    return std::move(c_);
  }

 private:
  BlockCensus c_;
  std::vector<std::uint64_t> codes_;
  std::vector<Digit> tail_;
};

}  // namespace

std::uint64_t BlockCensus::pack(std::span<const Digit> block, int base) {
  std::uint64_t code = 0;
  for (Digit d : block) code = code * base + static_cast<std::uint64_t>(d);
  return code;
}

std::uint64_t BlockCensus::count(std::span<const Digit> block) const {
  const int j = static_cast<int>(block.size());
  if (j < 1 || j > kmax) bad("block length out of census range");
  const auto& map = counts[j - 1];
  auto it = map.find(pack(block, base));
  return it == map.end() ? 0 : it->second;
}

BlockCensus census(DigitSource& in, int kmax) {
  CensusBuilder b(in.base(), kmax);
  while (auto d = in.next()) b.push(*d);
  return b.finish();
}

BlockCensus census(std::span<const Digit> digits, int base, int kmax) {
  CensusBuilder b(base, kmax);
  for (Digit d : digits) b.push(d);
  return b.finish();
}

BlockCensus merge(const BlockCensus& c1, const BlockCensus& c2) {
  if (c1.base != c2.base || c1.kmax != c2.kmax)
    bad("merge: censuses must agree on base and kmax");
  BlockCensus out;
  out.base = c1.base;
  out.kmax = c1.kmax;
  out.positions = c1.positions + c2.positions;
  out.counts = c1.counts;
  for (int j = 1; j <= out.kmax; ++j)
    for (const auto& [code, n] : c2.counts[j - 1]) out.counts[j - 1][code] += n;

  // Blocks spanning the seam live entirely inside tail1 ++ head2: a
  // length-j window crossing the boundary covers at most j-1 <= kmax-1
  // digits on either side.
  std::vector<Digit> seam = c1.tail;
  seam.insert(seam.end(), c2.head.begin(), c2.head.end());
  const std::size_t t1 = c1.tail.size();
  for (int j = 2; j <= out.kmax; ++j) {
    for (std::size_t i = 0; i + j <= seam.size(); ++i) {
      if (i < t1 && i + j > t1)
        ++out.counts[j - 1][BlockCensus::pack(std::span<const Digit>(seam).subspan(i, j),
                                              out.base)];
    }
  }

  // head = first kmax-1 digits of the concatenation, tail = last kmax-1.
  // c1.tail/c2.head always contain enough context: a short chunk's head
  // and tail are the whole chunk.
  const std::size_t keep = static_cast<std::size_t>(out.kmax - 1);
  out.head = c1.head;
  for (Digit d : c2.head) {
    if (out.head.size() >= keep) break;
    out.head.push_back(d);
  }
  std::vector<Digit> tail_pool = c1.tail;
  tail_pool.insert(tail_pool.end(), c2.tail.begin(), c2.tail.end());
  const std::size_t want = std::min<std::uint64_t>(keep, out.positions);
  out.tail.assign(tail_pool.end() - std::min(tail_pool.size(), want), tail_pool.end());
  return out;
}

double chi_square(const BlockCensus& c, int j) {
  if (j < 1 || j > c.kmax) bad("chi_square: length out of census range");
  const std::uint64_t w = c.windows(j);
  if (w == 0) bad("chi_square: census has fewer than j positions");
  const double total_blocks = pow_double(c.base, j);
  const double expected = static_cast<double>(w) / total_blocks;
  double sum = 0;
  for (const auto& [code, n] : c.counts[j - 1]) {
    const double diff = static_cast<double>(n) - expected;
    sum += diff * diff / expected;
  }
  const double missing = total_blocks - static_cast<double>(c.counts[j - 1].size());
  return sum + missing * expected;
}

double max_deviation(const BlockCensus& c, int j) {
  if (j < 1 || j > c.kmax) bad("max_deviation: length out of census range");
  const std::uint64_t w = c.windows(j);
  if (w == 0) bad("max_deviation: census has fewer than j positions");
  const double p = 1.0 / pow_double(c.base, j);
  double dev = 0;
  for (const auto& [code, n] : c.counts[j - 1])
    dev = std::max(dev, std::fabs(static_cast<double>(n) / static_cast<double>(w) - p));
  if (static_cast<double>(c.counts[j - 1].size()) < pow_double(c.base, j))
    dev = std::max(dev, p);  // some block never occurs
  return dev;
}

NormalityReport report(const BlockCensus& c, const ReportConfig& config,
                       const Selection* selection) {
  if (c.positions == 0) bad("empty stream");
  NormalityReport r;
  r.base = c.base;
  r.kmax = c.kmax;
  r.positions = c.positions;
  r.thresholds = config.thresholds;
  for (int j = 1; j <= c.kmax; ++j) {
    if (c.windows(j) == 0) continue;
    LengthStats ls;
    ls.j = j;
    ls.max_deviation = max_deviation(c, j);
    ls.chi_square = chi_square(c, j);
    ls.dof = pow_u64(c.base, j) - 1;
    r.lengths.push_back(ls);
  }
  if (selection) {
    if (selection->input_positions_scanned == 0) bad("selection scanned no input");
    r.selection_density = static_cast<double>(selection->indices.size()) /
                          static_cast<double>(selection->input_positions_scanned);
  }
  r.consistent_with_normal = true;
  for (const auto& [j, threshold] : r.thresholds) {
    for (const LengthStats& ls : r.lengths)
      if (ls.j == j && !(ls.max_deviation < threshold)) r.consistent_with_normal = false;
  }
  return r;
}

std::string block_text(std::span<const Digit> block, int base) {
  std::string s;
  if (base <= 36) {
    for (Digit d : block)
      s.push_back(d < 10 ? static_cast<char>('0' + d) : static_cast<char>('a' + d - 10));
  } else {
    for (std::size_t i = 0; i < block.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(block[i]);
    }
  }
  return s;
}

std::string NormalityReport::to_json() const {
  nlohmann::json j;
  j["base"] = base;
  j["kmax"] = kmax;
  j["positions"] = positions;
  j["lengths"] = nlohmann::json::array();
  for (const LengthStats& ls : lengths) {
    j["lengths"].push_back({{"j", ls.j},
                            {"max_deviation", ls.max_deviation},
                            {"chi_square", ls.chi_square},
                            {"dof", ls.dof}});
  }
  if (selection_density)
    j["selection_density"] = *selection_density;
  else
    j["selection_density"] = nullptr;
  nlohmann::json th = nlohmann::json::object();
  for (const auto& [len, v] : thresholds) th[std::to_string(len)] = v;
  j["thresholds"] = th;
  j["verdict"] = verdict();
  return j.dump(2);
}

void write_block_csv(const BlockCensus& c, std::ostream& out) {
  out << "length,block,count,frequency\n";
  std::vector<Digit> block;
  for (int j = 1; j <= c.kmax; ++j) {
    const std::uint64_t w = c.windows(j);
    const std::uint64_t total = pow_u64(c.base, j);
    for (std::uint64_t code = 0; code < total; ++code) {
      unpack(code, c.base, j, block);
      auto it = c.counts[j - 1].find(code);
      const std::uint64_t n = it == c.counts[j - 1].end() ? 0 : it->second;
      const double freq = w == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(w);
      out << j << "," << block_text(block, c.base) << "," << n << "," << freq << "\n";
    }
  }
}

CrossCheckReport cross_check_ratio(const BlockCensus& rule_output_census, const AutomatonRun& run,
                                   int k) {
  if (k < 1 || k > rule_output_census.kmax)
    bad("cross_check_ratio: k out of census range");
  if (run.selection_count == 0) bad("cross_check_ratio: no selections");
  const std::uint64_t w = rule_output_census.windows(k);
  if (w == 0) bad("cross_check_ratio: output shorter than k");

  CrossCheckReport r;
  r.k = k;
  r.base = rule_output_census.base;
  r.selection_count = run.selection_count;
  r.bound = static_cast<double>(2 * k) / static_cast<double>(run.selection_count);

  const int base = rule_output_census.base;
  const std::uint64_t total = pow_u64(base, k);
  std::vector<Digit> block;
  for (std::uint64_t code = 0; code < total; ++code) {
    unpack(code, base, k, block);
    CrossCheckEntry e;
    e.block = block;
    e.direct_frequency =
        static_cast<double>(rule_output_census.count(block)) / static_cast<double>(w);
    auto it = run.target_counts.find(block);
    const std::uint64_t t = it == run.target_counts.end() ? 0 : it->second;
    e.visit_ratio = static_cast<double>(t) / static_cast<double>(run.selection_count);
    e.discrepancy = std::fabs(e.direct_frequency - e.visit_ratio);
    r.max_discrepancy = std::max(r.max_discrepancy, e.discrepancy);
    r.entries.push_back(std::move(e));
  }
  r.within_bound = r.max_discrepancy <= r.bound;
  return r;
}

std::string CrossCheckReport::to_json() const {
  nlohmann::json j;
  j["k"] = k;
  j["selection_count"] = selection_count;
  j["bound"] = bound;
  j["max_discrepancy"] = max_discrepancy;
  j["within_bound"] = within_bound;
  j["blocks"] = nlohmann::json::array();
  for (const CrossCheckEntry& e : entries) {
    j["blocks"].push_back({{"block", block_text(e.block, base)},
                           {"direct", e.direct_frequency},
                           {"ratio", e.visit_ratio},
                           {"discrepancy", e.discrepancy}});
  }
  return j.dump(2);
}

}  // namespace normsel
