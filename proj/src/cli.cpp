#include "normsel/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "normsel/automata.hpp"
#include "normsel/digits.hpp"
#include "normsel/rules.hpp"
#include "normsel/stats.hpp"

namespace normsel::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerdict = 1;
constexpr int kExitUsage = 2;

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot digest " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[65536];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text << "\n";
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw std::runtime_error("cannot open " + out_path + " for writing");
  f << text << "\n";
}

std::vector<Digit> parse_pattern(const std::string& text, int base) {
  std::vector<Digit> pattern;
  if (base <= 36 && text.find(',') == std::string::npos) {
    for (char c : text) {
      if (c >= '0' && c <= '9')
        pattern.push_back(c - '0');
      else if (c >= 'a' && c <= 'z')
        pattern.push_back(10 + (c - 'a'));
      else
        throw std::invalid_argument(std::string("bad pattern character '") + c + "'");
    }
  } else {
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) pattern.push_back(std::stoi(tok));
  }
  return pattern;
}

struct GenerateOpts {
  std::string source, out, pattern, path;
  int base = 10;
  int digit = 0;
  std::uint64_t count = 0, seed = 0;
};

SourceSpec to_spec(const GenerateOpts& g) {
  if (g.source == "champernowne") return SourceSpec::champernowne(g.base);
  if (g.source == "constant") return SourceSpec::constant(g.base, g.digit);
  if (g.source == "periodic") return SourceSpec::periodic(g.base, parse_pattern(g.pattern, g.base));
  if (g.source == "uniform") return SourceSpec::seeded_uniform(g.base, g.seed);
  if (g.source == "file") return SourceSpec::file(g.path);
  throw std::invalid_argument("unknown source '" + g.source +
                              "' (expected champernowne|constant|periodic|uniform|file)");
}

int cmd_generate(const GenerateOpts& g, std::ostream&) {
  SourceSpec spec = to_spec(g);
  auto src = make_source(spec, g.count);
  write_digit_file(g.out, *src);
  return kExitOk;
}

struct SelectOpts {
  std::string rule, in, out, indices;
};

class FileSink final : public SelectionSink {
 public:
  FileSink(const std::filesystem::path& out, int output_base, const std::string& indices_path)
      : writer_(out, output_base) {
    if (!indices_path.empty()) {
      indices_.open(indices_path);
      if (!indices_) throw std::runtime_error("cannot open " + indices_path + " for writing");
    }
  }
  void on_selected(std::uint64_t index, Digit d) override {
    writer_.push(d);
    if (indices_.is_open()) indices_ << index << "\n";
    ++count_;
  }
  std::uint64_t count() const { return count_; }
  void close() {
    writer_.close();
    if (indices_.is_open()) indices_.close();
  }

 private:
  DigitFileWriter writer_;
  std::ofstream indices_;
  std::uint64_t count_ = 0;
};

int cmd_select(const SelectOpts& o, std::ostream&) {
  SelectionRule rule = SelectionRule::parse(o.rule);
  auto in = open_digit_file(o.in);
  rule.validate(in->base());
  FileSink sink(o.out, rule.output_base(in->base()), o.indices);
  select_stream(rule, *in, sink);
  sink.close();
  return kExitOk;
}

struct AnalyzeOpts {
  std::string in, out, csv;
  int kmax = 3;
  std::vector<std::string> thresholds;
  bool strict = false;
};

ReportConfig threshold_config(const std::vector<std::string>& entries) {
  ReportConfig config;
  if (entries.empty()) return config;
  config.thresholds.clear();
  for (const std::string& e : entries) {
    auto eq = e.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("threshold must be <j>=<value>, got '" + e + "'");
    config.thresholds[std::stoi(e.substr(0, eq))] = std::stod(e.substr(eq + 1));
  }
  return config;
}

int cmd_analyze(const AnalyzeOpts& o, std::ostream& out) {
  auto in = open_digit_file(o.in);
  BlockCensus c = census(*in, o.kmax);
  NormalityReport r = report(c, threshold_config(o.thresholds));
  emit(r.to_json(), o.out, out);
  if (!o.csv.empty()) {
    std::ofstream f(o.csv);
    if (!f) throw std::runtime_error("cannot open " + o.csv + " for writing");
    write_block_csv(c, f);
  }
  if (o.strict && !r.consistent_with_normal) return kExitVerdict;
  return kExitOk;
}

struct VerifyOpts {
  std::string builder, file, out, export_path;
  int base = 2, k = 1, N = 2, L = 0;
  bool strict = false;
};

// Like run_with_automaton but without the per-step index vector, so
// pipeline memory stays flat over long streams.
AutomatonRun run_counts_only(const AugmentedAutomaton& a, DigitSource& in) {
  AutomatonRun run;
  run.census.visits.assign(a.num_states(), 0);
  for_each_step(a, in, a.start, [&](const StepEvent& e) {
    ++run.census.visits[e.state_after];
    ++run.census.total_steps;
    if (e.selected) {
      ++run.selection_count;
      if (!e.target_block.empty())
        ++run.target_counts[std::vector<Digit>(e.target_block.begin(), e.target_block.end())];
    }
  });
  return run;
}

AugmentedAutomaton make_automaton(const VerifyOpts& o) {
  if (!o.file.empty()) return load_automaton(o.file);
  if (o.builder == "leap") return build_leap_automaton(o.base, o.k);
  if (o.builder == "remove") return build_remove_automaton(o.base, o.k);
  if (o.builder == "modulo") return build_modulo_automaton(o.base, o.k, o.N, o.L);
  throw std::invalid_argument("need --builder leap|remove|modulo or --file <automaton>");
}

nlohmann::json verification_json(const AugmentedAutomaton& a) {
  TransitivityResult t = check_transitivity(a);
  MeasureResult m = check_measure_preservation(a);
  nlohmann::json j;
  j["transitive"] = t.transitive;
  if (t.unreachable_pair) {
    j["unreachable_pair"] = {t.unreachable_pair->first, t.unreachable_pair->second};
    j["unreachable_pair_labels"] = {a.labels[t.unreachable_pair->first],
                                    a.labels[t.unreachable_pair->second]};
  } else {
    j["unreachable_pair"] = nullptr;
  }
  j["measure_preserved"] = m.preserved;
  if (m.violating_state) {
    j["violating_state"] = *m.violating_state;
    j["violating_state_label"] = a.labels[*m.violating_state];
  } else {
    j["violating_state"] = nullptr;
  }
  j["state_count"] = a.num_states();
  j["selection_count"] = a.selection_count();
  return j;
}

int cmd_verify(const VerifyOpts& o, std::ostream& out) {
  AugmentedAutomaton a = make_automaton(o);
  nlohmann::json j = verification_json(a);
  if (!o.export_path.empty()) save_automaton(a, o.export_path);
  emit(j.dump(2), o.out, out);
  if (o.strict && (!j["transitive"].get<bool>() || !j["measure_preserved"].get<bool>()))
    return kExitVerdict;
  return kExitOk;
}

// Pipeline configuration: "key = value" lines, '#' comments. Keys:
//   source, base, count, seed, digit, pattern, path   (generator)
//   rule                                              (optional descriptor)
//   kmax, threshold.<j>                               (analysis)
//   k, automaton_check                                (cross-check)
//   out_dir, strict
struct PipelineConfig {
  GenerateOpts gen;
  std::string rule;
  int kmax = 3;
  std::vector<std::string> thresholds;
  int k = 1;
  bool automaton_check = true;
  std::string out_dir;
  bool strict = false;
  std::map<std::string, std::string> raw;
};

PipelineConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  PipelineConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const char* ws = " \t\r";
      auto b = s.find_first_not_of(ws);
      if (b == std::string::npos) return std::string();
      auto e = s.find_last_not_of(ws);
      return s.substr(b, e - b + 1);
    };
    std::string t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    cfg.raw[key] = value;
    if (key == "source")
      cfg.gen.source = value;
    else if (key == "base")
      cfg.gen.base = std::stoi(value);
    else if (key == "count")
      cfg.gen.count = std::stoull(value);
    else if (key == "seed")
      cfg.gen.seed = std::stoull(value);
    else if (key == "digit")
      cfg.gen.digit = std::stoi(value);
    else if (key == "pattern")
      cfg.gen.pattern = value;
    else if (key == "path")
      cfg.gen.path = value;
    else if (key == "rule")
      cfg.rule = value;
    else if (key == "kmax")
      cfg.kmax = std::stoi(value);
    else if (key.rfind("threshold.", 0) == 0)
      cfg.thresholds.push_back(key.substr(10) + "=" + value);
    else if (key == "k")
      cfg.k = std::stoi(value);
    else if (key == "automaton_check")
      cfg.automaton_check = value == "true" || value == "1";
    else if (key == "out_dir")
      cfg.out_dir = value;
    else if (key == "strict")
      cfg.strict = value == "true" || value == "1";
    else
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" +
                                  key + "'");
  }
  return cfg;
}

struct PipelineOpts {
  std::string config;
  std::string out_dir;  // overrides config when nonempty
};

int cmd_pipeline(const PipelineOpts& po, std::ostream& out) {
  PipelineConfig cfg = parse_config(po.config);
  if (!po.out_dir.empty()) cfg.out_dir = po.out_dir;
  if (cfg.out_dir.empty()) throw std::invalid_argument("pipeline needs out_dir");
  if (cfg.gen.count == 0 && cfg.gen.source != "file")
    throw std::invalid_argument("pipeline needs a finite digit budget (count)");

  // Validate everything before any work.
  SourceSpec spec = to_spec(cfg.gen);
  spec.validate();
  std::optional<SelectionRule> rule;
  if (!cfg.rule.empty()) {
    rule = SelectionRule::parse(cfg.rule);
    if (spec.kind != SourceSpec::Kind::File) rule->validate(cfg.gen.base);
  }
  ReportConfig report_cfg = threshold_config(cfg.thresholds);

  std::filesystem::create_directories(cfg.out_dir);
  const std::filesystem::path dir(cfg.out_dir);
  std::vector<std::filesystem::path> artifacts;

  // Stage 1: materialize the input digits. A file source with no count
  // key is read to the end.
  const std::uint64_t budget =
      spec.kind == SourceSpec::Kind::File && cfg.gen.count == 0 ? kUnbounded : cfg.gen.count;
  const auto input_path = dir / "input.digits";
  int input_base = 0;
  {
    auto src = make_source(spec, budget);
    input_base = src->base();
    if (rule) rule->validate(input_base);
    write_digit_file(input_path, *src);
  }
  artifacts.push_back(input_path);

  // Stage 2: selection.
  std::optional<std::filesystem::path> output_path, indices_path;
  std::uint64_t scanned = 0, selected_count = 0;
  if (rule) {
    output_path = dir / "output.digits";
    indices_path = dir / "indices.txt";
    auto in = open_digit_file(input_path);
    FileSink sink(*output_path, rule->output_base(in->base()), indices_path->string());
    scanned = select_stream(*rule, *in, sink);
    selected_count = sink.count();
    sink.close();
    artifacts.push_back(*output_path);
    artifacts.push_back(*indices_path);
  }

  // Stage 3: analysis.
  bool verdict_ok = true;
  auto analyze_to = [&](const std::filesystem::path& digits,
                        const std::filesystem::path& report_path,
                        std::optional<double> density) {
    auto in = open_digit_file(digits);
    BlockCensus c = census(*in, cfg.kmax);
    NormalityReport r = report(c, report_cfg);
    r.selection_density = density;
    std::ofstream f(report_path);
    f << r.to_json() << "\n";
    artifacts.push_back(report_path);
    verdict_ok = verdict_ok && r.consistent_with_normal;
  };
  analyze_to(input_path, dir / "input_report.json", std::nullopt);
  if (rule) {
    if (selected_count == 0) throw std::invalid_argument("empty stream: rule selected nothing");
    analyze_to(*output_path, dir / "output_report.json",
               static_cast<double>(selected_count) / static_cast<double>(scanned));
  }

  // Stage 4: automaton cross-check for the rules with an augmented system.
  std::string crosscheck_note;
  bool crosscheck_ok = true;
  if (rule && cfg.automaton_check) {
    std::optional<AugmentedAutomaton> automaton;
    switch (rule->kind) {
      case SelectionRule::Kind::Leap:
        if (rule->n1 == 1)
          automaton = build_leap_automaton(input_base, cfg.k);
        else
          crosscheck_note = "skipped: leap cross-check requires n1=1";
        break;
      case SelectionRule::Kind::RemoveTop:
        automaton = build_remove_automaton(input_base, cfg.k);
        break;
      case SelectionRule::Kind::Modulo:
        automaton = build_modulo_automaton(input_base, cfg.k, rule->N, rule->L);
        break;
      default:
        crosscheck_note = "skipped: no augmented system for rule " + rule->to_string();
        break;
    }
    if (automaton) {
      auto in = open_digit_file(input_path);
      AutomatonRun run = run_counts_only(*automaton, *in);
      auto out_in = open_digit_file(*output_path);
      BlockCensus oc = census(*out_in, std::max(cfg.k, 1));
      CrossCheckReport cc = cross_check_ratio(oc, run, cfg.k);
      const auto cc_path = dir / "crosscheck.json";
      std::ofstream f(cc_path);
      f << cc.to_json() << "\n";
      artifacts.push_back(cc_path);
      crosscheck_ok = cc.within_bound;
    }
  }

  // Stage 5: manifest with content digests.
  nlohmann::json manifest;
  manifest["config"] = cfg.raw;
  manifest["source"] = spec.to_string();
  if (rule) manifest["rule"] = rule->to_string();
  manifest["digest_algorithm"] = "fnv1a64";
  manifest["artifacts"] = nlohmann::json::array();
  for (const auto& p : artifacts) {
    manifest["artifacts"].push_back({{"name", p.filename().string()},
                                     {"digest", hex64(fnv1a64_file(p))},
                                     {"bytes", std::filesystem::file_size(p)}});
  }
  if (rule) {
    manifest["positions_scanned"] = scanned;
    manifest["selected"] = selected_count;
  }
  if (!crosscheck_note.empty()) manifest["crosscheck"] = crosscheck_note;
  {
    std::ofstream f(dir / "manifest.json");
    f << manifest.dump(2) << "\n";
  }
  out << "pipeline complete: " << artifacts.size() + 1 << " artifacts in " << cfg.out_dir << "\n";
  if (cfg.strict && (!verdict_ok || !crosscheck_ok)) return kExitVerdict;
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"normality-preserving selection rules on digit streams"};
  app.require_subcommand(1);

  GenerateOpts gen;
  auto* g = app.add_subcommand("generate", "write a digit file from a named generator");
  g->add_option("--source", gen.source, "champernowne|constant|periodic|uniform|file")
      ->required();
  g->add_option("--base", gen.base, "digit base (>= 2)");
  g->add_option("--count", gen.count, "number of digits")->required();
  g->add_option("--out", gen.out, "output digit file")->required();
  g->add_option("--digit", gen.digit, "digit for constant source");
  g->add_option("--pattern", gen.pattern, "pattern for periodic source, e.g. 12");
  g->add_option("--seed", gen.seed, "seed for uniform source");
  g->add_option("--path", gen.path, "input path for file source");

  SelectOpts sel;
  auto* s = app.add_subcommand("select", "apply a selection rule to a digit file");
  s->add_option("--rule", sel.rule, "rule descriptor, e.g. leap:n1=1")->required();
  s->add_option("--in", sel.in, "input digit file")->required();
  s->add_option("--out", sel.out, "output digit file")->required();
  s->add_option("--indices", sel.indices, "write selected 1-based positions here");

  AnalyzeOpts ana;
  auto* a = app.add_subcommand("analyze", "block-frequency normality report");
  a->add_option("--in", ana.in, "input digit file")->required();
  a->add_option("--kmax", ana.kmax, "maximum block length (default 3)");
  a->add_option("--threshold", ana.thresholds, "verdict threshold <j>=<dev>, repeatable");
  a->add_option("--out", ana.out, "report JSON path (default stdout)");
  a->add_option("--csv", ana.csv, "also write per-block counts as CSV");
  a->add_flag("--strict", ana.strict, "exit 1 when the verdict is non-normal");

  VerifyOpts ver;
  auto* v = app.add_subcommand("verify-automaton",
                               "check transitivity and measure preservation");
  v->add_option("--builder", ver.builder, "leap|remove|modulo");
  v->add_option("--base", ver.base, "digit base");
  v->add_option("--k", ver.k, "window length");
  v->add_option("--N", ver.N, "modulo N");
  v->add_option("--L", ver.L, "modulo L");
  v->add_option("--file", ver.file, "verify an automaton file instead of a builder");
  v->add_option("--out", ver.out, "report JSON path (default stdout)");
  v->add_option("--export", ver.export_path, "also export the automaton to this path");
  v->add_flag("--strict", ver.strict, "exit 1 when a check fails");

  PipelineOpts pipe;
  auto* p = app.add_subcommand("pipeline", "generate, select, analyze and cross-check");
  p->add_option("--config", pipe.config, "pipeline config file")->required();
  p->add_option("--out-dir", pipe.out_dir, "override the config's out_dir");

  std::vector<const char*> argv;
  argv.push_back("normsel");
  for (const std::string& arg : args) argv.push_back(arg.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_generate(gen, out);
    if (s->parsed()) return cmd_select(sel, out);
    if (a->parsed()) return cmd_analyze(ana, out);
    if (v->parsed()) return cmd_verify(ver, out);
    if (p->parsed()) return cmd_pipeline(pipe, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace normsel::cli
