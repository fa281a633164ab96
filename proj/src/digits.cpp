#include "normsel/digits.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace normsel {

namespace {

void check_base(int base) {
  if (base < 2) throw std::invalid_argument("base must be >= 2, got " + std::to_string(base));
}

class ChampernowneSource final : public DigitSource {
 public:
  ChampernowneSource(int base, std::uint64_t count) : base_(base), remaining_(count) {}
  int base() const override { return base_; }
  std::optional<Digit> next() override {
    if (remaining_ == 0) return std::nullopt;
    if (pos_ == buf_.size()) {
      ++current_;
      buf_.clear();
      for (std::uint64_t n = current_; n > 0; n /= base_)
        buf_.push_back(static_cast<Digit>(n % base_));
      std::reverse(buf_.begin(), buf_.end());
      pos_ = 0;
    }
    if (remaining_ != kUnbounded) --remaining_;
    return buf_[pos_++];
  }

 private:
  int base_;
  std::uint64_t remaining_;
  std::uint64_t current_ = 0;
  std::vector<Digit> buf_;
  std::size_t pos_ = 0;
};

class ConstantSource final : public DigitSource {
 public:
  ConstantSource(int base, Digit d, std::uint64_t count)
      : base_(base), digit_(d), remaining_(count) {}
  int base() const override { return base_; }
  std::optional<Digit> next() override {
    if (remaining_ == 0) return std::nullopt;
    if (remaining_ != kUnbounded) --remaining_;
    return digit_;
  }

 private:
  int base_;
  Digit digit_;
  std::uint64_t remaining_;
};

class PeriodicSource final : public DigitSource {
 public:
  PeriodicSource(int base, std::vector<Digit> pattern, std::uint64_t count)
      : base_(base), pattern_(std::move(pattern)), remaining_(count) {}
  int base() const override { return base_; }
  std::optional<Digit> next() override {
    if (remaining_ == 0) return std::nullopt;
    if (remaining_ != kUnbounded) --remaining_;
    Digit d = pattern_[pos_];
    pos_ = (pos_ + 1) % pattern_.size();
    return d;
  }

 private:
  int base_;
  std::vector<Digit> pattern_;
  std::uint64_t remaining_;
  std::size_t pos_ = 0;
};

// Fixed documented recurrence: splitmix64. Digits come from the high bits
// via a 128-bit multiply, so the stream is a pure function of (base, seed).
class SeededUniformSource final : public DigitSource {
 public:
  SeededUniformSource(int base, std::uint64_t seed, std::uint64_t count)
      : base_(base), state_(seed), remaining_(count) {}
  int base() const override { return base_; }
  std::optional<Digit> next() override {
    if (remaining_ == 0) return std::nullopt;
    if (remaining_ != kUnbounded) --remaining_;
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    return static_cast<Digit>((static_cast<unsigned __int128>(z) * base_) >> 64);
  }

 private:
  int base_;
  std::uint64_t state_;
  std::uint64_t remaining_;
};

class FileSource final : public DigitSource {
 public:
  FileSource(const std::filesystem::path& path, std::uint64_t limit)
      : path_(path.string()), in_(path, std::ios::binary), remaining_(limit) {
    if (!in_) throw DigitFileError(path_, 1, 1, "cannot open file");
    parse_header();
  }

  int base() const override { return base_; }

  std::optional<Digit> next() override {
    if (remaining_ == 0) return std::nullopt;
    std::optional<Digit> d = base_ <= 36 ? next_packed() : next_csv();
    if (d && remaining_ != kUnbounded) --remaining_;
    return d;
  }

 private:
  void parse_header() {
    // Optional "# base=<b>" first line; anything else starting with '#'
    // is a malformed header.
    int c = in_.peek();
    if (c != '#') return;  // default base 10, body starts at line 1
    std::string line;
    std::getline(in_, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string prefix = "# base=";
    if (line.rfind(prefix, 0) != 0)
      throw DigitFileError(path_, 1, 1, "malformed header, expected '# base=<b>'");
    std::size_t idx = 0;
    int parsed = 0;
    try {
      parsed = std::stoi(line.substr(prefix.size()), &idx);
    } catch (const std::logic_error&) {
      throw DigitFileError(path_, 1, prefix.size() + 1, "malformed header, bad base value");
    }
    if (idx != line.size() - prefix.size() || parsed < 2)
      throw DigitFileError(path_, 1, prefix.size() + 1, "malformed header, bad base value");
    base_ = parsed;
    line_ = 2;
    col_ = 1;
  }

  std::optional<int> get_byte() {
    int c = in_.get();
    if (c == EOF) return std::nullopt;
    return c;
  }

  std::optional<Digit> next_packed() {
    while (auto c = get_byte()) {
      if (*c == '\n') {
        ++line_;
        col_ = 1;
        continue;
      }
      if (*c == '\r') {
        ++col_;
        continue;
      }
      Digit v;
      if (*c >= '0' && *c <= '9')
        v = *c - '0';
      else if (*c >= 'a' && *c <= 'z')
        v = 10 + (*c - 'a');
      else
        throw DigitFileError(path_, line_, col_,
                             std::string("illegal character '") + static_cast<char>(*c) + "'");
      if (v >= base_)
        throw DigitFileError(path_, line_, col_,
                             "digit " + std::to_string(v) + " out of range for base " +
                                 std::to_string(base_));
      ++col_;
      return v;
    }
    return std::nullopt;
  }

  std::optional<Digit> next_csv() {
    std::string token;
    std::size_t tok_line = line_, tok_col = col_;
    while (true) {
      auto c = get_byte();
      bool sep = !c || *c == ',' || *c == '\n' || *c == '\r';
      if (!sep) {
        if (!std::isdigit(static_cast<unsigned char>(*c)))
          throw DigitFileError(path_, line_, col_,
                               std::string("illegal character '") + static_cast<char>(*c) + "'");
        if (token.empty()) {
          tok_line = line_;
          tok_col = col_;
        }
        token.push_back(static_cast<char>(*c));
        ++col_;
        continue;
      }
      if (c && *c == '\n') {
        ++line_;
        col_ = 1;
      } else if (c) {
        ++col_;
      }
      if (!token.empty()) {
        long long v = std::stoll(token);
        if (v >= base_)
          throw DigitFileError(path_, tok_line, tok_col,
                               "digit " + token + " out of range for base " +
                                   std::to_string(base_));
        return static_cast<Digit>(v);
      }
      if (!c) return std::nullopt;
    }
  }

  std::string path_;
  std::ifstream in_;
  std::uint64_t remaining_;
  int base_ = 10;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

}  // namespace

SourceSpec SourceSpec::champernowne(int base) {
  SourceSpec s;
  s.kind = Kind::Champernowne;
  s.base = base;
  return s;
}

SourceSpec SourceSpec::constant(int base, Digit d) {
  SourceSpec s;
  s.kind = Kind::Constant;
  s.base = base;
  s.digit = d;
  return s;
}

SourceSpec SourceSpec::periodic(int base, std::vector<Digit> pattern) {
  SourceSpec s;
  s.kind = Kind::Periodic;
  s.base = base;
  s.pattern = std::move(pattern);
  return s;
}

SourceSpec SourceSpec::seeded_uniform(int base, std::uint64_t seed) {
  SourceSpec s;
  s.kind = Kind::SeededUniform;
  s.base = base;
  s.seed = seed;
  return s;
}

SourceSpec SourceSpec::file(std::string path) {
  SourceSpec s;
  s.kind = Kind::File;
  s.path = std::move(path);
  return s;
}

void SourceSpec::validate() const {
  if (kind == Kind::File) {
    if (path.empty()) throw std::invalid_argument("file source needs a path");
    return;
  }
  check_base(base);
  if (kind == Kind::Constant && (digit < 0 || digit >= base))
    throw std::invalid_argument("constant digit " + std::to_string(digit) +
                                " out of range for base " + std::to_string(base));
  if (kind == Kind::Periodic) {
    if (pattern.empty()) throw std::invalid_argument("periodic pattern must be nonempty");
    for (Digit d : pattern)
      if (d < 0 || d >= base)
        throw std::invalid_argument("pattern digit " + std::to_string(d) +
                                    " out of range for base " + std::to_string(base));
  }
}

std::string SourceSpec::to_string() const {
  switch (kind) {
    case Kind::Champernowne:
      return "champernowne:base=" + std::to_string(base);
    case Kind::Constant:
      return "constant:base=" + std::to_string(base) + ",digit=" + std::to_string(digit);
    case Kind::Periodic: {
      std::string p;
      for (std::size_t i = 0; i < pattern.size(); ++i) {
        if (i) p += '.';
        p += std::to_string(pattern[i]);
      }
      return "periodic:base=" + std::to_string(base) + ",pattern=" + p;
    }
    case Kind::SeededUniform:
      return "uniform:base=" + std::to_string(base) + ",seed=" + std::to_string(seed);
    case Kind::File:
      return "file:" + path;
  }
  return "?";
}

std::unique_ptr<DigitSource> make_source(const SourceSpec& spec, std::uint64_t count) {
  spec.validate();
  switch (spec.kind) {
    case SourceSpec::Kind::Champernowne:
      return std::make_unique<ChampernowneSource>(spec.base, count);
    case SourceSpec::Kind::Constant:
      return std::make_unique<ConstantSource>(spec.base, spec.digit, count);
    case SourceSpec::Kind::Periodic:
      return std::make_unique<PeriodicSource>(spec.base, spec.pattern, count);
    case SourceSpec::Kind::SeededUniform:
      return std::make_unique<SeededUniformSource>(spec.base, spec.seed, count);
    case SourceSpec::Kind::File:
      return std::make_unique<FileSource>(spec.path, count);
  }
  throw std::logic_error("unreachable");
}

std::vector<Digit> take(DigitSource& src, std::uint64_t max_digits) {
  std::vector<Digit> out;
  std::uint64_t n = 0;
  while (n < max_digits) {
    auto d = src.next();
    if (!d) break;
    out.push_back(*d);
    ++n;
  }
  return out;
}

struct DigitFileWriter::Impl {
  std::ofstream out;
  int base;
  int col = 0;
  bool open = true;

  void push(Digit d) {
    if (d < 0 || d >= base)
      throw std::invalid_argument("digit " + std::to_string(d) + " out of range for base " +
                                  std::to_string(base));
    if (base <= 36) {
      out.put(d < 10 ? static_cast<char>('0' + d) : static_cast<char>('a' + d - 10));
      if (++col == 100) {
        out.put('\n');
        col = 0;
      }
    } else {
      if (col) out.put(',');
      out << d;
      if (++col == 64) {
        out.put('\n');
        col = 0;
      }
    }
  }

  void close() {
    if (!open) return;
    if (col) out.put('\n');
    out.flush();
    open = false;
  }
};

DigitFileWriter::DigitFileWriter(const std::filesystem::path& path, int base)
    : impl_(std::make_unique<Impl>()) {
  check_base(base);
  impl_->base = base;
  impl_->out.open(path, std::ios::binary);
  if (!impl_->out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  impl_->out << "# base=" << base << "\n";
}

DigitFileWriter::~DigitFileWriter() {
  try {
    impl_->close();
  } catch (...) {
  }
}

void DigitFileWriter::push(Digit d) { impl_->push(d); }
void DigitFileWriter::close() { impl_->close(); }

void write_digit_file(const std::filesystem::path& path, DigitSource& src) {
  DigitFileWriter w(path, src.base());
  while (auto d = src.next()) w.push(*d);
  w.close();
}

void write_digit_file(const std::filesystem::path& path, int base, std::span<const Digit> digits) {
  DigitFileWriter w(path, base);
  for (Digit d : digits) w.push(d);
  w.close();
}

std::unique_ptr<DigitSource> open_digit_file(const std::filesystem::path& path) {
  return std::make_unique<FileSource>(path, kUnbounded);
}

}  // namespace normsel
