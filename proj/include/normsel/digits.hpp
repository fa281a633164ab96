#ifndef NORMSEL_DIGITS_HPP
#define NORMSEL_DIGITS_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace normsel {

/// A single base-b digit; valid values are 0..base-1 for the owning stream.
using Digit = int;

/// Digit budget meaning "no limit" for generators that can run forever.
inline constexpr std::uint64_t kUnbounded = ~std::uint64_t{0};

/// Descriptor for a digit stream. Generators are pure functions of the
/// descriptor: re-instantiating with identical fields reproduces the
/// identical sequence.
struct SourceSpec {
  enum class Kind { Champernowne, Constant, Periodic, SeededUniform, File };

  Kind kind = Kind::Champernowne;
  int base = 10;
  Digit digit = 0;               // Constant
  std::vector<Digit> pattern;    // Periodic
  std::uint64_t seed = 0;        // SeededUniform
  std::string path;              // File

  static SourceSpec champernowne(int base);
  static SourceSpec constant(int base, Digit d);
  static SourceSpec periodic(int base, std::vector<Digit> pattern);
  static SourceSpec seeded_uniform(int base, std::uint64_t seed);
  static SourceSpec file(std::string path);

  void validate() const;  // throws std::invalid_argument
  std::string to_string() const;
};

/// Pull-based single-pass digit stream. next() yields digits until the
/// source is exhausted, then returns nullopt forever.
class DigitSource {
 public:
  virtual ~DigitSource() = default;
  virtual int base() const = 0;
  virtual std::optional<Digit> next() = 0;
};

/// Instantiates the generator named by `spec`, bounded to `count` digits
/// (kUnbounded allowed for every kind except File).
std::unique_ptr<DigitSource> make_source(const SourceSpec& spec, std::uint64_t count);

/// In-memory stream over an existing digit vector.
class VectorSource final : public DigitSource {
 public:
  VectorSource(int base, std::vector<Digit> digits)
      : base_(base), digits_(std::move(digits)) {}
  int base() const override { return base_; }
  std::optional<Digit> next() override {
    if (pos_ >= digits_.size()) return std::nullopt;
    return digits_[pos_++];
  }

 private:
  int base_;
  std::vector<Digit> digits_;
  std::size_t pos_ = 0;
};

/// Drains up to `max_digits` digits into a vector.
std::vector<Digit> take(DigitSource& src, std::uint64_t max_digits = kUnbounded);

/// Error raised by the digit-file reader, carrying the 1-based line and
/// column of the offending byte.
class DigitFileError : public std::runtime_error {
 public:
  DigitFileError(const std::string& path, std::size_t line, std::size_t column,
                 const std::string& message)
      : std::runtime_error(path + ":" + std::to_string(line) + ":" + std::to_string(column) +
                           ": " + message),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Digit file format
// -----------------
// Optional first line:   # base=<b>
// If the header is absent the base defaults to 10.
// For base <= 36 the body packs one character per digit (0-9 then a-z),
// newlines ignored. For base > 36 the body is comma-separated decimal
// values; newlines also act as separators. The writer always emits the
// header.

/// Streaming writer: header goes out immediately, digits as pushed.
class DigitFileWriter {
 public:
  DigitFileWriter(const std::filesystem::path& path, int base);
  ~DigitFileWriter();
  void push(Digit d);
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

void write_digit_file(const std::filesystem::path& path, DigitSource& src);
void write_digit_file(const std::filesystem::path& path, int base, std::span<const Digit> digits);

/// Opens a digit file as a streaming source; format errors surface as
/// DigitFileError from next() (or from this call for a broken header).
std::unique_ptr<DigitSource> open_digit_file(const std::filesystem::path& path);

}  // namespace normsel

#endif
