// Text format for polynomials and system definitions.
//
//   field 2
//   stream x order 93
//   stream y order 84
//   update x = y0 + y15 + x24 + y1*y2
//   update y = x0 + y6 + x27 + x1*x2
//   keystream = x0 + x27 + y0 + y15
//   offset 708
//
// Block ciphers use `split <m>` and `final <T>` instead of keystream/offset.
// Variables are written <name><clock> or <name>(<clock>); stream names are
// letters and underscores. Terms may carry an integer coefficient and
// exponents (x0^2). '#' starts a comment.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "diffcipher/diffpoly.hpp"
#include "diffcipher/system.hpp"

namespace diffcipher {

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, size_t line, size_t column);
  size_t line;
  size_t column;
};

struct SystemFile {
  DiffSystem system;
  std::optional<Poly> keystream;
  std::optional<uint64_t> offset;
  std::optional<uint32_t> split;
  std::optional<uint64_t> final_clock;

  friend bool operator==(const SystemFile&, const SystemFile&) = default;
};

/// Parses one polynomial over GF(p) with the given stream names.
Poly parse_poly(std::string_view text, uint32_t p, const StreamNames& names);

/// Parses a system definition. The field defaults to GF(2) when no `field`
/// line is present.
SystemFile parse_system(std::string_view text);

/// Canonical text of a system definition; parse_system inverts it.
std::string format_system(const SystemFile& file);
std::string format_system(const DiffSystem& sys);

}  // namespace diffcipher
