#include "diffcipher/dsl.hpp"

#include <cctype>
#include <charconv>
#include <map>
#include <sstream>

namespace diffcipher {

ParseError::ParseError(const std::string& msg, size_t l, size_t c)
    : Error("line " + std::to_string(l) + ", column " + std::to_string(c) + ": " + msg), line(l), column(c) {}

namespace {

class Cursor {
 public:
  Cursor(std::string_view s, size_t line, size_t col0) : s_(s), line_(line), col0_(col0) {}

  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool done() {
    skip_ws();
    return i_ >= s_.size();
  }
  char peek() {
    skip_ws();
    return i_ < s_.size() ? s_[i_] : '\0';
  }
  bool accept(char c) {
    if (peek() != c) return false;
    ++i_;
    return true;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }
  std::string name() {
    skip_ws();
    size_t b = i_;
    while (i_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
    if (b == i_) fail("expected a name");
    return std::string(s_.substr(b, i_ - b));
  }
  bool at_digit() {
    skip_ws();
    return i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]));
  }
  // Digits directly following the current position (no whitespace skipping).
  bool digit_here() const { return i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_])); }
  uint64_t number() {
    skip_ws();
    size_t b = i_;
    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
    if (b == i_) fail("expected a number");
    uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s_.data() + b, s_.data() + i_, v);
    if (ec != std::errc()) fail("number out of range");
    return v;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col0_ + i_ + 1); }
  [[noreturn]] void fail_at(const std::string& msg, size_t col) const { throw ParseError(msg, line_, col); }
  size_t column() const { return col0_ + i_ + 1; }

 private:
  std::string_view s_;
  size_t i_ = 0;
  size_t line_, col0_;
};

Poly parse_poly_at(Cursor& cur, uint32_t p, const StreamNames& names) {
  std::map<std::string, uint32_t> index;
  for (uint32_t i = 0; i < names.size(); ++i) index.emplace(names[i], i);
  const PrimeField F(p);
  std::vector<std::pair<int64_t, std::vector<Factor>>> raw;
  bool first = true;
  while (true) {
    int64_t sign = 1;
    if (first) {
      if (cur.accept('-')) sign = -1;
    } else if (cur.accept('-')) {
      sign = -1;
    } else if (!cur.accept('+')) {
      break;
    }
    first = false;
    uint32_t coeff = 1;
    std::vector<Factor> fs;
    bool need_factor = true;
    if (cur.at_digit()) {
      coeff = F.reduce(static_cast<int64_t>(cur.number() % p));
      need_factor = cur.accept('*');
    }
    while (need_factor) {
      const size_t col = cur.column();
      const std::string nm = cur.name();
      auto it = index.find(nm);
      if (it == index.end()) cur.fail_at("unknown stream '" + nm + "'", col);
      uint64_t clock;
      if (cur.digit_here()) {
        clock = cur.number();
      } else {
        cur.expect('(');
        clock = cur.number();
        cur.expect(')');
      }
      if (clock > 0xffffffffu) cur.fail("clock out of range");
      uint64_t e = 1;
      if (cur.accept('^')) {
        e = cur.number();
        if (e == 0) cur.fail("zero exponent");
      }
      fs.push_back({{it->second, static_cast<uint32_t>(clock)}, reduce_exponent(e, p)});
      need_factor = cur.accept('*');
    }
    raw.emplace_back(sign * static_cast<int64_t>(coeff), std::move(fs));
  }
  if (first) cur.fail("expected a polynomial");
  return Poly::from_terms(p, raw);
}

std::string strip_comment(std::string_view line) {
  const size_t h = line.find('#');
  return std::string(line.substr(0, h));
}

}  // namespace

Poly parse_poly(std::string_view text, uint32_t p, const StreamNames& names) {
  Cursor cur(text, 1, 0);
  Poly f = parse_poly_at(cur, p, names);
  if (!cur.done()) cur.fail("unexpected trailing input");
  return f;
}

SystemFile parse_system(std::string_view text) {
  struct Pending {
    std::string body;
    size_t line, col;
  };
  uint32_t p = 2;
  bool have_field = false;
  StreamNames names;
  std::vector<uint32_t> orders;
  std::map<std::string, Pending> updates;
  std::optional<Pending> keystream;
  SystemFile out;

  std::istringstream in{std::string(text)};
  std::string raw;
  size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = strip_comment(raw);
    Cursor cur(line, lineno, 0);
    if (cur.done()) continue;
    const std::string kw = cur.name();
    if (kw == "field") {
      if (have_field) cur.fail("field declared twice");
      const uint64_t v = cur.number();
      if (v >= (uint64_t{1} << 31) || !is_prime(v)) cur.fail("field modulus " + std::to_string(v) + " is not a prime below 2^31");
      p = static_cast<uint32_t>(v);
      have_field = true;
    } else if (kw == "stream") {
      const std::string nm = cur.name();
      for (const auto& n : names)
        if (n == nm) cur.fail("stream '" + nm + "' declared twice");
      if (cur.name() != "order") cur.fail("expected 'order'");
      const uint64_t r = cur.number();
      if (r == 0 || r > 0xffffffu) cur.fail("stream order must be between 1 and 2^24");
      names.push_back(nm);
      orders.push_back(static_cast<uint32_t>(r));
    } else if (kw == "update") {
      const std::string nm = cur.name();
      cur.expect('=');
      if (updates.count(nm)) cur.fail("second update for stream '" + nm + "'");
      const size_t col = cur.column();
      updates[nm] = {line.substr(col - 1), lineno, col - 1};
      continue;
    } else if (kw == "keystream") {
      cur.expect('=');
      if (keystream) cur.fail("keystream declared twice");
      const size_t col = cur.column();
      keystream = Pending{line.substr(col - 1), lineno, col - 1};
      continue;
    } else if (kw == "offset") {
      out.offset = cur.number();
    } else if (kw == "split") {
      const uint64_t m = cur.number();
      if (m > 0xffffffffu) cur.fail("split out of range");
      out.split = static_cast<uint32_t>(m);
    } else if (kw == "final") {
      out.final_clock = cur.number();
    } else {
      throw ParseError("unknown keyword '" + kw + "'", lineno, 1);
    }
    if (!cur.done()) cur.fail("unexpected trailing input");
  }
  if (names.empty()) throw ParseError("no streams declared", lineno, 1);

  auto parse_pending = [&](const Pending& pd) {
    Cursor cur(pd.body, pd.line, pd.col);
    Poly f = parse_poly_at(cur, p, names);
    if (!cur.done()) cur.fail("unexpected trailing input");
    for (Var v : f.vars())
      if (v.clock >= orders[v.stream])
        throw ParseError("clock out of range: " + format_var(v, names) + " but stream '" + names[v.stream] +
                             "' has order " + std::to_string(orders[v.stream]),
                         pd.line, pd.col + 1);
    return f;
  };

  std::vector<Poly> ups;
  for (const auto& nm : names) {
    auto it = updates.find(nm);
    if (it == updates.end()) throw ParseError("stream '" + nm + "' has no update", lineno, 1);
    ups.push_back(parse_pending(it->second));
  }
  for (const auto& [nm, pd] : updates) {
    bool known = false;
    for (const auto& n : names) known |= n == nm;
    if (!known) throw ParseError("update for unknown stream '" + nm + "'", pd.line, 1);
  }
  if (keystream) out.keystream = parse_pending(*keystream);
  out.system = DiffSystem(p, names, orders, std::move(ups));
  if (out.split && (*out.split == 0 || *out.split >= names.size()))
    throw ParseError("split must satisfy 0 < m < number of streams", lineno, 1);
  return out;
}

std::string format_system(const SystemFile& file) {
  const DiffSystem& s = file.system;
  std::ostringstream os;
  os << "field " << s.modulus() << '\n';
  for (size_t i = 0; i < s.num_streams(); ++i) os << "stream " << s.names()[i] << " order " << s.orders()[i] << '\n';
  for (size_t i = 0; i < s.num_streams(); ++i)
    os << "update " << s.names()[i] << " = " << format_poly(s.updates()[i], s.names()) << '\n';
  if (file.keystream) os << "keystream = " << format_poly(*file.keystream, s.names()) << '\n';
  if (file.offset) os << "offset " << *file.offset << '\n';
  if (file.split) os << "split " << *file.split << '\n';
  if (file.final_clock) os << "final " << *file.final_clock << '\n';
  return os.str();
}

std::string format_system(const DiffSystem& sys) {
  SystemFile f;
  f.system = sys;
  return format_system(f);
}

}  // namespace diffcipher
