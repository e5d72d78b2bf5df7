#include "diffcipher/cipher.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace diffcipher {

namespace {

Poly P(const char* text, uint32_t p, const StreamNames& names) { return parse_poly(text, p, names); }

void require_len(const char* what, size_t got, size_t want) {
  if (got != want)
    throw Error(std::string(what) + ": expected " + std::to_string(want) + " values, got " + std::to_string(got));
}

void require_field(const std::vector<uint32_t>& v, uint32_t p) {
  for (uint32_t x : v)
    if (x >= p) throw Error("value " + std::to_string(x) + " is not in GF(" + std::to_string(p) + ")");
}

}  // namespace

CipherSpec CipherSpec::make_stream(std::string name, DiffSystem sys, Poly f, uint64_t offset) {
  if (f.modulus() != sys.modulus()) throw Error("keystream polynomial is over a different field");
  for (Var v : f.vars())
    if (!sys.in_window(v)) throw Error("keystream polynomial uses " + format_var(v, sys.names()) + " outside the state window");
  CipherSpec c;
  c.kind = Kind::stream;
  c.name = std::move(name);
  c.system = std::move(sys);
  c.keystream = std::move(f);
  c.offset = offset;
  return c;
}

CipherSpec CipherSpec::make_block(std::string name, DiffSystem sys, uint32_t m, uint64_t final_clock) {
  auto key = subsystem_split(sys, m);
  if (!key) throw Error("the first " + std::to_string(m) + " streams do not form a subsystem");
  InverseResult inv = invert_system(sys, InvertMethod::quick);
  if (!inv.invertible) inv = invert_system(sys, InvertMethod::full);
  if (!inv.invertible) throw Error("block cipher system is not invertible: " + inv.reason);
  CipherSpec c;
  c.kind = Kind::block;
  c.name = std::move(name);
  c.system = std::move(sys);
  c.split = m;
  c.final_clock = final_clock;
  c.inverse = std::move(*inv.inverse);
  c.key_system = std::move(*key);
  c.key_length = c.key_system.total_order();
  c.block_length = c.system.total_order() - c.key_length;
  return c;
}

CipherSpec CipherSpec::from_file(const SystemFile& file, std::string name) {
  if (file.keystream) {
    if (file.split) throw Error("system file declares both keystream and split");
    return make_stream(std::move(name), file.system, *file.keystream, file.offset.value_or(0));
  }
  if (!file.split || !file.final_clock) throw Error("system file is neither a stream cipher (keystream) nor a block cipher (split + final)");
  return make_block(std::move(name), file.system, *file.split, *file.final_clock);
}

// ------------------------------------------------------------------ builtins

namespace {

CipherSpec bivium() {
  const StreamNames n{"x", "y"};
  DiffSystem sys(2, n, {93, 84}, {P("y0 + y15 + x24 + y1*y2", 2, n), P("x0 + y6 + x27 + x1*x2", 2, n)});
  return CipherSpec::make_stream("bivium", std::move(sys), P("x0 + x27 + y0 + y15", 2, n), 708);
}

CipherSpec trivium() {
  const StreamNames n{"x", "y", "z"};
  DiffSystem sys(2, n, {93, 84, 111},
                 {P("z0 + x24 + z45 + z1*z2", 2, n), P("x0 + y6 + x27 + x1*x2", 2, n),
                  P("y0 + y15 + z24 + y1*y2", 2, n)});
  return CipherSpec::make_stream("trivium", std::move(sys), P("x0 + x27 + y0 + y15 + z0 + z45", 2, n), 1152);
}

CipherSpec keeloq() {
  const StreamNames n{"k", "x"};
  DiffSystem sys(2, n, {64, 32},
                 {P("k0", 2, n), P("x0 + x16 + x9 + x1 + x20*x31 + x1*x31 + x20*x26 + x1*x26 + x9*x20 + x1*x9"
                                   " + x1*x9*x31 + x1*x20*x31 + x9*x26*x31 + x20*x26*x31 + k0",
                                   2, n)});
  return CipherSpec::make_block("keeloq", std::move(sys), 1, 528);
}

}  // namespace

std::vector<LfsrRegister> default_lfsr_registers() {
  return {{"a", 5, {0, 2}}, {"b", 7, {0, 1}}, {"c", 9, {0, 4}}};
}

CipherSpec lfsr_combiner(const std::vector<LfsrRegister>& regs, std::string_view combiner, uint64_t offset) {
  if (regs.empty()) throw Error("lfsr_combiner needs at least one register");
  StreamNames names;
  std::vector<uint32_t> orders;
  for (const auto& r : regs) {
    names.push_back(r.name);
    orders.push_back(r.order);
  }
  std::vector<Poly> ups;
  for (uint32_t i = 0; i < regs.size(); ++i) {
    const auto& r = regs[i];
    if (std::find(r.taps.begin(), r.taps.end(), 0u) == r.taps.end())
      throw Error("register '" + r.name + "' has no tap at 0 and is not invertible");
    Poly f(2);
    for (uint32_t j : r.taps) {
      if (j >= r.order) throw Error("register '" + r.name + "': tap " + std::to_string(j) + " outside the window");
      f = f + Poly::variable(2, {i, j});
    }
    ups.push_back(std::move(f));
  }
  DiffSystem sys(2, names, orders, std::move(ups));
  Poly g(2);
  try {
    g = parse_poly(combiner, 2, names);
  } catch (const ParseError& e) {
    throw Error(std::string("invalid combiner: ") + e.what());
  }
  for (Var v : g.vars())
    if (!sys.in_window(v)) throw Error("invalid combiner variable " + format_var(v, names));
  return CipherSpec::make_stream("lfsr_combiner", std::move(sys), std::move(g), offset);
}

DiffSystem squares_system(uint32_t p) {
  const StreamNames n{"x", "y"};
  return DiffSystem(p, n, {1, 1}, {P("x0^2 + y0^2", p, n), P("2*x0*y0", p, n)});
}

CipherSpec build_builtin(std::string_view name) {
  if (name == "bivium") return bivium();
  if (name == "trivium") return trivium();
  if (name == "keeloq") return keeloq();
  if (name == "lfsr_combiner") return lfsr_combiner(default_lfsr_registers(), kDefaultCombiner);
  throw Error("unknown built-in cipher '" + std::string(name) + "'");
}

std::vector<std::string> builtin_names() { return {"bivium", "trivium", "keeloq", "lfsr_combiner"}; }

// ------------------------------------------------------------------ operation

std::vector<uint32_t> keystream_gen(const CipherSpec& c, const StateVec& initial, uint64_t from, uint64_t count) {
  if (!c.is_stream()) throw Error("keystream_gen needs a stream cipher");
  require_len("initial state", initial.size(), c.state_length());
  const Stepper st(c.system);
  StateVec v = initial;
  for (uint64_t t = 0; t < from; ++t) st.step(v);
  std::vector<uint32_t> out;
  out.reserve(count);
  for (uint64_t t = 0; t < count; ++t) {
    out.push_back(evaluate_at_state(c.system, c.keystream, v));
    st.step(v);
  }
  return out;
}

StateVec assemble_state(const CipherSpec& c, const std::vector<uint32_t>& key, const std::vector<uint32_t>& block) {
  if (!c.is_block()) throw Error("not a block cipher");
  require_len("key", key.size(), c.key_length);
  require_len("block", block.size(), c.block_length);
  require_field(key, c.system.modulus());
  require_field(block, c.system.modulus());
  StateVec v(key);
  v.insert(v.end(), block.begin(), block.end());
  return v;
}

std::vector<uint32_t> block_part(const CipherSpec& c, const StateVec& state) {
  return {state.begin() + static_cast<std::ptrdiff_t>(c.key_length), state.end()};
}

std::vector<uint32_t> block_encrypt(const CipherSpec& c, const std::vector<uint32_t>& key,
                                    const std::vector<uint32_t>& plaintext, std::optional<uint64_t> clocks) {
  return block_part(c, simulate(c.system, assemble_state(c, key, plaintext), clocks.value_or(c.final_clock)));
}

std::vector<uint32_t> block_decrypt(const CipherSpec& c, const std::vector<uint32_t>& key,
                                    const std::vector<uint32_t>& ciphertext, std::optional<uint64_t> clocks) {
  const uint64_t T = clocks.value_or(c.final_clock);
  assemble_state(c, key, ciphertext);  // validation only
  StateVec u = simulate(c.key_system, key, T);
  u.insert(u.end(), ciphertext.begin(), ciphertext.end());
  return block_part(c, backstep_with(c.inverse, u, T));
}

StateVec load_key_iv(const CipherSpec& c, const std::vector<uint32_t>& key, const std::vector<uint32_t>& iv,
                     KeyLoading loading) {
  const bool tri = c.system.num_streams() == 3;
  if (c.system.modulus() != 2 || !c.is_stream() || c.system.orders()[0] != 93 || c.system.orders()[1] != 84 ||
      (tri && c.system.orders()[2] != 111) || c.system.num_streams() > 3)
    throw Error("key/iv loading is defined for Bivium and Trivium only");
  require_len("key", key.size(), 80);
  require_len("iv", iv.size(), 80);
  require_field(key, 2);
  require_field(iv, 2);
  StateVec v(c.state_length(), 0);
  const size_t ys = c.system.window_start(1);
  if (loading == KeyLoading::direct) {
    std::copy(key.begin(), key.end(), v.begin());
    std::copy(iv.begin(), iv.end(), v.begin() + static_cast<std::ptrdiff_t>(ys));
    return v;
  }
  for (size_t i = 0; i < 80; ++i) {
    v[92 - i] = key[i];       // K_(i+1) -> s_(i+1) = x(92-i)
    v[ys + 83 - i] = iv[i];   // IV_(i+1) -> s_(94+i) = y(83-i)
  }
  if (tri) {
    const size_t zs = c.system.window_start(2);
    v[zs] = v[zs + 1] = v[zs + 2] = 1;  // s286..s288
  }
  return v;
}

// ------------------------------------------------------------------ KeeLoq

uint32_t keeloq_nlf(uint32_t x) {
  const uint32_t idx = ((x >> 31) & 1) << 4 | ((x >> 26) & 1) << 3 | ((x >> 20) & 1) << 2 | ((x >> 9) & 1) << 1 |
                       ((x >> 1) & 1);
  return (0x3A5C742Eu >> idx) & 1;
}

uint32_t keeloq_encrypt(uint64_t key, uint32_t x, uint64_t rounds) {
  for (uint64_t t = 0; t < rounds; ++t) {
    const uint32_t b = (x ^ (x >> 16) ^ static_cast<uint32_t>(key >> (t & 63)) ^ keeloq_nlf(x)) & 1;
    x = (x >> 1) | (b << 31);
  }
  return x;
}

uint32_t keeloq_unwind(uint64_t key, uint32_t x, uint64_t end, uint64_t rounds) {
  for (uint64_t i = 0; i < rounds; ++i) {
    const uint64_t t = end - 1 - i;
    // x currently holds x(t+1..t+32); recover x(t).
    const uint32_t top = x >> 31;
    const uint32_t prev = x << 1;  // x(t+1..t+31) in bits 1..31, bit 0 unknown
    const uint32_t b = (top ^ (prev >> 16) ^ static_cast<uint32_t>(key >> (t & 63)) ^ keeloq_nlf(prev)) & 1;
    x = prev | b;
  }
  return x;
}

uint32_t keeloq_decrypt(uint64_t key, uint32_t y, uint64_t rounds) { return keeloq_unwind(key, y, rounds, rounds); }

std::vector<uint32_t> word_to_bits(uint64_t w, size_t n) {
  std::vector<uint32_t> b(n);
  for (size_t i = 0; i < n && i < 64; ++i) b[i] = (w >> i) & 1;
  return b;
}

uint64_t bits_to_word(const std::vector<uint32_t>& bits) {
  if (bits.size() > 64) throw Error("more than 64 bits do not fit a word");
  uint64_t w = 0;
  for (size_t i = 0; i < bits.size(); ++i) w |= uint64_t{bits[i] & 1} << i;
  return w;
}

// ------------------------------------------------------------------ text

namespace {

std::string strip_ws(std::string_view s) {
  std::string out;
  for (char ch : s)
    if (!std::isspace(static_cast<unsigned char>(ch))) out += ch;
  return out;
}

std::vector<uint32_t> parse_decimal_list(std::string_view body, uint32_t p) {
  std::vector<uint32_t> v;
  if (body.empty()) return v;
  size_t i = 0;
  while (true) {
    const size_t j = body.find(',', i);
    const std::string_view tok = body.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i);
    uint64_t x = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
      throw Error("bad decimal value '" + std::string(tok) + "'");
    if (x >= p) throw Error("value " + std::to_string(x) + " is not in GF(" + std::to_string(p) + ")");
    v.push_back(static_cast<uint32_t>(x));
    if (j == std::string_view::npos) break;
    i = j + 1;
  }
  return v;
}

int hex_digit(char ch) {
  if (ch >= '0' && ch <= '9') return ch - '0';
  if (ch >= 'a' && ch <= 'f') return ch - 'a' + 10;
  if (ch >= 'A' && ch <= 'F') return ch - 'A' + 10;
  return -1;
}

std::string bits_to_hex(const std::vector<uint32_t>& v) {
  const size_t digits = std::max<size_t>(1, (v.size() + 3) / 4);
  std::string s(digits, '0');
  for (size_t d = 0; d < digits; ++d) {
    unsigned nib = 0;
    for (size_t k = 0; k < 4; ++k) {
      const size_t i = 4 * d + k;
      if (i < v.size() && v[i]) nib |= 1u << k;
    }
    s[digits - 1 - d] = "0123456789abcdef"[nib];
  }
  return s;
}

std::vector<uint32_t> hex_to_bits(std::string_view h, size_t n) {
  if (h.size() >= 2 && h[0] == '0' && (h[1] == 'x' || h[1] == 'X')) h.remove_prefix(2);
  if (h.empty()) throw Error("empty hex value");
  std::vector<uint32_t> v(n, 0);
  for (size_t d = 0; d < h.size(); ++d) {
    const int x = hex_digit(h[h.size() - 1 - d]);
    if (x < 0) throw Error("bad hex digit '" + std::string(1, h[h.size() - 1 - d]) + "'");
    for (size_t k = 0; k < 4; ++k) {
      if (!((x >> k) & 1)) continue;
      const size_t i = 4 * d + k;
      if (i >= n) throw Error("hex value has more than " + std::to_string(n) + " bits");
      v[i] = 1;
    }
  }
  return v;
}

}  // namespace

std::string format_values(const std::vector<uint32_t>& v, uint32_t p) {
  if (p == 2) return bits_to_hex(v);
  std::string s = "d:";
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<uint32_t> parse_values(std::string_view text, size_t n, uint32_t p) {
  const std::string s = strip_ws(text);
  std::vector<uint32_t> v;
  if (s.rfind("d:", 0) == 0) {
    v = parse_decimal_list(std::string_view(s).substr(2), p);
    require_len("value list", v.size(), n);
    return v;
  }
  if (p != 2) throw Error("values over GF(" + std::to_string(p) + ") must be written d:v0,v1,...");
  return hex_to_bits(s, n);
}

std::string format_keystream(const std::vector<uint32_t>& b, uint32_t p) {
  if (p != 2) return format_values(b, p);
  return "hex:" + std::to_string(b.size()) + ":" + bits_to_hex(b);
}

std::vector<uint32_t> parse_keystream(std::string_view text, uint32_t p) {
  const std::string s = strip_ws(text);
  if (s.rfind("d:", 0) == 0) return parse_decimal_list(std::string_view(s).substr(2), p);
  if (p != 2) throw Error("keystream over GF(" + std::to_string(p) + ") must be written d:v0,v1,...");
  if (s.rfind("bin:", 0) == 0) {
    std::vector<uint32_t> v;
    for (char ch : s.substr(4)) {
      if (ch != '0' && ch != '1') throw Error("bad binary digit '" + std::string(1, ch) + "'");
      v.push_back(static_cast<uint32_t>(ch - '0'));
    }
    return v;
  }
  if (s.rfind("hex:", 0) == 0) {
    const size_t c = s.find(':', 4);
    if (c == std::string::npos) throw Error("keystream must be hex:<count>:<digits>");
    uint64_t n = 0;
    auto [ptr, ec] = std::from_chars(s.data() + 4, s.data() + c, n);
    if (ec != std::errc() || ptr != s.data() + c) throw Error("bad keystream count");
    return hex_to_bits(std::string_view(s).substr(c + 1), n);
  }
  throw Error("keystream must start with hex:, bin: or d:");
}

}  // namespace diffcipher
