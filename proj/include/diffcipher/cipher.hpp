// Stream and block ciphers defined by explicit difference systems, plus the
// built-in definitions (Bivium, Trivium, KeeLoq, LFSR combiners).
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diffcipher/diffpoly.hpp"
#include "diffcipher/dsl.hpp"
#include "diffcipher/system.hpp"

namespace diffcipher {

struct CipherSpec {
  enum class Kind { stream, block };

  Kind kind = Kind::stream;
  std::string name;
  DiffSystem system;

  // stream ciphers: b(t) = f(v(t)) observed from clock `offset` on
  Poly keystream;
  uint64_t offset = 0;

  // block ciphers: streams [0, split) carry the key, T = final_clock
  uint32_t split = 0;
  uint64_t final_clock = 0;
  DiffSystem inverse;     // certified at construction
  DiffSystem key_system;  // the first `split` streams
  size_t key_length = 0;
  size_t block_length = 0;

  bool is_stream() const { return kind == Kind::stream; }
  bool is_block() const { return kind == Kind::block; }
  size_t state_length() const { return system.total_order(); }

  /// Throws unless f only uses variables inside the state window.
  static CipherSpec make_stream(std::string name, DiffSystem sys, Poly f, uint64_t offset);
  /// Certifies that the system is invertible and that its first m streams
  /// form a subsystem; throws otherwise.
  static CipherSpec make_block(std::string name, DiffSystem sys, uint32_t m, uint64_t final_clock);
  /// Stream cipher when the file has a keystream, block cipher when it has
  /// `split` and `final`.
  static CipherSpec from_file(const SystemFile& file, std::string name = "file");
};

/// One LFSR of an LFSR-with-combiner generator over GF(2):
/// a(r) = sum of a(j) for j in taps.
struct LfsrRegister {
  std::string name;
  uint32_t order;
  std::vector<uint32_t> taps;
};

/// Geffe-style generator: registers a (5), b (7), c (9) combined by
/// a0*b0 + b0*c0 + c0.
std::vector<LfsrRegister> default_lfsr_registers();
inline constexpr std::string_view kDefaultCombiner = "a0*b0 + b0*c0 + c0";

/// Registers must have tap 0 (otherwise the LFSR is not invertible); the
/// combiner is parsed over the register names and must stay inside the
/// register windows.
CipherSpec lfsr_combiner(const std::vector<LfsrRegister>& regs, std::string_view combiner, uint64_t offset = 0);

/// x(1) = x(0)^2 + y(0)^2, y(1) = 2 x(0) y(0) over GF(p).
DiffSystem squares_system(uint32_t p);

/// "bivium", "trivium", "keeloq", "lfsr_combiner".
CipherSpec build_builtin(std::string_view name);
std::vector<std::string> builtin_names();

/// Values b(from), ..., b(from+count-1).
std::vector<uint32_t> keystream_gen(const CipherSpec& c, const StateVec& initial, uint64_t from, uint64_t count);

/// Key window (stream-major over the key streams) followed by the block window.
StateVec assemble_state(const CipherSpec& c, const std::vector<uint32_t>& key, const std::vector<uint32_t>& block);
std::vector<uint32_t> block_part(const CipherSpec& c, const StateVec& state);

std::vector<uint32_t> block_encrypt(const CipherSpec& c, const std::vector<uint32_t>& key,
                                    const std::vector<uint32_t>& plaintext, std::optional<uint64_t> clocks = {});
/// Runs the key subsystem forward to u(T), then the inverse system back.
std::vector<uint32_t> block_decrypt(const CipherSpec& c, const std::vector<uint32_t>& key,
                                    const std::vector<uint32_t>& ciphertext, std::optional<uint64_t> clocks = {});

// Key/iv loading for Bivium and Trivium.
//
// estream: registers s1..s93 -> x(92)..x(0), s94..s177 -> y(83)..y(0),
// s178..s288 -> z(110)..z(0). Key bit K_i (i = 1..80) goes to s_i and
// IV_i to s_(93+i); Trivium sets s286..s288 = 1, every other bit is 0.
// direct: key in x(0..79), iv in y(0..79), everything else 0.
enum class KeyLoading { estream, direct };

StateVec load_key_iv(const CipherSpec& c, const std::vector<uint32_t>& key, const std::vector<uint32_t>& iv,
                     KeyLoading loading = KeyLoading::estream);

// KeeLoq on machine words. Plaintext bit i is x(i), key bit i is k(i).
uint32_t keeloq_nlf(uint32_t x);
uint32_t keeloq_encrypt(uint64_t key, uint32_t plaintext, uint64_t rounds = 528);
uint32_t keeloq_decrypt(uint64_t key, uint32_t ciphertext, uint64_t rounds = 528);
/// Undoes `rounds` rounds that ended at clock `end` (key bits k(end-1), ...).
uint32_t keeloq_unwind(uint64_t key, uint32_t state, uint64_t end, uint64_t rounds);

std::vector<uint32_t> word_to_bits(uint64_t w, size_t n);
uint64_t bits_to_word(const std::vector<uint32_t>& bits);

// Text encodings. Over GF(2) a vector v is the integer sum v_i 2^i printed
// as lowercase hex, most significant digit first, ceil(n/4) digits. Over
// GF(p), p > 2, it is "d:v0,v1,...".
std::string format_values(const std::vector<uint32_t>& v, uint32_t p);
std::vector<uint32_t> parse_values(std::string_view text, size_t n, uint32_t p);

/// Keystream text: "hex:<count>:<digits>" or "bin:<bits>" (first value
/// first) over GF(2); "d:v0,v1,..." otherwise. Whitespace is ignored.
std::string format_keystream(const std::vector<uint32_t>& b, uint32_t p);
std::vector<uint32_t> parse_keystream(std::string_view text, uint32_t p);

}  // namespace diffcipher
