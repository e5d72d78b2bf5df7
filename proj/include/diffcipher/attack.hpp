// Algebraic attacks: key equations, linear slicing, guess-and-determine,
// multiple-pair block attacks, fixed points, KeeLoq and CNF export.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "diffcipher/cipher.hpp"
#include "diffcipher/groebner.hpp"
#include "diffcipher/system.hpp"

namespace diffcipher {

enum class AttackTarget { initial_state, offset_state };

/// A bounded polynomial system plus the variables it is solved over.
struct KeyEquations {
  uint32_t modulus = 2;
  std::vector<Poly> generators;
  /// Solving variables, most significant first.
  std::vector<Var> variables;
  StreamNames names;
  /// Clock whose state the equations constrain (0 or T); 0 for block attacks.
  uint64_t target_clock = 0;
  /// For keystream equations: the stride gcd of the keystream polynomial,
  /// used by linear_slice. 1 when not applicable.
  uint32_t stride = 1;
};

/// One generator f'_t - b(T+t) per keystream value b(T), b(T+1), ...
/// offset_state constrains the T-state (f'_t = T-bar^t(f)) and needs an
/// invertible system; initial_state uses T-bar^(T+t)(f) and may hit the
/// term cap (TermCapExceeded).
KeyEquations key_equations(const CipherSpec& c, const std::vector<uint32_t>& keystream, AttackTarget target,
                           const EndoOptions& opts = {});

struct SliceResult {
  std::vector<LinearSlice> slices;     // slice r holds generators t = r mod stride
  std::vector<size_t> slice_sizes;     // linear generators per slice
  std::map<Var, Poly> forced;          // pivot -> affine form in free variables
  bool inconsistent = false;
};

/// Degree <= 1 generators, split by t mod stride and row-reduced per slice.
SliceResult linear_slice(const KeyEquations& eqs);

/// Applies pivot substitutions; drops generators that become zero.
std::vector<Poly> substitute_all(const std::vector<Poly>& gens, const std::map<Var, Poly>& subs);

struct GuessSpec {
  std::vector<Var> vars;
  /// Explicit assignments; when empty the full range GF(p)^s is enumerated
  /// (guess index i = sum alpha_j p^j).
  std::vector<std::vector<uint32_t>> values;
  uint64_t shard_index = 0;
  uint64_t shard_count = 1;
  /// Skip this many guesses of the shard (resume position).
  uint64_t resume_from = 0;
};

/// The 38 Bivium guess variables: x(68), x(71), ..., x(92),
/// y(2), y(5), ..., y(80), y(3), y(4).
std::vector<Var> bivium_guess_vars();

struct GuessTally {
  uint64_t solved = 0;         // unique and verified
  uint64_t inconsistent = 0;   // basis {1}
  uint64_t indeterminate = 0;  // consistent but not a single point
  uint64_t timeout = 0;
  uint64_t mismatch = 0;       // unique but failed verification
  uint64_t filtered = 0;       // rejected before solving (KeeLoq peel)
  uint64_t total() const { return solved + inconsistent + indeterminate + timeout + mismatch + filtered; }
};

struct AttackOptions {
  unsigned threads = 1;
  BuchbergerOptions gb;
  /// Per-guess timeout = factor x rolling median, once `warmup` guesses
  /// have finished. 0 disables.
  double timeout_factor = 10.0;
  uint64_t warmup = 5;
  /// Hard per-guess limit in ms (0 = none).
  double per_guess_ms = 0;
  /// Whole-run budget in ms (0 = none); the run then ends `aborted`.
  double budget_ms = 0;
  /// Stop after this many guesses of the shard (0 = all).
  uint64_t max_guesses = 0;
  /// Keep going after a recovery (for counting solutions).
  bool stop_on_success = true;
  /// A consistent guess with several points is enumerated up to this many
  /// points; it counts as solved when exactly one of them passes the check.
  size_t enumerate_cap = 64;
};

struct AttackReport {
  enum class Outcome { recovered, exhausted, aborted };

  Outcome outcome = Outcome::exhausted;
  std::map<Var, uint32_t> assignment;
  /// Stream attacks: the recovered T-state (or initial state) and the
  /// initial state after backstepping. Block attacks: the key.
  StateVec state;
  StateVec initial_state;
  std::vector<uint32_t> key;
  /// Guess indices are absolute (not relative to the shard).
  std::optional<uint64_t> winning_guess;
  std::vector<uint64_t> solutions;  // all verified guess indices (stop_on_success = false)

  GuessTally tally;
  uint64_t guess_space = 0;  // size of the shard's enumeration
  uint64_t guesses_done = 0;
  uint64_t resume_from = 0;  // first shard position not yet processed (GuessSpec::resume_from)
  uint64_t shard_index = 0, shard_count = 1;

  double total_ms = 0;
  double mean_guess_ms = 0;
  double median_guess_ms = 0;
  /// a * q^s / 2 with a the measured mean guess time.
  double expected_campaign_ms = 0;

  uint64_t pairs_processed = 0;
  uint64_t reduction_steps = 0;
  uint64_t zero_reductions = 0;
  uint64_t max_basis_size = 0;
  std::string note;
};

const char* outcome_name(AttackReport::Outcome o);

/// Called on a unique point; returns false to reject it (tallied mismatch).
using SolutionCheck = std::function<bool(const std::map<Var, uint32_t>&)>;

/// Solves eqs + {x_j - alpha_j} for each guess alpha in the shard; every
/// unique point is checked against all generators and `check`.
AttackReport guess_and_determine(const KeyEquations& eqs, const GuessSpec& guess, const AttackOptions& opts = {},
                                 const SolutionCheck& check = {});

/// Size of the full guess range p^s (throws when it overflows 64 bits).
uint64_t guess_space_size(uint32_t p, size_t s);
std::vector<uint32_t> guess_values(const GuessSpec& g, uint32_t p, uint64_t index);

/// State at clock 0 from the state at clock T by backstepping.
StateVec recover_initial(const CipherSpec& c, const StateVec& state_at_T);

/// Key equations + guess-and-determine + keystream check + backstep.
AttackReport attack_stream(const CipherSpec& c, const std::vector<uint32_t>& keystream, const GuessSpec& guess,
                           const AttackOptions& opts = {}, AttackTarget target = AttackTarget::offset_state);

using BlockPair = std::pair<std::vector<uint32_t>, std::vector<uint32_t>>;

/// Replicated system for several pairs under one key: key variables are
/// shared, each pair gets its own copy of the block streams, bounded by
/// clock effective_T + window. Includes J(0) and J(effective_T).
KeyEquations block_pair_equations(const CipherSpec& c, const std::vector<BlockPair>& pairs, uint64_t effective_T);

/// Guess variables are key variables k_i(t) of the original system. A
/// recovered key must re-encrypt every pair at effective_T and pass
/// `key_check` when given.
using KeyCheck = std::function<bool(const std::vector<uint32_t>&)>;
AttackReport block_pair_attack(const CipherSpec& c, const std::vector<BlockPair>& pairs, uint64_t effective_T,
                               const GuessSpec& guess, const AttackOptions& opts = {}, const KeyCheck& key_check = {});

using BlockOracle = std::function<std::vector<uint32_t>(const std::vector<uint32_t>&)>;

/// All v with oracle(v) = v: exhaustive when p^l <= budget, otherwise
/// `budget` random samples.
std::vector<std::vector<uint32_t>> fixed_point_search(const BlockOracle& oracle, uint32_t p, size_t l,
                                                      uint64_t budget, uint64_t seed = 1);

struct KeeloqAttackOptions {
  /// Candidates for k(0..15) as 16-bit integers; empty = all 2^16.
  std::vector<uint32_t> k_low;
  /// Reject a candidate unless peeling 16 rounds maps enough ciphertexts
  /// back onto their plaintexts.
  bool peel_filter = true;
  size_t pairs_per_solve = 2;
  AttackOptions solve;
};

/// pairs are (plaintext, ciphertext at T = 528) believed to include states
/// with v(0) = v(64); the remaining pairs only serve to check keys.
/// Success: a key re-encrypting every pair to T = 528. tally counts
/// candidates; solver statistics are summed.
AttackReport keeloq_attack(const CipherSpec& keeloq, const std::vector<BlockPair>& pairs,
                           const KeeloqAttackOptions& opts = {});

/// Every state fixed by `rounds` KeeLoq rounds (rounds <= 64) under `key`,
/// by a bitsliced scan of all 2^32 blocks. Ascending.
std::vector<uint32_t> keeloq_fixed_points(uint64_t key, unsigned rounds = 64);

/// A KeeLoq key with known states v(0) = v(64).
struct KeeloqWeakKey {
  uint64_t key = 0;
  std::vector<uint32_t> fixed_points;
};

/// Builds a 64-periodic sequence a and a sparse difference d such that a
/// and a + d satisfy the round recurrence under the same key; both windows
/// a(0..31), (a+d)(0..31) are then fixed by 64 rounds.
KeeloqWeakKey keeloq_weak_key(std::mt19937_64& rng);

/// Key for which the given 64-periodic sequence is a trajectory; its first
/// window is then a fixed point of 64 rounds.
uint64_t keeloq_key_for_sequence(uint64_t a);

struct CnfOptions {
  unsigned xor_cut = 4;
};

struct Cnf {
  uint32_t num_vars = 0;
  std::vector<std::vector<int>> clauses;
  std::map<Var, int> var_index;                  // original variables
  std::vector<std::pair<int, std::string>> map;  // cnf variable -> label
  std::string dimacs() const;
  std::string sidecar() const;
};

/// Equisatisfiable CNF for polynomial equations over GF(2). Each nonlinear
/// monomial becomes an AND-defined auxiliary; each equation an XOR chain cut
/// every xor_cut literals.
Cnf export_cnf(const std::vector<Poly>& eqs, const StreamNames& names, const CnfOptions& opts = {});

/// JSON text of a report; variable names come from `names`.
std::string report_to_json(const AttackReport& r, const StreamNames& names, uint32_t p);

}  // namespace diffcipher
