#include "doctest.h"

#include <random>
#include <set>

#include "diffcipher/attack.hpp"
#include "diffcipher/dsl.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace diffcipher;

namespace {

// 10-bit invertible toy stream cipher.
CipherSpec toy_stream() {
  const SystemFile f = parse_system(
      "stream x order 5\nstream y order 5\n"
      "update x = x0 + y2 + y3*y4\nupdate y = y0 + x1 + x2*x3\n"
      "keystream = x0 + y1 + x2*y3\noffset 20\n");
  return CipherSpec::from_file(f);
}

// All initial states whose keystream from the offset equals b.
std::vector<StateVec> brute_states(const CipherSpec& c, const std::vector<uint32_t>& b) {
  std::vector<StateVec> out;
  for (uint64_t i = 0; i < (uint64_t{1} << c.state_length()); ++i) {
    const StateVec v = index_to_state(i, c.state_length(), 2);
    if (keystream_gen(c, v, c.offset, b.size()) == b) out.push_back(v);
  }
  return out;
}

// 4-bit key (period-4 key register) on an 4-bit block.
CipherSpec toy_block() {
  const SystemFile f = parse_system(
      "stream k order 4\nstream x order 4\n"
      "update k = k0\nupdate x = x0 + k0 + x1*x2 + x3\nsplit 1\nfinal 16\n");
  return CipherSpec::from_file(f);
}

}  // namespace

TEST_CASE("key equations vanish at the true state") {
  const CipherSpec c = toy_stream();
  std::mt19937_64 rng(51);
  const StateVec v0 = oracle::random_bits(rng, 10);
  const auto b = keystream_gen(c, v0, c.offset, 12);
  const StateVec vT = simulate(c.system, v0, c.offset);
  const KeyEquations off = key_equations(c, b, AttackTarget::offset_state);
  CHECK(off.generators.size() == 12);
  CHECK(off.target_clock == c.offset);
  for (const Poly& g : off.generators) CHECK(evaluate_at_state(c.system, g, vT) == 0);
  const KeyEquations ini = key_equations(c, b, AttackTarget::initial_state);
  for (const Poly& g : ini.generators) CHECK(evaluate_at_state(c.system, g, v0) == 0);
  // the t = 0 generator is f - b(T)
  CHECK(off.generators[0] == c.keystream - Poly::constant(2, b[0]));
}

TEST_CASE("empty guess finds exactly the brute-force solutions") {
  const CipherSpec c = toy_stream();
  std::mt19937_64 rng(52);
  int unique = 0;
  for (int k = 0; k < 6; ++k) {
    const StateVec v0 = oracle::random_bits(rng, 10);
    const size_t len = 6 + rng() % 10;
    const auto b = keystream_gen(c, v0, c.offset, len);
    const auto brute = brute_states(c, b);
    const auto rep = attack_stream(c, b, {}, {}, AttackTarget::initial_state);
    if (brute.size() == 1) {
      ++unique;
      REQUIRE(rep.outcome == AttackReport::Outcome::recovered);
      CHECK(rep.initial_state == brute[0]);
    } else {
      // several states: enumerated up to the cap, none can be singled out
      CHECK(rep.outcome == AttackReport::Outcome::exhausted);
    }
    // guessing four state bits splits the space; solutions = consistent guesses
    GuessSpec g;
    g.vars = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    AttackOptions o;
    o.stop_on_success = false;
    const auto all = attack_stream(c, b, g, o, AttackTarget::initial_state);
    std::set<uint64_t> expect;
    std::map<uint64_t, int> per_guess;
    for (const StateVec& s : brute) {
      const uint64_t idx = s[0] + 2 * s[1] + 4 * s[5] + 8 * s[6];
      ++per_guess[idx];
    }
    for (const auto& [idx, n] : per_guess)
      if (n == 1) expect.insert(idx);
    CHECK(std::set<uint64_t>(all.solutions.begin(), all.solutions.end()) == expect);
    CHECK(all.tally.total() == 16);
  }
  CHECK(unique > 1);
}

TEST_CASE("offset-state attack recovers and backsteps") {
  const CipherSpec c = toy_stream();
  std::mt19937_64 rng(53);
  for (int k = 0; k < 5; ++k) {
    const StateVec v0 = oracle::random_bits(rng, 10);
    const auto b = keystream_gen(c, v0, c.offset, 30);
    const auto rep = attack_stream(c, b, {}, {});
    if (brute_states(c, b).size() != 1) continue;
    REQUIRE(rep.outcome == AttackReport::Outcome::recovered);
    CHECK(rep.initial_state == v0);
    CHECK(rep.state == simulate(c.system, v0, c.offset));
    CHECK(recover_initial(c, rep.state) == v0);
  }
  CHECK(recover_initial(c, StateVec(10, 0)) == StateVec(10, 0));
}

TEST_CASE("shards and thread counts give the same outcome") {
  const CipherSpec c = toy_stream();
  std::mt19937_64 rng(54);
  const StateVec v0 = oracle::random_bits(rng, 10);
  const auto b = keystream_gen(c, v0, c.offset, 8);
  GuessSpec g;
  g.vars = {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}};
  AttackOptions o;
  o.stop_on_success = false;
  const auto whole = attack_stream(c, b, g, o);
  std::set<uint64_t> joined;
  uint64_t total = 0;
  for (uint64_t s = 0; s < 3; ++s) {
    GuessSpec gs = g;
    gs.shard_index = s;
    gs.shard_count = 3;
    const auto part = attack_stream(c, b, gs, o);
    joined.insert(part.solutions.begin(), part.solutions.end());
    total += part.tally.total();
  }
  CHECK(joined == std::set<uint64_t>(whole.solutions.begin(), whole.solutions.end()));
  CHECK(total == 32);
  AttackOptions t3 = o;
  t3.threads = 3;
  const auto threaded = attack_stream(c, b, g, t3);
  CHECK(threaded.solutions == whole.solutions);
  CHECK(threaded.tally.solved == whole.tally.solved);
  CHECK(threaded.tally.inconsistent == whole.tally.inconsistent);
  // first-success mode: same winner for any thread count
  const auto first1 = attack_stream(c, b, g, {});
  AttackOptions f3;
  f3.threads = 3;
  const auto first3 = attack_stream(c, b, g, f3);
  CHECK(first1.winning_guess == first3.winning_guess);
  CHECK(first1.guesses_done == first3.guesses_done);
}

TEST_CASE("budget exhaustion is resumable") {
  const CipherSpec c = toy_stream();
  std::mt19937_64 rng(55);
  const auto b = keystream_gen(c, oracle::random_bits(rng, 10), c.offset, 14);
  GuessSpec g;
  g.vars = {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 0}, {1, 1}};
  AttackOptions o;
  o.max_guesses = 10;
  o.stop_on_success = false;
  const auto part = attack_stream(c, b, g, o);
  CHECK(part.outcome == AttackReport::Outcome::aborted);
  CHECK(part.resume_from == 10);
  g.resume_from = part.resume_from;
  o.max_guesses = 0;
  const auto rest = attack_stream(c, b, g, o);
  CHECK(rest.tally.total() == 54);
  CHECK(rest.outcome != AttackReport::Outcome::aborted);
}

TEST_CASE("guess helpers") {
  CHECK(guess_space_size(2, 38) == (uint64_t{1} << 38));
  CHECK_THROWS_AS(guess_space_size(2, 64), Error);
  CHECK(guess_space_size(3, 0) == 1);
  GuessSpec g;
  g.vars = {{0, 0}, {0, 1}};
  CHECK(guess_values(g, 3, 5) == std::vector<uint32_t>{2, 1});
  const auto bv = bivium_guess_vars();
  REQUIRE(bv.size() == 38);
  CHECK(bv.front() == Var{0, 68});
  CHECK(bv[8] == Var{0, 92});
  CHECK(bv[9] == Var{1, 2});
  CHECK(bv[35] == Var{1, 80});
  CHECK(bv[36] == Var{1, 3});
  CHECK(bv[37] == Var{1, 4});
}

TEST_CASE("linear slicing preserves solutions") {
  const CipherSpec c = lfsr_combiner({{"a", 5, {0, 2}}, {"b", 6, {0, 1}}}, "a0 + b0");
  std::mt19937_64 rng(56);
  const StateVec v0 = oracle::random_bits(rng, 11);
  const auto b = keystream_gen(c, v0, 0, 14);
  const KeyEquations eq = key_equations(c, b, AttackTarget::offset_state);
  const SliceResult s = linear_slice(eq);
  CHECK(s.slices.size() == 1);  // stride 1
  CHECK(!s.inconsistent);
  const auto reduced = substitute_all(eq.generators, s.forced);
  for (const Poly& g : reduced) CHECK(g.is_zero());  // everything was linear
  // every assignment of the free variables gives a solution
  std::vector<Var> free = s.slices[0].free_vars;
  for (uint64_t i = 0; i < (uint64_t{1} << free.size()); ++i) {
    std::map<Var, uint32_t> a;
    for (size_t j = 0; j < free.size(); ++j) a[free[j]] = (i >> j) & 1;
    for (const auto& [v, f] : s.forced) a[v] = f.evaluate(a);
    for (Var v : c.system.state_vars())
      if (!a.count(v)) a[v] = 0;
    for (const Poly& g : eq.generators) CHECK(g.evaluate(a) == 0);
  }
}

TEST_CASE("toy block pair attack against brute force") {
  const CipherSpec c = toy_block();
  std::mt19937_64 rng(57);
  for (int k = 0; k < 10; ++k) {
    const auto key = oracle::random_bits(rng, 4);
    std::vector<BlockPair> pairs;
    for (int i = 0; i < 2; ++i) {
      const auto pt = oracle::random_bits(rng, 4);
      pairs.push_back({pt, block_encrypt(c, key, pt, 16)});
    }
    std::vector<std::vector<uint32_t>> keys;
    for (uint64_t kk = 0; kk < 16; ++kk) {
      const auto kb = index_to_state(kk, 4, 2);
      bool ok = true;
      for (const auto& [pt, ct] : pairs) ok = ok && block_encrypt(c, kb, pt, 16) == ct;
      if (ok) keys.push_back(kb);
    }
    const auto rep = block_pair_attack(c, pairs, 16, {});
    if (keys.size() == 1) {
      REQUIRE(rep.outcome == AttackReport::Outcome::recovered);
      CHECK(rep.key == key);
    } else {
      CHECK(rep.outcome == AttackReport::Outcome::exhausted);
    }
    // guessing the whole key: exactly the consistent keys are solved
    GuessSpec g;
    g.vars = {{0, 0}, {0, 1}, {0, 2}, {0, 3}};
    AttackOptions o;
    o.stop_on_success = false;
    const auto all = block_pair_attack(c, pairs, 16, g, o);
    CHECK(all.solutions.size() == keys.size());
  }
}

TEST_CASE("keeloq pairs at 64 rounds with the low key bits guessed") {
  const CipherSpec c = build_builtin("keeloq");
  std::mt19937_64 rng(58);
  const uint64_t key = rng(), other = rng();
  std::vector<BlockPair> pairs, mixed;
  // two pairs leave two keys for this seed, a third one settles it
  for (int i = 0; i < 3; ++i) {
    const auto pt = static_cast<uint32_t>(rng());
    pairs.push_back({word_to_bits(pt, 32), word_to_bits(keeloq_encrypt(key, pt, 64), 32)});
    mixed.push_back({word_to_bits(pt, 32), word_to_bits(keeloq_encrypt(i == 1 ? other : key, pt, 64), 32)});
  }
  GuessSpec g;
  for (uint32_t j = 0; j < 16; ++j) g.vars.push_back({0, j});
  g.values = {word_to_bits(key & 0xffff, 16)};
  const auto rep = block_pair_attack(c, pairs, 64, g);
  REQUIRE(rep.outcome == AttackReport::Outcome::recovered);
  CHECK(bits_to_word(rep.key) == key);
  const auto bad = block_pair_attack(c, mixed, 64, g);
  CHECK(bad.outcome == AttackReport::Outcome::exhausted);
  CHECK(bad.tally.inconsistent == 1);
  CHECK_THROWS_AS(block_pair_attack(c, pairs, 600, g), Error);
  CHECK_THROWS_AS(block_pair_equations(build_builtin("bivium"), pairs, 10), Error);
}

TEST_CASE("fixed point search") {
  auto id = [](const std::vector<uint32_t>& v) { return v; };
  CHECK(fixed_point_search(id, 2, 6, 1000).size() == 64);
  CHECK(fixed_point_search(id, 2, 40, 50).size() <= 50);
  CHECK(fixed_point_search(id, 2, 40, 50).size() >= 45);
  // toy: x -> x^3 on GF(7) per coordinate fixes 0, 1, 6
  auto cube = [](const std::vector<uint32_t>& v) {
    std::vector<uint32_t> w;
    for (uint32_t x : v) w.push_back(x * x * x % 7);
    return w;
  };
  CHECK(fixed_point_search(cube, 7, 2, 100).size() == 9);
  // KeeLoq zero key: 0 is fixed by 512 rounds
  CHECK(keeloq_encrypt(0, 0, 512) == 0);
}

TEST_CASE("constructed keeloq fixed points") {
  std::mt19937_64 rng(59);
  for (int k = 0; k < 120; ++k) {
    const uint64_t a = rng();
    const uint64_t key = keeloq_key_for_sequence(a);
    const auto v = static_cast<uint32_t>(a);
    CHECK(keeloq_encrypt(key, v, 64) == v);
    CHECK(keeloq_encrypt(key, v, 512) == v);
  }
  for (int k = 0; k < 3; ++k) {
    const KeeloqWeakKey w = keeloq_weak_key(rng);
    REQUIRE(w.fixed_points.size() == 2);
    CHECK(w.fixed_points[0] != w.fixed_points[1]);
    for (uint32_t v : w.fixed_points) CHECK(keeloq_encrypt(w.key, v, 512) == v);
  }
}

TEST_CASE("bitsliced fixed point scan") {
  const uint64_t key = keeloq_key_for_sequence(0x0123456789abcdefull);
  const auto fps = keeloq_fixed_points(key);
  CHECK(std::is_sorted(fps.begin(), fps.end()));
  CHECK(std::find(fps.begin(), fps.end(), 0x89abcdefu) != fps.end());
  for (uint32_t v : fps) CHECK(keeloq_encrypt(key, v, 64) == v);
  CHECK_THROWS_AS(keeloq_fixed_points(key, 65), Error);
}

TEST_CASE("keeloq attack with a supplied k(0..15) list") {
  const CipherSpec c = build_builtin("keeloq");
  // key with two fixed points found by the scan (see the acceptance test)
  const uint64_t key = 0x980784c8ca286962ull;
  const uint32_t fp[2] = {0x9e65cdc1u, 0xa4859eb6u};
  std::vector<BlockPair> pairs;
  for (uint32_t v : fp) pairs.push_back({word_to_bits(v, 32), word_to_bits(keeloq_encrypt(key, v), 32)});
  pairs.push_back({word_to_bits(0x12345678, 32), word_to_bits(keeloq_encrypt(key, 0x12345678), 32)});
  KeeloqAttackOptions o;
  o.k_low = {0x1111, static_cast<uint32_t>(key & 0xffff), 0x2222};
  const auto rep = keeloq_attack(c, pairs, o);
  REQUIRE(rep.outcome == AttackReport::Outcome::recovered);
  CHECK(bits_to_word(rep.key) == key);
  CHECK(rep.winning_guess == 1u);
  CHECK(rep.tally.filtered == 1);  // 0x1111 fails the peel check
  o.k_low = {0x1111, 0x2222};
  o.peel_filter = false;
  const auto miss = keeloq_attack(c, pairs, o);
  CHECK(miss.outcome == AttackReport::Outcome::exhausted);
  CHECK(miss.tally.inconsistent + miss.tally.mismatch == 2);
}

TEST_CASE("zero key with its zero fixed point") {
  const CipherSpec c = build_builtin("keeloq");
  const std::vector<BlockPair> pairs{{word_to_bits(0, 32), word_to_bits(0, 32)}};
  const KeyEquations eq = block_pair_equations(c, pairs, 64);
  std::map<Var, uint32_t> zero;
  for (Var v : eq.variables) zero[v] = 0;
  for (const Poly& g : eq.generators) CHECK(g.evaluate(zero) == 0);
  // with 40 key bits given the single pair pins down the rest
  GuessSpec g;
  for (uint32_t j = 0; j < 40; ++j) g.vars.push_back({0, j});
  g.values = {std::vector<uint32_t>(40, 0)};
  const auto rep = block_pair_attack(c, pairs, 64, g);
  REQUIRE(rep.outcome == AttackReport::Outcome::recovered);
  CHECK(rep.key == std::vector<uint32_t>(64, 0));
}

TEST_CASE("report json") {
  const CipherSpec c = toy_stream();
  std::mt19937_64 rng(60);
  const auto b = keystream_gen(c, oracle::random_bits(rng, 10), c.offset, 30);
  const auto rep = attack_stream(c, b, {}, {});
  const auto j = nlohmann::json::parse(report_to_json(rep, c.system.names(), 2));
  CHECK(j["outcome"] == outcome_name(rep.outcome));
  CHECK(j["tally"]["solved"] == rep.tally.solved);
  CHECK(j["shard"]["count"] == 1);
  CHECK(j.contains("timing_ms"));
}
