#include "doctest.h"

#include <random>
#include <set>

#include "diffcipher/cipher.hpp"
#include "diffcipher/dsl.hpp"
#include "diffcipher/system.hpp"
#include "support.hpp"

using namespace diffcipher;

namespace {

bool is_permutation(const DiffSystem& S) {
  const uint32_t r = S.total_order();
  std::vector<bool> hit(size_t{1} << r, false);
  for (uint64_t i = 0; i < (uint64_t{1} << r); ++i) {
    const auto w = simulate(S, index_to_state(i, r, 2), 1);
    const uint64_t j = state_to_index(w, 2);
    if (hit[j]) return false;
    hit[j] = true;
  }
  return true;
}

// Orbit-based period by direct enumeration.
uint64_t brute_period(const DiffSystem& S) {
  const uint32_t r = S.total_order();
  uint64_t l = 1;
  for (uint64_t i = 0; i < (uint64_t{1} << r); ++i) {
    const StateVec v0 = index_to_state(i, r, S.modulus());
    StateVec v = simulate(S, v0, 1);
    uint64_t k = 1;
    while (v != v0) {
      v = simulate(S, v, 1);
      ++k;
    }
    l = std::lcm(l, k);
  }
  return l;
}

}  // namespace

TEST_CASE("system validation") {
  const StreamNames n{"x"};
  CHECK_THROWS_AS(DiffSystem(2, n, {2}, {parse_poly("x2", 2, n)}), Error);
  CHECK_THROWS_AS(DiffSystem(4, n, {2}, {parse_poly("x1", 2, n)}), Error);
  CHECK_THROWS_AS(DiffSystem(2, {"x", "x"}, {1, 1}, {parse_poly("x0", 2, n), parse_poly("x0", 2, n)}), Error);
  CHECK_THROWS_AS(DiffSystem(2, n, {0}, {Poly(2)}), Error);
}

TEST_CASE("simulate shifts the window") {
  const StreamNames n{"a"};
  const DiffSystem S(2, n, {4}, {parse_poly("a0 + a1", 2, n)});
  StateVec v{1, 0, 0, 0};
  v = simulate(S, v, 1);
  CHECK(v == StateVec{0, 0, 0, 1});
  v = simulate(S, v, 3);
  CHECK(v == StateVec{1, 0, 0, 1});  // a = 1,0,0,0,1,0,0,1,...
  CHECK(simulate(S, StateVec(4, 0), 100) == StateVec(4, 0));
}

TEST_CASE("endo_iterate: substitution equals normal form and realizes T") {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 30; ++k) {
    const DiffSystem S = oracle::random_system(rng, 2 + static_cast<uint32_t>(rng() % 6));
    const auto window = S.state_vars();
    const Poly f = oracle::random_poly(rng, 2, window, 3, 2);
    for (uint64_t t : {0u, 1u, 2u, 5u, 9u}) {
      const Poly a = endo_iterate(S, f, t, EndoMethod::substitution);
      const Poly b = endo_iterate(S, f, t, EndoMethod::normal_form);
      CHECK(a == b);
      for (Var v : a.vars()) CHECK(S.in_window(v));
      for (int s = 0; s < 8; ++s) {
        const StateVec v = oracle::random_bits(rng, S.total_order());
        CHECK(evaluate_at_state(S, a, v) == evaluate_at_state(S, f, simulate(S, v, t)));
      }
    }
    const auto seq = endo_sequence(S, f, 6);
    for (uint64_t t = 0; t < 6; ++t) CHECK(seq[t] == endo_iterate(S, f, t, EndoMethod::substitution));
  }
}

TEST_CASE("T-bar^0 is the identity and the term cap fires") {
  const CipherSpec c = build_builtin("trivium");
  CHECK(endo_iterate(c.system, c.keystream, 0, EndoMethod::substitution) == c.keystream);
  EndoOptions o;
  o.term_cap = 50;
  CHECK_THROWS_AS(endo_sequence(c.system, c.keystream, 400, o), TermCapExceeded);
}

TEST_CASE("difference normal form is sigma-compatible") {
  const CipherSpec c = build_builtin("bivium");
  const Poly f = c.keystream;
  CHECK(difference_normal_form(c.system, f.shift(68)) == endo_iterate(c.system, f, 68, EndoMethod::substitution));
}

TEST_CASE("ordering_violation finds a short stream fed by a long one") {
  const StreamNames n{"a", "b"};
  const DiffSystem S(2, n, {1, 5}, {parse_poly("b4", 2, n), parse_poly("a0 + b0", 2, n)});
  CHECK(ordering_violation(S) == 0);
  CHECK_THROWS_AS(endo_iterate(S, parse_poly("a0", 2, n), 2, EndoMethod::normal_form), Error);
  // substitution works regardless
  const Poly g = endo_iterate(S, parse_poly("a0", 2, n), 2, EndoMethod::substitution);
  for (uint64_t i = 0; i < 64; ++i) {
    const StateVec v = index_to_state(i, 6, 2);
    CHECK(evaluate_at_state(S, g, v) == simulate(S, v, 2)[0]);
  }
  CHECK(ordering_violation(build_builtin("trivium").system) == -1);
}

TEST_CASE("invert_system agrees with the permutation test") {
  std::mt19937_64 rng(32);
  int invertible = 0;
  for (int k = 0; k < 60; ++k) {
    const DiffSystem S = oracle::random_system(rng, 2 + static_cast<uint32_t>(rng() % 7));
    const bool perm = is_permutation(S);
    const auto full = invert_system(S, InvertMethod::full);
    CHECK(full.invertible == perm);
    const auto quick = invert_system(S, InvertMethod::quick);
    if (quick.invertible) CHECK(perm);
    if (!perm) continue;
    ++invertible;
    for (int s = 0; s < 10; ++s) {
      const StateVec v = oracle::random_bits(rng, S.total_order());
      const StateVec w = simulate(S, v, 7);
      CHECK(backstep_with(*full.inverse, w, 7) == v);
      CHECK(backstep(S, w, 7) == v);
    }
  }
  CHECK(invertible > 5);
}

TEST_CASE("bivium and trivium inverses") {
  const auto bi = invert_system(build_builtin("bivium").system, InvertMethod::full);
  REQUIRE(bi.invertible);
  const StreamNames& n = bi.inverse->names();
  CHECK(format_poly(bi.inverse->updates()[0], n) == "y0 + x66 + y78 + x91*x92");
  CHECK(format_poly(bi.inverse->updates()[1], n) == "x0 + x69 + y69 + y82*y83");
  const auto tri = invert_system(build_builtin("trivium").system, InvertMethod::quick);
  REQUIRE(tri.invertible);
  CHECK(format_poly(tri.inverse->updates()[0], n) == "y0 + x66 + y78 + x91*x92");
}

TEST_CASE("non-invertible system reports a witness") {
  const StreamNames n{"a"};
  const DiffSystem S(2, n, {2}, {parse_poly("a0*a1", 2, n)});
  const auto r = invert_system(S, InvertMethod::full);
  CHECK(!r.invertible);
  CHECK(!r.reason.empty());
  CHECK_THROWS_AS(backstep(S, StateVec{0, 0}, 1), Error);
}

TEST_CASE("periods") {
  const StreamNames n{"a"};
  const DiffSystem lfsr(2, n, {4}, {parse_poly("a0 + a1", 2, n)});
  CHECK(period(lfsr, PeriodStrategy::brute_force).period == 15);
  CHECK(period(lfsr, PeriodStrategy::linear_primitive).period == 15);
  CHECK(period(lfsr, PeriodStrategy::orbit_lcm).period == 15);
  const DiffSystem key(2, {"k"}, {64}, {parse_poly("k0", 2, {"k"})});
  const auto pk = period(key, PeriodStrategy::automatic);
  CHECK(pk.known);
  CHECK(pk.period == 64);
  std::mt19937_64 rng(33);
  for (int k = 0; k < 40; ++k) {
    const DiffSystem S = oracle::random_system(rng, 2 + static_cast<uint32_t>(rng() % 6));
    if (!is_permutation(S)) {
      CHECK_THROWS_AS(period(S, PeriodStrategy::brute_force), Error);
      continue;
    }
    CHECK(period(S, PeriodStrategy::orbit_lcm).period == brute_period(S));
  }
  const auto capped = period(build_builtin("bivium").system, PeriodStrategy::orbit_lcm, 1 << 10);
  CHECK(!capped.known);
}

TEST_CASE("subsystem split") {
  const CipherSpec k = build_builtin("keeloq");
  const auto sub = subsystem_split(k.system, 1);
  REQUIRE(sub);
  CHECK(sub->num_streams() == 1);
  CHECK(!subsystem_split(build_builtin("bivium").system, 1));
}

TEST_CASE("dsl roundtrip and errors") {
  std::mt19937_64 rng(34);
  for (int k = 0; k < 30; ++k) {
    SystemFile f;
    f.system = oracle::random_system(rng, 2 + static_cast<uint32_t>(rng() % 8));
    if (k % 2) f.offset = rng() % 100;
    CHECK(parse_system(format_system(f)) == f);
  }
  const std::string ok = "field 7\nstream x order 1\nstream y order 1\nupdate x = x0^2 + y0^2\nupdate y = 2*x0*y0\n";
  CHECK(parse_system(ok).system == squares_system(7));
  auto line_of = [](const std::string& text) {
    try {
      parse_system(text);
    } catch (const ParseError& e) {
      return e.line;
    }
    return size_t{0};
  };
  CHECK(line_of("stream x order 2\nupdate x = x2\n") == 2);
  CHECK(line_of("stream x order 2\nbogus 1\nupdate x = x1\n") == 2);
  CHECK(line_of("field 6\nstream x order 1\nupdate x = x0\n") == 1);
  CHECK(line_of("stream x order 1\nstream x order 2\n") == 2);
  CHECK(line_of("stream x order 1\nupdate x = x0\nupdate y = x0\n") == 3);
  CHECK(line_of("stream x order 2\n") != 0);
  CHECK(line_of("# only a comment\n") != 0);
}
