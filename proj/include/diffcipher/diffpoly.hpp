// Difference polynomials over GF(p): variables x_i(t), monomials kept reduced
// modulo the field ideal (every exponent in [1, p-1]), the shift map and the
// monomial orderings used by the Groebner code.
#pragma once

#include <boost/container/small_vector.hpp>

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "diffcipher/field.hpp"

namespace diffcipher {

/// Variable x_stream(clock). Streams are 0-based indices into a name table.
/// The natural order is by clock first, then stream.
struct Var {
  uint32_t stream = 0;
  uint32_t clock = 0;

  friend constexpr bool operator==(Var, Var) = default;
  friend constexpr std::strong_ordering operator<=>(Var a, Var b) {
    if (auto c = a.clock <=> b.clock; c != 0) return c;
    return a.stream <=> b.stream;
  }
};

struct Factor {
  Var var;
  uint32_t exp = 1;
  friend bool operator==(const Factor&, const Factor&) = default;
};

/// Power product with factors sorted by Var and exponents in [1, p-1].
class Monomial {
 public:
  using Factors = boost::container::small_vector<Factor, 4>;

  Monomial() = default;
  static Monomial of(Var v, uint32_t exp = 1);
  /// Builds from arbitrary factors, merging repeats and reducing exponents
  /// with x^p = x.
  static Monomial from_factors(std::vector<Factor> fs, uint32_t p);

  const Factors& factors() const { return f_; }
  bool is_one() const { return f_.empty(); }
  uint32_t degree() const;
  uint32_t exponent(Var v) const;
  /// Largest clock occurring; requires !is_one().
  uint32_t max_clock() const;

  Monomial mul(const Monomial& o, uint32_t p) const;
  Monomial shift(uint32_t t) const;
  bool divides(const Monomial& o) const;

  friend bool operator==(const Monomial&, const Monomial&) = default;

 private:
  Factors f_;
};

/// Reduces an exponent e >= 1 modulo x^p = x.
inline uint32_t reduce_exponent(uint64_t e, uint32_t p) {
  if (e < p) return static_cast<uint32_t>(e);
  return static_cast<uint32_t>((e - 1) % (p - 1) + 1);
}

/// Canonical storage order for terms: degree ascending, then factor lists
/// compared lexicographically by (var, exponent).
bool canonical_less(const Monomial& a, const Monomial& b);

struct Term {
  Monomial mono;
  uint32_t coeff = 1;
  friend bool operator==(const Term&, const Term&) = default;
};

/// Polynomial over GF(p) in the quotient by the field ideal. Terms are in
/// canonical order with nonzero coefficients; zero is the empty term list.
class Poly {
 public:
  Poly() = default;
  explicit Poly(uint32_t p) : p_(p) {}

  static Poly constant(uint32_t p, int64_t c);
  static Poly variable(uint32_t p, Var v);
  /// Normalizes raw (coefficient, monomial) pairs; monomials may carry
  /// arbitrary exponents and repeated factors.
  static Poly from_terms(uint32_t p, const std::vector<std::pair<int64_t, std::vector<Factor>>>& raw);
  static Poly from_terms(uint32_t p, std::vector<Term> terms);

  uint32_t modulus() const { return p_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_[0].mono.is_one()); }
  uint32_t constant_term() const;
  uint32_t degree() const;  // 0 for constants and zero
  std::vector<Var> vars() const;  // sorted, distinct
  /// Largest clock of any variable, or -1 for constants.
  int64_t max_clock() const;
  int64_t min_clock() const;

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly operator-() const;
  Poly scaled(uint32_t c) const;
  Poly mul_monomial(const Monomial& m, uint32_t c = 1) const;
  Poly pow(uint64_t e) const;

  /// sigma^t: every clock increased by t.
  Poly shift(uint32_t t) const;
  /// Evaluation; `value` must return a residue for every occurring variable
  /// and may throw for missing ones.
  uint32_t evaluate(const std::function<uint32_t(Var)>& value) const;
  uint32_t evaluate(const std::map<Var, uint32_t>& assignment) const;
  /// Simultaneous substitution of variables; unmapped variables stay.
  Poly substitute(const std::function<const Poly*(Var)>& image) const;

  friend bool operator==(const Poly&, const Poly&) = default;

 private:
  void check_same_field(const Poly& o) const;
  uint32_t p_ = 2;
  std::vector<Term> terms_;
};

/// Display names for streams, e.g. {"x", "y"}.
using StreamNames = std::vector<std::string>;

std::string format_var(Var v, const StreamNames& names);
std::string format_monomial(const Monomial& m, const StreamNames& names);
/// Canonical printer: "y0 + x66 + y78 + x91*x92", coefficients as "3*x0",
/// exponents as "x0^2", zero as "0".
std::string format_poly(const Poly& f, const StreamNames& names);

/// Monomial orderings. Bounded orderings list variables from most to least
/// significant.
struct OrderingSpec {
  enum class Kind { clock_based, bounded_degrevlex, product };
  enum class Inner { lex, degrevlex };

  Kind kind = Kind::clock_based;
  Inner inner = Inner::degrevlex;
  std::vector<Var> vars;                 // bounded_degrevlex
  std::vector<std::vector<Var>> blocks;  // product, each block degrevlex

  /// Product of clock blocks X(0) < X(1) < ..., the higher clock deciding
  /// first. Inside one clock x_0(c) < x_1(c) < ..., compared with `inner`.
  static OrderingSpec clock_based(Inner inner = Inner::degrevlex);
  static OrderingSpec bounded_degrevlex(std::vector<Var> vars);
  static OrderingSpec product(std::vector<std::vector<Var>> blocks);
};

/// Three-way comparison. Throws Error if a bounded ordering is asked about a
/// variable outside its declared list.
std::strong_ordering monomial_compare(const Monomial& a, const Monomial& b, const OrderingSpec& ord);

/// Leading term under `ord`; requires a nonzero polynomial.
const Term& leading_term(const Poly& f, const OrderingSpec& ord);

}  // namespace diffcipher
