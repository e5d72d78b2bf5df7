// Prime field arithmetic GF(p) and the small extension-field toolkit used to
// certify primitive feedback polynomials.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace diffcipher {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool is_prime(uint64_t n);

/// Prime factorization by trial division, as (prime, multiplicity) pairs in
/// increasing order. factorize(1) is empty.
std::vector<std::pair<uint64_t, unsigned>> factorize(uint64_t n);

/// GF(p) for a prime p < 2^31. Elements are plain residues in [0, p).
class PrimeField {
 public:
  explicit PrimeField(uint64_t p);

  uint32_t modulus() const { return p_; }

  uint32_t reduce(int64_t v) const {
    int64_t r = v % static_cast<int64_t>(p_);
    return static_cast<uint32_t>(r < 0 ? r + p_ : r);
  }
  uint32_t add(uint32_t a, uint32_t b) const {
    uint32_t s = a + b;
    return s >= p_ ? s - p_ : s;
  }
  uint32_t sub(uint32_t a, uint32_t b) const { return a >= b ? a - b : a + p_ - b; }
  uint32_t neg(uint32_t a) const { return a == 0 ? 0 : p_ - a; }
  uint32_t mul(uint32_t a, uint32_t b) const {
    return static_cast<uint32_t>((static_cast<uint64_t>(a) * b) % p_);
  }
  uint32_t pow(uint32_t a, uint64_t e) const;
  /// Inverse via Fermat, a^(p-2). Throws on a == 0.
  uint32_t inv(uint32_t a) const;
  uint32_t div(uint32_t a, uint32_t b) const { return mul(a, inv(b)); }

  bool operator==(const PrimeField& o) const { return p_ == o.p_; }

 private:
  uint32_t p_;
};

/// A residue tagged with its modulus; mixing moduli is an error.
struct FieldElem {
  uint32_t value = 0;
  uint32_t modulus = 2;

  FieldElem() = default;
  FieldElem(int64_t v, uint32_t p);

  bool operator==(const FieldElem&) const = default;
};

enum class FieldOp { add, sub, mul, div, pow };

/// For FieldOp::pow the exponent is b.value read as a plain integer.
FieldElem ff_arith(FieldElem a, FieldElem b, FieldOp op);

FieldElem operator+(FieldElem a, FieldElem b);
FieldElem operator-(FieldElem a, FieldElem b);
FieldElem operator*(FieldElem a, FieldElem b);
FieldElem operator/(FieldElem a, FieldElem b);
FieldElem pow(FieldElem a, uint64_t e);

/// Dense univariate polynomial over GF(p), coefficients low degree first and
/// trimmed so the last coefficient is nonzero. The zero polynomial is empty.
using UPoly = std::vector<uint32_t>;

namespace upoly {
void trim(UPoly& a);
int degree(const UPoly& a);  // -1 for zero
UPoly sub(const UPoly& a, const UPoly& b, const PrimeField& F);
UPoly mul(const UPoly& a, const UPoly& b, const PrimeField& F);
UPoly mod(UPoly a, const UPoly& m, const PrimeField& F);
UPoly mulmod(const UPoly& a, const UPoly& b, const UPoly& m, const PrimeField& F);
UPoly powmod(UPoly base, uint64_t e, const UPoly& m, const PrimeField& F);
UPoly gcd(UPoly a, UPoly b, const PrimeField& F);
/// Rabin/Ben-Or test: gcd(g, t^(p^k) - t) = 1 for every k <= deg(g)/2.
bool is_irreducible(const UPoly& g, const PrimeField& F);
}  // namespace upoly

/// GF(p^r) = GF(p)[t]/(g) for a monic irreducible g of degree r.
class ExtField {
 public:
  ExtField(PrimeField base, UPoly g);

  const PrimeField& base() const { return base_; }
  const UPoly& modulus() const { return g_; }
  int degree() const { return upoly::degree(g_); }
  /// p^r - 1; throws if it does not fit in 64 bits.
  uint64_t group_order() const;

  UPoly reduce(const UPoly& a) const { return upoly::mod(a, g_, base_); }
  UPoly mul(const UPoly& a, const UPoly& b) const { return upoly::mulmod(a, b, g_, base_); }
  UPoly pow(const UPoly& a, uint64_t e) const { return upoly::powmod(a, e, g_, base_); }

 private:
  PrimeField base_;
  UPoly g_;
};

/// Multiplicative order of a nonzero element, by divisor descent over the
/// supplied factorization of the group order.
uint64_t ff_element_order(const ExtField& K, const UPoly& a,
                          const std::vector<std::pair<uint64_t, unsigned>>& group_order_factors);
/// Same, factoring p^r - 1 by trial division.
uint64_t ff_element_order(const ExtField& K, const UPoly& a);
/// Order of a in GF(p)*.
uint64_t ff_element_order(const PrimeField& F, uint32_t a);

}  // namespace diffcipher
