#include "diffcipher/field.hpp"

#include <limits>

namespace diffcipher {

bool is_prime(uint64_t n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  for (uint64_t d = 3; d <= n / d; d += 2)
    if (n % d == 0) return false;
  return true;
}

std::vector<std::pair<uint64_t, unsigned>> factorize(uint64_t n) {
  std::vector<std::pair<uint64_t, unsigned>> out;
  if (n == 0) throw Error("factorize: zero has no factorization");
  for (uint64_t d = 2; d <= n / d; d += (d == 2 ? 1 : 2)) {
    unsigned k = 0;
    while (n % d == 0) {
      n /= d;
      ++k;
    }
    if (k) out.emplace_back(d, k);
  }
  if (n > 1) out.emplace_back(n, 1);
  return out;
}

PrimeField::PrimeField(uint64_t p) {
  if (p >= (uint64_t{1} << 31)) throw Error("field modulus must be below 2^31");
  if (!is_prime(p)) throw Error("field modulus " + std::to_string(p) + " is not prime");
  p_ = static_cast<uint32_t>(p);
}

uint32_t PrimeField::pow(uint32_t a, uint64_t e) const {
  uint64_t result = 1 % p_, base = a % p_;
  while (e) {
    if (e & 1) result = result * base % p_;
    base = base * base % p_;
    e >>= 1;
  }
  return static_cast<uint32_t>(result);
}

uint32_t PrimeField::inv(uint32_t a) const {
  if (a % p_ == 0) throw Error("division by zero in GF(" + std::to_string(p_) + ")");
  return pow(a, p_ - 2);
}

FieldElem::FieldElem(int64_t v, uint32_t p) : modulus(p) {
  PrimeField F(p);
  value = F.reduce(v);
}

FieldElem ff_arith(FieldElem a, FieldElem b, FieldOp op) {
  if (op != FieldOp::pow && a.modulus != b.modulus) throw Error("field element modulus mismatch");
  PrimeField F(a.modulus);
  FieldElem r;
  r.modulus = a.modulus;
  switch (op) {
    case FieldOp::add: r.value = F.add(a.value, b.value); break;
    case FieldOp::sub: r.value = F.sub(a.value, b.value); break;
    case FieldOp::mul: r.value = F.mul(a.value, b.value); break;
    case FieldOp::div: r.value = F.div(a.value, b.value); break;
    case FieldOp::pow: r.value = F.pow(a.value, b.value); break;
  }
  return r;
}

FieldElem operator+(FieldElem a, FieldElem b) { return ff_arith(a, b, FieldOp::add); }
FieldElem operator-(FieldElem a, FieldElem b) { return ff_arith(a, b, FieldOp::sub); }
FieldElem operator*(FieldElem a, FieldElem b) { return ff_arith(a, b, FieldOp::mul); }
FieldElem operator/(FieldElem a, FieldElem b) { return ff_arith(a, b, FieldOp::div); }
FieldElem pow(FieldElem a, uint64_t e) {
  FieldElem r = a;
  r.value = PrimeField(a.modulus).pow(a.value, e);
  return r;
}

namespace upoly {

void trim(UPoly& a) {
  while (!a.empty() && a.back() == 0) a.pop_back();
}

int degree(const UPoly& a) { return static_cast<int>(a.size()) - 1; }

UPoly sub(const UPoly& a, const UPoly& b, const PrimeField& F) {
  UPoly r(std::max(a.size(), b.size()), 0);
  for (size_t i = 0; i < r.size(); ++i)
    r[i] = F.sub(i < a.size() ? a[i] : 0, i < b.size() ? b[i] : 0);
  trim(r);
  return r;
}

UPoly mul(const UPoly& a, const UPoly& b, const PrimeField& F) {
  if (a.empty() || b.empty()) return {};
  UPoly r(a.size() + b.size() - 1, 0);
  for (size_t i = 0; i < a.size(); ++i) {
    if (!a[i]) continue;
    for (size_t j = 0; j < b.size(); ++j) r[i + j] = F.add(r[i + j], F.mul(a[i], b[j]));
  }
  trim(r);
  return r;
}

UPoly mod(UPoly a, const UPoly& m, const PrimeField& F) {
  if (m.empty()) throw Error("polynomial reduction modulo zero");
  trim(a);
  const int dm = degree(m);
  const uint32_t lead_inv = F.inv(m.back());
  while (degree(a) >= dm) {
    const int shift = degree(a) - dm;
    const uint32_t c = F.mul(a.back(), lead_inv);
    for (int i = 0; i <= dm; ++i) a[i + shift] = F.sub(a[i + shift], F.mul(c, m[i]));
    trim(a);
  }
  return a;
}

UPoly mulmod(const UPoly& a, const UPoly& b, const UPoly& m, const PrimeField& F) {
  return mod(mul(a, b, F), m, F);
}

UPoly powmod(UPoly base, uint64_t e, const UPoly& m, const PrimeField& F) {
  UPoly result = mod(UPoly{1}, m, F);
  base = mod(std::move(base), m, F);
  while (e) {
    if (e & 1) result = mulmod(result, base, m, F);
    e >>= 1;
    if (e) base = mulmod(base, base, m, F);
  }
  return result;
}

UPoly gcd(UPoly a, UPoly b, const PrimeField& F) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    UPoly r = mod(a, b, F);
    a = std::move(b);
    b = std::move(r);
  }
  if (!a.empty()) {
    const uint32_t li = F.inv(a.back());
    for (auto& c : a) c = F.mul(c, li);
  }
  return a;
}

bool is_irreducible(const UPoly& g, const PrimeField& F) {
  const int r = degree(g);
  if (r < 1) return false;
  if (r == 1) return true;
  const UPoly t{0, 1};
  UPoly h = mod(t, g, F);
  for (int k = 1; k <= r / 2; ++k) {
    h = powmod(h, F.modulus(), g, F);  // t^(p^k) mod g
    if (degree(gcd(g, sub(h, t, F), F)) != 0) return false;
  }
  return true;
}

}  // namespace upoly

ExtField::ExtField(PrimeField base, UPoly g) : base_(base), g_(std::move(g)) {
  upoly::trim(g_);
  if (upoly::degree(g_) < 1) throw Error("extension modulus must have positive degree");
  if (g_.back() != 1) throw Error("extension modulus must be monic");
  if (!upoly::is_irreducible(g_, base_)) throw Error("extension modulus is not irreducible");
}

uint64_t ExtField::group_order() const {
  const uint64_t p = base_.modulus();
  uint64_t q = 1;
  for (int i = 0; i < degree(); ++i) {
    if (q > std::numeric_limits<uint64_t>::max() / p) {
      // p^r == 2^64 exactly still leaves p^r - 1 representable.
      if (p == 2 && i == 63 && degree() == 64) return std::numeric_limits<uint64_t>::max();
      throw Error("group order p^r - 1 exceeds 64 bits");
    }
    q *= p;
  }
  return q - 1;
}

uint64_t ff_element_order(const ExtField& K, const UPoly& a,
                          const std::vector<std::pair<uint64_t, unsigned>>& factors) {
  UPoly x = K.reduce(a);
  if (x.empty()) throw Error("element order of zero is undefined");
  uint64_t order = K.group_order();
  const UPoly one{1};
  if (K.pow(x, order) != one) throw Error("group order factorization is inconsistent");
  for (const auto& [prime, mult] : factors) {
    for (unsigned i = 0; i < mult; ++i) {
      if (order % prime != 0) throw Error("factorization does not divide the group order");
      if (K.pow(x, order / prime) == one)
        order /= prime;
      else
        break;
    }
  }
  return order;
}

uint64_t ff_element_order(const ExtField& K, const UPoly& a) {
  return ff_element_order(K, a, factorize(K.group_order()));
}

uint64_t ff_element_order(const PrimeField& F, uint32_t a) {
  ExtField K(F, UPoly{0, 1});
  return ff_element_order(K, UPoly{a % F.modulus()});
}

}  // namespace diffcipher
