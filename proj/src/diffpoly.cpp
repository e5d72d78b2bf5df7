#include "diffcipher/diffpoly.hpp"

#include <algorithm>
#include <set>

namespace diffcipher {

// ---------------------------------------------------------------- Monomial

Monomial Monomial::of(Var v, uint32_t exp) {
  Monomial m;
  m.f_.push_back({v, exp});
  return m;
}

Monomial Monomial::from_factors(std::vector<Factor> fs, uint32_t p) {
  std::sort(fs.begin(), fs.end(), [](const Factor& a, const Factor& b) { return a.var < b.var; });
  Monomial m;
  for (size_t i = 0; i < fs.size();) {
    uint64_t e = 0;
    size_t j = i;
    for (; j < fs.size() && fs[j].var == fs[i].var; ++j) e += fs[j].exp;
    if (e > 0) m.f_.push_back({fs[i].var, reduce_exponent(e, p)});
    i = j;
  }
  return m;
}

uint32_t Monomial::degree() const {
  uint32_t d = 0;
  for (const auto& f : f_) d += f.exp;
  return d;
}

uint32_t Monomial::exponent(Var v) const {
  for (const auto& f : f_)
    if (f.var == v) return f.exp;
  return 0;
}

uint32_t Monomial::max_clock() const {
  uint32_t c = 0;
  for (const auto& f : f_) c = std::max(c, f.var.clock);
  return c;
}

Monomial Monomial::mul(const Monomial& o, uint32_t p) const {
  Monomial r;
  size_t i = 0, j = 0;
  while (i < f_.size() || j < o.f_.size()) {
    if (j == o.f_.size() || (i < f_.size() && f_[i].var < o.f_[j].var)) {
      r.f_.push_back(f_[i++]);
    } else if (i == f_.size() || o.f_[j].var < f_[i].var) {
      r.f_.push_back(o.f_[j++]);
    } else {
      r.f_.push_back({f_[i].var, reduce_exponent(uint64_t{f_[i].exp} + o.f_[j].exp, p)});
      ++i;
      ++j;
    }
  }
  return r;
}

Monomial Monomial::shift(uint32_t t) const {
  Monomial r = *this;
  for (auto& f : r.f_) f.var.clock += t;
  return r;
}

bool Monomial::divides(const Monomial& o) const {
  size_t j = 0;
  for (const auto& f : f_) {
    while (j < o.f_.size() && o.f_[j].var < f.var) ++j;
    if (j == o.f_.size() || o.f_[j].var != f.var || o.f_[j].exp < f.exp) return false;
  }
  return true;
}

bool canonical_less(const Monomial& a, const Monomial& b) {
  const uint32_t da = a.degree(), db = b.degree();
  if (da != db) return da < db;
  const auto& fa = a.factors();
  const auto& fb = b.factors();
  for (size_t i = 0; i < fa.size() && i < fb.size(); ++i) {
    if (fa[i].var != fb[i].var) return fa[i].var < fb[i].var;
    if (fa[i].exp != fb[i].exp) return fa[i].exp < fb[i].exp;
  }
  return fa.size() < fb.size();
}

// -------------------------------------------------------------------- Poly

namespace {

void canonicalize(std::vector<Term>& terms, const PrimeField& F) {
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return canonical_less(a.mono, b.mono); });
  size_t out = 0;
  for (size_t i = 0; i < terms.size();) {
    uint32_t c = 0;
    size_t j = i;
    for (; j < terms.size() && terms[j].mono == terms[i].mono; ++j) c = F.add(c, terms[j].coeff % F.modulus());
    if (c != 0) {
      if (out != i) terms[out].mono = std::move(terms[i].mono);
      terms[out].coeff = c;
      ++out;
    }
    i = j;
  }
  terms.resize(out);
}

}  // namespace

Poly Poly::constant(uint32_t p, int64_t c) {
  PrimeField F(p);
  Poly r(p);
  if (uint32_t v = F.reduce(c)) r.terms_.push_back({Monomial{}, v});
  return r;
}

Poly Poly::variable(uint32_t p, Var v) {
  Poly r(p);
  r.terms_.push_back({Monomial::of(v), 1});
  return r;
}

Poly Poly::from_terms(uint32_t p, const std::vector<std::pair<int64_t, std::vector<Factor>>>& raw) {
  PrimeField F(p);
  std::vector<Term> terms;
  terms.reserve(raw.size());
  for (const auto& [c, fs] : raw) {
    for (const auto& f : fs)
      if (f.exp == 0) throw Error("monomial factor with zero exponent");
    terms.push_back({Monomial::from_factors(fs, p), F.reduce(c)});
  }
  Poly r(p);
  canonicalize(terms, F);
  r.terms_ = std::move(terms);
  return r;
}

Poly Poly::from_terms(uint32_t p, std::vector<Term> terms) {
  PrimeField F(p);
  Poly r(p);
  canonicalize(terms, F);
  r.terms_ = std::move(terms);
  return r;
}

uint32_t Poly::constant_term() const {
  if (!terms_.empty() && terms_[0].mono.is_one()) return terms_[0].coeff;
  return 0;
}

uint32_t Poly::degree() const { return terms_.empty() ? 0 : terms_.back().mono.degree(); }

std::vector<Var> Poly::vars() const {
  std::set<Var> s;
  for (const auto& t : terms_)
    for (const auto& f : t.mono.factors()) s.insert(f.var);
  return {s.begin(), s.end()};
}

int64_t Poly::max_clock() const {
  int64_t c = -1;
  for (const auto& t : terms_)
    if (!t.mono.is_one()) c = std::max<int64_t>(c, t.mono.max_clock());
  return c;
}

int64_t Poly::min_clock() const {
  int64_t c = -1;
  for (const auto& t : terms_)
    for (const auto& f : t.mono.factors())
      if (c < 0 || f.var.clock < c) c = f.var.clock;
  return c;
}

void Poly::check_same_field(const Poly& o) const {
  if (p_ != o.p_) throw Error("polynomials over different fields");
}

Poly Poly::operator+(const Poly& o) const {
  check_same_field(o);
  PrimeField F(p_);
  Poly r(p_);
  r.terms_.reserve(terms_.size() + o.terms_.size());
  size_t i = 0, j = 0;
  while (i < terms_.size() || j < o.terms_.size()) {
    if (j == o.terms_.size() || (i < terms_.size() && canonical_less(terms_[i].mono, o.terms_[j].mono))) {
      r.terms_.push_back(terms_[i++]);
    } else if (i == terms_.size() || canonical_less(o.terms_[j].mono, terms_[i].mono)) {
      r.terms_.push_back(o.terms_[j++]);
    } else {
      if (uint32_t c = F.add(terms_[i].coeff, o.terms_[j].coeff)) r.terms_.push_back({terms_[i].mono, c});
      ++i;
      ++j;
    }
  }
  return r;
}

Poly Poly::operator-() const { return scaled(p_ - 1); }

Poly Poly::operator-(const Poly& o) const { return *this + (-o); }

Poly Poly::scaled(uint32_t c) const {
  PrimeField F(p_);
  c %= p_;
  Poly r(p_);
  if (c == 0) return r;
  r.terms_ = terms_;
  for (auto& t : r.terms_) t.coeff = F.mul(t.coeff, c);
  return r;
}

Poly Poly::operator*(const Poly& o) const {
  check_same_field(o);
  PrimeField F(p_);
  std::vector<Term> out;
  out.reserve(terms_.size() * o.terms_.size());
  for (const auto& a : terms_)
    for (const auto& b : o.terms_) out.push_back({a.mono.mul(b.mono, p_), F.mul(a.coeff, b.coeff)});
  Poly r(p_);
  canonicalize(out, F);
  r.terms_ = std::move(out);
  return r;
}

Poly Poly::mul_monomial(const Monomial& m, uint32_t c) const {
  PrimeField F(p_);
  std::vector<Term> out;
  out.reserve(terms_.size());
  for (const auto& a : terms_) out.push_back({a.mono.mul(m, p_), F.mul(a.coeff, c % p_)});
  Poly r(p_);
  canonicalize(out, F);
  r.terms_ = std::move(out);
  return r;
}

Poly Poly::pow(uint64_t e) const {
  Poly result = constant(p_, 1), base = *this;
  while (e) {
    if (e & 1) result = result * base;
    e >>= 1;
    if (e) base = base * base;
  }
  return result;
}

Poly Poly::shift(uint32_t t) const {
  Poly r = *this;
  if (t == 0) return r;
  for (auto& term : r.terms_) term.mono = term.mono.shift(t);
  return r;  // a uniform shift keeps the canonical order
}

uint32_t Poly::evaluate(const std::function<uint32_t(Var)>& value) const {
  PrimeField F(p_);
  uint32_t acc = 0;
  for (const auto& t : terms_) {
    uint32_t v = t.coeff;
    for (const auto& f : t.mono.factors()) {
      v = F.mul(v, F.pow(value(f.var) % p_, f.exp));
      if (v == 0) break;
    }
    acc = F.add(acc, v);
  }
  return acc;
}

uint32_t Poly::evaluate(const std::map<Var, uint32_t>& assignment) const {
  return evaluate([&](Var v) {
    auto it = assignment.find(v);
    if (it == assignment.end())
      throw Error("assignment misses variable of stream " + std::to_string(v.stream) + " at clock " +
                  std::to_string(v.clock));
    return it->second;
  });
}

Poly Poly::substitute(const std::function<const Poly*(Var)>& image) const {
  PrimeField F(p_);
  Poly acc(p_);
  std::vector<Term> plain;
  for (const auto& t : terms_) {
    Poly prod = constant(p_, t.coeff);
    bool any = false;
    std::vector<Factor> keep;
    for (const auto& f : t.mono.factors()) {
      if (const Poly* img = image(f.var)) {
        prod = prod * img->pow(f.exp);
        any = true;
      } else {
        keep.push_back(f);
      }
    }
    if (!any) {
      plain.push_back(t);
      continue;
    }
    if (!keep.empty()) prod = prod.mul_monomial(Monomial::from_factors(keep, p_));
    acc = acc + prod;
  }
  return acc + from_terms(p_, std::move(plain));
}

// ---------------------------------------------------------------- printing

std::string format_var(Var v, const StreamNames& names) {
  std::string name = v.stream < names.size() ? names[v.stream] : "s" + std::to_string(v.stream) + "_";
  return name + std::to_string(v.clock);
}

std::string format_monomial(const Monomial& m, const StreamNames& names) {
  if (m.is_one()) return "1";
  std::string s;
  for (const auto& f : m.factors()) {
    if (!s.empty()) s += '*';
    s += format_var(f.var, names);
    if (f.exp != 1) s += '^' + std::to_string(f.exp);
  }
  return s;
}

std::string format_poly(const Poly& f, const StreamNames& names) {
  if (f.is_zero()) return "0";
  std::string s;
  for (const auto& t : f.terms()) {
    if (!s.empty()) s += " + ";
    if (t.mono.is_one()) {
      s += std::to_string(t.coeff);
    } else {
      if (t.coeff != 1) s += std::to_string(t.coeff) + '*';
      s += format_monomial(t.mono, names);
    }
  }
  return s;
}

// --------------------------------------------------------------- orderings

OrderingSpec OrderingSpec::clock_based(Inner inner) {
  OrderingSpec o;
  o.kind = Kind::clock_based;
  o.inner = inner;
  return o;
}

OrderingSpec OrderingSpec::bounded_degrevlex(std::vector<Var> vars) {
  OrderingSpec o;
  o.kind = Kind::bounded_degrevlex;
  o.vars = std::move(vars);
  return o;
}

OrderingSpec OrderingSpec::product(std::vector<std::vector<Var>> blocks) {
  OrderingSpec o;
  o.kind = Kind::product;
  o.blocks = std::move(blocks);
  return o;
}

namespace {

using Factors = Monomial::Factors;

// Inside one clock block the factors are sorted by stream, which is also the
// significance order.
std::strong_ordering compare_clock_block(const Factor* a, size_t na, const Factor* b, size_t nb,
                                         OrderingSpec::Inner inner) {
  if (inner == OrderingSpec::Inner::lex) {
    size_t i = na, j = nb;
    while (i > 0 && j > 0) {
      const Factor& fa = a[i - 1];
      const Factor& fb = b[j - 1];
      if (fa.var != fb.var) return fa.var <=> fb.var;
      if (fa.exp != fb.exp) return fa.exp <=> fb.exp;
      --i;
      --j;
    }
    return i <=> j;
  }
  uint32_t da = 0, db = 0;
  for (size_t i = 0; i < na; ++i) da += a[i].exp;
  for (size_t j = 0; j < nb; ++j) db += b[j].exp;
  if (da != db) return da <=> db;
  size_t i = 0, j = 0;
  while (i < na && j < nb) {
    if (a[i].var != b[j].var) return a[i].var < b[j].var ? std::strong_ordering::less : std::strong_ordering::greater;
    if (a[i].exp != b[j].exp) return b[j].exp <=> a[i].exp;
    ++i;
    ++j;
  }
  return std::strong_ordering::equal;
}

std::strong_ordering compare_clock_based(const Monomial& ma, const Monomial& mb, OrderingSpec::Inner inner) {
  const Factors& a = ma.factors();
  const Factors& b = mb.factors();
  size_t ia = a.size(), ib = b.size();
  while (ia > 0 && ib > 0) {
    const uint32_t ca = a[ia - 1].var.clock, cb = b[ib - 1].var.clock;
    if (ca != cb) return ca <=> cb;
    size_t la = ia, lb = ib;
    while (la > 0 && a[la - 1].var.clock == ca) --la;
    while (lb > 0 && b[lb - 1].var.clock == cb) --lb;
    auto c = compare_clock_block(a.data() + la, ia - la, b.data() + lb, ib - lb, inner);
    if (c != 0) return c;
    ia = la;
    ib = lb;
  }
  return ia <=> ib;
}

// Degrevlex over ranked variables, rank 0 most significant. Each list holds
// (rank, exponent) sorted by rank descending, i.e. least significant first.
std::strong_ordering compare_ranked_degrevlex(const std::vector<std::pair<size_t, uint32_t>>& a,
                                              const std::vector<std::pair<size_t, uint32_t>>& b) {
  uint32_t da = 0, db = 0;
  for (const auto& x : a) da += x.second;
  for (const auto& x : b) db += x.second;
  if (da != db) return da <=> db;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first != b[j].first) return a[i].first > b[j].first ? std::strong_ordering::less : std::strong_ordering::greater;
    if (a[i].second != b[j].second) return b[j].second <=> a[i].second;
    ++i;
    ++j;
  }
  return std::strong_ordering::equal;
}

std::vector<std::pair<size_t, uint32_t>> ranked(const Monomial& m, const std::map<Var, size_t>& rank,
                                                const char* what) {
  std::vector<std::pair<size_t, uint32_t>> out;
  for (const auto& f : m.factors()) {
    auto it = rank.find(f.var);
    if (it == rank.end())
      throw Error(std::string("variable outside the ") + what + " ordering (stream " +
                  std::to_string(f.var.stream) + ", clock " + std::to_string(f.var.clock) + ")");
    out.emplace_back(it->second, f.exp);
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  return out;
}

}  // namespace

std::strong_ordering monomial_compare(const Monomial& a, const Monomial& b, const OrderingSpec& ord) {
  switch (ord.kind) {
    case OrderingSpec::Kind::clock_based:
      return compare_clock_based(a, b, ord.inner);
    case OrderingSpec::Kind::bounded_degrevlex: {
      std::map<Var, size_t> rank;
      for (size_t i = 0; i < ord.vars.size(); ++i) rank.emplace(ord.vars[i], i);
      return compare_ranked_degrevlex(ranked(a, rank, "bounded"), ranked(b, rank, "bounded"));
    }
    case OrderingSpec::Kind::product: {
      std::map<Var, size_t> block_of;
      std::vector<std::map<Var, size_t>> ranks(ord.blocks.size());
      for (size_t k = 0; k < ord.blocks.size(); ++k)
        for (size_t i = 0; i < ord.blocks[k].size(); ++i) {
          block_of.emplace(ord.blocks[k][i], k);
          ranks[k].emplace(ord.blocks[k][i], i);
        }
      auto restrict_to = [&](const Monomial& m, size_t k) {
        std::vector<Factor> fs;
        for (const auto& f : m.factors()) {
          auto it = block_of.find(f.var);
          if (it == block_of.end()) throw Error("variable outside the product ordering");
          if (it->second == k) fs.push_back(f);
        }
        // factors are already distinct and reduced; the huge modulus keeps them as is
        return Monomial::from_factors(fs, 0xffffffffu);
      };
      for (size_t k = 0; k < ord.blocks.size(); ++k) {
        auto c = compare_ranked_degrevlex(ranked(restrict_to(a, k), ranks[k], "product"),
                                          ranked(restrict_to(b, k), ranks[k], "product"));
        if (c != 0) return c;
      }
      return std::strong_ordering::equal;
    }
  }
  return std::strong_ordering::equal;
}

const Term& leading_term(const Poly& f, const OrderingSpec& ord) {
  if (f.is_zero()) throw Error("leading term of the zero polynomial");
  const Term* best = &f.terms()[0];
  for (const auto& t : f.terms())
    if (monomial_compare(t.mono, best->mono, ord) > 0) best = &t;
  return *best;
}

}  // namespace diffcipher
