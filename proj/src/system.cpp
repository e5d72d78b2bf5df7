#include "diffcipher/system.hpp"

#include <map>
#include <numeric>
#include <set>

#include "gb_engine.hpp"

namespace diffcipher {

// --------------------------------------------------------------- DiffSystem

DiffSystem::DiffSystem(uint32_t p, StreamNames names, std::vector<uint32_t> orders, std::vector<Poly> updates)
    : p_(PrimeField(p).modulus()), names_(std::move(names)), orders_(std::move(orders)), updates_(std::move(updates)) {
  const size_t n = orders_.size();
  if (n == 0) throw Error("a system needs at least one stream");
  if (names_.size() != n || updates_.size() != n) throw Error("stream names, orders and updates differ in length");
  std::set<std::string> seen;
  for (const auto& nm : names_) {
    if (nm.empty()) throw Error("empty stream name");
    if (!seen.insert(nm).second) throw Error("duplicate stream name '" + nm + "'");
  }
  starts_.resize(n);
  for (size_t i = 0; i < n; ++i) {
    if (orders_[i] == 0) throw Error("stream '" + names_[i] + "' has order 0");
    starts_[i] = total_;
    total_ += orders_[i];
  }
  for (size_t i = 0; i < n; ++i) {
    if (updates_[i].modulus() != p_) throw Error("update of '" + names_[i] + "' is over a different field");
    for (Var v : updates_[i].vars()) {
      if (v.stream >= n) throw Error("update of '" + names_[i] + "' references an unknown stream");
      if (v.clock >= orders_[v.stream])
        throw Error("update of '" + names_[i] + "' uses " + format_var(v, names_) + " but stream '" +
                    names_[v.stream] + "' has order " + std::to_string(orders_[v.stream]));
    }
  }
}

size_t DiffSystem::state_index(Var v) const {
  if (!in_window(v)) throw Error("variable " + format_var(v, names_) + " is outside the state window");
  return starts_[v.stream] + v.clock;
}

std::vector<Var> DiffSystem::state_vars() const {
  std::vector<Var> out;
  out.reserve(total_);
  for (uint32_t i = 0; i < orders_.size(); ++i)
    for (uint32_t j = 0; j < orders_[i]; ++j) out.push_back({i, j});
  return out;
}

// ------------------------------------------------------------------ Stepper

Stepper::Stepper(const DiffSystem& sys) : sys_(&sys), F_(sys.modulus()) {
  for (const auto& f : sys.updates()) {
    std::vector<CTerm> ts;
    for (const auto& t : f.terms()) {
      CTerm c{t.coeff, {}};
      for (const auto& fac : t.mono.factors())
        c.factors.emplace_back(static_cast<uint32_t>(sys.state_index(fac.var)), fac.exp);
      ts.push_back(std::move(c));
    }
    updates_.push_back(std::move(ts));
  }
  scratch_.resize(sys.num_streams());
}

void Stepper::step(StateVec& v) const {
  const bool gf2 = F_.modulus() == 2;
  for (size_t i = 0; i < updates_.size(); ++i) {
    uint32_t acc = 0;
    for (const auto& t : updates_[i]) {
      uint32_t x = t.coeff;
      if (gf2) {
        for (const auto& [idx, e] : t.factors) x &= v[idx];
        acc ^= x;
      } else {
        for (const auto& [idx, e] : t.factors) x = F_.mul(x, F_.pow(v[idx], e));
        acc = F_.add(acc, x);
      }
    }
    scratch_[i] = acc;
  }
  for (size_t i = 0; i < updates_.size(); ++i) {
    const size_t s = sys_->window_start(i);
    const size_t r = sys_->orders()[i];
    std::copy(v.begin() + s + 1, v.begin() + s + r, v.begin() + s);
    v[s + r - 1] = scratch_[i];
  }
}

StateVec simulate(const DiffSystem& sys, StateVec v, uint64_t t) {
  if (v.size() != sys.total_order()) throw Error("state length does not match the system order");
  for (auto& x : v) x %= sys.modulus();
  Stepper st(sys);
  for (uint64_t k = 0; k < t; ++k) st.step(v);
  return v;
}

uint32_t evaluate_at_state(const DiffSystem& sys, const Poly& f, const StateVec& v) {
  return f.evaluate([&](Var x) { return v.at(sys.state_index(x)); });
}

// ------------------------------------------------------------ endomorphism

TermCapExceeded::TermCapExceeded(uint64_t t, size_t n)
    : Error("term cap exceeded at t = " + std::to_string(t) + " (" + std::to_string(n) + " terms)"), at_t(t), terms(n) {}

namespace {

detail::Layout state_layout(const DiffSystem& sys) {
  detail::Layout L;
  L.p = sys.modulus();
  L.vars = sys.state_vars();
  L.blocks.push_back({0, static_cast<uint32_t>(L.vars.size()), false});
  L.finish();
  return L;
}

// Repeated application of T-bar on the state subalgebra.
template <class M>
class EndoStepper {
 public:
  EndoStepper(const detail::Ring<M>& R, const DiffSystem& sys) : R_(R), sys_(sys) {
    const size_t n = sys.num_streams();
    for (size_t i = 0; i < n; ++i) {
      upd_.push_back(R.from_poly(sys.updates()[i]));
      for (uint32_t j = 0; j < sys.orders()[i]; ++j) stream_of_.push_back(static_cast<uint32_t>(i));
    }
  }

  detail::EPoly<M> apply(const detail::EPoly<M>& g) {
    detail::EPoly<M> out;
    out.reserve(g.size());
    std::vector<uint32_t> key(sys_.num_streams(), 0);
    for (const auto& t : g) {
      M m = R_.one();
      bool needs = false;
      std::fill(key.begin(), key.end(), 0);
      R_.for_each(t.m, [&](uint32_t idx, uint32_t e) {
        const uint32_t s = stream_of_[idx];
        const size_t last = sys_.window_start(s) + sys_.orders()[s] - 1;
        if (idx < last) {
          R_.set(m, idx + 1, e);
        } else {
          key[s] = e;
          needs = true;
        }
      });
      if (!needs) {
        out.push_back({std::move(m), t.c});
        continue;
      }
      const detail::EPoly<M>& prod = product(key);
      for (const auto& q : prod) out.push_back({R_.mul(m, q.m), R_.field().mul(t.c, q.c)});
    }
    R_.sort_combine(out);
    return out;
  }

 private:
  const detail::EPoly<M>& product(const std::vector<uint32_t>& key) {
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    detail::EPoly<M> acc{{R_.one(), 1}};
    for (size_t s = 0; s < key.size(); ++s)
      if (key[s]) acc = R_.mul_poly(acc, R_.pow_poly(upd_[s], key[s]));
    return cache_.emplace(key, std::move(acc)).first->second;
  }

  const detail::Ring<M>& R_;
  const DiffSystem& sys_;
  std::vector<detail::EPoly<M>> upd_;
  std::vector<uint32_t> stream_of_;
  std::map<std::vector<uint32_t>, detail::EPoly<M>> cache_;
};

void require_state_poly(const DiffSystem& sys, const Poly& f) {
  if (f.modulus() != sys.modulus()) throw Error("polynomial and system are over different fields");
  for (Var v : f.vars())
    if (!sys.in_window(v)) throw Error("polynomial uses " + format_var(v, sys.names()) + " outside the state window");
}

}  // namespace

std::vector<Poly> endo_sequence(const DiffSystem& sys, const Poly& f, uint64_t count, const EndoOptions& opts) {
  require_state_poly(sys, f);
  detail::Layout L = state_layout(sys);
  return detail::with_ring(L, [&](const auto& R) {
    using Mono = std::remove_cvref_t<decltype(R.one())>;
    EndoStepper<Mono> es(R, sys);
    std::vector<Poly> out;
    detail::EPoly<Mono> cur = R.from_poly(f);
    for (uint64_t s = 0; s < count; ++s) {
      if (s > 0) cur = es.apply(cur);
      if (cur.size() > opts.term_cap) throw TermCapExceeded(s, cur.size());
      out.push_back(R.to_poly(cur));
    }
    return out;
  });
}

int ordering_violation(const DiffSystem& sys, OrderingSpec::Inner inner) {
  const OrderingSpec ord = OrderingSpec::clock_based(inner);
  for (uint32_t i = 0; i < sys.num_streams(); ++i) {
    const Poly& f = sys.updates()[i];
    if (f.is_constant()) continue;
    const Monomial head = Monomial::of({i, sys.orders()[i]});
    if (monomial_compare(leading_term(f, ord).mono, head, ord) >= 0) return static_cast<int>(i);
  }
  return -1;
}

Poly difference_normal_form(const DiffSystem& sys, const Poly& f) {
  if (int bad = ordering_violation(sys); bad >= 0)
    throw Error("clock-based ordering precondition fails: lm of the update of '" + sys.names()[bad] +
                "' is not below " + sys.names()[bad] + std::to_string(sys.orders()[bad]));
  if (f.modulus() != sys.modulus()) throw Error("polynomial and system are over different fields");
  const int64_t top = f.max_clock();
  if (top < 0) return f;
  const uint32_t n = static_cast<uint32_t>(sys.num_streams());
  for (Var v : f.vars())
    if (v.stream >= n) throw Error("polynomial references an unknown stream");
  std::vector<Var> ring;
  for (uint32_t c = 0; c <= static_cast<uint32_t>(top); ++c)
    for (uint32_t i = 0; i < n; ++i) ring.push_back({i, c});
  detail::Layout L = detail::layout_for(OrderingSpec::clock_based(), sys.modulus(), ring);
  return detail::with_ring(L, [&](const auto& R) {
    using Mono = std::remove_cvref_t<decltype(R.one())>;
    detail::EPoly<Mono> cur = R.from_poly(f);
    // Highest variable first: the substituted shift of f_i only involves
    // smaller variables, so every eliminated variable stays eliminated.
    for (int64_t idx = static_cast<int64_t>(L.nvars()) - 1; idx >= 0; --idx) {
      const Var v = L.vars[idx];
      if (v.clock < sys.orders()[v.stream]) continue;
      detail::EPoly<Mono> out;
      std::map<uint32_t, detail::EPoly<Mono>> powers;
      bool found = false;
      for (const auto& t : cur) {
        const uint32_t e = R.exp(t.m, static_cast<uint32_t>(idx));
        if (e == 0) {
          out.push_back(t);
          continue;
        }
        found = true;
        auto it = powers.find(e);
        if (it == powers.end()) {
          const Poly img = sys.updates()[v.stream].shift(v.clock - sys.orders()[v.stream]);
          it = powers.emplace(e, R.pow_poly(R.from_poly(img), e)).first;
        }
        Mono rest = t.m;
        R.set(rest, static_cast<uint32_t>(idx), 0);
        for (const auto& q : it->second) out.push_back({R.mul(rest, q.m), R.field().mul(t.c, q.c)});
      }
      if (!found) continue;
      R.sort_combine(out);
      cur = std::move(out);
    }
    return R.to_poly(cur);
  });
}

Poly endo_iterate(const DiffSystem& sys, const Poly& f, uint64_t t, EndoMethod method, const EndoOptions& opts) {
  require_state_poly(sys, f);
  if (method == EndoMethod::normal_form) {
    if (t > 0xffffffffu) throw Error("iteration count too large");
    return difference_normal_form(sys, f.shift(static_cast<uint32_t>(t)));
  }
  detail::Layout L = state_layout(sys);
  return detail::with_ring(L, [&](const auto& R) {
    using Mono = std::remove_cvref_t<decltype(R.one())>;
    EndoStepper<Mono> es(R, sys);
    detail::EPoly<Mono> cur = R.from_poly(f);
    for (uint64_t s = 1; s <= t; ++s) {
      cur = es.apply(cur);
      if (cur.size() > opts.term_cap) throw TermCapExceeded(s, cur.size());
    }
    return R.to_poly(cur);
  });
}

// --------------------------------------------------------------- inversion

namespace {

// Reversal isomorphism x'_i(s) -> x_i(r_i - 1 - s); primed streams are
// encoded as stream + n.
Poly reverse_primed(const DiffSystem& sys, const Poly& g) {
  const uint32_t n = static_cast<uint32_t>(sys.num_streams());
  std::vector<Term> terms;
  for (const auto& t : g.terms()) {
    std::vector<Factor> fs;
    for (const auto& f : t.mono.factors()) {
      if (f.var.stream < n) throw Error("internal: unprimed variable in an inverse update");
      const uint32_t s = f.var.stream - n;
      fs.push_back({{s, sys.orders()[s] - 1 - f.var.clock}, f.exp});
    }
    terms.push_back({Monomial::from_factors(std::move(fs), sys.modulus()), t.coeff});
  }
  return Poly::from_terms(sys.modulus(), std::move(terms));
}

InverseResult invert_quick(const DiffSystem& sys) {
  InverseResult res;
  const uint32_t n = static_cast<uint32_t>(sys.num_streams());
  const PrimeField F(sys.modulus());
  std::vector<int> preimage(n, -1);  // stream k -> i with x_k(0) in f_i
  std::vector<Poly> fprime(n);
  for (uint32_t i = 0; i < n; ++i) {
    const Poly& f = sys.updates()[i];
    int k = -1;
    uint32_t coeff = 0;
    std::vector<Term> rest;
    for (const auto& t : f.terms()) {
      bool has0 = false;
      for (const auto& fac : t.mono.factors()) has0 |= fac.var.clock == 0;
      if (!has0) {
        rest.push_back(t);
        continue;
      }
      if (k >= 0 || t.mono.factors().size() != 1 || t.mono.factors()[0].exp != 1) {
        res.reason = "update of '" + sys.names()[i] + "' is not x_k(0) plus terms free of clock 0";
        return res;
      }
      k = static_cast<int>(t.mono.factors()[0].var.stream);
      coeff = t.coeff;
    }
    if (k < 0) {
      res.reason = "update of '" + sys.names()[i] + "' has no clock-0 variable";
      return res;
    }
    if (preimage[k] >= 0) {
      res.reason = "clock-0 variables of the updates do not form a permutation";
      return res;
    }
    preimage[k] = static_cast<int>(i);
    // x_k(0) = c^-1 (x'_i(r_i - 1) - g_i'), g_i' with x_j(s) -> x'_j(s - 1)
    std::vector<Term> g;
    for (auto t : rest) {
      std::vector<Factor> fs;
      for (const auto& fac : t.mono.factors()) fs.push_back({{fac.var.stream + n, fac.var.clock - 1}, fac.exp});
      g.push_back({Monomial::from_factors(std::move(fs), sys.modulus()), t.coeff});
    }
    const Poly gp = Poly::from_terms(sys.modulus(), std::move(g));
    const Poly top = Poly::variable(sys.modulus(), {i + n, sys.orders()[i] - 1});
    fprime[k] = (top - gp).scaled(F.inv(coeff));
  }
  std::vector<Poly> inv_updates;
  for (uint32_t k = 0; k < n; ++k) inv_updates.push_back(reverse_primed(sys, fprime[k]));
  res.invertible = true;
  res.inverse = DiffSystem(sys.modulus(), sys.names(), sys.orders(), std::move(inv_updates));
  return res;
}

InverseResult invert_full(const DiffSystem& sys) {
  InverseResult res;
  const uint32_t n = static_cast<uint32_t>(sys.num_streams());
  const uint32_t p = sys.modulus();
  std::vector<Var> X, Xp;
  for (Var v : sys.state_vars()) {
    X.push_back(v);
    Xp.push_back({v.stream + n, v.clock});
  }
  // most significant first inside each block
  std::vector<Var> Xdesc(X.rbegin(), X.rend()), Xpdesc(Xp.rbegin(), Xp.rend());
  const OrderingSpec ord = OrderingSpec::product({Xdesc, Xpdesc});
  std::vector<Poly> gens;
  for (uint32_t i = 0; i < n; ++i) {
    const uint32_t r = sys.orders()[i];
    for (uint32_t j = 0; j + 1 < r; ++j)
      gens.push_back(Poly::variable(p, {i + n, j}) - Poly::variable(p, {i, j + 1}));
    gens.push_back(Poly::variable(p, {i + n, r - 1}) - sys.updates()[i]);
  }
  BuchbergerOptions opts;
  GBasis gb = buchberger(gens, ord, opts);
  res.witness = gb.gens;
  // expected shape: x_i(j) - x'_i(j-1) for j >= 1 and x_i(0) - f'_i, f'_i in the primed algebra
  std::map<Var, Poly> lead;
  for (const auto& g : gb.gens) {
    const Term& lt = leading_term(g, ord);
    if (lt.mono.factors().size() != 1 || lt.mono.factors()[0].exp != 1 || lt.mono.factors()[0].var.stream >= n) {
      res.reason = "reduced basis has a leading monomial that is not an unprimed variable";
      return res;
    }
    const Var v = lt.mono.factors()[0].var;
    Poly tail = g - Poly::variable(p, v).scaled(lt.coeff);
    for (Var w : tail.vars())
      if (w.stream < n) {
        res.reason = "reduced basis element for " + format_var(v, sys.names()) + " involves unprimed variables";
        return res;
      }
    lead.emplace(v, (-tail).scaled(PrimeField(p).inv(lt.coeff)));
  }
  if (lead.size() != X.size() || gb.gens.size() != X.size()) {
    res.reason = "reduced basis does not have one element per state variable";
    return res;
  }
  std::vector<Poly> inv_updates;
  for (uint32_t i = 0; i < n; ++i) {
    for (uint32_t j = 1; j < sys.orders()[i]; ++j)
      if (lead.at({i, j}) != Poly::variable(p, {i + n, j - 1})) {
        res.reason = "unexpected basis element for a shifted variable";
        return res;
      }
    inv_updates.push_back(reverse_primed(sys, lead.at({i, 0})));
  }
  res.invertible = true;
  res.inverse = DiffSystem(p, sys.names(), sys.orders(), std::move(inv_updates));
  return res;
}

}  // namespace

InverseResult invert_system(const DiffSystem& sys, InvertMethod method) {
  return method == InvertMethod::quick ? invert_quick(sys) : invert_full(sys);
}

void reverse_windows(const DiffSystem& sys, StateVec& v) {
  for (size_t i = 0; i < sys.num_streams(); ++i) {
    auto b = v.begin() + sys.window_start(i);
    std::reverse(b, b + sys.orders()[i]);
  }
}

StateVec backstep_with(const DiffSystem& inverse, const StateVec& state, uint64_t steps) {
  StateVec v = state;
  reverse_windows(inverse, v);
  v = simulate(inverse, std::move(v), steps);
  reverse_windows(inverse, v);
  return v;
}

StateVec backstep(const DiffSystem& sys, const StateVec& state, uint64_t steps) {
  InverseResult inv = invert_system(sys, InvertMethod::quick);
  if (!inv.invertible) inv = invert_system(sys, InvertMethod::full);
  if (!inv.invertible) throw Error("backstep: system is not invertible (" + inv.reason + ")");
  return backstep_with(*inv.inverse, state, steps);
}

std::optional<DiffSystem> subsystem_split(const DiffSystem& sys, size_t m) {
  if (m == 0 || m >= sys.num_streams()) throw Error("split index must satisfy 0 < m < number of streams");
  for (size_t i = 0; i < m; ++i)
    for (Var v : sys.updates()[i].vars())
      if (v.stream >= m) return std::nullopt;
  StreamNames names(sys.names().begin(), sys.names().begin() + m);
  std::vector<uint32_t> orders(sys.orders().begin(), sys.orders().begin() + m);
  std::vector<Poly> ups(sys.updates().begin(), sys.updates().begin() + m);
  return DiffSystem(sys.modulus(), std::move(names), std::move(orders), std::move(ups));
}

// ------------------------------------------------------------------ period

uint64_t state_to_index(const StateVec& v, uint32_t p) {
  uint64_t idx = 0;
  for (size_t i = v.size(); i-- > 0;) idx = idx * p + v[i];
  return idx;
}

StateVec index_to_state(uint64_t idx, size_t r, uint32_t p) {
  StateVec v(r);
  for (size_t i = 0; i < r; ++i) {
    v[i] = static_cast<uint32_t>(idx % p);
    idx /= p;
  }
  return v;
}

namespace {

std::optional<uint64_t> state_space_size(const DiffSystem& sys, uint64_t cap) {
  uint64_t n = 1;
  for (uint32_t i = 0; i < sys.total_order(); ++i) {
    if (n > cap / sys.modulus()) return std::nullopt;
    n *= sys.modulus();
  }
  return n;
}

uint64_t lcm_checked(uint64_t a, uint64_t b) {
  const uint64_t g = std::gcd(a, b);
  const unsigned __int128 l = static_cast<unsigned __int128>(a / g) * b;
  if (l > std::numeric_limits<uint64_t>::max()) throw Error("period exceeds 64 bits");
  return static_cast<uint64_t>(l);
}

PeriodResult period_orbit(const DiffSystem& sys, uint64_t cap) {
  PeriodResult res;
  res.method = "orbit_lcm";
  auto size = state_space_size(sys, cap);
  if (!size) {
    res.cap = cap;
    return res;
  }
  Stepper st(sys);
  const uint32_t p = sys.modulus();
  const size_t r = sys.total_order();
  std::vector<bool> seen(*size, false);
  uint64_t acc = 1;
  for (uint64_t s = 0; s < *size; ++s) {
    if (seen[s]) continue;
    StateVec v = index_to_state(s, r, p);
    uint64_t len = 0, cur = s;
    do {
      if (seen[cur]) throw Error("state transition map is not a permutation");
      seen[cur] = true;
      st.step(v);
      cur = state_to_index(v, p);
      ++len;
    } while (cur != s);
    acc = lcm_checked(acc, len);
  }
  res.known = true;
  res.period = acc;
  return res;
}

PeriodResult period_table(const DiffSystem& sys, uint64_t cap) {
  PeriodResult res;
  res.method = "brute_force";
  auto size = state_space_size(sys, cap);
  if (!size) {
    res.cap = cap;
    return res;
  }
  Stepper st(sys);
  const uint32_t p = sys.modulus();
  const size_t r = sys.total_order();
  std::vector<uint64_t> perm(*size);
  std::vector<bool> hit(*size, false);
  for (uint64_t s = 0; s < *size; ++s) {
    StateVec v = index_to_state(s, r, p);
    st.step(v);
    perm[s] = state_to_index(v, p);
    if (hit[perm[s]]) throw Error("state transition map is not a permutation");
    hit[perm[s]] = true;
  }
  std::vector<bool> done(*size, false);
  uint64_t acc = 1;
  for (uint64_t s = 0; s < *size; ++s) {
    if (done[s]) continue;
    uint64_t len = 0;
    for (uint64_t c = s; !done[c]; c = perm[c]) {
      done[c] = true;
      ++len;
    }
    acc = lcm_checked(acc, len);
  }
  res.known = true;
  res.period = acc;
  return res;
}

// Coefficients c_j of a homogeneous linear update in the stream's own window,
// or nullopt.
std::optional<std::vector<uint32_t>> own_linear_coeffs(const DiffSystem& sys, uint32_t i) {
  std::vector<uint32_t> c(sys.orders()[i], 0);
  for (const auto& t : sys.updates()[i].terms()) {
    if (t.mono.degree() != 1) return std::nullopt;
    const Var v = t.mono.factors()[0].var;
    if (v.stream != i) return std::nullopt;
    c[v.clock] = t.coeff;
  }
  return c;
}

// Least d >= 1 with t^d = 1 modulo the characteristic polynomial of one
// linear recurrence x(r) = sum c_j x(j).
std::optional<uint64_t> recurrence_order(const std::vector<uint32_t>& c, uint32_t p, uint64_t iter_cap,
                                         std::string& how) {
  const PrimeField F(p);
  const size_t r = c.size();
  if (c[0] == 0) throw Error("linear recurrence with zero constant coefficient is not invertible");
  UPoly g(r + 1, 0);
  for (size_t j = 0; j < r; ++j) g[j] = F.neg(c[j]);
  g[r] = 1;
  if (upoly::is_irreducible(g, F)) {
    ExtField K(F, g);
    const uint64_t ord = ff_element_order(K, UPoly{0, 1});
    how = ord == K.group_order() ? "primitive" : "irreducible";
    return ord;
  }
  how = "companion order";
  const UPoly t{0, 1};
  UPoly x = upoly::mod(t, g, F);
  const UPoly one{1};
  for (uint64_t d = 1; d <= iter_cap; ++d) {
    if (x == one) return d;
    x = upoly::mulmod(x, t, g, F);
  }
  return std::nullopt;
}

PeriodResult period_linear(const DiffSystem& sys, uint64_t cap) {
  PeriodResult res;
  res.method = "linear_primitive";
  uint64_t acc = 1;
  std::string detail;
  for (uint32_t i = 0; i < sys.num_streams(); ++i) {
    auto c = own_linear_coeffs(sys, i);
    if (!c) throw Error("linear_primitive needs homogeneous linear updates on each stream's own window");
    std::string how;
    auto d = recurrence_order(*c, sys.modulus(), cap, how);
    if (!d) {
      res.cap = cap;
      return res;
    }
    detail += (detail.empty() ? "" : ",") + how;
    acc = lcm_checked(acc, *d);
  }
  res.known = true;
  res.period = acc;
  res.method += " (" + detail + ")";
  return res;
}

bool is_decoupled_linear(const DiffSystem& sys) {
  for (uint32_t i = 0; i < sys.num_streams(); ++i) {
    auto c = own_linear_coeffs(sys, i);
    if (!c || (*c)[0] == 0) return false;
  }
  return true;
}

}  // namespace

PeriodResult period(const DiffSystem& sys, PeriodStrategy strategy, uint64_t state_cap) {
  switch (strategy) {
    case PeriodStrategy::orbit_lcm: return period_orbit(sys, state_cap);
    case PeriodStrategy::brute_force: return period_table(sys, state_cap);
    case PeriodStrategy::linear_primitive: return period_linear(sys, state_cap);
    case PeriodStrategy::automatic:
      if (is_decoupled_linear(sys)) return period_linear(sys, state_cap);
      return period_orbit(sys, state_cap);
  }
  return {};
}

}  // namespace diffcipher
