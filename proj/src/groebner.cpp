#include "diffcipher/groebner.hpp"

#include <set>

#include "gb_engine.hpp"

namespace diffcipher {
namespace detail {

void Layout::finish() {
  index.clear();
  for (uint32_t i = 0; i < vars.size(); ++i)
    if (!index.emplace(vars[i], i).second) throw Error("variable listed twice in an ordering");
  block_of.assign(vars.size(), 0);
  for (uint32_t b = 0; b < blocks.size(); ++b)
    for (uint32_t i = blocks[b].lo; i < blocks[b].hi; ++i) block_of[i] = b;
}

uint32_t Layout::idx(Var v) const {
  auto it = index.find(v);
  if (it == index.end())
    throw Error("variable (stream " + std::to_string(v.stream) + ", clock " + std::to_string(v.clock) +
                ") is outside the ordering's variable list");
  return it->second;
}

Layout layout_for(const OrderingSpec& ord, uint32_t p, std::vector<Var> ring_vars) {
  Layout L;
  L.p = p;
  switch (ord.kind) {
    case OrderingSpec::Kind::clock_based: {
      std::sort(ring_vars.begin(), ring_vars.end());
      ring_vars.erase(std::unique(ring_vars.begin(), ring_vars.end()), ring_vars.end());
      L.vars = std::move(ring_vars);
      const bool lex = ord.inner == OrderingSpec::Inner::lex;
      for (uint32_t i = 0; i < L.vars.size();) {
        uint32_t j = i;
        while (j < L.vars.size() && L.vars[j].clock == L.vars[i].clock) ++j;
        L.blocks.push_back({i, j, lex});
        i = j;
      }
      break;
    }
    case OrderingSpec::Kind::bounded_degrevlex:
      L.vars.assign(ord.vars.rbegin(), ord.vars.rend());
      if (!L.vars.empty()) L.blocks.push_back({0, static_cast<uint32_t>(L.vars.size()), false});
      break;
    case OrderingSpec::Kind::product:
      for (auto b = ord.blocks.rbegin(); b != ord.blocks.rend(); ++b) {
        const uint32_t lo = static_cast<uint32_t>(L.vars.size());
        L.vars.insert(L.vars.end(), b->rbegin(), b->rend());
        if (L.vars.size() > lo) L.blocks.push_back({lo, static_cast<uint32_t>(L.vars.size()), false});
      }
      break;
  }
  L.finish();
  return L;
}

}  // namespace detail

namespace {

uint32_t common_modulus(const std::vector<Poly>& gens, const Poly* extra = nullptr) {
  uint32_t p = extra ? extra->modulus() : (gens.empty() ? 2 : gens[0].modulus());
  for (const auto& g : gens)
    if (g.modulus() != p) throw Error("generators over different fields");
  return p;
}

std::vector<Var> occurring_vars(const std::vector<Poly>& gens, const Poly* extra = nullptr) {
  std::set<Var> s;
  for (const auto& g : gens)
    for (Var v : g.vars()) s.insert(v);
  if (extra)
    for (Var v : extra->vars()) s.insert(v);
  return {s.begin(), s.end()};
}

}  // namespace

Poly normal_form(const Poly& f, const GBasis& basis) {
  const uint32_t p = common_modulus(basis.gens, &f);
  detail::Layout L = detail::layout_for(basis.ordering, p, occurring_vars(basis.gens, &f));
  return detail::with_ring(L, [&](const auto& R) {
    using Mono = std::remove_cvref_t<decltype(R.one())>;
    std::vector<detail::EPoly<Mono>> G;
    for (const auto& g : basis.gens) {
      auto e = R.from_poly(g);
      if (e.empty()) continue;
      R.make_monic(e);
      G.push_back(std::move(e));
    }
    std::vector<const detail::EPoly<Mono>*> ptrs;
    for (const auto& g : G) ptrs.push_back(&g);
    return R.to_poly(R.reduce(R.from_poly(f), ptrs, true));
  });
}

GBasis buchberger(const std::vector<Poly>& gens, const OrderingSpec& ord, const BuchbergerOptions& opts,
                  GBStats* stats) {
  const uint32_t p = common_modulus(gens);
  std::vector<Var> ring = occurring_vars(gens);
  ring.insert(ring.end(), opts.ring_vars.begin(), opts.ring_vars.end());
  detail::Layout L = detail::layout_for(ord, p, std::move(ring));
  return detail::with_ring(L, [&](const auto& R) {
    using Mono = std::remove_cvref_t<decltype(R.one())>;
    std::vector<detail::EPoly<Mono>> in;
    for (const auto& g : gens) in.push_back(R.from_poly(g));
    auto res = detail::run_buchberger(R, std::move(in), opts);
    GBasis out;
    out.ordering = ord;
    out.status = res.status;
    for (const auto& g : res.basis) out.gens.push_back(R.to_poly(g));
    if (stats) *stats = res.stats;
    return out;
  });
}

GBasis interreduce(const GBasis& basis) {
  const uint32_t p = common_modulus(basis.gens);
  detail::Layout L = detail::layout_for(basis.ordering, p, occurring_vars(basis.gens));
  return detail::with_ring(L, [&](const auto& R) {
    using Mono = std::remove_cvref_t<decltype(R.one())>;
    std::vector<detail::EPoly<Mono>> in;
    for (const auto& g : basis.gens) in.push_back(R.from_poly(g));
    GBasis out;
    out.ordering = basis.ordering;
    out.status = GBasis::Status::reduced_groebner;
    for (const auto& g : detail::reduce_basis(R, std::move(in))) out.gens.push_back(R.to_poly(g));
    return out;
  });
}

SolveOutcome solve_unique(const std::vector<Poly>& gens, const std::vector<Var>& vars, const BuchbergerOptions& opts) {
  BuchbergerOptions o = opts;
  o.early_stop_on_all_variables = true;
  o.early_stop_on_one = true;
  SolveOutcome out;
  out.basis = buchberger(gens, OrderingSpec::bounded_degrevlex(vars), o, &out.stats);
  if (out.stats.aborted) {
    out.status = SolveOutcome::Status::aborted;
    return out;
  }
  if (out.basis.is_one()) {
    out.status = SolveOutcome::Status::inconsistent;
    return out;
  }
  // unique iff the basis is {x - a : x in vars}
  std::map<Var, uint32_t> point;
  for (const auto& g : out.basis.gens) {
    if (g.degree() != 1) break;
    const auto& ts = g.terms();
    const Term& lin = ts.back();
    if (lin.mono.factors().size() != 1 || lin.coeff != 1) break;
    if (ts.size() > 2 || (ts.size() == 2 && !ts[0].mono.is_one())) break;
    const uint32_t c = ts.size() == 2 ? ts[0].coeff : 0;
    point[lin.mono.factors()[0].var] = c == 0 ? 0 : g.modulus() - c;
  }
  if (point.size() == vars.size() && out.basis.gens.size() == vars.size()) {
    out.status = SolveOutcome::Status::unique;
    out.assignment = std::move(point);
  } else {
    out.status = SolveOutcome::Status::indeterminate;
  }
  return out;
}

namespace {

void enumerate_rec(const std::vector<Poly>& gens, const std::vector<Var>& vars, size_t max_points,
                   const BuchbergerOptions& opts, SolutionSet& out) {
  if (out.points.size() >= max_points) {
    out.complete = false;
    return;
  }
  ++out.solves;
  SolveOutcome so = solve_unique(gens, vars, opts);
  switch (so.status) {
    case SolveOutcome::Status::inconsistent: return;
    case SolveOutcome::Status::aborted: out.complete = false; return;
    case SolveOutcome::Status::unique: out.points.push_back(std::move(so.assignment)); return;
    case SolveOutcome::Status::indeterminate: break;
  }
  // Branch on the variable occurring in most basis elements that are not
  // already of the form x - a.
  std::map<Var, size_t> count;
  std::set<Var> fixed;
  for (const Poly& g : so.basis.gens) {
    if (g.degree() == 1 && g.vars().size() == 1) {
      fixed.insert(g.vars()[0]);
      continue;
    }
    for (Var v : g.vars()) ++count[v];
  }
  if (count.empty())  // a variable absent from the basis is free
    for (Var v : vars)
      if (!fixed.count(v)) {
        count[v] = 0;
        break;
      }
  if (count.empty()) {
    out.complete = false;
    return;
  }
  Var pick = count.begin()->first;
  size_t best = 0;
  for (const auto& [v, k] : count)
    if (k > best) {
      best = k;
      pick = v;
    }
  // zero generators still carry the modulus; an empty list defaults to GF(2)
  const uint32_t p = gens.empty() ? 2 : gens.front().modulus();
  for (uint32_t a = 0; a < p; ++a) {
    std::vector<Poly> next = so.basis.gens;
    next.push_back(Poly::variable(p, pick) - Poly::constant(p, a));
    enumerate_rec(next, vars, max_points, opts, out);
    if (!out.complete && out.points.size() >= max_points) return;
  }
}

}  // namespace

SolutionSet enumerate_solutions(const std::vector<Poly>& gens, const std::vector<Var>& vars, size_t max_points,
                                const BuchbergerOptions& opts) {
  SolutionSet out;
  enumerate_rec(gens, vars, std::max<size_t>(1, max_points), opts, out);
  return out;
}

// ------------------------------------------------------------------ linear

std::map<Var, Poly> LinearSlice::substitutions() const {
  PrimeField F(modulus);
  std::map<Var, Poly> out;
  const size_t nc = columns.size();
  for (const auto& row : rows) {
    size_t piv = 0;
    while (piv < nc && row[piv] == 0) ++piv;
    if (piv == nc) continue;
    Poly rhs = Poly::constant(modulus, F.neg(row[nc]));
    for (size_t j = piv + 1; j < nc; ++j)
      if (row[j]) rhs = rhs + Poly::variable(modulus, columns[j]).scaled(F.neg(row[j]));
    out.emplace(columns[piv], std::move(rhs));
  }
  return out;
}

namespace {

// Bit-packed rows over GF(2); the constant lives in column nc.
void eliminate_gf2(LinearSlice& S, const std::vector<std::vector<uint32_t>>& dense, std::vector<bool>& is_pivot) {
  const size_t nc = S.columns.size();
  const size_t words = (nc + 1 + 63) / 64;
  std::vector<std::vector<uint64_t>> rows;
  for (const auto& d : dense) {
    std::vector<uint64_t> r(words, 0);
    for (size_t j = 0; j <= nc; ++j)
      if (d[j] & 1) r[j >> 6] |= uint64_t{1} << (j & 63);
    rows.push_back(std::move(r));
  }
  auto bit = [](const std::vector<uint64_t>& r, size_t j) { return (r[j >> 6] >> (j & 63)) & 1; };
  size_t rank = 0;
  for (size_t col = 0; col < nc && rank < rows.size(); ++col) {
    size_t r = rank;
    while (r < rows.size() && !bit(rows[r], col)) ++r;
    if (r == rows.size()) continue;
    std::swap(rows[r], rows[rank]);
    for (size_t k = 0; k < rows.size(); ++k)
      if (k != rank && bit(rows[k], col))
        for (size_t w = 0; w < words; ++w) rows[k][w] ^= rows[rank][w];
    is_pivot[col] = true;
    ++rank;
  }
  for (size_t k = 0; k < rows.size(); ++k) {
    std::vector<uint32_t> d(nc + 1, 0);
    bool any = false;
    for (size_t j = 0; j <= nc; ++j) any |= (d[j] = static_cast<uint32_t>(bit(rows[k], j))) != 0;
    if (!any) continue;
    if (k >= rank) S.inconsistent = true;
    S.rows.push_back(std::move(d));
  }
}

void eliminate_dense(LinearSlice& S, std::vector<std::vector<uint32_t>> rows, std::vector<bool>& is_pivot) {
  PrimeField F(S.modulus);
  const size_t nc = S.columns.size();
  size_t rank = 0;
  for (size_t col = 0; col < nc && rank < rows.size(); ++col) {
    size_t r = rank;
    while (r < rows.size() && rows[r][col] == 0) ++r;
    if (r == rows.size()) continue;
    std::swap(rows[r], rows[rank]);
    const uint32_t inv = F.inv(rows[rank][col]);
    for (auto& x : rows[rank]) x = F.mul(x, inv);
    for (size_t k = 0; k < rows.size(); ++k) {
      if (k == rank || rows[k][col] == 0) continue;
      const uint32_t c = rows[k][col];
      for (size_t j = 0; j <= nc; ++j) rows[k][j] = F.sub(rows[k][j], F.mul(c, rows[rank][j]));
    }
    is_pivot[col] = true;
    ++rank;
  }
  for (size_t k = 0; k < rows.size(); ++k) {
    bool any = false;
    for (uint32_t x : rows[k]) any |= x != 0;
    if (!any) continue;
    if (k >= rank) S.inconsistent = true;
    S.rows.push_back(std::move(rows[k]));
  }
}

}  // namespace

LinearSlice gaussian_eliminate(const std::vector<Poly>& linear_gens, std::vector<Var> columns) {
  LinearSlice S;
  S.modulus = common_modulus(linear_gens);
  if (columns.empty()) {
    columns = occurring_vars(linear_gens);
    std::sort(columns.begin(), columns.end(), [](Var a, Var b) {
      return a.stream != b.stream ? a.stream < b.stream : a.clock < b.clock;
    });
  }
  S.columns = std::move(columns);
  std::map<Var, size_t> col;
  for (size_t j = 0; j < S.columns.size(); ++j) col.emplace(S.columns[j], j);
  const size_t nc = S.columns.size();
  std::vector<std::vector<uint32_t>> dense;
  for (const auto& g : linear_gens) {
    if (g.degree() > 1) throw Error("gaussian_eliminate: nonlinear generator");
    std::vector<uint32_t> row(nc + 1, 0);
    for (const auto& t : g.terms()) {
      if (t.mono.is_one()) {
        row[nc] = t.coeff;
        continue;
      }
      auto it = col.find(t.mono.factors()[0].var);
      if (it == col.end()) throw Error("gaussian_eliminate: variable missing from the column list");
      row[it->second] = t.coeff;
    }
    dense.push_back(std::move(row));
  }
  std::vector<bool> is_pivot(nc, false);
  if (S.modulus == 2)
    eliminate_gf2(S, dense, is_pivot);
  else
    eliminate_dense(S, std::move(dense), is_pivot);
  for (size_t j = 0; j < nc; ++j) (is_pivot[j] ? S.pivot_vars : S.free_vars).push_back(S.columns[j]);
  return S;
}

}  // namespace diffcipher
