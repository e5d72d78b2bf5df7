// Template bodies for gb_engine.hpp.
#pragma once

namespace diffcipher::detail {

template <class M>
std::vector<EPoly<M>> reduce_basis(const Ring<M>& R, std::vector<EPoly<M>> G) {
  std::erase_if(G, [](const EPoly<M>& g) { return g.empty(); });
  for (auto& g : G) R.make_monic(g);
  std::sort(G.begin(), G.end(), [&](const EPoly<M>& a, const EPoly<M>& b) { return R.cmp(a[0].m, b[0].m) < 0; });
  // minimal: keep g unless an earlier (smaller or equal) leading monomial divides it
  std::vector<EPoly<M>> minimal;
  for (auto& g : G) {
    bool redundant = false;
    for (const auto& k : minimal)
      if (R.divides(k[0].m, g[0].m)) {
        redundant = true;
        break;
      }
    if (!redundant) minimal.push_back(std::move(g));
  }
  if (!minimal.empty() && R.is_one(minimal[0][0].m)) return {std::move(minimal[0])};
  std::vector<EPoly<M>> out;
  out.reserve(minimal.size());
  for (size_t i = 0; i < minimal.size(); ++i) {
    std::vector<const EPoly<M>*> others;
    for (size_t j = 0; j < minimal.size(); ++j)
      if (j != i) others.push_back(&minimal[j]);
    out.push_back(R.reduce(minimal[i], others, true));
  }
  std::sort(out.begin(), out.end(), [&](const EPoly<M>& a, const EPoly<M>& b) { return R.cmp(a[0].m, b[0].m) > 0; });
  return out;
}

template <class M>
EngineResult<M> run_buchberger(const Ring<M>& R, std::vector<EPoly<M>> input, const BuchbergerOptions& opts) {
  EngineResult<M> res;
  GBStats& st = res.stats;
  const uint32_t n = R.nvars();
  const uint32_t p = R.p();

  struct Pair {
    uint32_t i = 0, j = 0;  // j unused for field pairs
    uint32_t var = 0, exp = 0;
    bool field = false;
    uint32_t key = 0;
    uint64_t id = 0;
    M lcm;
  };

  std::vector<EPoly<M>> polys;
  std::vector<uint32_t> G;
  std::vector<const EPoly<M>*> Gptr;
  std::vector<Pair> P;
  uint64_t next_id = 0;
  std::vector<uint8_t> is_lead_var(n, 0);
  uint32_t lead_vars = 0;

  const std::vector<EPoly<M>> original = input;

  auto rebuild_ptrs = [&] {
    Gptr.clear();
    for (uint32_t g : G) Gptr.push_back(&polys[g]);
  };

  auto finish_one = [&](EPoly<M> one) {
    R.make_monic(one);
    res.basis = {std::move(one)};
    res.status = GBasis::Status::reduced_groebner;
    st.early_stop = true;
  };

  // Adds a reduced monic h; returns true when h is a constant.
  auto add = [&](EPoly<M> h) -> bool {
    if (R.is_one(h[0].m)) {
      finish_one(std::move(h));
      return true;
    }
    const uint32_t hi = static_cast<uint32_t>(polys.size());
    polys.push_back(std::move(h));
    const M lh = polys[hi][0].m;

    std::vector<Pair> C;
    C.reserve(G.size());
    for (uint32_t g : G) {
      Pair pr;
      pr.i = hi;
      pr.j = g;
      pr.lcm = R.lcm(lh, polys[g][0].m);
      pr.key = pr.lcm.deg;
      C.push_back(std::move(pr));
    }
    std::vector<Pair> D;
    for (size_t a = 0; a < C.size(); ++a) {
      const M& lg = polys[C[a].j][0].m;
      bool keep = R.coprime(lh, lg);
      if (!keep) {
        keep = true;
        for (size_t b = a + 1; b < C.size() && keep; ++b)
          if (R.divides(C[b].lcm, C[a].lcm)) keep = false;
        for (size_t b = 0; b < D.size() && keep; ++b)
          if (R.divides(D[b].lcm, C[a].lcm)) keep = false;
      }
      if (keep)
        D.push_back(std::move(C[a]));
      else
        ++st.pairs_pruned;
    }
    const size_t before = P.size();
    std::erase_if(P, [&](const Pair& q) {
      if (q.field) return false;
      if (!R.divides(lh, q.lcm)) return false;
      const M l1 = R.lcm(polys[q.i][0].m, lh);
      const M l2 = R.lcm(polys[q.j][0].m, lh);
      return !(l1 == q.lcm) && !(l2 == q.lcm);
    });
    st.pairs_pruned += before - P.size();
    for (auto& d : D) {
      if (R.coprime(lh, polys[d.j][0].m)) {
        ++st.pairs_pruned;
        continue;
      }
      d.id = next_id++;
      P.push_back(std::move(d));
    }
    // pairs with the field equations x^p - x for x dividing lm(h)
    const bool skip_linear = p == 2 && lh.deg == 1;
    if (!skip_linear) {
      R.for_each(lh, [&](uint32_t v, uint32_t e) {
        Pair f;
        f.i = hi;
        f.var = v;
        f.exp = p - e;
        f.field = true;
        f.key = lh.deg + (p == 2 ? 0 : p - e);
        f.id = next_id++;
        P.push_back(std::move(f));
      });
    }
    // drop basis elements whose leading monomial is now redundant
    std::vector<uint32_t> G2;
    G2.reserve(G.size() + 1);
    for (uint32_t g : G) {
      if (R.divides(lh, polys[g][0].m)) {
        const int64_t lv = R.as_linear_var(polys[g][0].m);
        if (lv >= 0 && is_lead_var[lv]) {
          is_lead_var[lv] = 0;
          --lead_vars;
        }
      } else {
        G2.push_back(g);
      }
    }
    G2.push_back(hi);
    G = std::move(G2);
    if (const int64_t lv = R.as_linear_var(lh); lv >= 0 && !is_lead_var[lv]) {
      is_lead_var[lv] = 1;
      ++lead_vars;
    }
    rebuild_ptrs();
    st.max_basis_size = std::max<uint64_t>(st.max_basis_size, G.size());
    return false;
  };

  // Reads the point off linear leaders and checks it against the input.
  auto finish_point = [&] {
    std::vector<const EPoly<M>*> lin(n, nullptr);
    for (uint32_t g : G)
      if (const int64_t lv = R.as_linear_var(polys[g][0].m); lv >= 0) lin[lv] = &polys[g];
    std::vector<uint32_t> alpha(n, 0);
    for (uint32_t v = 0; v < n; ++v) {
      const EPoly<M>& g = *lin[v];
      // g = x_v + tail, tail in variables of smaller index
      uint32_t tail = 0;
      for (size_t k = 1; k < g.size(); ++k) {
        uint32_t t = g[k].c;
        R.for_each(g[k].m, [&](uint32_t i, uint32_t e) { t = R.field().mul(t, R.field().pow(alpha[i], e)); });
        tail = R.field().add(tail, t);
      }
      alpha[v] = R.field().neg(tail);
    }
    st.early_stop = true;
    res.status = GBasis::Status::reduced_groebner;
    for (const auto& f : original)
      if (R.eval(f, alpha) != 0) {
        res.basis = {EPoly<M>{{R.one(), 1}}};
        return;
      }
    res.basis.clear();
    for (int64_t v = n - 1; v >= 0; --v) {
      EPoly<M> g{{R.var(static_cast<uint32_t>(v)), 1}};
      if (alpha[v]) g.push_back({R.one(), R.field().neg(alpha[v])});
      res.basis.push_back(std::move(g));
    }
  };

  auto abort_with = [&](const char* why) {
    st.aborted = true;
    st.abort_reason = why;
    res.status = GBasis::Status::raw;
    res.basis.clear();
    for (uint32_t g : G) res.basis.push_back(polys[g]);
  };

  auto over_degree = [&](const EPoly<M>& h) {
    if (!opts.degree_bound) return false;
    uint32_t d = 0;
    for (const auto& t : h) d = std::max(d, t.m.deg);
    return d > *opts.degree_bound;
  };

  // Seed with the input, smallest leading monomials first.
  for (auto& f : input) R.sort_combine(f);
  std::erase_if(input, [](const EPoly<M>& f) { return f.empty(); });
  std::sort(input.begin(), input.end(), [&](const EPoly<M>& a, const EPoly<M>& b) {
    const int c = R.cmp(a[0].m, b[0].m);
    return c != 0 ? c < 0 : a.size() < b.size();
  });
  for (auto& f : input) {
    EPoly<M> h = R.reduce(std::move(f), Gptr, true, &st.reduction_steps);
    if (h.empty()) continue;
    R.make_monic(h);
    if (add(std::move(h))) return res;
    if (opts.early_stop_on_all_variables && n > 0 && lead_vars == n) {
      finish_point();
      return res;
    }
  }

  while (!P.empty()) {
    if (opts.max_pairs && st.pairs_processed >= opts.max_pairs) {
      abort_with("pair limit reached");
      return res;
    }
    if (opts.deadline && std::chrono::steady_clock::now() > *opts.deadline) {
      abort_with("deadline reached");
      return res;
    }
    size_t best = 0;
    for (size_t k = 1; k < P.size(); ++k)
      if (P[k].key < P[best].key || (P[k].key == P[best].key && P[k].id < P[best].id)) best = k;
    Pair pr = std::move(P[best]);
    P[best] = std::move(P.back());
    P.pop_back();
    ++st.pairs_processed;

    EPoly<M> s;
    if (pr.field) {
      ++st.field_pairs;
      s = R.mul_mono(polys[pr.i], R.var(pr.var, pr.exp), 1);
    } else {
      const EPoly<M>& f = polys[pr.i];
      const EPoly<M>& g = polys[pr.j];
      EPoly<M> a = R.mul_mono(f, R.quot(pr.lcm, f[0].m), 1);
      EPoly<M> b = R.mul_mono(g, R.quot(pr.lcm, g[0].m), 1);
      s = R.sub(a, 0, b);
    }
    EPoly<M> h = R.reduce(std::move(s), Gptr, true, &st.reduction_steps);
    if (h.empty()) {
      ++st.zero_reductions;
      continue;
    }
    R.make_monic(h);
    if (!R.is_one(h[0].m) && over_degree(h)) {
      abort_with("degree bound exceeded");
      return res;
    }
    // Once 1 is in the ideal the reduced basis is {1} whatever pairs remain,
    // so stopping here is exact with or without early_stop_on_one.
    if (add(std::move(h))) return res;
    if (opts.early_stop_on_all_variables && lead_vars == n) {
      finish_point();
      return res;
    }
  }

  std::vector<EPoly<M>> basis;
  for (uint32_t g : G) basis.push_back(polys[g]);
  res.basis = reduce_basis(R, std::move(basis));
  res.status = GBasis::Status::reduced_groebner;
  return res;
}

}  // namespace diffcipher::detail
