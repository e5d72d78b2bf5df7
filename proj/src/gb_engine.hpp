// Internal Buchberger engine over a bounded set of indexed variables.
// Monomials are bit sets over GF(2) and exponent vectors otherwise; products
// are taken in the quotient by the field ideal.
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "diffcipher/diffpoly.hpp"
#include "diffcipher/groebner.hpp"

namespace diffcipher::detail {

/// Contiguous index range [lo, hi) compared as one block of a product order.
struct Block {
  uint32_t lo = 0, hi = 0;
  bool lex = false;
};

/// Variables of a bounded ring. Index 0 is the least significant variable;
/// blocks are ascending and cover all indices.
struct Layout {
  uint32_t p = 2;
  std::vector<Var> vars;
  std::map<Var, uint32_t> index;
  std::vector<Block> blocks;
  std::vector<uint32_t> block_of;

  uint32_t nvars() const { return static_cast<uint32_t>(vars.size()); }
  void finish();
  uint32_t idx(Var v) const;
};

/// Layout realising `ord`. For clock-based orderings `ring_vars` is the
/// variable set (sorted and deduplicated here).
Layout layout_for(const OrderingSpec& ord, uint32_t p, std::vector<Var> ring_vars);

template <int W>
struct BitMono {
  std::array<uint64_t, W> w{};
  uint32_t deg = 0;
  bool operator==(const BitMono& o) const { return w == o.w; }
};

struct DenseMono {
  std::vector<uint32_t> e;
  uint32_t deg = 0;
  bool operator==(const DenseMono& o) const { return e == o.e; }
};

template <class M>
struct ETerm {
  M m;
  uint32_t c;
};

/// Sorted by the ring order, largest first.
template <class M>
using EPoly = std::vector<ETerm<M>>;

template <class M>
struct IsBit : std::false_type {
  static constexpr int words = 1;
};
template <int W>
struct IsBit<BitMono<W>> : std::true_type {
  static constexpr int words = W;
};

template <class M>
class Ring {
 public:
  static constexpr bool bit = IsBit<M>::value;

  explicit Ring(const Layout& L) : L_(&L), F_(L.p), n_(L.nvars()) {
    if constexpr (bit) {
      masks_.resize(L.blocks.size());
      for (size_t b = 0; b < L.blocks.size(); ++b)
        for (uint32_t i = L.blocks[b].lo; i < L.blocks[b].hi; ++i) masks_[b][i >> 6] |= uint64_t{1} << (i & 63);
    }
    single_degrevlex_ = L.blocks.size() == 1 && !L.blocks[0].lex;
  }

  const Layout& layout() const { return *L_; }
  const PrimeField& field() const { return F_; }
  uint32_t nvars() const { return n_; }
  uint32_t p() const { return L_->p; }

  M one() const {
    M m;
    if constexpr (!bit) m.e.assign(n_, 0);
    return m;
  }

  uint32_t exp(const M& m, uint32_t i) const {
    if constexpr (bit)
      return (m.w[i >> 6] >> (i & 63)) & 1;
    else
      return m.e[i];
  }

  void set(M& m, uint32_t i, uint32_t e) const {
    if constexpr (bit) {
      const uint64_t b = uint64_t{1} << (i & 63);
      const bool had = m.w[i >> 6] & b;
      if (e && !had) {
        m.w[i >> 6] |= b;
        ++m.deg;
      } else if (!e && had) {
        m.w[i >> 6] &= ~b;
        --m.deg;
      }
    } else {
      m.deg = m.deg - m.e[i] + e;
      m.e[i] = e;
    }
  }

  M var(uint32_t i, uint32_t e = 1) const {
    M m = one();
    set(m, i, e);
    return m;
  }

  M mul(const M& a, const M& b) const {
    M r;
    if constexpr (bit) {
      uint32_t d = 0;
      for (int k = 0; k < IsBit<M>::words; ++k) {
        r.w[k] = a.w[k] | b.w[k];
        d += std::popcount(r.w[k]);
      }
      r.deg = d;
    } else {
      r.e.resize(n_);
      uint32_t d = 0;
      for (uint32_t i = 0; i < n_; ++i) {
        const uint32_t s = a.e[i] + b.e[i];
        r.e[i] = s == 0 ? 0 : reduce_exponent(s, p());
        d += r.e[i];
      }
      r.deg = d;
    }
    return r;
  }

  bool divides(const M& a, const M& b) const {
    if (a.deg > b.deg) return false;
    if constexpr (bit) {
      for (int k = 0; k < IsBit<M>::words; ++k)
        if (a.w[k] & ~b.w[k]) return false;
      return true;
    } else {
      for (uint32_t i = 0; i < n_; ++i)
        if (a.e[i] > b.e[i]) return false;
      return true;
    }
  }

  /// b / a for a | b.
  M quot(const M& b, const M& a) const {
    M r;
    if constexpr (bit) {
      for (int k = 0; k < IsBit<M>::words; ++k) r.w[k] = b.w[k] & ~a.w[k];
      r.deg = b.deg - a.deg;
    } else {
      r.e.resize(n_);
      for (uint32_t i = 0; i < n_; ++i) r.e[i] = b.e[i] - a.e[i];
      r.deg = b.deg - a.deg;
    }
    return r;
  }

  M lcm(const M& a, const M& b) const {
    if constexpr (bit) {
      return mul(a, b);
    } else {
      M r;
      r.e.resize(n_);
      uint32_t d = 0;
      for (uint32_t i = 0; i < n_; ++i) d += (r.e[i] = std::max(a.e[i], b.e[i]));
      r.deg = d;
      return r;
    }
  }

  bool coprime(const M& a, const M& b) const {
    if constexpr (bit) {
      for (int k = 0; k < IsBit<M>::words; ++k)
        if (a.w[k] & b.w[k]) return false;
      return true;
    } else {
      for (uint32_t i = 0; i < n_; ++i)
        if (a.e[i] && b.e[i]) return false;
      return true;
    }
  }

  bool is_one(const M& m) const { return m.deg == 0; }

  /// Single variable with exponent one; returns its index or -1.
  int64_t as_linear_var(const M& m) const {
    if (m.deg != 1) return -1;
    if constexpr (bit) {
      for (int k = 0; k < IsBit<M>::words; ++k)
        if (m.w[k]) return 64 * k + std::countr_zero(m.w[k]);
    } else {
      for (uint32_t i = 0; i < n_; ++i)
        if (m.e[i]) return i;
    }
    return -1;
  }

  template <class Fn>
  void for_each(const M& m, Fn&& fn) const {
    if constexpr (bit) {
      for (int k = 0; k < IsBit<M>::words; ++k) {
        uint64_t x = m.w[k];
        while (x) {
          fn(static_cast<uint32_t>(64 * k + std::countr_zero(x)), 1u);
          x &= x - 1;
        }
      }
    } else {
      for (uint32_t i = 0; i < n_; ++i)
        if (m.e[i]) fn(i, m.e[i]);
    }
  }

  int cmp(const M& a, const M& b) const {
    if (single_degrevlex_ && a.deg != b.deg) return a.deg < b.deg ? -1 : 1;
    if constexpr (bit) {
      constexpr int Wn = IsBit<M>::words;
      int h = -1;
      for (int k = Wn - 1; k >= 0; --k) {
        const uint64_t d = a.w[k] ^ b.w[k];
        if (d) {
          h = 64 * k + 63 - std::countl_zero(d);
          break;
        }
      }
      if (h < 0) return 0;
      const uint32_t bi = L_->block_of[h];
      const Block& blk = L_->blocks[bi];
      if (blk.lex) return exp(a, h) ? 1 : -1;
      if (!single_degrevlex_) {
        uint32_t da = 0, db = 0;
        const auto& mk = masks_[bi];
        for (uint32_t k = blk.lo >> 6; k <= ((blk.hi - 1) >> 6); ++k) {
          da += std::popcount(a.w[k] & mk[k]);
          db += std::popcount(b.w[k] & mk[k]);
        }
        if (da != db) return da < db ? -1 : 1;
      }
      for (uint32_t k = blk.lo >> 6; k < static_cast<uint32_t>(Wn); ++k) {
        uint64_t d = a.w[k] ^ b.w[k];
        if (k == (blk.lo >> 6)) d &= ~uint64_t{0} << (blk.lo & 63);
        if (d) {
          const uint32_t l = 64 * k + std::countr_zero(d);
          return exp(a, l) ? -1 : 1;
        }
      }
      return 0;
    } else {
      int h = -1;
      for (int i = static_cast<int>(n_) - 1; i >= 0; --i)
        if (a.e[i] != b.e[i]) {
          h = i;
          break;
        }
      if (h < 0) return 0;
      const Block& blk = L_->blocks[L_->block_of[h]];
      if (blk.lex) return a.e[h] > b.e[h] ? 1 : -1;
      if (!single_degrevlex_) {
        uint32_t da = 0, db = 0;
        for (uint32_t i = blk.lo; i < blk.hi; ++i) {
          da += a.e[i];
          db += b.e[i];
        }
        if (da != db) return da < db ? -1 : 1;
      }
      for (uint32_t i = blk.lo; i <= static_cast<uint32_t>(h); ++i)
        if (a.e[i] != b.e[i]) return a.e[i] > b.e[i] ? -1 : 1;
      return 0;
    }
  }

  // ------------------------------------------------------------ polynomials

  void sort_combine(EPoly<M>& f) const {
    std::sort(f.begin(), f.end(), [this](const ETerm<M>& x, const ETerm<M>& y) { return cmp(x.m, y.m) > 0; });
    size_t out = 0;
    for (size_t i = 0; i < f.size();) {
      uint32_t c = 0;
      size_t j = i;
      for (; j < f.size() && f[j].m == f[i].m; ++j) c = F_.add(c, f[j].c);
      if (c) {
        if (out != i) f[out].m = std::move(f[i].m);
        f[out].c = c;
        ++out;
      }
      i = j;
    }
    f.resize(out);
  }

  EPoly<M> mul_mono(const EPoly<M>& g, const M& u, uint32_t c) const {
    EPoly<M> r;
    r.reserve(g.size());
    if (is_one(u)) {
      for (const auto& t : g) r.push_back({t.m, F_.mul(t.c, c)});
      return r;
    }
    for (const auto& t : g) r.push_back({mul(t.m, u), F_.mul(t.c, c)});
    sort_combine(r);
    return r;
  }

  /// a[from..] - b, both sorted.
  EPoly<M> sub(const EPoly<M>& a, size_t from, const EPoly<M>& b) const {
    EPoly<M> r;
    r.reserve(a.size() - from + b.size());
    size_t i = from, j = 0;
    while (i < a.size() && j < b.size()) {
      const int c = cmp(a[i].m, b[j].m);
      if (c > 0) {
        r.push_back(a[i++]);
      } else if (c < 0) {
        r.push_back({b[j].m, F_.neg(b[j].c)});
        ++j;
      } else {
        if (uint32_t v = F_.sub(a[i].c, b[j].c)) r.push_back({a[i].m, v});
        ++i;
        ++j;
      }
    }
    for (; i < a.size(); ++i) r.push_back(a[i]);
    for (; j < b.size(); ++j) r.push_back({b[j].m, F_.neg(b[j].c)});
    return r;
  }

  EPoly<M> mul_poly(const EPoly<M>& a, const EPoly<M>& b) const {
    EPoly<M> r;
    r.reserve(a.size() * b.size());
    for (const auto& x : a)
      for (const auto& y : b) r.push_back({mul(x.m, y.m), F_.mul(x.c, y.c)});
    sort_combine(r);
    return r;
  }

  EPoly<M> pow_poly(const EPoly<M>& a, uint32_t e) const {
    EPoly<M> r{{one(), 1}};
    for (uint32_t k = 0; k < e; ++k) r = mul_poly(r, a);
    return r;
  }

  void make_monic(EPoly<M>& f) const {
    if (f.empty() || f[0].c == 1) return;
    const uint32_t li = F_.inv(f[0].c);
    for (auto& t : f) t.c = F_.mul(t.c, li);
  }

  struct MonoHash {
    size_t operator()(const M& m) const {
      uint64_t h = 0x9e3779b97f4a7c15ull;
      if constexpr (bit) {
        for (uint64_t w : m.w) h = (h ^ w) * 0xff51afd7ed558ccdull;
      } else {
        for (uint32_t e : m.e) h = (h ^ e) * 0xff51afd7ed558ccdull;
      }
      return static_cast<size_t>(h ^ (h >> 29));
    }
  };

  /// Reduction by monic polynomials. With full = false only the leading
  /// term is reduced until it becomes irreducible. Terms are accumulated in
  /// a hash map and visited largest first through a heap, so one step costs
  /// O(|g| log |f|) rather than a merge with the whole of f.
  EPoly<M> reduce(EPoly<M> f, const std::vector<const EPoly<M>*>& G, bool full, uint64_t* steps = nullptr) const {
    if (f.empty() || G.empty()) return f;
    // Reducers bucketed by the top variable of their leading monomial; a
    // candidate for m must have its top variable inside m.
    std::vector<std::vector<const EPoly<M>*>> bucket(n_);
    const EPoly<M>* unit = nullptr;
    for (const EPoly<M>* g : G) {
      const M& lm = (*g)[0].m;
      if (lm.deg == 0) {
        unit = g;
        continue;
      }
      int64_t top = -1;
      for_each(lm, [&](uint32_t i, uint32_t) { top = i; });
      bucket[top].push_back(g);
    }
    auto reducer = [&](const M& m) -> const EPoly<M>* {
      if (unit) return unit;
      const EPoly<M>* found = nullptr;
      for_each(m, [&](uint32_t i, uint32_t) {
        if (found) return;
        for (const EPoly<M>* g : bucket[i])
          if (divides((*g)[0].m, m)) {
            found = g;
            return;
          }
      });
      return found;
    };
    if (!full && !reducer(f[0].m)) return f;

    std::unordered_map<M, uint32_t, MonoHash> acc;
    acc.reserve(2 * f.size() + 16);
    std::vector<M> heap;
    heap.reserve(2 * f.size() + 16);
    const auto less = [this](const M& a, const M& b) { return cmp(a, b) < 0; };
    auto add = [&](const M& m, uint32_t c) {
      auto [it, fresh] = acc.try_emplace(m, c);
      if (fresh) {
        heap.push_back(m);
        std::push_heap(heap.begin(), heap.end(), less);
      } else {
        it->second = F_.add(it->second, c);
      }
    };
    for (const auto& t : f) add(t.m, t.c);

    EPoly<M> rem;
    while (!heap.empty()) {
      std::pop_heap(heap.begin(), heap.end(), less);
      M m = std::move(heap.back());
      heap.pop_back();
      auto it = acc.find(m);
      const uint32_t c = it->second;
      acc.erase(it);
      if (c == 0) continue;
      const EPoly<M>* g = reducer(m);
      if (!g) {
        rem.push_back({std::move(m), c});
        if (!full) break;
        continue;
      }
      if (steps) ++*steps;
      const M u = quot(m, (*g)[0].m);
      const uint32_t nc = F_.neg(c);
      for (size_t k = 1; k < g->size(); ++k) add(mul((*g)[k].m, u), F_.mul(nc, (*g)[k].c));
    }
    // !full: drain the rest in order
    while (!heap.empty()) {
      std::pop_heap(heap.begin(), heap.end(), less);
      M m = std::move(heap.back());
      heap.pop_back();
      const uint32_t c = acc[m];
      if (c) rem.push_back({std::move(m), c});
    }
    return rem;
  }

  EPoly<M> from_poly(const Poly& f) const {
    EPoly<M> r;
    r.reserve(f.terms().size());
    for (const auto& t : f.terms()) {
      M m = one();
      for (const auto& fac : t.mono.factors()) set(m, L_->idx(fac.var), fac.exp);
      r.push_back({std::move(m), t.coeff});
    }
    sort_combine(r);
    return r;
  }

  Poly to_poly(const EPoly<M>& f) const {
    std::vector<Term> terms;
    terms.reserve(f.size());
    for (const auto& t : f) {
      std::vector<Factor> fs;
      for_each(t.m, [&](uint32_t i, uint32_t e) { fs.push_back({L_->vars[i], e}); });
      terms.push_back({Monomial::from_factors(std::move(fs), p()), t.c});
    }
    return Poly::from_terms(p(), std::move(terms));
  }

  uint32_t eval(const EPoly<M>& f, const std::vector<uint32_t>& point) const {
    uint32_t acc = 0;
    for (const auto& t : f) {
      uint32_t v = t.c;
      for_each(t.m, [&](uint32_t i, uint32_t e) { v = F_.mul(v, F_.pow(point[i], e)); });
      acc = F_.add(acc, v);
    }
    return acc;
  }

 private:
  const Layout* L_;
  PrimeField F_;
  uint32_t n_;
  bool single_degrevlex_ = false;
  std::vector<std::array<uint64_t, IsBit<M>::words>> masks_;
};

template <class M>
struct EngineResult {
  std::vector<EPoly<M>> basis;  // reduced and sorted unless aborted
  GBasis::Status status = GBasis::Status::raw;
  GBStats stats;
};

/// Buchberger with the Gebauer-Moeller criteria, normal selection strategy
/// and implicit field equations.
template <class M>
EngineResult<M> run_buchberger(const Ring<M>& R, std::vector<EPoly<M>> input, const BuchbergerOptions& opts);

/// Minimal, monic, tail-reduced basis sorted by leading monomial descending.
template <class M>
std::vector<EPoly<M>> reduce_basis(const Ring<M>& R, std::vector<EPoly<M>> G);

/// Instantiates `fn(ring)` with the monomial representation suited to L.
template <class Fn>
decltype(auto) with_ring(const Layout& L, Fn&& fn) {
  const uint32_t n = L.nvars();
  if (L.p == 2) {
    if (n <= 64) return fn(Ring<BitMono<1>>(L));
    if (n <= 128) return fn(Ring<BitMono<2>>(L));
    if (n <= 256) return fn(Ring<BitMono<4>>(L));
    if (n <= 512) return fn(Ring<BitMono<8>>(L));
    if (n <= 1024) return fn(Ring<BitMono<16>>(L));
  }
  return fn(Ring<DenseMono>(L));
}

}  // namespace diffcipher::detail

#include "gb_engine_impl.hpp"
