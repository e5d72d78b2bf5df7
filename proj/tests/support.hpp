// Independent oracles shared by the unit and acceptance tests: brute-force
// solving, a small DPLL solver, bit-level Bivium/Trivium and random systems.
#pragma once

#include <functional>
#include <map>
#include <random>
#include <vector>

#include "diffcipher/attack.hpp"
#include "diffcipher/cipher.hpp"
#include "diffcipher/system.hpp"

namespace oracle {

using namespace diffcipher;

// Every point of gens = 0 over GF(p)^vars.
inline std::vector<std::map<Var, uint32_t>> brute_solutions(const std::vector<Poly>& gens, const std::vector<Var>& vars,
                                                           uint32_t p) {
  std::vector<std::map<Var, uint32_t>> out;
  uint64_t total = 1;
  for (size_t i = 0; i < vars.size(); ++i) total *= p;
  for (uint64_t idx = 0; idx < total; ++idx) {
    std::map<Var, uint32_t> a;
    uint64_t r = idx;
    for (Var v : vars) {
      a[v] = static_cast<uint32_t>(r % p);
      r /= p;
    }
    bool ok = true;
    for (const Poly& g : gens)
      if (g.evaluate(a) != 0) {
        ok = false;
        break;
      }
    if (ok) out.push_back(std::move(a));
  }
  return out;
}

// Plain recursive DPLL with unit propagation. Returns a model (index 1..n)
// or an empty vector when unsatisfiable.
class Dpll {
 public:
  Dpll(uint32_t n, std::vector<std::vector<int>> clauses) : n_(n), cls_(std::move(clauses)), val_(n + 1, 0) {}

  std::vector<int8_t> solve() {
    if (!rec()) return {};
    std::vector<int8_t> m(n_ + 1, 0);
    for (uint32_t i = 1; i <= n_; ++i) m[i] = val_[i] > 0 ? 1 : 0;
    return m;
  }

 private:
  int lit_value(int l) const {
    const int v = val_[static_cast<size_t>(std::abs(l))];
    return l > 0 ? v : -v;
  }
  bool rec() {
    std::vector<int> trail;
    auto undo = [&] {
      for (int v : trail) val_[static_cast<size_t>(v)] = 0;
    };
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& c : cls_) {
        int unassigned = 0, last = 0;
        bool sat = false;
        for (int l : c) {
          const int x = lit_value(l);
          if (x > 0) {
            sat = true;
            break;
          }
          if (x == 0) {
            ++unassigned;
            last = l;
          }
        }
        if (sat) continue;
        if (unassigned == 0) {
          undo();
          return false;
        }
        if (unassigned == 1) {
          val_[static_cast<size_t>(std::abs(last))] = last > 0 ? 1 : -1;
          trail.push_back(std::abs(last));
          changed = true;
        }
      }
    }
    uint32_t pick = 0;
    for (uint32_t i = 1; i <= n_ && !pick; ++i)
      if (val_[i] == 0) pick = i;
    if (!pick) return true;
    for (int s : {1, -1}) {
      val_[pick] = s;
      if (rec()) return true;
    }
    val_[pick] = 0;
    undo();
    return false;
  }

  uint32_t n_;
  std::vector<std::vector<int>> cls_;
  std::vector<int> val_;
};

// Bit-level Bivium (B) and Trivium from the register description: s[1..n],
// key bits to s1.., iv bits to s94...
struct TriviumRef {
  bool bivium;
  std::vector<uint8_t> s;  // 1-based

  TriviumRef(bool biv, const std::vector<uint32_t>& key, const std::vector<uint32_t>& iv)
      : bivium(biv), s(biv ? 178 : 289, 0) {
    for (int i = 0; i < 80; ++i) {
      s[static_cast<size_t>(1 + i)] = static_cast<uint8_t>(key[static_cast<size_t>(i)]);
      s[static_cast<size_t>(94 + i)] = static_cast<uint8_t>(iv[static_cast<size_t>(i)]);
    }
    if (!biv) s[286] = s[287] = s[288] = 1;
    for (size_t i = 0; i < 4 * (s.size() - 1); ++i) clock();
  }

  uint8_t clock() {
    uint8_t t1 = s[66] ^ s[93], t2 = s[162] ^ s[177], t3 = 0;
    uint8_t z = t1 ^ t2;
    if (!bivium) {
      t3 = s[243] ^ s[288];
      z ^= t3;
    }
    t1 ^= (s[91] & s[92]) ^ s[171];
    if (bivium) {
      t2 ^= (s[175] & s[176]) ^ s[69];
    } else {
      t2 ^= (s[175] & s[176]) ^ s[264];
      t3 ^= (s[286] & s[287]) ^ s[69];
    }
    const uint8_t into_a = bivium ? t2 : t3;
    for (size_t i = 93; i > 1; --i) s[i] = s[i - 1];
    s[1] = into_a;
    for (size_t i = 177; i > 94; --i) s[i] = s[i - 1];
    s[94] = t1;
    if (!bivium) {
      for (size_t i = 288; i > 178; --i) s[i] = s[i - 1];
      s[178] = t2;
    }
    return z;
  }

  std::vector<uint32_t> keystream(size_t n) {
    std::vector<uint32_t> out;
    for (size_t i = 0; i < n; ++i) out.push_back(clock());
    return out;
  }
};

inline std::vector<uint32_t> random_bits(std::mt19937_64& rng, size_t n) {
  std::vector<uint32_t> v(n);
  for (auto& x : v) x = static_cast<uint32_t>(rng() & 1);
  return v;
}

// Random polynomial over GF(p) in the given variables.
inline Poly random_poly(std::mt19937_64& rng, uint32_t p, const std::vector<Var>& vars, int terms, int max_deg) {
  std::vector<std::pair<int64_t, std::vector<Factor>>> raw;
  for (int k = 0; k < terms; ++k) {
    std::vector<Factor> fs;
    const int d = static_cast<int>(rng() % static_cast<uint64_t>(max_deg + 1));
    for (int j = 0; j < d; ++j) fs.push_back({vars[rng() % vars.size()], static_cast<uint32_t>(1 + rng() % (p - 1))});
    raw.emplace_back(static_cast<int64_t>(1 + rng() % (p - 1)), fs);
  }
  return Poly::from_terms(p, raw);
}

// Random explicit system over GF(2) with total order r: update i is
// a_i(0) plus random terms inside the windows. Half of the systems keep
// clock-0 variables out of the random part, which makes them invertible.
// Resampled until the clock-based ordering precondition holds.
inline DiffSystem random_system(std::mt19937_64& rng, uint32_t r_total) {
  for (;;) {
    const uint32_t n = 1 + static_cast<uint32_t>(rng() % std::min<uint32_t>(3, r_total));
    std::vector<uint32_t> orders(n, 1);
    for (uint32_t k = n; k < r_total; ++k) ++orders[rng() % n];
    StreamNames names;
    for (uint32_t i = 0; i < n; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
    const bool triangular = rng() & 1;
    std::vector<Var> window;
    for (uint32_t i = 0; i < n; ++i)
      for (uint32_t c = triangular ? 1 : 0; c < orders[i]; ++c) window.push_back({i, c});
    if (window.empty()) window.push_back({0, 0});
    std::vector<Poly> ups;
    for (uint32_t i = 0; i < n; ++i) {
      Poly u = Poly::variable(2, {i, 0});
      if (!(triangular && window.front() == Var{0, 0})) u = u + random_poly(rng, 2, window, 1 + static_cast<int>(rng() % 4), 3);
      ups.push_back(u);
    }
    DiffSystem S(2, names, orders, ups);
    if (ordering_violation(S) == -1) return S;
  }
}

}  // namespace oracle
