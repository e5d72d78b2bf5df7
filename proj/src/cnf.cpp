#include <algorithm>
#include <bit>
#include <sstream>

#include "diffcipher/attack.hpp"

namespace diffcipher {

namespace {

struct CnfBuilder {
  Cnf out;
  std::map<std::vector<int>, int> and_index;  // sorted factor literals -> aux
  uint32_t xor_aux = 0;

  int fresh(std::string label) {
    const int v = static_cast<int>(++out.num_vars);
    out.map.emplace_back(v, std::move(label));
    return v;
  }

  // Clauses forbidding every assignment whose parity differs from `rhs`.
  void parity(const std::vector<int>& lits, bool rhs) {
    const size_t k = lits.size();
    if (k == 0) {
      if (rhs) out.clauses.emplace_back();
      return;
    }
    for (uint64_t a = 0; a < (uint64_t{1} << k); ++a) {
      if ((std::popcount(a) & 1) == static_cast<int>(rhs)) continue;
      std::vector<int> cl(k);
      for (size_t i = 0; i < k; ++i) cl[i] = ((a >> i) & 1) ? -lits[i] : lits[i];
      out.clauses.push_back(std::move(cl));
    }
  }
};

}  // namespace

Cnf export_cnf(const std::vector<Poly>& eqs, const StreamNames& names, const CnfOptions& opts) {
  if (opts.xor_cut < 3) throw Error("export_cnf: xor_cut must be at least 3");
  CnfBuilder b;
  std::vector<Var> vars;
  for (const Poly& f : eqs) {
    if (f.modulus() != 2) throw Error("export_cnf: only GF(2) equations can be exported");
    for (Var v : f.vars()) vars.push_back(v);
  }
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  for (Var v : vars) b.out.var_index[v] = b.fresh(format_var(v, names));

  for (const Poly& f : eqs) {
    std::vector<int> lits;
    bool rhs = false;
    for (const Term& t : f.terms()) {
      const auto& fs = t.mono.factors();
      if (fs.empty()) {
        rhs = !rhs;
        continue;
      }
      if (fs.size() == 1) {
        lits.push_back(b.out.var_index.at(fs[0].var));
        continue;
      }
      std::vector<int> key;
      for (const Factor& x : fs) key.push_back(b.out.var_index.at(x.var));
      auto it = b.and_index.find(key);
      if (it == b.and_index.end()) {
        const int a = b.fresh(format_monomial(t.mono, names));
        std::vector<int> big{a};
        for (int x : key) {
          b.out.clauses.push_back({-a, x});
          big.push_back(-x);
        }
        b.out.clauses.push_back(std::move(big));
        it = b.and_index.emplace(std::move(key), a).first;
      }
      lits.push_back(it->second);
    }
    // Cut long XORs: the first xor_cut - 1 literals are folded into a fresh
    // variable until the chain fits.
    while (lits.size() > opts.xor_cut) {
      std::vector<int> head(lits.begin(), lits.begin() + (opts.xor_cut - 1));
      const int t = b.fresh("xor" + std::to_string(++b.xor_aux));
      head.push_back(t);
      b.parity(head, false);
      lits.erase(lits.begin(), lits.begin() + (opts.xor_cut - 1));
      lits.push_back(t);
    }
    b.parity(lits, rhs);
  }
  return std::move(b.out);
}

std::string Cnf::dimacs() const {
  std::ostringstream os;
  os << "p cnf " << num_vars << ' ' << clauses.size() << '\n';
  for (const auto& cl : clauses) {
    for (int l : cl) os << l << ' ';
    os << "0\n";
  }
  return os.str();
}

std::string Cnf::sidecar() const {
  std::ostringstream os;
  for (const auto& [v, label] : map) os << v << ' ' << label << '\n';
  return os.str();
}

}  // namespace diffcipher
