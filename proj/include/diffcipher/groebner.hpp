// Buchberger over GF(p) in the quotient by the field ideal, normal forms,
// reduced bases, unique-solution extraction and Gaussian elimination.
#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "diffcipher/diffpoly.hpp"

namespace diffcipher {

struct GBasis {
  enum class Status { raw, groebner, reduced_groebner };

  std::vector<Poly> gens;
  OrderingSpec ordering;
  Status status = Status::raw;

  bool is_one() const { return gens.size() == 1 && gens[0].is_constant() && !gens[0].is_zero(); }
};

struct BuchbergerOptions {
  /// Stop once every ring variable is the leading monomial of a basis
  /// element; the point is then read off and checked against the input.
  bool early_stop_on_all_variables = false;
  /// Stop as soon as a nonzero constant enters the basis. The reduced basis
  /// of the unit ideal is {1} either way, so the engine always stops there;
  /// the flag is kept for callers that state it explicitly.
  bool early_stop_on_one = true;
  /// Abort (status raw) when a new basis element exceeds this degree.
  std::optional<uint32_t> degree_bound;
  /// Abort after this many processed pairs; 0 means unlimited.
  uint64_t max_pairs = 0;
  std::optional<std::chrono::steady_clock::time_point> deadline;
  /// Variables of the ring for clock-based orderings. Empty means the
  /// variables occurring in the generators. Bounded orderings use their own.
  std::vector<Var> ring_vars;
};

struct GBStats {
  uint64_t pairs_processed = 0;
  uint64_t field_pairs = 0;
  uint64_t pairs_pruned = 0;  // removed by the product and chain criteria
  uint64_t zero_reductions = 0;
  uint64_t reduction_steps = 0;
  uint64_t max_basis_size = 0;
  bool early_stop = false;
  bool aborted = false;
  std::string abort_reason;
};

/// Normal form with full tail reduction, dividing by the leading monomials
/// of `basis.gens` under `basis.ordering`.
Poly normal_form(const Poly& f, const GBasis& basis);

/// Groebner basis of <gens> + L, where L holds x^p - x for all variables.
/// The result is interreduced unless the run was aborted.
GBasis buchberger(const std::vector<Poly>& gens, const OrderingSpec& ord, const BuchbergerOptions& opts = {},
                  GBStats* stats = nullptr);

/// Reduced Groebner basis: minimal, monic, tail-reduced and sorted by
/// leading monomial, largest first.
GBasis interreduce(const GBasis& basis);

struct SolveOutcome {
  enum class Status { unique, inconsistent, indeterminate, aborted };

  Status status = Status::indeterminate;
  std::map<Var, uint32_t> assignment;  // for unique
  GBasis basis;
  GBStats stats;
};

/// Solves gens = 0 over GF(p)^vars with degrevlex on `vars` (listed most
/// significant first). Every variable in gens must be in `vars`.
SolveOutcome solve_unique(const std::vector<Poly>& gens, const std::vector<Var>& vars,
                          const BuchbergerOptions& opts = {});

struct SolutionSet {
  std::vector<std::map<Var, uint32_t>> points;
  /// False when the enumeration stopped at the cap or on an aborted solve.
  bool complete = true;
  uint64_t solves = 0;
};

/// All points of gens = 0 over GF(p)^vars, by branching on an undetermined
/// variable of the reduced basis whenever a solve is not unique. Stops
/// after max_points points.
SolutionSet enumerate_solutions(const std::vector<Poly>& gens, const std::vector<Var>& vars, size_t max_points,
                                const BuchbergerOptions& opts = {});

/// Row-reduced linear system. Column j of `rows` refers to `columns[j]`; the
/// last entry of each row is the constant term.
struct LinearSlice {
  uint32_t modulus = 2;
  std::vector<Var> columns;
  std::vector<std::vector<uint32_t>> rows;  // reduced row echelon form, no zero rows
  std::vector<Var> pivot_vars;
  std::vector<Var> free_vars;
  bool inconsistent = false;  // a row 0 = c with c != 0 was derived

  /// pivot -> affine polynomial in the free variables.
  std::map<Var, Poly> substitutions() const;
};

/// Gaussian elimination of degree <= 1 polynomials. Columns default to
/// stream-major, clock-ascending order; pivots are taken leftmost. Throws on
/// a nonlinear input.
LinearSlice gaussian_eliminate(const std::vector<Poly>& linear_gens, std::vector<Var> columns = {});

}  // namespace diffcipher
