// Explicit difference systems x_i(r_i) = f_i: simulation, the state
// transition endomorphism and its iterates, inverse systems and periods.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "diffcipher/diffpoly.hpp"
#include "diffcipher/groebner.hpp"

namespace diffcipher {

/// Values of a state window laid out stream-major:
/// x_0(t..t+r_0-1), x_1(t..t+r_1-1), ...
using StateVec = std::vector<uint32_t>;

class DiffSystem {
 public:
  DiffSystem() = default;
  /// Validates: p prime, distinct non-empty names, orders >= 1, every update
  /// over GF(p) and using only x_j(t) with t < r_j.
  DiffSystem(uint32_t p, StreamNames names, std::vector<uint32_t> orders, std::vector<Poly> updates);

  uint32_t modulus() const { return p_; }
  size_t num_streams() const { return orders_.size(); }
  const StreamNames& names() const { return names_; }
  const std::vector<uint32_t>& orders() const { return orders_; }
  const std::vector<Poly>& updates() const { return updates_; }
  uint32_t total_order() const { return total_; }

  /// Index of x_stream(clock) in a StateVec; requires clock < order.
  size_t state_index(Var v) const;
  size_t window_start(size_t stream) const { return starts_[stream]; }
  std::vector<Var> state_vars() const;
  bool in_window(Var v) const { return v.stream < orders_.size() && v.clock < orders_[v.stream]; }

  friend bool operator==(const DiffSystem&, const DiffSystem&) = default;

 private:
  uint32_t p_ = 2;
  StreamNames names_;
  std::vector<uint32_t> orders_;
  std::vector<Poly> updates_;
  uint32_t total_ = 0;
  std::vector<size_t> starts_;
};

/// Precompiled one-step transition T for repeated simulation.
class Stepper {
 public:
  explicit Stepper(const DiffSystem& sys);
  void step(StateVec& v) const;
  const DiffSystem& system() const { return *sys_; }

 private:
  struct CTerm {
    uint32_t coeff;
    std::vector<std::pair<uint32_t, uint32_t>> factors;  // (state index, exponent)
  };
  const DiffSystem* sys_;
  PrimeField F_;
  std::vector<std::vector<CTerm>> updates_;
  mutable std::vector<uint32_t> scratch_;
};

/// T^t(initial).
StateVec simulate(const DiffSystem& sys, StateVec initial, uint64_t t);

/// Evaluates f (variables inside the state window) at a state.
uint32_t evaluate_at_state(const DiffSystem& sys, const Poly& f, const StateVec& v);

enum class EndoMethod { substitution, normal_form };

struct EndoOptions {
  /// Abort when an intermediate polynomial exceeds this many terms.
  size_t term_cap = size_t{1} << 20;
};

/// Thrown when endo_iterate exceeds its term cap.
class TermCapExceeded : public Error {
 public:
  TermCapExceeded(uint64_t at_t, size_t terms);
  uint64_t at_t;
  size_t terms;
};

/// T-bar^t(f) for f in the state subalgebra. The normal_form method reduces
/// sigma^t(f) by the difference basis {x_i(r_i) - f_i} under the clock-based
/// ordering and checks x_i(r_i) > lm(f_i) first.
Poly endo_iterate(const DiffSystem& sys, const Poly& f, uint64_t t, EndoMethod method, const EndoOptions& opts = {});

/// All iterates T-bar^s(f) for s = 0..count-1 by repeated substitution.
std::vector<Poly> endo_sequence(const DiffSystem& sys, const Poly& f, uint64_t count, const EndoOptions& opts = {});

/// Normal form of an arbitrary polynomial modulo the difference basis of
/// the system under the clock-based ordering. Throws if the ordering
/// precondition x_i(r_i) > lm(f_i) fails.
Poly difference_normal_form(const DiffSystem& sys, const Poly& f);

/// Checks x_i(r_i) > lm(f_i) under the clock-based ordering with the given
/// inner order; returns the offending stream or -1.
int ordering_violation(const DiffSystem& sys, OrderingSpec::Inner inner = OrderingSpec::Inner::degrevlex);

enum class InvertMethod { quick, full };

struct InverseResult {
  bool invertible = false;
  std::optional<DiffSystem> inverse;
  /// For the full method: the reduced basis of the state transition ideal,
  /// kept as a witness when the system is not invertible.
  std::vector<Poly> witness;
  std::string reason;
};

InverseResult invert_system(const DiffSystem& sys, InvertMethod method);

/// T^(-steps)(state) via coordinate reversal and the inverse system.
StateVec backstep(const DiffSystem& sys, const StateVec& state, uint64_t steps);
StateVec backstep_with(const DiffSystem& inverse, const StateVec& state, uint64_t steps);

/// Reverses every stream window in place.
void reverse_windows(const DiffSystem& sys, StateVec& v);

/// The subsystem of the first m streams, if its updates only use them.
std::optional<DiffSystem> subsystem_split(const DiffSystem& sys, size_t m);

enum class PeriodStrategy { orbit_lcm, linear_primitive, brute_force, automatic };

struct PeriodResult {
  bool known = false;
  uint64_t period = 0;
  uint64_t cap = 0;  // state-space cap that blocked the computation
  std::string method;
};

/// Least d >= 1 with T^d = id.
PeriodResult period(const DiffSystem& sys, PeriodStrategy strategy, uint64_t state_cap = uint64_t{1} << 24);

/// Packs a state into an integer index (base p, entry 0 least significant).
uint64_t state_to_index(const StateVec& v, uint32_t p);
StateVec index_to_state(uint64_t idx, size_t r, uint32_t p);

}  // namespace diffcipher
