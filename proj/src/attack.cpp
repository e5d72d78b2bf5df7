#include "diffcipher/attack.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "json.hpp"

namespace diffcipher {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

/// Most significant first under the clock-based ordering: higher clock,
/// then higher stream.
void sort_significant_first(std::vector<Var>& vs) {
  std::sort(vs.begin(), vs.end(), [](Var a, Var b) { return b < a; });
  vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
}

Poly rename_vars(const Poly& f, const std::function<Var(Var)>& fn) {
  std::vector<Term> ts;
  ts.reserve(f.terms().size());
  for (const Term& t : f.terms()) {
    std::vector<Factor> fs;
    for (const Factor& x : t.mono.factors()) fs.push_back({fn(x.var), x.exp});
    ts.push_back({Monomial::from_factors(std::move(fs), f.modulus()), t.coeff});
  }
  return Poly::from_terms(f.modulus(), std::move(ts));
}

uint32_t stride_of(const Poly& f) {
  uint64_t g = 0;
  const auto vs = f.vars();
  for (size_t i = 1; i < vs.size(); ++i) {
    const int64_t d = static_cast<int64_t>(vs[i].clock) - static_cast<int64_t>(vs[0].clock);
    g = std::gcd(g, static_cast<uint64_t>(d < 0 ? -d : d));
  }
  return g == 0 ? 1 : static_cast<uint32_t>(g);
}

/// Runs fn(i) for i in [begin, end) on `threads` workers, in increasing
/// order of claim. fn returns false to request that no index above i runs.
void run_indexed(uint64_t begin, uint64_t end, unsigned threads, const std::function<bool(uint64_t)>& fn,
                 std::atomic<uint64_t>& cutoff) {
  std::atomic<uint64_t> next{begin};
  auto worker = [&] {
    while (true) {
      const uint64_t i = next.fetch_add(1);
      if (i >= end || i > cutoff.load()) return;
      if (!fn(i)) {
        uint64_t cur = cutoff.load();
        while (i < cur && !cutoff.compare_exchange_weak(cur, i)) {
        }
      }
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

struct GuessRecord {
  uint64_t index;
  enum Kind { solved, inconsistent, indeterminate, timeout, mismatch, filtered } kind;
  double ms;
  GBStats stats;
  std::map<Var, uint32_t> assignment;
};

/// Rolling median of the last solve times.
class MedianWindow {
 public:
  void add(double ms) {
    std::lock_guard lk(mu_);
    if (w_.size() == 101) w_.erase(w_.begin());
    w_.push_back(ms);
    ++count_;
  }
  std::optional<double> median(uint64_t warmup) const {
    std::lock_guard lk(mu_);
    if (count_ < std::max<uint64_t>(1, warmup)) return std::nullopt;
    std::vector<double> c = w_;
    std::nth_element(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(c.size() / 2), c.end());
    return c[c.size() / 2];
  }

 private:
  mutable std::mutex mu_;
  std::vector<double> w_;
  uint64_t count_ = 0;
};

void fill_report(AttackReport& rep, std::vector<GuessRecord>& recs, bool stop_on_success, uint64_t shard_begin,
                 uint64_t scan_begin, double campaign_size) {
  std::sort(recs.begin(), recs.end(), [](const GuessRecord& a, const GuessRecord& b) { return a.index < b.index; });
  std::optional<uint64_t> best;
  for (const auto& r : recs)
    if (r.kind == GuessRecord::solved) {
      if (!best) best = r.index;
      rep.solutions.push_back(r.index);
    }
  if (stop_on_success && best) std::erase_if(recs, [&](const GuessRecord& r) { return r.index > *best; });
  std::vector<double> times;
  for (const auto& r : recs) {
    switch (r.kind) {
      case GuessRecord::solved: ++rep.tally.solved; break;
      case GuessRecord::inconsistent: ++rep.tally.inconsistent; break;
      case GuessRecord::indeterminate: ++rep.tally.indeterminate; break;
      case GuessRecord::timeout: ++rep.tally.timeout; break;
      case GuessRecord::mismatch: ++rep.tally.mismatch; break;
      case GuessRecord::filtered: ++rep.tally.filtered; break;
    }
    if (r.kind != GuessRecord::filtered) times.push_back(r.ms);
    rep.pairs_processed += r.stats.pairs_processed;
    rep.reduction_steps += r.stats.reduction_steps;
    rep.zero_reductions += r.stats.zero_reductions;
    rep.max_basis_size = std::max(rep.max_basis_size, r.stats.max_basis_size);
  }
  if (stop_on_success && best) rep.solutions = {*best};
  rep.guesses_done = recs.size();
  uint64_t resume = scan_begin;
  for (const auto& r : recs) {
    if (r.index == resume)
      ++resume;
    else if (r.index > resume)
      break;
  }
  rep.resume_from = resume - shard_begin;
  if (!times.empty()) {
    rep.mean_guess_ms = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
    std::sort(times.begin(), times.end());
    rep.median_guess_ms = times[times.size() / 2];
    rep.expected_campaign_ms = rep.mean_guess_ms * campaign_size / 2;
  }
  if (best) {
    rep.winning_guess = *best;
    for (auto& r : recs)
      if (r.index == *best) rep.assignment = std::move(r.assignment);
  }
}

}  // namespace

const char* outcome_name(AttackReport::Outcome o) {
  switch (o) {
    case AttackReport::Outcome::recovered: return "recovered";
    case AttackReport::Outcome::exhausted: return "exhausted";
    case AttackReport::Outcome::aborted: return "aborted";
  }
  return "?";
}

// ------------------------------------------------------------------ equations

KeyEquations key_equations(const CipherSpec& c, const std::vector<uint32_t>& keystream, AttackTarget target,
                           const EndoOptions& opts) {
  if (!c.is_stream()) throw Error("key equations need a stream cipher");
  const DiffSystem& S = c.system;
  const uint32_t p = S.modulus();
  for (uint32_t b : keystream)
    if (b >= p) throw Error("keystream value outside GF(" + std::to_string(p) + ")");
  KeyEquations eq;
  eq.modulus = p;
  eq.names = S.names();
  eq.stride = stride_of(c.keystream);
  std::vector<Poly> fs;
  if (target == AttackTarget::offset_state) {
    InverseResult inv = invert_system(S, InvertMethod::quick);
    if (!inv.invertible) inv = invert_system(S, InvertMethod::full);
    if (!inv.invertible) throw Error("offset-state equations need an invertible system: " + inv.reason);
    eq.target_clock = c.offset;
    fs = endo_sequence(S, c.keystream, keystream.size(), opts);
  } else {
    eq.target_clock = 0;
    fs = endo_sequence(S, c.keystream, c.offset + keystream.size(), opts);
    fs.erase(fs.begin(), fs.begin() + static_cast<std::ptrdiff_t>(c.offset));
  }
  for (size_t t = 0; t < keystream.size(); ++t) eq.generators.push_back(fs[t] - Poly::constant(p, keystream[t]));
  eq.variables = S.state_vars();
  sort_significant_first(eq.variables);
  return eq;
}

SliceResult linear_slice(const KeyEquations& eqs) {
  SliceResult out;
  const uint32_t g = std::max<uint32_t>(1, eqs.stride);
  std::vector<std::vector<Poly>> parts(g);
  for (size_t t = 0; t < eqs.generators.size(); ++t) {
    const Poly& f = eqs.generators[t];
    if (f.degree() <= 1 && !f.is_zero()) parts[t % g].push_back(f);
  }
  for (auto& part : parts) {
    out.slice_sizes.push_back(part.size());
    if (part.empty()) {
      LinearSlice s;
      s.modulus = eqs.modulus;
      out.slices.push_back(std::move(s));
      continue;
    }
    LinearSlice s = gaussian_eliminate(part);
    out.inconsistent |= s.inconsistent;
    for (auto& [v, rhs] : s.substitutions()) out.forced.emplace(v, std::move(rhs));
    out.slices.push_back(std::move(s));
  }
  return out;
}

std::vector<Poly> substitute_all(const std::vector<Poly>& gens, const std::map<Var, Poly>& subs) {
  std::vector<Poly> out;
  auto image = [&](Var v) -> const Poly* {
    auto it = subs.find(v);
    return it == subs.end() ? nullptr : &it->second;
  };
  for (const Poly& f : gens) {
    Poly h = f.substitute(image);
    if (!h.is_zero()) out.push_back(std::move(h));
  }
  return out;
}

std::vector<Var> bivium_guess_vars() {
  std::vector<Var> v;
  for (uint32_t j = 68; j <= 92; j += 3) v.push_back({0, j});
  for (uint32_t j = 2; j <= 80; j += 3) v.push_back({1, j});
  v.push_back({1, 3});
  v.push_back({1, 4});
  return v;
}

// ------------------------------------------------------------------ guessing

uint64_t guess_space_size(uint32_t p, size_t s) {
  unsigned __int128 n = 1;
  for (size_t i = 0; i < s; ++i) {
    n *= p;
    if (n > std::numeric_limits<uint64_t>::max()) throw Error("guess space does not fit 64 bits");
  }
  return static_cast<uint64_t>(n);
}

std::vector<uint32_t> guess_values(const GuessSpec& g, uint32_t p, uint64_t index) {
  if (!g.values.empty()) return g.values.at(index);
  std::vector<uint32_t> a(g.vars.size());
  for (auto& x : a) {
    x = static_cast<uint32_t>(index % p);
    index /= p;
  }
  return a;
}

AttackReport guess_and_determine(const KeyEquations& eqs, const GuessSpec& guess, const AttackOptions& opts,
                                 const SolutionCheck& check) {
  const auto t0 = Clock::now();
  const uint32_t p = eqs.modulus;
  if (guess.shard_count == 0 || guess.shard_index >= guess.shard_count) throw Error("shard index out of range");
  {
    const std::set<Var> known(eqs.variables.begin(), eqs.variables.end());
    for (Var v : guess.vars)
      if (!known.count(v)) throw Error("guess variable outside the solving variables");
    for (const auto& a : guess.values)
      if (a.size() != guess.vars.size()) throw Error("guess value list has the wrong length");
  }
  const uint64_t N = guess.values.empty() ? guess_space_size(p, guess.vars.size()) : guess.values.size();
  const auto lo = static_cast<uint64_t>(static_cast<unsigned __int128>(N) * guess.shard_index / guess.shard_count);
  const auto hi = static_cast<uint64_t>(static_cast<unsigned __int128>(N) * (guess.shard_index + 1) / guess.shard_count);
  const uint64_t begin = std::min(hi, lo + guess.resume_from);
  uint64_t end = hi;
  if (opts.max_guesses) end = std::min(end, begin + opts.max_guesses);

  AttackReport rep;
  rep.shard_index = guess.shard_index;
  rep.shard_count = guess.shard_count;
  rep.guess_space = hi - lo;

  std::mutex mu;
  std::vector<GuessRecord> recs;
  MedianWindow med;
  std::atomic<uint64_t> cutoff{std::numeric_limits<uint64_t>::max()};
  std::atomic<bool> out_of_budget{false};
  const std::optional<Clock::time_point> run_deadline =
      opts.budget_ms > 0 ? std::optional(t0 + std::chrono::microseconds(static_cast<int64_t>(opts.budget_ms * 1000)))
                         : std::nullopt;

  auto one = [&](uint64_t i) -> bool {
    if (run_deadline && Clock::now() > *run_deadline) {
      out_of_budget = true;
      return true;
    }
    const auto g0 = Clock::now();
    const std::vector<uint32_t> alpha = guess_values(guess, p, i);
    std::vector<Poly> gens = eqs.generators;
    for (size_t j = 0; j < guess.vars.size(); ++j)
      gens.push_back(Poly::variable(p, guess.vars[j]) - Poly::constant(p, alpha[j]));
    BuchbergerOptions bo = opts.gb;
    std::optional<double> limit;
    if (opts.per_guess_ms > 0) limit = opts.per_guess_ms;
    if (opts.timeout_factor > 0)
      if (auto m = med.median(opts.warmup)) limit = std::min(limit.value_or(1e300), opts.timeout_factor * std::max(*m, 1.0));
    if (limit) bo.deadline = g0 + std::chrono::microseconds(static_cast<int64_t>(*limit * 1000));
    if (run_deadline && (!bo.deadline || *run_deadline < *bo.deadline)) bo.deadline = run_deadline;

    SolveOutcome so = solve_unique(gens, eqs.variables, bo);
    GuessRecord rec{i, GuessRecord::indeterminate, 0, so.stats, {}};
    switch (so.status) {
      case SolveOutcome::Status::inconsistent: rec.kind = GuessRecord::inconsistent; break;
      case SolveOutcome::Status::indeterminate: {
        if (opts.enumerate_cap == 0) break;
        const SolutionSet sols = enumerate_solutions(so.basis.gens, eqs.variables, opts.enumerate_cap, bo);
        std::vector<const std::map<Var, uint32_t>*> pass;
        for (const auto& pt : sols.points)
          if (!check || check(pt)) pass.push_back(&pt);
        if (pass.size() == 1 && sols.complete) {
          rec.kind = GuessRecord::solved;
          rec.assignment = *pass[0];
        } else if (pass.empty() && sols.complete) {
          rec.kind = GuessRecord::mismatch;
        }
        break;
      }
      case SolveOutcome::Status::aborted: rec.kind = GuessRecord::timeout; break;
      case SolveOutcome::Status::unique: {
        bool ok = true;
        for (const Poly& f : eqs.generators)
          if (f.evaluate(so.assignment) != 0) {
            ok = false;
            break;
          }
        if (ok && check) ok = check(so.assignment);
        rec.kind = ok ? GuessRecord::solved : GuessRecord::mismatch;
        if (ok) rec.assignment = std::move(so.assignment);
        break;
      }
    }
    rec.ms = ms_since(g0);
    if (rec.kind == GuessRecord::timeout && run_deadline && Clock::now() > *run_deadline) {
      out_of_budget = true;  // cut short by the run budget, not by the guess
      return true;
    }
    if (rec.kind != GuessRecord::timeout) med.add(rec.ms);
    const bool stop = rec.kind == GuessRecord::solved && opts.stop_on_success;
    {
      std::lock_guard lk(mu);
      recs.push_back(std::move(rec));
    }
    return !stop;
  };
  run_indexed(begin, end, opts.threads, one, cutoff);

  fill_report(rep, recs, opts.stop_on_success, lo, begin, static_cast<double>(N));
  rep.total_ms = ms_since(t0);
  if (rep.winning_guess)
    rep.outcome = AttackReport::Outcome::recovered;
  else if (lo + rep.resume_from < hi)
    rep.outcome = AttackReport::Outcome::aborted;
  else
    rep.outcome = AttackReport::Outcome::exhausted;
  if (rep.outcome == AttackReport::Outcome::aborted) rep.note = out_of_budget ? "budget exhausted" : "guess limit reached";
  return rep;
}

// ------------------------------------------------------------------ streams

StateVec recover_initial(const CipherSpec& c, const StateVec& state_at_T) {
  const uint64_t T = c.is_stream() ? c.offset : c.final_clock;
  if (state_at_T.size() != c.state_length()) throw Error("state has the wrong length");
  if (T == 0) return state_at_T;
  if (c.is_block()) return backstep_with(c.inverse, state_at_T, T);
  return backstep(c.system, state_at_T, T);
}

AttackReport attack_stream(const CipherSpec& c, const std::vector<uint32_t>& keystream, const GuessSpec& guess,
                           const AttackOptions& opts, AttackTarget target) {
  const KeyEquations eqs = key_equations(c, keystream, target);
  const uint64_t from = target == AttackTarget::offset_state ? 0 : c.offset;
  auto to_state = [&](const std::map<Var, uint32_t>& a) {
    StateVec v(c.state_length(), 0);
    for (const auto& [var, val] : a) v[c.system.state_index(var)] = val;
    return v;
  };
  auto check = [&](const std::map<Var, uint32_t>& a) {
    return keystream_gen(c, to_state(a), from, keystream.size()) == keystream;
  };
  AttackReport rep = guess_and_determine(eqs, guess, opts, check);
  if (rep.outcome == AttackReport::Outcome::recovered) {
    rep.state = to_state(rep.assignment);
    rep.initial_state = target == AttackTarget::offset_state ? recover_initial(c, rep.state) : rep.state;
  }
  return rep;
}

// ------------------------------------------------------------------ blocks

KeyEquations block_pair_equations(const CipherSpec& c, const std::vector<BlockPair>& pairs, uint64_t effective_T) {
  if (!c.is_block()) throw Error("pair attack needs a block cipher");
  if (pairs.empty()) throw Error("pair attack needs at least one pair");
  if (effective_T > c.final_clock) throw Error("effective clock exceeds the final clock");
  if (effective_T > 0xffff0000u) throw Error("effective clock too large");
  const DiffSystem& S = c.system;
  const uint32_t p = S.modulus();
  const uint32_t m = c.split;
  const uint32_t n = static_cast<uint32_t>(S.num_streams());
  const uint32_t nb = n - m;
  const auto B = static_cast<uint32_t>(effective_T);
  for (const auto& [pt, ct] : pairs) {
    assemble_state(c, std::vector<uint32_t>(c.key_length, 0), pt);
    assemble_state(c, std::vector<uint32_t>(c.key_length, 0), ct);
  }

  KeyEquations eq;
  eq.modulus = p;
  eq.names.assign(S.names().begin(), S.names().begin() + m);
  for (size_t a = 0; a < pairs.size(); ++a) {
    std::string suffix;
    for (size_t k = a + 1; k > 0; k = (k - 1) / 26) suffix.insert(suffix.begin(), static_cast<char>('a' + (k - 1) % 26));
    for (uint32_t j = m; j < n; ++j) eq.names.push_back(S.names()[j] + "_" + suffix);
  }
  auto rename_for = [&](size_t a) {
    return [&, a](Var v) { return v.stream < m ? v : Var{static_cast<uint32_t>(m + a * nb + (v.stream - m)), v.clock}; };
  };

  std::set<Var> vars;
  std::vector<int64_t> key_max(m, -1);
  for (uint32_t i = 0; i < m; ++i) key_max[i] = S.orders()[i] - 1;
  auto note_vars = [&](const Poly& f) {
    for (Var v : f.vars()) {
      vars.insert(v);
      if (v.stream < m) key_max[v.stream] = std::max<int64_t>(key_max[v.stream], v.clock);
    }
  };

  for (size_t a = 0; a < pairs.size(); ++a) {
    const auto ren = rename_for(a);
    for (uint32_t t = 0; t < B; ++t)
      for (uint32_t j = m; j < n; ++j) {
        Poly lhs = Poly::variable(p, ren(Var{j, t + S.orders()[j]}));
        Poly g = lhs - rename_vars(S.updates()[j].shift(t), ren);
        note_vars(g);
        eq.generators.push_back(std::move(g));
      }
    const auto& [pt, ct] = pairs[a];
    for (uint32_t j = m; j < n; ++j)
      for (uint32_t cl = 0; cl < S.orders()[j]; ++cl) {
        const size_t idx = S.window_start(j) - c.key_length + cl;
        Poly g0 = Poly::variable(p, ren(Var{j, cl})) - Poly::constant(p, pt[idx]);
        Poly gT = Poly::variable(p, ren(Var{j, B + cl})) - Poly::constant(p, ct[idx]);
        note_vars(g0);
        note_vars(gT);
        eq.generators.push_back(std::move(g0));
        eq.generators.push_back(std::move(gT));
      }
  }
  // key subsystem equations up to the largest key clock in use; new key
  // variables can only appear at smaller clocks, so this settles.
  std::vector<int64_t> done(m, -1);  // largest t already emitted per stream
  bool changed = true;
  while (changed) {
    changed = false;
    for (uint32_t i = 0; i < m; ++i) {
      const int64_t r = S.orders()[i];
      for (int64_t t = done[i] + 1; t + r <= key_max[i]; ++t) {
        Poly g = Poly::variable(p, Var{i, static_cast<uint32_t>(t + r)}) - S.updates()[i].shift(static_cast<uint32_t>(t));
        note_vars(g);
        eq.generators.push_back(std::move(g));
        done[i] = t;
        changed = true;
      }
    }
  }
  for (uint32_t i = 0; i < m; ++i)
    for (int64_t cl = 0; cl <= key_max[i]; ++cl) vars.insert(Var{i, static_cast<uint32_t>(cl)});
  eq.variables.assign(vars.begin(), vars.end());
  sort_significant_first(eq.variables);
  return eq;
}

AttackReport block_pair_attack(const CipherSpec& c, const std::vector<BlockPair>& pairs, uint64_t effective_T,
                               const GuessSpec& guess, const AttackOptions& opts, const KeyCheck& key_check) {
  const KeyEquations eqs = block_pair_equations(c, pairs, effective_T);
  auto to_key = [&](const std::map<Var, uint32_t>& a) {
    std::vector<uint32_t> key(c.key_length, 0);
    for (uint32_t i = 0; i < c.split; ++i)
      for (uint32_t cl = 0; cl < c.system.orders()[i]; ++cl) key[c.system.window_start(i) + cl] = a.at(Var{i, cl});
    return key;
  };
  auto check = [&](const std::map<Var, uint32_t>& a) {
    const auto key = to_key(a);
    for (const auto& [pt, ct] : pairs)
      if (block_encrypt(c, key, pt, effective_T) != ct) return false;
    return !key_check || key_check(key);
  };
  AttackReport rep = guess_and_determine(eqs, guess, opts, check);
  if (rep.outcome == AttackReport::Outcome::recovered) rep.key = to_key(rep.assignment);
  return rep;
}

std::vector<std::vector<uint32_t>> fixed_point_search(const BlockOracle& oracle, uint32_t p, size_t l,
                                                      uint64_t budget, uint64_t seed) {
  std::vector<std::vector<uint32_t>> out;
  std::optional<uint64_t> space;
  try {
    space = guess_space_size(p, l);
  } catch (const Error&) {
  }
  if (space && *space <= budget) {
    for (uint64_t i = 0; i < *space; ++i) {
      StateVec v = index_to_state(i, l, p);
      if (oracle(v) == v) out.push_back(std::move(v));
    }
    return out;
  }
  std::mt19937_64 rng(seed);
  std::set<std::vector<uint32_t>> seen;
  for (uint64_t k = 0; k < budget; ++k) {
    std::vector<uint32_t> v(l);
    for (auto& x : v) x = static_cast<uint32_t>(rng() % p);
    if (oracle(v) == v && seen.insert(v).second) out.push_back(std::move(v));
  }
  return out;
}

// ------------------------------------------------------------------ KeeLoq

AttackReport keeloq_attack(const CipherSpec& c, const std::vector<BlockPair>& pairs, const KeeloqAttackOptions& opts) {
  const auto t0 = Clock::now();
  if (!c.is_block() || c.key_length != 64 || c.block_length != 32 || c.split != 1 || c.final_clock != 528)
    throw Error("keeloq_attack needs the KeeLoq block cipher");
  if (pairs.empty()) throw Error("keeloq_attack needs pairs");
  std::vector<std::pair<uint32_t, uint32_t>> words;
  for (const auto& [pt, ct] : pairs) {
    if (pt.size() != 32 || ct.size() != 32) throw Error("KeeLoq blocks have 32 bits");
    words.emplace_back(static_cast<uint32_t>(bits_to_word(pt)), static_cast<uint32_t>(bits_to_word(ct)));
  }
  std::vector<uint32_t> cands = opts.k_low;
  if (cands.empty()) {
    cands.resize(1u << 16);
    std::iota(cands.begin(), cands.end(), 0u);
  }
  for (uint32_t k : cands)
    if (k >> 16) throw Error("k(0..15) candidate wider than 16 bits");
  const size_t need = std::min(std::max<size_t>(1, opts.pairs_per_solve), words.size());

  GuessSpec guess;
  for (uint32_t j = 0; j < 16; ++j) guess.vars.push_back({0, j});
  AttackOptions inner = opts.solve;
  inner.threads = 1;

  std::mutex mu;
  std::vector<GuessRecord> recs;
  std::atomic<uint64_t> cutoff{std::numeric_limits<uint64_t>::max()};
  std::atomic<bool> out_of_budget{false};

  auto one = [&](uint64_t i) -> bool {
    if (opts.solve.budget_ms > 0 && ms_since(t0) > opts.solve.budget_ms) {
      out_of_budget = true;
      return true;
    }
    const auto g0 = Clock::now();
    const uint32_t kl = cands[i];
    std::vector<BlockPair> sel;
    for (const auto& [pt, ct] : words) {
      const uint32_t v512 = keeloq_unwind(kl, ct, 528, 16);
      if (opts.peel_filter && v512 != pt) continue;
      sel.push_back({word_to_bits(pt, 32), word_to_bits(v512, 32)});
      if (sel.size() == need) break;
    }
    GuessRecord rec{i, GuessRecord::filtered, 0, {}, {}};
    if (sel.size() == need) {
      GuessSpec g = guess;
      g.values = {word_to_bits(kl, 16)};
      auto all_pairs = [&](const std::vector<uint32_t>& key) {
        const uint64_t k = bits_to_word(key);
        for (const auto& [pt, ct] : words)
          if (keeloq_encrypt(k, pt) != ct) return false;
        return true;
      };
      AttackReport r = block_pair_attack(c, sel, 64, g, inner, all_pairs);
      rec.stats.pairs_processed = r.pairs_processed;
      rec.stats.reduction_steps = r.reduction_steps;
      rec.stats.zero_reductions = r.zero_reductions;
      rec.stats.max_basis_size = r.max_basis_size;
      if (r.outcome == AttackReport::Outcome::recovered) {
        const uint64_t key = bits_to_word(r.key);
        bool ok = true;
        for (const auto& [pt, ct] : words) ok = ok && keeloq_encrypt(key, pt) == ct;
        rec.kind = ok ? GuessRecord::solved : GuessRecord::mismatch;
        if (ok) rec.assignment = std::move(r.assignment);
      } else if (r.tally.inconsistent) {
        rec.kind = GuessRecord::inconsistent;
      } else if (r.tally.mismatch) {
        rec.kind = GuessRecord::mismatch;
      } else if (r.tally.timeout) {
        rec.kind = GuessRecord::timeout;
      } else {
        rec.kind = GuessRecord::indeterminate;
      }
    }
    rec.ms = ms_since(g0);
    const bool stop = rec.kind == GuessRecord::solved && opts.solve.stop_on_success;
    {
      std::lock_guard lk(mu);
      recs.push_back(std::move(rec));
    }
    return !stop;
  };
  run_indexed(0, cands.size(), opts.solve.threads, one, cutoff);

  AttackReport rep;
  rep.guess_space = cands.size();
  fill_report(rep, recs, opts.solve.stop_on_success, 0, 0, 65536.0);
  rep.total_ms = ms_since(t0);
  if (rep.winning_guess) {
    rep.outcome = AttackReport::Outcome::recovered;
    rep.key.assign(64, 0);
    for (uint32_t j = 0; j < 64; ++j) rep.key[j] = rep.assignment.at(Var{0, j});
    rep.note = "k(0..15) = " + format_values(word_to_bits(cands[*rep.winning_guess], 16), 2);
  } else {
    rep.outcome = rep.resume_from < cands.size() ? AttackReport::Outcome::aborted : AttackReport::Outcome::exhausted;
    if (out_of_budget) rep.note = "budget exhausted";
  }
  return rep;
}

std::vector<uint32_t> keeloq_fixed_points(uint64_t key, unsigned rounds) {
  if (rounds == 0 || rounds > 64) throw Error("keeloq_fixed_points: rounds must be in 1..64");
  // 512 lanes per batch: lane bits are block bits 0..8, the batch index
  // supplies bits 9..31.
  typedef uint64_t Lanes __attribute__((vector_size(64)));
  Lanes ones, zero;
  for (int w = 0; w < 8; ++w) {
    ones[w] = ~uint64_t{0};
    zero[w] = 0;
  }
  Lanes low[9];
  for (int b = 0; b < 9; ++b)
    for (int w = 0; w < 8; ++w) {
      uint64_t m = 0;
      for (int j = 0; j < 64; ++j)
        if (((64 * w + j) >> b) & 1) m |= uint64_t{1} << j;
      low[b][w] = m;
    }
  Lanes kb[64];
  for (unsigned t = 0; t < 64; ++t) kb[t] = ((key >> t) & 1) ? ones : zero;
  std::vector<uint32_t> out;
  Lanes x[96];
  for (uint64_t B = 0; B < (uint64_t{1} << 23); ++B) {
    for (int i = 0; i < 9; ++i) x[i] = low[i];
    for (int i = 9; i < 32; ++i) x[i] = ((B >> (i - 9)) & 1) ? ones : zero;
    for (unsigned t = 0; t < rounds; ++t) {
      const Lanes a = x[t + 1], b = x[t + 9], c = x[t + 20], d = x[t + 26], e = x[t + 31];
      const Lanes n = a ^ b ^ (c & e) ^ (a & e) ^ (c & d) ^ (a & d) ^ (b & c) ^ (a & b) ^ (a & b & e) ^ (a & c & e) ^
                      (b & d & e) ^ (c & d & e);
      x[t + 32] = x[t] ^ x[t + 16] ^ kb[t] ^ n;
    }
    Lanes eq = ones;
    for (unsigned i = 0; i < 32; ++i) eq &= ~(x[rounds + i] ^ x[i]);
    for (int w = 0; w < 8; ++w)
      for (uint64_t m = eq[w]; m; m &= m - 1)
        out.push_back(static_cast<uint32_t>((B << 9) | (64 * w + std::countr_zero(m))));
  }
  return out;
}

uint64_t keeloq_key_for_sequence(uint64_t a) {
  auto rot = [](uint64_t x, unsigned t) { return t == 0 ? x : (x >> t) | (x << (64 - t)); };
  uint64_t key = 0;
  for (unsigned t = 0; t < 64; ++t) {
    const uint64_t w = rot(a, t);
    const uint64_t bit = ((w >> 32) ^ w ^ (w >> 16) ^ keeloq_nlf(static_cast<uint32_t>(w))) & 1;
    key |= bit << t;
  }
  return key;
}

namespace {

constexpr unsigned kTaps[5] = {1, 9, 20, 26, 31};

uint32_t nlf5(uint32_t bits) { return (0x3A5C742Eu >> bits) & 1; }

bool bit_at(uint64_t x, unsigned i) { return (x >> (i & 63)) & 1; }

/// L(d)_t = d(t+32) + d(t) + d(t+16).
uint32_t lin_d(uint64_t d, unsigned t) { return bit_at(d, t + 32) ^ bit_at(d, t) ^ bit_at(d, t + 16); }

bool touches(uint64_t d, unsigned t) {
  for (unsigned k : kTaps)
    if (bit_at(d, t + k)) return true;
  return false;
}

/// Weight-4 differences that are nonzero on 0..31 and whose linear part
/// vanishes wherever the nonlinear taps do not see the difference.
const std::vector<uint64_t>& sparse_differences() {
  static const std::vector<uint64_t> list = [] {
    std::vector<uint64_t> out;
    for (unsigned a = 0; a < 64; ++a)
      for (unsigned b = a + 1; b < 64; ++b)
        for (unsigned c = b + 1; c < 64; ++c)
          for (unsigned e = c + 1; e < 64; ++e) {
            const uint64_t d = (uint64_t{1} << a) | (uint64_t{1} << b) | (uint64_t{1} << c) | (uint64_t{1} << e);
            if ((d & 0xffffffffu) == 0) continue;
            bool ok = true;
            for (unsigned t = 0; t < 64 && ok; ++t)
              if (!touches(d, t) && lin_d(d, t)) ok = false;
            if (ok) out.push_back(d);
          }
    return out;
  }();
  return list;
}

/// Depth-first search for a with N(a+d, t) + N(a, t) = L(d)_t at every
/// touched clock t. Returns false after `node_cap` nodes.
bool solve_difference(uint64_t d, std::mt19937_64& rng, uint64_t& a_out, uint64_t node_cap) {
  std::vector<unsigned> cons;
  for (unsigned t = 0; t < 64; ++t)
    if (touches(d, t)) cons.push_back(t);
  std::shuffle(cons.begin(), cons.end(), rng);
  uint64_t a = rng(), known = 0;
  uint64_t nodes = 0;
  auto tap_bits = [](uint64_t x, unsigned t) {
    uint32_t b = 0;
    for (unsigned k = 0; k < 5; ++k) b |= static_cast<uint32_t>(bit_at(x, t + kTaps[k])) << k;
    return b;
  };
  std::function<bool(size_t)> go = [&](size_t ci) -> bool {
    if (++nodes > node_cap) return false;
    if (ci == cons.size()) return true;
    const unsigned t = cons[ci];
    std::vector<unsigned> free_pos;
    for (unsigned k : kTaps) {
      const unsigned pos = (t + k) & 63;
      if (!((known >> pos) & 1) && std::find(free_pos.begin(), free_pos.end(), pos) == free_pos.end())
        free_pos.push_back(pos);
    }
    const uint32_t want = lin_d(d, t);
    const uint32_t combos = 1u << free_pos.size();
    const uint32_t start = static_cast<uint32_t>(rng() % combos);
    for (uint32_t z = 0; z < combos; ++z) {
      const uint32_t pick = (start + z) % combos;
      uint64_t trial = a;
      for (size_t q = 0; q < free_pos.size(); ++q) {
        const uint64_t bit = uint64_t{1} << free_pos[q];
        trial = (pick >> q) & 1 ? trial | bit : trial & ~bit;
      }
      if ((nlf5(tap_bits(trial ^ d, t)) ^ nlf5(tap_bits(trial, t))) != want) continue;
      const uint64_t saved_a = a, saved_known = known;
      a = trial;
      for (unsigned pos : free_pos) known |= uint64_t{1} << pos;
      if (go(ci + 1)) return true;
      a = saved_a;
      known = saved_known;
      if (nodes > node_cap) return false;
    }
    return false;
  };
  if (!go(0)) return false;
  a_out = a;
  return true;
}

}  // namespace

KeeloqWeakKey keeloq_weak_key(std::mt19937_64& rng) {
  const auto& ds = sparse_differences();
  if (ds.empty()) throw Error("no sparse differences available");
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const uint64_t d = ds[rng() % ds.size()];
    uint64_t a = 0;
    if (!solve_difference(d, rng, a, 20000)) continue;
    KeeloqWeakKey w;
    w.key = keeloq_key_for_sequence(a);
    w.fixed_points = {static_cast<uint32_t>(a), static_cast<uint32_t>(a ^ d)};
    bool ok = true;
    for (uint32_t v : w.fixed_points) ok = ok && keeloq_encrypt(w.key, v, 64) == v;
    if (ok) return w;
  }
  throw Error("weak-key search failed");
}

// ------------------------------------------------------------------ JSON

std::string report_to_json(const AttackReport& r, const StreamNames& names, uint32_t p) {
  using nlohmann::json;
  json j;
  j["outcome"] = outcome_name(r.outcome);
  if (!r.state.empty()) j["state"] = format_values(r.state, p);
  if (!r.initial_state.empty()) j["initial_state"] = format_values(r.initial_state, p);
  if (!r.key.empty()) j["key"] = format_values(r.key, p);
  if (r.winning_guess) j["winning_guess"] = *r.winning_guess;
  if (!r.assignment.empty() && r.assignment.size() <= 4096) {
    json a = json::object();
    for (const auto& [v, x] : r.assignment) a[format_var(v, names)] = x;
    j["assignment"] = a;
  }
  j["tally"] = {{"solved", r.tally.solved},         {"inconsistent", r.tally.inconsistent},
                {"indeterminate", r.tally.indeterminate}, {"timeout", r.tally.timeout},
                {"mismatch", r.tally.mismatch},     {"filtered", r.tally.filtered}};
  j["guess_space"] = r.guess_space;
  j["guesses_done"] = r.guesses_done;
  j["resume_from"] = r.resume_from;
  j["shard"] = {{"index", r.shard_index}, {"count", r.shard_count}};
  j["timing_ms"] = {{"total", r.total_ms},
                    {"mean_guess", r.mean_guess_ms},
                    {"median_guess", r.median_guess_ms},
                    {"expected_campaign", r.expected_campaign_ms}};
  j["solver"] = {{"pairs_processed", r.pairs_processed},
                 {"reduction_steps", r.reduction_steps},
                 {"zero_reductions", r.zero_reductions},
                 {"max_basis_size", r.max_basis_size}};
  if (!r.note.empty()) j["note"] = r.note;
  return j.dump(2);
}

}  // namespace diffcipher
