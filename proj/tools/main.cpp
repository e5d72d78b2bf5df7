// diffcipher command-line front end.
//
// Exit codes: 0 success, 1 negative result (not invertible, period unknown,
// attack exhausted or aborted), 2 usage or input error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "diffcipher/attack.hpp"
#include "diffcipher/cipher.hpp"
#include "diffcipher/dsl.hpp"

using namespace diffcipher;

namespace {

struct Config {
  std::string cipher, file;
  std::string state, key, iv, block;
  std::string keystream, pairs;
  std::string guess_vars, guess_values;
  std::string shard = "0/1";
  unsigned threads = 1;
  uint64_t seed = 1;
  double budget_ms = 0;
  std::string report, cnf;

  uint64_t steps = 0;
  bool trace = false;
  std::string method = "full";
  std::string strategy = "auto";
  uint64_t state_cap = uint64_t{1} << 24;
  bool key_subsystem = false;
  uint64_t count = 64;
  std::optional<uint64_t> from;
  std::string loading = "estream";
  std::optional<uint64_t> clocks;
  std::string target = "offset";
  std::optional<uint64_t> effective_t;
  uint64_t max_guesses = 0;
  double per_guess_ms = 0;
  std::string k_low;
  bool no_peel_filter = false;
  size_t pairs_per_solve = 2;
  unsigned xor_cut = 4;
  unsigned rounds = 64;
};

// Raised for bad flag combinations; reported like a parse error.
struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Usage("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Usage("cannot write " + path);
  out << text;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur.erase(0, cur.find_first_not_of(" \t"));
    cur.erase(cur.find_last_not_of(" \t") + 1);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

class Session {
 public:
  explicit Session(const Config& cfg) : cfg_(cfg), rng_(cfg.seed) {
    if (cfg.cipher.empty() == cfg.file.empty()) throw Usage("give exactly one of --cipher or --file");
    if (!cfg.cipher.empty()) {
      cipher_ = build_builtin(cfg.cipher);
      file_.system = cipher_->system;
      if (cipher_->is_stream()) {
        file_.keystream = cipher_->keystream;
        file_.offset = cipher_->offset;
      } else {
        file_.split = cipher_->split;
        file_.final_clock = cipher_->final_clock;
      }
    } else {
      file_ = parse_system(read_file(cfg.file));
    }
  }

  const SystemFile& file() const { return file_; }
  const DiffSystem& system() const { return file_.system; }
  uint32_t p() const { return file_.system.modulus(); }

  const CipherSpec& cipher() {
    if (!cipher_) cipher_ = CipherSpec::from_file(file_, cfg_.file);
    return *cipher_;
  }

  // Hex/decimal vector of length n, or "random" (drawn from the seeded generator).
  std::vector<uint32_t> values(const std::string& text, size_t n, const char* what) {
    if (text.empty()) throw Usage(std::string("missing --") + what);
    if (text == "random") {
      std::vector<uint32_t> v(n);
      for (auto& x : v) x = static_cast<uint32_t>(rng_() % p());
      return v;
    }
    return parse_values(text, n, p());
  }

  Var parse_var(const std::string& tok, const StreamNames& names) {
    const Poly f = parse_poly(tok, p(), names);
    if (f.terms().size() != 1 || f.terms()[0].coeff != 1 || f.terms()[0].mono.degree() != 1)
      throw Usage("not a variable: " + tok);
    return f.terms()[0].mono.factors()[0].var;
  }

  // Comma-separated variables; "name<a>..<b>" is a clock range and
  // "bivium" the default Bivium guess set.
  std::vector<Var> guess_vars(const StreamNames& names) {
    std::vector<Var> out;
    for (const auto& tok : split(cfg_.guess_vars, ',')) {
      if (tok == "bivium") {
        const auto b = bivium_guess_vars();
        out.insert(out.end(), b.begin(), b.end());
        continue;
      }
      const size_t dots = tok.find("..");
      if (dots == std::string::npos) {
        out.push_back(parse_var(tok, names));
        continue;
      }
      const Var lo = parse_var(tok.substr(0, dots), names);
      const uint64_t hi = std::stoull(tok.substr(dots + 2));
      if (hi < lo.clock) throw Usage("empty range " + tok);
      for (uint64_t t = lo.clock; t <= hi; ++t) out.push_back({lo.stream, static_cast<uint32_t>(t)});
    }
    return out;
  }

  GuessSpec guess(const StreamNames& names) {
    GuessSpec g;
    g.vars = guess_vars(names);
    for (const auto& tok : split(cfg_.guess_values, ',')) g.values.push_back(parse_values(tok, g.vars.size(), p()));
    const auto sh = split(cfg_.shard, '/');
    if (sh.size() != 2) throw Usage("--shard expects i/n");
    g.shard_index = std::stoull(sh[0]);
    g.shard_count = std::stoull(sh[1]);
    if (g.shard_count == 0 || g.shard_index >= g.shard_count) throw Usage("--shard index out of range");
    return g;
  }

  AttackOptions attack_options() const {
    AttackOptions o;
    o.threads = std::max(1u, cfg_.threads);
    o.budget_ms = cfg_.budget_ms;
    o.per_guess_ms = cfg_.per_guess_ms;
    o.max_guesses = cfg_.max_guesses;
    return o;
  }

  std::vector<BlockPair> pairs(size_t block_len) {
    if (cfg_.pairs.empty()) throw Usage("missing --pairs");
    std::vector<BlockPair> out;
    std::istringstream in(read_file(cfg_.pairs));
    std::string line;
    while (std::getline(in, line)) {
      line = line.substr(0, line.find('#'));
      const auto tok = split(line, ' ');
      if (tok.empty()) continue;
      if (tok.size() != 2) throw Usage("pair lines are \"plaintext ciphertext\"");
      out.push_back({parse_values(tok[0], block_len, p()), parse_values(tok[1], block_len, p())});
    }
    if (out.empty()) throw Usage("no pairs in " + cfg_.pairs);
    return out;
  }

  std::vector<uint32_t> keystream() {
    if (cfg_.keystream.empty()) throw Usage("missing --keystream");
    return parse_keystream(read_file(cfg_.keystream), p());
  }

  int finish(const AttackReport& rep, const StreamNames& names) {
    if (!cfg_.report.empty()) write_file(cfg_.report, report_to_json(rep, names, p()) + "\n");
    std::cout << "outcome " << outcome_name(rep.outcome) << '\n';
    std::cout << "guesses " << rep.guesses_done << " of " << rep.guess_space << " (solved " << rep.tally.solved
              << ", inconsistent " << rep.tally.inconsistent << ", indeterminate " << rep.tally.indeterminate
              << ", timeout " << rep.tally.timeout << ", mismatch " << rep.tally.mismatch << ", filtered "
              << rep.tally.filtered << ")\n";
    if (rep.outcome != AttackReport::Outcome::recovered) std::cout << "resume_from " << rep.resume_from << '\n';
    if (!rep.note.empty()) std::cout << "note " << rep.note << '\n';
    return rep.outcome == AttackReport::Outcome::recovered ? 0 : 1;
  }

 private:
  const Config& cfg_;
  SystemFile file_;
  std::optional<CipherSpec> cipher_;
  std::mt19937_64 rng_;
};

int cmd_check(Session& s) {
  const DiffSystem& S = s.system();
  std::cout << "field " << S.modulus() << '\n';
  for (size_t i = 0; i < S.num_streams(); ++i) std::cout << "stream " << S.names()[i] << " order " << S.orders()[i] << '\n';
  std::cout << "state_length " << S.total_order() << '\n';
  const int bad = ordering_violation(S);
  std::cout << "clock_ordering " << (bad < 0 ? "ok" : "violated by " + S.names()[bad]) << '\n';
  if (s.file().keystream || s.file().split) {
    const CipherSpec& c = s.cipher();
    std::cout << "kind " << (c.is_stream() ? "stream" : "block") << '\n';
    if (c.is_stream()) std::cout << "keystream " << format_poly(c.keystream, S.names()) << "\noffset " << c.offset << '\n';
    else
      std::cout << "split " << c.split << "\nfinal " << c.final_clock << "\nkey_length " << c.key_length
                << "\nblock_length " << c.block_length << '\n';
  } else {
    std::cout << "kind system\n";
  }
  return 0;
}

int cmd_simulate(Session& s, const Config& cfg) {
  const DiffSystem& S = s.system();
  StateVec v = s.values(cfg.state, S.total_order(), "state");
  if (cfg.trace) std::cout << 0 << ' ' << format_values(v, s.p()) << '\n';
  Stepper st(S);
  for (uint64_t t = 1; t <= cfg.steps; ++t) {
    st.step(v);
    if (cfg.trace) std::cout << t << ' ' << format_values(v, s.p()) << '\n';
  }
  if (!cfg.trace) std::cout << format_values(v, s.p()) << '\n';
  return 0;
}

int cmd_invert(Session& s, const Config& cfg) {
  if (cfg.method != "quick" && cfg.method != "full") throw Usage("--method is quick or full");
  const auto r = invert_system(s.system(), cfg.method == "quick" ? InvertMethod::quick : InvertMethod::full);
  if (r.invertible) {
    std::cout << format_system(*r.inverse);
    return 0;
  }
  std::cout << "not invertible: " << r.reason << '\n';
  for (const Poly& w : r.witness) std::cout << "  " << format_poly(w, s.system().names()) << '\n';
  return 1;
}

int cmd_period(Session& s, const Config& cfg) {
  static const std::map<std::string, PeriodStrategy> strategies{{"auto", PeriodStrategy::automatic},
                                                                {"orbit", PeriodStrategy::orbit_lcm},
                                                                {"linear", PeriodStrategy::linear_primitive},
                                                                {"brute", PeriodStrategy::brute_force}};
  const auto it = strategies.find(cfg.strategy);
  if (it == strategies.end()) throw Usage("--strategy is auto, orbit, linear or brute");
  const DiffSystem* sys = &s.system();
  if (cfg.key_subsystem) sys = &s.cipher().key_system;
  PeriodResult r;
  try {
    r = period(*sys, it->second, cfg.state_cap);
  } catch (const Error& e) {
    std::cout << "no period: " << e.what() << '\n';
    return 1;
  }
  if (!r.known) {
    std::cout << "unknown (state space above cap " << r.cap << ")\n";
    return 1;
  }
  std::cout << r.period << '\n';
  return 0;
}

int cmd_keystream(Session& s, const Config& cfg) {
  const CipherSpec& c = s.cipher();
  if (!c.is_stream()) throw Usage("keystream needs a stream cipher");
  StateVec v;
  if (!cfg.key.empty()) {
    if (!cfg.state.empty()) throw Usage("give --state or --key/--iv, not both");
    if (cfg.loading != "estream" && cfg.loading != "direct") throw Usage("--loading is estream or direct");
    const auto key = s.values(cfg.key, 80, "key");
    const auto iv = cfg.iv.empty() ? std::vector<uint32_t>(80, 0) : s.values(cfg.iv, 80, "iv");
    v = load_key_iv(c, key, iv, cfg.loading == "estream" ? KeyLoading::estream : KeyLoading::direct);
  } else {
    v = s.values(cfg.state, c.state_length(), "state");
  }
  std::cout << format_keystream(keystream_gen(c, v, cfg.from.value_or(c.offset), cfg.count), s.p()) << '\n';
  return 0;
}

int cmd_block(Session& s, const Config& cfg, bool encrypt) {
  const CipherSpec& c = s.cipher();
  if (!c.is_block()) throw Usage("encrypt/decrypt need a block cipher");
  const auto key = s.values(cfg.key, c.key_length, "key");
  const auto in = s.values(cfg.block, c.block_length, "block");
  const auto out = encrypt ? block_encrypt(c, key, in, cfg.clocks) : block_decrypt(c, key, in, cfg.clocks);
  std::cout << format_values(out, s.p()) << '\n';
  return 0;
}

int cmd_attack_stream(Session& s, const Config& cfg) {
  const CipherSpec& c = s.cipher();
  if (!c.is_stream()) throw Usage("attack-stream needs a stream cipher");
  if (cfg.target != "offset" && cfg.target != "initial") throw Usage("--target is offset or initial");
  const auto ks = s.keystream();
  const GuessSpec g = s.guess(c.system.names());
  const auto rep = attack_stream(c, ks, g, s.attack_options(),
                                 cfg.target == "offset" ? AttackTarget::offset_state : AttackTarget::initial_state);
  if (rep.outcome == AttackReport::Outcome::recovered) {
    std::cout << "state " << format_values(rep.state, s.p()) << '\n';
    std::cout << "initial_state " << format_values(rep.initial_state, s.p()) << '\n';
  }
  return s.finish(rep, c.system.names());
}

int cmd_attack_block(Session& s, const Config& cfg) {
  const CipherSpec& c = s.cipher();
  if (!c.is_block()) throw Usage("attack-block needs a block cipher");
  const auto pairs = s.pairs(c.block_length);
  const uint64_t T = cfg.effective_t.value_or(c.final_clock);
  const GuessSpec g = s.guess(c.system.names());
  const auto rep = block_pair_attack(c, pairs, T, g, s.attack_options());
  if (rep.outcome == AttackReport::Outcome::recovered) std::cout << "key " << format_values(rep.key, s.p()) << '\n';
  return s.finish(rep, block_pair_equations(c, pairs, T).names);
}

int cmd_attack_keeloq(Session& s, const Config& cfg) {
  const CipherSpec& c = s.cipher();
  KeeloqAttackOptions o;
  for (const auto& tok : split(cfg.k_low, ',')) o.k_low.push_back(static_cast<uint32_t>(bits_to_word(parse_values(tok, 16, 2))));
  o.peel_filter = !cfg.no_peel_filter;
  o.pairs_per_solve = cfg.pairs_per_solve;
  o.solve = s.attack_options();
  const auto rep = keeloq_attack(c, s.pairs(32), o);
  if (rep.outcome == AttackReport::Outcome::recovered) std::cout << "key " << format_values(rep.key, 2) << '\n';
  return s.finish(rep, c.system.names());
}

int cmd_fixed_points(Session& s, const Config& cfg) {
  const CipherSpec& c = s.cipher();
  if (c.name != "keeloq") throw Usage("fixed-points is implemented for --cipher keeloq");
  const uint64_t key = bits_to_word(s.values(cfg.key, 64, "key"));
  for (uint32_t v : keeloq_fixed_points(key, cfg.rounds)) std::cout << format_values(word_to_bits(v, 32), 2) << '\n';
  return 0;
}

int cmd_export_cnf(Session& s, const Config& cfg) {
  const CipherSpec& c = s.cipher();
  KeyEquations eqs;
  if (c.is_stream()) {
    if (cfg.target != "offset" && cfg.target != "initial") throw Usage("--target is offset or initial");
    eqs = key_equations(c, s.keystream(), cfg.target == "offset" ? AttackTarget::offset_state : AttackTarget::initial_state);
  } else {
    eqs = block_pair_equations(c, s.pairs(c.block_length), cfg.effective_t.value_or(c.final_clock));
  }
  const GuessSpec g = s.guess(c.system.names());
  if (g.values.size() > 1) throw Usage("export-cnf takes at most one --guess-values assignment");
  if (!g.values.empty())
    for (size_t j = 0; j < g.vars.size(); ++j)
      eqs.generators.push_back(Poly::variable(s.p(), g.vars[j]) - Poly::constant(s.p(), g.values[0][j]));
  CnfOptions o;
  o.xor_cut = cfg.xor_cut;
  const Cnf cnf = export_cnf(eqs.generators, eqs.names, o);
  if (cfg.cnf.empty() || cfg.cnf == "-") {
    std::cout << cnf.dimacs();
  } else {
    write_file(cfg.cnf, cnf.dimacs());
    write_file(cfg.cnf + ".map", cnf.sidecar());
    std::cout << "p cnf " << cnf.num_vars << ' ' << cnf.clauses.size() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Config cfg;
  CLI::App app{"Explicit difference systems over GF(p): simulation, inversion, periods and algebraic attacks"};
  app.require_subcommand(1);

  auto source = [&](CLI::App* sub) {
    sub->add_option("--cipher", cfg.cipher, "built-in cipher: bivium, trivium, keeloq, lfsr_combiner");
    sub->add_option("--file", cfg.file, "system definition file");
    sub->add_option("--seed", cfg.seed, "seed for 'random' values");
  };
  auto attack = [&](CLI::App* sub) {
    sub->add_option("--guess-vars", cfg.guess_vars, "comma-separated variables, ranges like k0..15, or 'bivium'");
    sub->add_option("--guess-values", cfg.guess_values, "comma-separated assignments (hex); default: full range");
    sub->add_option("--shard", cfg.shard, "i/n part of the guess space");
    sub->add_option("--threads", cfg.threads, "worker threads");
    sub->add_option("--budget-ms", cfg.budget_ms, "wall-clock budget for the run");
    sub->add_option("--per-guess-ms", cfg.per_guess_ms, "hard per-guess limit");
    sub->add_option("--max-guesses", cfg.max_guesses, "stop after this many guesses");
    sub->add_option("--report", cfg.report, "write a JSON report");
  };

  auto* check = app.add_subcommand("check", "parse and validate a system");
  source(check);

  auto* simulate = app.add_subcommand("simulate", "run the state transition map");
  source(simulate);
  simulate->add_option("--state", cfg.state, "initial state (hex or 'random')")->required();
  simulate->add_option("--steps", cfg.steps, "number of clocks");
  simulate->add_flag("--trace", cfg.trace, "print every state");

  auto* invert = app.add_subcommand("invert", "print the inverse system");
  source(invert);
  invert->add_option("--method", cfg.method, "quick or full");

  auto* per = app.add_subcommand("period", "least d with T^d = id");
  source(per);
  per->add_option("--strategy", cfg.strategy, "auto, orbit, linear or brute");
  per->add_option("--state-cap", cfg.state_cap, "largest state space to enumerate");
  per->add_flag("--key-subsystem", cfg.key_subsystem, "use the key subsystem of a block cipher");

  auto* ks = app.add_subcommand("keystream", "generate keystream");
  source(ks);
  ks->add_option("--state", cfg.state, "initial state (hex or 'random')");
  ks->add_option("--key", cfg.key, "80-bit key (hex or 'random')");
  ks->add_option("--iv", cfg.iv, "80-bit iv (hex or 'random')");
  ks->add_option("--loading", cfg.loading, "estream or direct");
  ks->add_option("--count", cfg.count, "number of values");
  ks->add_option("--from", cfg.from, "first clock (default: the cipher offset)");

  auto* enc = app.add_subcommand("encrypt", "block encryption");
  auto* dec = app.add_subcommand("decrypt", "block decryption");
  for (auto* sub : {enc, dec}) {
    source(sub);
    sub->add_option("--key", cfg.key, "key (hex or 'random')")->required();
    sub->add_option("--block", cfg.block, "input block (hex or 'random')")->required();
    sub->add_option("--clocks", cfg.clocks, "number of clocks (default: final clock)");
  }

  auto* as = app.add_subcommand("attack-stream", "guess-and-determine on a keystream");
  source(as);
  attack(as);
  as->add_option("--keystream", cfg.keystream, "keystream file")->required();
  as->add_option("--target", cfg.target, "offset or initial");

  auto* ab = app.add_subcommand("attack-block", "multiple-pair attack");
  source(ab);
  attack(ab);
  ab->add_option("--pairs", cfg.pairs, "file of 'plaintext ciphertext' lines")->required();
  ab->add_option("--effective-T", cfg.effective_t, "clock the ciphertexts belong to");

  auto* ak = app.add_subcommand("attack-keeloq", "fixed-point attack on KeeLoq");
  source(ak);
  attack(ak);
  ak->add_option("--pairs", cfg.pairs, "file of 'plaintext ciphertext' lines")->required();
  ak->add_option("--k-low", cfg.k_low, "comma-separated k(0..15) candidates (hex); default all 2^16");
  ak->add_flag("--no-peel-filter", cfg.no_peel_filter, "solve every candidate");
  ak->add_option("--pairs-per-solve", cfg.pairs_per_solve, "fixed-point pairs per solve");

  auto* fp = app.add_subcommand("fixed-points", "all KeeLoq states with v(0) = v(rounds)");
  source(fp);
  fp->add_option("--key", cfg.key, "64-bit key (hex or 'random')")->required();
  fp->add_option("--rounds", cfg.rounds, "rounds, at most 64");

  auto* cnf = app.add_subcommand("export-cnf", "DIMACS CNF of the attack equations");
  source(cnf);
  attack(cnf);
  cnf->add_option("--keystream", cfg.keystream, "keystream file (stream ciphers)");
  cnf->add_option("--target", cfg.target, "offset or initial");
  cnf->add_option("--pairs", cfg.pairs, "pairs file (block ciphers)");
  cnf->add_option("--effective-T", cfg.effective_t, "clock the ciphertexts belong to");
  cnf->add_option("--cnf", cfg.cnf, "output path (a .map sidecar is written next to it)");
  cnf->add_option("--xor-cut", cfg.xor_cut, "XOR chain width");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  // KeeLoq-only commands need no --cipher
  if ((ak->parsed() || fp->parsed()) && cfg.cipher.empty() && cfg.file.empty()) cfg.cipher = "keeloq";
  try {
    Session s(cfg);
    if (check->parsed()) return cmd_check(s);
    if (simulate->parsed()) return cmd_simulate(s, cfg);
    if (invert->parsed()) return cmd_invert(s, cfg);
    if (per->parsed()) return cmd_period(s, cfg);
    if (ks->parsed()) return cmd_keystream(s, cfg);
    if (enc->parsed()) return cmd_block(s, cfg, true);
    if (dec->parsed()) return cmd_block(s, cfg, false);
    if (as->parsed()) return cmd_attack_stream(s, cfg);
    if (ab->parsed()) return cmd_attack_block(s, cfg);
    if (ak->parsed()) return cmd_attack_keeloq(s, cfg);
    if (fp->parsed()) return cmd_fixed_points(s, cfg);
    if (cnf->parsed()) return cmd_export_cnf(s, cfg);
  } catch (const Usage& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
