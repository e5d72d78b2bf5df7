// pybind11 module _diffcipher. Polynomials cross the boundary as text,
// states and keystreams as lists of residues.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "diffcipher/attack.hpp"
#include "diffcipher/cipher.hpp"
#include "diffcipher/dsl.hpp"

namespace py = pybind11;
using namespace diffcipher;

namespace {

std::vector<std::string> poly_strings(const std::vector<Poly>& ps, const StreamNames& names) {
  std::vector<std::string> out;
  for (const Poly& p : ps) out.push_back(format_poly(p, names));
  return out;
}

Var parse_var(const std::string& text, const DiffSystem& s) {
  const Poly p = parse_poly(text, s.modulus(), s.names());
  if (p.degree() != 1 || p.terms().size() != 1 || p.terms()[0].coeff != 1) throw Error("not a variable: " + text);
  return p.vars().front();
}

GuessSpec make_guess(const CipherSpec& c, const std::vector<std::string>& vars,
                     const std::vector<std::vector<uint32_t>>& values) {
  GuessSpec g;
  for (const auto& v : vars) g.vars.push_back(parse_var(v, c.system));
  g.values = values;
  return g;
}

AttackOptions make_options(unsigned threads, double budget_ms, double per_guess_ms, uint64_t max_guesses,
                           bool stop_on_success) {
  AttackOptions o;
  o.threads = threads;
  o.budget_ms = budget_ms;
  o.per_guess_ms = per_guess_ms;
  o.max_guesses = max_guesses;
  o.stop_on_success = stop_on_success;
  return o;
}

AttackTarget parse_target(const std::string& t) {
  if (t == "offset") return AttackTarget::offset_state;
  if (t == "initial") return AttackTarget::initial_state;
  throw Error("target must be 'offset' or 'initial'");
}

}  // namespace

PYBIND11_MODULE(_diffcipher, m) {
  m.doc() = "Difference-system algebra and algebraic attacks (native part).";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  py::class_<DiffSystem>(m, "System")
      .def_property_readonly("modulus", &DiffSystem::modulus)
      .def_property_readonly("names", &DiffSystem::names)
      .def_property_readonly("orders", &DiffSystem::orders)
      .def_property_readonly("total_order", &DiffSystem::total_order)
      .def_property_readonly("updates",
                             [](const DiffSystem& s) { return poly_strings(s.updates(), s.names()); })
      .def("__str__", [](const DiffSystem& s) { return format_system(s); })
      .def("__eq__", [](const DiffSystem& a, const DiffSystem& b) { return a == b; });

  py::class_<CipherSpec>(m, "Cipher")
      .def_readonly("name", &CipherSpec::name)
      .def_readonly("system", &CipherSpec::system)
      .def_property_readonly("kind", [](const CipherSpec& c) { return c.is_stream() ? "stream" : "block"; })
      .def_property_readonly("keystream",
                             [](const CipherSpec& c) { return format_poly(c.keystream, c.system.names()); })
      .def_readonly("offset", &CipherSpec::offset)
      .def_readonly("final_clock", &CipherSpec::final_clock)
      .def_readonly("key_length", &CipherSpec::key_length)
      .def_readonly("block_length", &CipherSpec::block_length);

  m.def("parse_system", [](const std::string& text) { return parse_system(text).system; }, py::arg("text"));
  m.def("parse_cipher", [](const std::string& text) { return CipherSpec::from_file(parse_system(text)); },
        py::arg("text"));
  m.def("builtin", [](const std::string& name) { return build_builtin(name); }, py::arg("name"));
  m.def("builtin_names", &builtin_names);

  m.def("simulate", &simulate, py::arg("system"), py::arg("state"), py::arg("steps"));
  m.def(
      "endo_iterate",
      [](const DiffSystem& s, const std::string& f, uint64_t t, const std::string& method) {
        const EndoMethod em = method == "normal_form" ? EndoMethod::normal_form : EndoMethod::substitution;
        return format_poly(endo_iterate(s, parse_poly(f, s.modulus(), s.names()), t, em), s.names());
      },
      py::arg("system"), py::arg("f"), py::arg("t"), py::arg("method") = "substitution");
  m.def(
      "invert",
      [](const DiffSystem& s, const std::string& method) {
        const InverseResult r = invert_system(s, method == "quick" ? InvertMethod::quick : InvertMethod::full);
        py::dict d;
        d["invertible"] = r.invertible;
        d["inverse"] = r.inverse ? py::cast(*r.inverse) : py::none();
        d["reason"] = r.reason;
        return d;
      },
      py::arg("system"), py::arg("method") = "full");
  m.def("backstep", &backstep, py::arg("system"), py::arg("state"), py::arg("steps"));
  m.def(
      "period",
      [](const DiffSystem& s, const std::string& strategy, uint64_t cap) -> py::object {
        PeriodStrategy ps = PeriodStrategy::automatic;
        if (strategy == "orbit") ps = PeriodStrategy::orbit_lcm;
        else if (strategy == "linear") ps = PeriodStrategy::linear_primitive;
        else if (strategy == "brute") ps = PeriodStrategy::brute_force;
        else if (strategy != "auto") throw Error("unknown strategy " + strategy);
        const PeriodResult r = period(s, ps, cap);
        if (!r.known) return py::none();
        return py::int_(r.period);
      },
      py::arg("system"), py::arg("strategy") = "auto", py::arg("state_cap") = uint64_t{1} << 24);

  m.def(
      "load_key_iv",
      [](const CipherSpec& c, const std::vector<uint32_t>& key, const std::vector<uint32_t>& iv, bool direct) {
        return load_key_iv(c, key, iv, direct ? KeyLoading::direct : KeyLoading::estream);
      },
      py::arg("cipher"), py::arg("key"), py::arg("iv"), py::arg("direct") = false);
  m.def("keystream", &keystream_gen, py::arg("cipher"), py::arg("state"), py::arg("start"), py::arg("count"));
  m.def(
      "block_encrypt",
      [](const CipherSpec& c, const std::vector<uint32_t>& key, const std::vector<uint32_t>& block, uint64_t clocks) {
        return block_encrypt(c, key, block, clocks ? clocks : c.final_clock);
      },
      py::arg("cipher"), py::arg("key"), py::arg("block"), py::arg("clocks") = 0);
  m.def(
      "block_decrypt",
      [](const CipherSpec& c, const std::vector<uint32_t>& key, const std::vector<uint32_t>& block, uint64_t clocks) {
        return block_decrypt(c, key, block, clocks ? clocks : c.final_clock);
      },
      py::arg("cipher"), py::arg("key"), py::arg("block"), py::arg("clocks") = 0);
  m.def("keeloq_encrypt", &keeloq_encrypt, py::arg("key"), py::arg("block"), py::arg("rounds") = 528);
  m.def("keeloq_decrypt", &keeloq_decrypt, py::arg("key"), py::arg("block"), py::arg("rounds") = 528);
  m.def("keeloq_fixed_points", &keeloq_fixed_points, py::arg("key"), py::arg("rounds") = 64,
        py::call_guard<py::gil_scoped_release>());
  m.def("keeloq_key_for_sequence", &keeloq_key_for_sequence, py::arg("a"));

  m.def(
      "key_equations",
      [](const CipherSpec& c, const std::vector<uint32_t>& b, const std::string& target) {
        return poly_strings(key_equations(c, b, parse_target(target)).generators, c.system.names());
      },
      py::arg("cipher"), py::arg("keystream"), py::arg("target") = "offset");
  m.def("bivium_guess_vars", [] {
    const DiffSystem& s = build_builtin("bivium").system;
    std::vector<std::string> out;
    for (Var v : bivium_guess_vars()) out.push_back(format_var(v, s.names()));
    return out;
  });

  // Attacks return the JSON report text; the Python wrapper decodes it.
  m.def(
      "attack_stream",
      [](const CipherSpec& c, const std::vector<uint32_t>& b, const std::vector<std::string>& guess_vars,
         const std::vector<std::vector<uint32_t>>& guess_values, const std::string& target, unsigned threads,
         double budget_ms, double per_guess_ms, uint64_t max_guesses, bool stop_on_success) {
        const GuessSpec g = make_guess(c, guess_vars, guess_values);
        const AttackOptions o = make_options(threads, budget_ms, per_guess_ms, max_guesses, stop_on_success);
        AttackReport r;
        {
          py::gil_scoped_release nogil;
          r = attack_stream(c, b, g, o, parse_target(target));
        }
        return report_to_json(r, c.system.names(), c.system.modulus());
      },
      py::arg("cipher"), py::arg("keystream"), py::arg("guess_vars") = std::vector<std::string>{},
      py::arg("guess_values") = std::vector<std::vector<uint32_t>>{}, py::arg("target") = "offset",
      py::arg("threads") = 1, py::arg("budget_ms") = 0.0, py::arg("per_guess_ms") = 0.0,
      py::arg("max_guesses") = 0, py::arg("stop_on_success") = true);
  m.def(
      "attack_block",
      [](const CipherSpec& c, const std::vector<std::pair<std::vector<uint32_t>, std::vector<uint32_t>>>& pairs,
         uint64_t effective_T, const std::vector<std::string>& guess_vars,
         const std::vector<std::vector<uint32_t>>& guess_values, unsigned threads, double budget_ms) {
        std::vector<BlockPair> bp(pairs.begin(), pairs.end());
        const GuessSpec g = make_guess(c, guess_vars, guess_values);
        const AttackOptions o = make_options(threads, budget_ms, 0, 0, true);
        AttackReport r;
        {
          py::gil_scoped_release nogil;
          r = block_pair_attack(c, bp, effective_T ? effective_T : c.final_clock, g, o);
        }
        return report_to_json(r, c.system.names(), c.system.modulus());
      },
      py::arg("cipher"), py::arg("pairs"), py::arg("effective_T") = 0,
      py::arg("guess_vars") = std::vector<std::string>{}, py::arg("guess_values") = std::vector<std::vector<uint32_t>>{},
      py::arg("threads") = 1, py::arg("budget_ms") = 0.0);
  m.def(
      "attack_keeloq",
      [](const std::vector<std::pair<uint32_t, uint32_t>>& pairs, const std::vector<uint32_t>& k_low,
         bool peel_filter, unsigned threads, double budget_ms) {
        const CipherSpec c = build_builtin("keeloq");
        std::vector<BlockPair> bp;
        for (const auto& [pt, ct] : pairs) bp.push_back({word_to_bits(pt, 32), word_to_bits(ct, 32)});
        KeeloqAttackOptions o;
        o.k_low = k_low;
        o.peel_filter = peel_filter;
        o.solve = make_options(threads, budget_ms, 0, 0, true);
        AttackReport r;
        {
          py::gil_scoped_release nogil;
          r = keeloq_attack(c, bp, o);
        }
        return report_to_json(r, c.system.names(), 2);
      },
      py::arg("pairs"), py::arg("k_low") = std::vector<uint32_t>{}, py::arg("peel_filter") = true,
      py::arg("threads") = 1, py::arg("budget_ms") = 0.0);

  m.def(
      "export_cnf",
      [](const std::vector<std::string>& eqs, const std::vector<std::string>& names, unsigned xor_cut) {
        std::vector<Poly> ps;
        for (const auto& e : eqs) ps.push_back(parse_poly(e, 2, names));
        const Cnf c = export_cnf(ps, names, {.xor_cut = xor_cut});
        return py::make_tuple(c.dimacs(), c.sidecar());
      },
      py::arg("equations"), py::arg("names"), py::arg("xor_cut") = 4);
}
