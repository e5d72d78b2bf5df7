"""Difference systems over GF(p) and algebraic attacks on Bivium, Trivium and KeeLoq.

Polynomials are passed as text in the variable syntax of the system files
(``x0``, ``y83``, ``x91*x92``); states and keystreams are lists of residues.
"""

import json as _json

from ._diffcipher import (  # noqa: F401
    Cipher,
    Error,
    ParseError,
    System,
    backstep,
    bivium_guess_vars,
    block_decrypt,
    block_encrypt,
    builtin,
    builtin_names,
    endo_iterate,
    invert,
    keeloq_decrypt,
    keeloq_encrypt,
    keeloq_fixed_points,
    keeloq_key_for_sequence,
    key_equations,
    keystream,
    load_key_iv,
    parse_cipher,
    parse_system,
    period,
    simulate,
)
from . import _diffcipher as _native


def attack_stream(cipher, keystream, guess_vars=(), guess_values=(), **kw):
    """Guess-and-determine on keystream equations; returns the report as a dict."""
    return _json.loads(_native.attack_stream(cipher, list(keystream), list(guess_vars),
                                             [list(v) for v in guess_values], **kw))


def attack_block(cipher, pairs, effective_T=0, guess_vars=(), guess_values=(), **kw):
    """Plaintext/ciphertext pair attack; pairs are (bits, bits) tuples."""
    return _json.loads(_native.attack_block(cipher, [(list(p), list(c)) for p, c in pairs], effective_T,
                                            list(guess_vars), [list(v) for v in guess_values], **kw))


def attack_keeloq(pairs, k_low=(), peel_filter=True, **kw):
    """KeeLoq attack from (plaintext, ciphertext) words, some of them fixed by 64 rounds."""
    return _json.loads(_native.attack_keeloq(list(pairs), list(k_low), peel_filter, **kw))


def export_cnf(equations, names, xor_cut=4):
    """DIMACS text and variable map for a GF(2) system."""
    return _native.export_cnf(list(equations), list(names), xor_cut)
