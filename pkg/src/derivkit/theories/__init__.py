"""The builtin theory corpus.

Each entry names a .deriv script shipped next to this module, the
lemmas it applies or presupposes, and a citation into the historical
literature the derivation formalizes. Checking the registry in order
is the package's own regression suite: every entry must come out
accepted, eighteen symbolically and brunauer_27 by numeric witness.

Set DERIVKIT_THEORY_DIR to load the scripts from another directory
instead of the installed package data.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources
from typing import Dict, List, Optional, Tuple

from ..errors import CyclicDependency
from ..formula import Theory
from ..kernel import CheckResult, LemmaEntry, LemmaPool, check_theory
from ..parser import parse_theory


@dataclass(frozen=True)
class TheoryEntry:
    name: str
    script: str
    depends_on: Tuple[str, ...]
    citation: str
    reconstructed: bool = False


_SPECS: List[Tuple[str, Tuple[str, ...], str, bool]] = [
    ("langmuir_kinetic_fig1", (),
     "Langmuir 1918, adsorption rate balance on plane surfaces", False),
    ("langmuir_kinetic_let", (),
     "Langmuir 1918, single-site adsorption equilibrium", False),
    ("langmuir_model_derivation", (),
     "Langmuir 1918, fractional surface coverage model", False),
    ("langmuir_zero_pressure", (),
     "Langmuir 1918, zero coverage at zero pressure", False),
    ("bet_sequence_math", (),
     "Brunauer, Emmett and Teller 1938, multilayer sequence identity", False),
    ("brunauer_26_from_seq", ("bet_sequence_math",),
     "Brunauer, Emmett and Teller 1938, equation 26", False),
    ("brunauer_27", (),
     "Brunauer, Emmett and Teller 1938, equation 27, saturation divergence", False),
    ("brunauer_28_from_seq", ("brunauer_26_from_seq", "brunauer_27"),
     "Brunauer, Emmett and Teller 1938, equation 28", False),
    ("boyles_law_relation", (),
     "Boyle 1662, pressure-volume reciprocity", False),
    ("boyles_law_relation'", (),
     "Boyle 1662, pressure-volume reciprocity, converse form", False),
    ("boyles_from_ideal_gas", (),
     "Clapeyron 1834, ideal gas law in an isothermal closed system", False),
    ("charles_from_ideal_gas", (),
     "Gay-Lussac 1802, expansion of gases by heat", True),
    ("avogadro_from_ideal_gas", (),
     "Avogadro 1811, equal volumes contain equal numbers", True),
    ("const_accel", (),
     "Galilei 1638, uniformly accelerated motion, velocity law", False),
    ("const_accel'", ("const_accel",),
     "Galilei 1638, uniformly accelerated motion, position law", False),
    ("const_accel''_minus", ("const_accel", "const_accel'"),
     "Heytesbury c. 1335, mean speed theorem, difference form", False),
    ("const_accel''_plus", ("const_accel", "const_accel'"),
     "Heytesbury c. 1335, mean speed theorem, sum form", False),
    ("torricelli_scalar", ("const_accel", "const_accel'"),
     "Torricelli 1644, De motu gravium", False),
    ("antideriv_const_demo", (),
     "Cauchy 1823, antiderivative of a constant", False),
]


def _script_dir() -> Optional[str]:
    return os.environ.get("DERIVKIT_THEORY_DIR")


def load_script(name: str) -> str:
    override = _script_dir()
    if override:
        with open(os.path.join(override, name + ".deriv"), encoding="utf-8") as fh:
            return fh.read()
    return (resources.files(__package__) / (name + ".deriv")).read_text("utf-8")


def citations_text() -> str:
    override = _script_dir()
    if override:
        path = os.path.join(override, "citations.txt")
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                return fh.read()
    return (resources.files(__package__) / "citations.txt").read_text("utf-8")


def registry() -> List[TheoryEntry]:
    return [TheoryEntry(name, load_script(name), deps, cite, rec)
            for name, deps, cite, rec in _SPECS]


def load_theory(name: str) -> Theory:
    return parse_theory(load_script(name))


def dependency_order(entries: List[TheoryEntry]) -> List[TheoryEntry]:
    """Entries reordered so dependencies precede dependents."""
    by_name = {e.name: e for e in entries}
    done: Dict[str, bool] = {}
    out: List[TheoryEntry] = []

    def visit(name: str, stack: Tuple[str, ...]):
        if done.get(name):
            return
        if name in stack:
            raise CyclicDependency(" -> ".join(stack + (name,)))
        entry = by_name.get(name)
        if entry is None:
            return
        for dep in entry.depends_on:
            visit(dep, stack + (name,))
        done[name] = True
        out.append(entry)

    for e in entries:
        visit(e.name, ())
    return out


def build_pool(seed: int = 0) -> Tuple[LemmaPool, Dict[str, CheckResult]]:
    """Check the whole registry in dependency order.

    Returns the lemma pool (for checking user scripts against) and the
    per-theory results.
    """
    pool: LemmaPool = {}
    results: Dict[str, CheckResult] = {}
    for entry in dependency_order(registry()):
        theory = parse_theory(entry.script)
        res = check_theory(theory, pool, seed)
        pool[theory.name] = LemmaEntry(theory, res.accepted)
        results[entry.name] = res
    return pool, results
