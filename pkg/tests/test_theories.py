"""The shipped theory corpus: registry shape, ordering, full check."""

import pytest

from derivkit.errors import CyclicDependency
from derivkit.kernel import NUMERIC_CERTIFIED, SYMBOLIC, check_theory
from derivkit.parser import parse_theory
from derivkit.theories import (TheoryEntry, citations_text, dependency_order,
                               load_script, load_theory, registry)


def test_registry_has_nineteen_entries():
    entries = registry()
    assert len(entries) == 19
    assert len({e.name for e in entries}) == 19


def test_registry_metadata():
    entries = registry()
    names = {e.name for e in entries}
    for e in entries:
        assert e.citation.strip(), e.name
        assert e.script.strip(), e.name
        for dep in e.depends_on:
            assert dep in names, (e.name, dep)


def test_registry_scripts_parse_to_matching_names():
    for e in registry():
        assert parse_theory(e.script).name == e.name


def test_citation_index_covers_registry():
    text = citations_text()
    lines = set(text.splitlines())
    for e in registry():
        assert e.citation in lines, e.citation


def test_reconstructed_flags():
    rec = {e.name for e in registry() if e.reconstructed}
    assert rec == {"charles_from_ideal_gas", "avogadro_from_ideal_gas"}


def test_dependency_order_is_topological():
    ordered = dependency_order(registry())
    seen = set()
    for e in ordered:
        assert all(d in seen for d in e.depends_on), e.name
        seen.add(e.name)
    assert seen == {e.name for e in registry()}


def test_dependency_order_detects_cycles():
    a = TheoryEntry("a", "", ("b",), "x")
    b = TheoryEntry("b", "", ("a",), "x")
    with pytest.raises(CyclicDependency):
        dependency_order([a, b])


def test_load_theory_roundtrip():
    t = load_theory("const_accel")
    assert t.name == "const_accel"
    assert load_script("const_accel").startswith("--")


def test_script_dir_override(tmp_path, monkeypatch):
    (tmp_path / "const_accel.deriv").write_text(
        "theory const_accel\n  vars x : Real\n  goal x = x\n"
        "  proof\n    ring\n  qed\n")
    monkeypatch.setenv("DERIVKIT_THEORY_DIR", str(tmp_path))
    t = load_theory("const_accel")
    assert t.var_decls == (("x", "Real"),)


def test_whole_corpus_accepted(pool_and_results):
    _, results = pool_and_results
    assert len(results) == 19
    bad = {n: r.failure for n, r in results.items() if not r.accepted}
    assert bad == {}


def test_soundness_split(pool_and_results):
    _, results = pool_and_results
    for name, res in results.items():
        want = NUMERIC_CERTIFIED if name == "brunauer_27" else SYMBOLIC
        assert res.soundness == want, name


def test_pool_entries_reusable(pool_and_results):
    pool, _ = pool_and_results
    src = "\n".join([
        "theory scaled",
        "  vars P K V : Real",
        "  hyp hK : 0 < K",
        "  hyp hP : 0 < P",
        "  let theta := K * P / (1 + K * P)",
        "  goal 3 * theta * (1 + K * P) = 3 * (K * P)",
        "  proof",
        "    unfold theta",
        "    field_normalize",
        "    ring",
        "  qed",
    ]) + "\n"
    assert check_theory(parse_theory(src), pool).accepted


@pytest.mark.parametrize("name,hyp", [
    ("langmuir_model_derivation", "hyp hreaction"),
    ("bet_sequence_math", "hyp hx1"),
    ("boyles_from_ideal_gas", "hyp hig"),
])
def test_dropping_a_hypothesis_breaks_the_proof(pool_and_results, name, hyp):
    pool, _ = pool_and_results
    out, dropped = [], False
    for ln in load_script(name).splitlines():
        if not dropped and ln.strip().startswith(hyp + " "):
            dropped = True
            continue
        out.append(ln)
    assert dropped, f"no line starting with {hyp!r} in {name}"
    mutant = parse_theory("\n".join(out) + "\n")
    assert not check_theory(mutant, pool).accepted
