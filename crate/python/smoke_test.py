"""Smoke test for the finprin Python module.

Build and install first:  pip install maturin && maturin develop -m crates/py/Cargo.toml
(or `maturin build` and install the wheel), then run  python python/smoke_test.py
"""

import json

import finprin


def main():
    assert "PHP" in finprin.principles()
    assert len(finprin.interpretations()) == 4

    wphp = finprin.Principle.builtin("WPHP")
    assert [wphp.determinacy(n) for n in (2, 3)] == [3, 4]
    assert wphp.s_l(3) == 9

    depth, size = wphp.metrics(2, coding="unary", simplify=True)
    assert depth <= 2 and size > 0
    dimacs = wphp.cnf(2, coding="unary", mode="direct")
    assert any(line.startswith("p cnf 8 ") for line in dimacs.splitlines())

    php = finprin.Principle.builtin("PHP")
    a = finprin.Structure.random_total(php, 5, seed=1)
    assert a.is_total and a.eval(php) == 1.0
    d, tuple_ = a.find_witness(php)
    back = finprin.Structure.from_json(php, a.to_json())
    assert back.find_witness(php) == (d, tuple_)

    s = finprin.Session("PHP", 64, budget=20)
    for x in range(2):
        for bit in range(6):
            s.query(f"f({x})#{bit}")
    assert s.answered == 2
    assert s.claim(0, [0, 1, 0]) >= 0
    s.check_invariants()
    assert s.structure().eval(php) != 1.0

    try:
        finprin.core_lemma(n=64)
    except finprin.HypothesisError:
        pass
    else:
        raise AssertionError("core lemma at n=64 should violate its hypothesis")
    summary = json.loads(finprin.core_lemma(seed=5))
    assert summary["c_verifies"] and summary["fragment_embeds"]

    i = finprin.Interpretation.builtin("IND->PHP")
    assert i.check(2) == []
    b = finprin.Structure.random_total(i.source, 4, seed=3)
    ib = i.apply(b)
    w = ib.find_witness(i.target)
    d, t = i.pullback(b, *w)
    assert d >= 0 and len(t) == i.source.num_vars

    overflow, g = finprin.largeness("IND", 10)
    assert len(overflow) <= g
    print("python smoke test: ok")


if __name__ == "__main__":
    main()
