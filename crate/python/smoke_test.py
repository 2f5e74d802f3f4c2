"""Smoke test for the admg_py extension module.

Build and install first:
    maturin build --release -m crates/py/Cargo.toml -o dist && pip install dist/admg_py-*.whl
"""

from fractions import Fraction

import admg_py

IV = """
vertices: a b c
a -> b
b -> c
b <-> c
"""


def main() -> None:
    iv = admg_py.Graph(IV)
    assert iv.vertices == ["a", "b", "c"]
    assert iv.bidirected_edges == [("b", "c")]

    hidden = admg_py.Graph("vertices: a b c h\nlatent: h\na -> b\nb -> c\nh -> b\nh -> c\n")
    assert hidden == iv

    marg = iv.marg_project()
    assert marg.directed_edges == [("a", "b"), ("a", "c"), ("b", "c")]
    assert iv.densely_connected("a", "c") == (True, "directed_vw")
    assert iv.closure(["b", "c"]) == (["b", "c"], True)
    dag, latent = iv.canonical_dag()
    assert latent == ["_h1"]
    assert sorted(iv.intrinsic_sets()) == [["a"], ["b"], ["b", "c"]]

    coupling = admg_py.Coupling(iv, "a", "c")
    law = dict((tuple(k), p) for k, p in coupling.exact_joint())
    assert law == {(0, 0, 0): Fraction(1, 4), (0, 1, 0): Fraction(1, 4), (1, 0, 1): Fraction(1, 4), (1, 1, 1): Fraction(1, 4)}
    columns, rows = coupling.sample(100, seed=3)
    assert columns == ["a", "b", "c"] and all(r[0] == r[2] for r in rows)

    report = admg_py.verify(iv, "a", "c", k=3)
    assert report["passes"], report

    arid = admg_py.Graph.from_edges(["x", "y", "z"], bidirected=[("x", "y"), ("y", "z")])
    assert admg_py.verify(arid, "x", "z")["refused"]
    try:
        admg_py.Coupling(arid, "x", "z")
    except admg_py.AdmgError as e:
        assert "not densely connected" in str(e)
    else:
        raise AssertionError("expected a refusal")

    _, values = admg_py.continuous_coupling(iv, "a", "c", rho=0.9, n=2000, seed=1)
    a = [r[0] for r in values]
    c = [r[2] for r in values]
    ma, mc = sum(a) / len(a), sum(c) / len(c)
    cov = sum((x - ma) * (y - mc) for x, y in zip(a, c))
    var = (sum((x - ma) ** 2 for x in a) * sum((y - mc) ** 2 for y in c)) ** 0.5
    assert abs(cov / var - 0.9) < 0.05

    table = "x,y,z,p\n" + "".join(f"{i >> 2 & 1},{i >> 1 & 1},{i & 1},1/8\n" for i in range(8))
    assert admg_py.nested_check(arid, table) == []

    reduced, kept = admg_py.comp_graph(5).minimal("v", "w")
    assert kept == ["v", "w"] and reduced.vertices == ["v", "w"]
    assert admg_py.parity_lemma(4, [(1, 2), (2, 3), (3, 4)])

    print("smoke test: pass")


if __name__ == "__main__":
    main()
