"""Smoke test for the relhom_py extension module.

Builds nothing itself: run `cargo build -p relhom-py` first, then
`python3 python/smoke_test.py`. The script locates the compiled cdylib
under target/, loads it under its importable name, and checks a handful
of frozen homology values end to end.
"""

import pathlib
import shutil
import sys
import tempfile

REPO = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        REPO / "target" / profile / "librelhom_py.so"
        for profile in ("release", "debug")
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit("librelhom_py.so not found; run `cargo build -p relhom-py` first")
    newest = max(built, key=lambda p: p.stat().st_mtime)
    stage = pathlib.Path(tempfile.mkdtemp(prefix="relhom_py_"))
    shutil.copy2(newest, stage / "relhom_py.so")
    sys.path.insert(0, str(stage))
    import relhom_py

    return relhom_py


def presentation(mod, name):
    text = (REPO / "corpus" / f"{name}.pres").read_text()
    return mod.GroupPresentation(text)


def main():
    mod = load_module()

    c2 = presentation(mod, "c2")
    assert c2.order() == 2
    assert c2.h(1) == (0, [2])
    assert c2.h(2) == (0, [])
    assert c2.h(3) == (0, [2])
    assert c2.verify_sequence()

    v4 = presentation(mod, "v4")
    assert v4.order() == 4
    assert v4.relation_rank() == 5
    assert v4.h(2) == (0, [2])
    assert v4.hopf_h2() == (0, [2])
    assert v4.h(4) == (0, [2, 2])
    assert v4.h(4) == v4.bar_h(4)
    assert v4.five_term_exact(1) == (True, True)
    assert v4.equalizer_matches(1)
    assert v4.gamma_quotient(2) == (1, [4, 4])

    s3 = presentation(mod, "s3")
    assert s3.order() == 6
    assert s3.h(2) == (0, [])
    assert s3.h(3) == (0, [6])
    # J_2 is nontrivial here but killed by 2, the degree-2 torsion bound.
    assert s3.j_n(2) == (0, [2, 2, 2])
    assert presentation(mod, "c3").j_n(2) == (0, [])

    try:
        mod.GroupPresentation("gens: x\nrels: y")
    except ValueError as e:
        assert "unknown generator" in str(e)
    else:
        raise AssertionError("malformed presentation must raise ValueError")

    print("smoke test passed: homology, Hopf, five-term, equalizer, gamma all agree")


if __name__ == "__main__":
    main()
