import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsos.conic import ProgramBuilder, VariableLayout, Span, smat, svec, svec_len


def test_svec_identity_2x2():
    assert np.allclose(svec(np.eye(2)), [1.0, 0.0, 1.0])


def test_svec_offdiagonal_scaling():
    M = np.array([[0.0, 1.0], [1.0, 0.0]])
    v = svec(M)
    assert np.allclose(v, [0.0, np.sqrt(2.0), 0.0])
    assert np.isclose(v @ v, np.sum(M * M))


def test_svec_inner_product_matches_frobenius():
    rng = np.random.default_rng(3)
    for _ in range(50):
        t = int(rng.integers(1, 6))
        M = rng.standard_normal((t, t))
        M = M + M.T
        N = rng.standard_normal((t, t))
        N = N + N.T
        assert np.isclose(svec(M) @ svec(N), np.sum(M * N), rtol=1e-13)


def test_smat_roundtrip_random():
    # off-diagonals go through *sqrt(2)/sqrt(2); exact up to one ulp
    rng = np.random.default_rng(11)
    for _ in range(100):
        t = int(rng.integers(1, 7))
        M = rng.standard_normal((t, t))
        M = M + M.T
        R = smat(svec(M))
        assert np.allclose(R, M, rtol=1e-15, atol=0.0)
        assert np.array_equal(np.diag(R), np.diag(M))  # diagonal untouched


def test_svec_rejects_nonsquare():
    with pytest.raises(ValueError):
        svec(np.zeros((2, 3)))


def test_smat_rejects_bad_length():
    with pytest.raises(ValueError, match="triangular"):
        smat(np.zeros(4))


def _demo_layout():
    return VariableLayout((
        Span("a", "free", 0, 3),
        Span("b", "nonneg", 3, 2),
        Span("C", "psd", 5, svec_len(3), 3),
    ))


def test_layout_pack_unpack_roundtrip():
    lay = _demo_layout()
    rng = np.random.default_rng(5)
    C = rng.standard_normal((3, 3))
    C = C + C.T
    vals = {"a": rng.standard_normal(3), "b": rng.standard_normal(2), "C": C}
    x = lay.pack(vals)
    out = lay.unpack(x)
    assert np.allclose(out["a"], vals["a"])
    assert np.allclose(out["b"], vals["b"])
    assert np.allclose(out["C"], C, rtol=1e-15)
    assert np.array_equal(lay.pack(out), x)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["free", "nonneg"]),
                          st.integers(min_value=1, max_value=4)),
                min_size=1, max_size=4))
def test_layout_roundtrip_property(spans):
    parts = []
    off = 0
    for k, (kind, length) in enumerate(spans):
        parts.append(Span(f"s{k}", kind, off, length))
        off += length
    # keep standard-form order: frees first
    parts.sort(key=lambda sp: (sp.kind != "free",))
    fixed, off = [], 0
    for sp in parts:
        fixed.append(Span(sp.name, sp.kind, off, sp.length))
        off += sp.length
    lay = VariableLayout(tuple(fixed))
    x = np.arange(lay.size, dtype=float) + 0.5
    assert np.array_equal(lay.pack(lay.unpack(x)), x)


def test_layout_rejects_gap():
    with pytest.raises(ValueError, match="contiguous"):
        VariableLayout((Span("a", "free", 1, 2),))


def test_layout_rejects_duplicates():
    with pytest.raises(ValueError, match="duplicate"):
        VariableLayout((Span("a", "free", 0, 1), Span("a", "free", 1, 1)))


def test_builder_enforces_segment_order():
    b = ProgramBuilder("min")
    b.add_psd("X", 2)
    with pytest.raises(ValueError, match="declared after"):
        b.add_free("y", 1)


def test_builder_builds_consistent_program():
    b = ProgramBuilder("min")
    b.add_free("y", 2)
    b.add_nonneg("s", 1)
    b.add_psd("X", 2)
    b.add_row("r0", {"y": [1.0, 0.0], "s": [1.0]}, 2.0)
    b.set_objective({"y": [0.0, 1.0]})
    cp = b.build()
    assert cp.n == 2 + 1 + 3
    assert cp.n_free == 2 and cp.n_nonneg == 1 and cp.psd_dims == (2,)
    assert cp.row_labels == ("r0",)
    assert cp.A[0, 0] == 1.0 and cp.A[0, 2] == 1.0
    assert cp.b[0] == 2.0


def test_cone_violation():
    b = ProgramBuilder("min")
    b.add_nonneg("s", 1)
    b.add_psd("X", 2)
    b.set_objective({"s": [1.0]})
    cp = b.build()
    x = cp.layout.pack({"s": [-0.25], "X": np.diag([1.0, -0.5])})
    assert np.isclose(cp.cone_violation(x), 0.5)
    x = cp.layout.pack({"s": [1.0], "X": np.eye(2)})
    assert cp.cone_violation(x) == 0.0


def test_sparse_text_export_deterministic():
    b = ProgramBuilder("max")
    b.add_free("y", 1)
    b.add_psd("X", 2)
    b.add_row("r", {"y": [2.0], "X": svec(np.eye(2))}, 1.0)
    b.set_objective({"y": [1.0]})
    cp = b.build()
    text = cp.to_sparse_text()
    assert text == cp.to_sparse_text()
    lines = text.splitlines()
    assert lines[0] == "sense max"
    assert lines[1] == "vars 4 free 1 nonneg 0"
    assert lines[2] == "psd 2"
    assert lines[3] == "rows 1"
    assert any(line.startswith("A 0 0 ") for line in lines)
