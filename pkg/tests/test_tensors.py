"""Curvature tensor container: symmetries, files, random draws, weight builders."""

from fractions import Fraction

import numpy as np
import pytest

from torsionlab import algebra as al
from torsionlab import tensors as tn


def test_symmetry_closure_and_lookup():
    t = tn.CurvatureTensor(3, start=0)
    t.set_entry(0, 1, 0, 2, Fraction(3, 4))
    assert t.entry(1, 0, 0, 2) == Fraction(-3, 4)
    assert t.entry(0, 1, 2, 0) == Fraction(-3, 4)
    assert t.entry(0, 2, 0, 1) == Fraction(3, 4)
    assert t.entry(2, 0, 1, 0) == Fraction(3, 4)
    assert t.entry(0, 1, 0, 1) == 0


def test_antisymmetric_slots_must_vanish():
    t = tn.CurvatureTensor(3, start=0)
    t.set_entry(0, 0, 1, 2, 0)  # fine: zero
    with pytest.raises(tn.TensorError):
        t.set_entry(0, 0, 1, 2, 1)


def test_inconsistent_duplicates_rejected():
    t = tn.CurvatureTensor(3, start=0)
    t.set_entry(0, 1, 0, 2, Fraction(1))
    t.set_entry(2, 0, 1, 0, Fraction(1))      # consistent restatement
    with pytest.raises(tn.TensorError):
        t.set_entry(0, 1, 0, 2, Fraction(2))  # conflicting value


def test_random_curvature_has_symmetries():
    rng = np.random.default_rng(5)
    for n in (2, 3, 4):
        t = tn.random_curvature(n, rng)
        idx = list(t.indices())
        for i in idx:
            for j in idx:
                for k in idx:
                    for l in idx:
                        v = t.entry(i, j, k, l)
                        assert v == -t.entry(j, i, k, l)
                        assert v == -t.entry(i, j, l, k)
                        assert v == t.entry(k, l, i, j)


def test_bianchi_projection():
    rng = np.random.default_rng(6)
    t = tn.random_curvature(4, rng)
    projected = tn.bianchi_project(t)
    assert projected.bianchi_residual() == 0
    # projection is idempotent and preserves already-Bianchi tensors
    again = tn.bianchi_project(projected)
    assert again.data == projected.data
    # n = 3: Bianchi holds automatically for pair-symmetric tensors
    t3 = tn.random_curvature(3, rng)
    assert t3.bianchi_residual() == 0


def test_curvature_weight_explicit_n2():
    t = tn.CurvatureTensor(2, start=0)
    t.set_entry(0, 1, 0, 1, Fraction(3, 4))
    w = t.curvature_weight()
    assert w.coefficient((0, 1), (0, 1)) == Fraction(3, 8)
    assert t.normal_weight() == w
    assert t.interior_weight().is_zero()


def test_weight_decomposition_and_nilpotency():
    rng = np.random.default_rng(7)
    for n in (3, 4):
        t = tn.random_curvature(n, rng)
        full = t.curvature_weight()
        normal = t.normal_weight()
        interior = t.interior_weight()
        assert interior + normal == full
        assert all(0 not in plain for plain, _ in interior.terms)
        assert all(0 in plain for plain, _ in normal.terms)
        assert al.wedge(normal, normal).is_zero()
        assert full.bidegrees() <= {(2, 2)}


def test_stripped_normal_weight():
    rng = np.random.default_rng(8)
    t = tn.random_curvature(3, rng)
    stripped = t.normal_weight_stripped()
    rebuilt = al.wedge(al.BiGradedElement.generator(3, 0, start=0), stripped)
    assert rebuilt == t.normal_weight()


def test_second_fundamental_form_symmetry():
    h = tn.SecondFundamentalForm(3)
    h.set_entry(1, 2, Fraction(5))
    assert h.entry(2, 1) == Fraction(5)
    assert h.trace() == 0
    h.set_entry(1, 1, Fraction(2))
    assert h.trace() == Fraction(2)
    pair = h.pairing_element()
    assert pair.coefficient((1,), (2,)) == Fraction(5)
    assert pair.coefficient((2,), (1,)) == Fraction(5)


def test_tensor_file_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    t = tn.random_curvature(3, rng)
    h = tn.random_second_fundamental(3, rng)
    path = tmp_path / "tensor.json"
    tn.save_tensor_file(path, t, h)
    t2, h2 = tn.load_tensor_file(path)
    assert t2.data == t.data
    assert h2.data == h.data


def test_tensor_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"curvature": []}')
    with pytest.raises(tn.TensorError):
        tn.load_tensor_file(bad)
    bad.write_text('{"dimension": 2, "curvature": [[0, 1, 0, 1]]}')
    with pytest.raises(tn.TensorError):
        tn.load_tensor_file(bad)


def test_random_draws_are_seed_deterministic():
    a = tn.random_curvature(3, np.random.default_rng(42))
    b = tn.random_curvature(3, np.random.default_rng(42))
    assert a.data == b.data
