"""Curvature-type tensors: symmetry closure, file input, random draws.

A curvature weight tensor R_ijkl is stored sparsely on a canonical
representative per symmetry orbit, with the symmetries

    R_ijkl = -R_jikl = -R_ijlk = R_klij

enforced on construction (the first Bianchi identity is an extra, optional
constraint used by the geometry layer, not by the algebra tests).  The
second fundamental form h_ab is a symmetric (n-1)x(n-1) block with indices
1..n-1 next to the collar normal index 0.

Tensor files are JSON:

    {"dimension": 3,
     "curvature": [[0, 1, 0, 1, "1/2"], ...],     # i j k l value
     "second_fundamental": [[1, 1, "1"], ...]}    # a b value

Unlisted entries are zero; listed entries are closed up under the symmetry
class, and inconsistent duplicates raise.
"""

from __future__ import annotations

import json
from fractions import Fraction

import numpy as np

from .algebra import EXACT, FLOAT, BiGradedElement, wedge


class TensorError(ValueError):
    pass


def _canon(i, j, k, l):
    """Canonical orbit representative and relative sign under the pair symmetries."""
    sign = 1
    if i == j or k == l:
        return None, 0
    if i > j:
        i, j = j, i
        sign = -sign
    if k > l:
        k, l = l, k
        sign = -sign
    if (i, j) > (k, l):
        i, j, k, l = k, l, i, j
    return (i, j, k, l), sign


class CurvatureTensor:
    """Sparse R_ijkl with curvature pair symmetries, exact or float entries."""

    def __init__(self, n: int, entries=None, *, mode: str = EXACT, start: int = 0):
        if n <= 0:
            raise TensorError("dimension must be positive")
        self.n = n
        self.start = start
        self.mode = mode
        self.data: dict = {}
        if entries:
            for (i, j, k, l), value in entries:
                self.set_entry(i, j, k, l, value)

    def _check_index(self, idx):
        if not self.start <= idx <= self.start + self.n - 1:
            raise TensorError(f"index {idx} outside {self.start}..{self.start + self.n - 1}")

    def set_entry(self, i, j, k, l, value):
        for idx in (i, j, k, l):
            self._check_index(idx)
        value = Fraction(value) if self.mode == EXACT else float(value)
        key, sign = _canon(i, j, k, l)
        if key is None:
            if value:
                raise TensorError(f"entry ({i},{j},{k},{l}) must vanish by antisymmetry")
            return
        canon_value = value * sign
        if key in self.data and self.data[key] != canon_value:
            raise TensorError(f"inconsistent duplicate for orbit of ({i},{j},{k},{l})")
        if canon_value:
            self.data[key] = canon_value

    def entry(self, i, j, k, l):
        key, sign = _canon(i, j, k, l)
        if key is None:
            return Fraction(0) if self.mode == EXACT else 0.0
        base = self.data.get(key)
        if base is None:
            return Fraction(0) if self.mode == EXACT else 0.0
        return base * sign

    def indices(self):
        return range(self.start, self.start + self.n)

    def is_zero(self):
        return not self.data

    def to_float(self) -> "CurvatureTensor":
        out = CurvatureTensor(self.n, mode=FLOAT, start=self.start)
        out.data = {k: float(v) for k, v in self.data.items()}
        return out

    def bianchi_residual(self):
        """max |R_ijkl + R_iklj + R_iljk| over distinct index quadruples."""
        worst = Fraction(0) if self.mode == EXACT else 0.0
        idx = list(self.indices())
        for i in idx:
            for j in idx:
                for k in idx:
                    for l in idx:
                        if len({i, j, k, l}) < 4:
                            continue
                        r = self.entry(i, j, k, l) + self.entry(i, k, l, j) + self.entry(i, l, j, k)
                        if abs(r) > abs(worst):
                            worst = r
        return abs(worst)

    # -- bi-graded element builders ----------------------------------------

    def curvature_weight(self) -> BiGradedElement:
        """(1/8) R_ijkl e^i e^j ê^k ê^l, the degree-(2,2) weight element."""
        acc = BiGradedElement.zero(self.n, mode=self.mode, start=self.start)
        eighth = Fraction(1, 8) if self.mode == EXACT else 0.125
        terms = {}
        for (i, j, k, l), v in self.data.items():
            # orbit representative has i<j, k<l; expand the 4 signed orderings
            # directly: R_ijkl e^i e^j ê^k ê^l summed over the full orbit gives
            # 4 * representative when i<j, k<l (plus the pair swap partner).
            keys = [((i, j), (k, l), v * 4)]
            if (i, j) != (k, l):
                keys.append((((k, l) if k < l else (l, k)), ((i, j) if i < j else (j, i)), v * 4))
            for (pi, ph, val) in keys:
                key = (pi, ph)
                terms[key] = terms.get(key, 0) + val
        scaled = {k: (Fraction(v) * eighth if self.mode == EXACT else float(v) * eighth)
                  for k, v in terms.items()}
        acc = BiGradedElement(self.n, scaled, mode=self.mode, start=self.start)
        return acc

    def normal_weight(self) -> BiGradedElement:
        """(1/4) R_0jkl e^0 e^j ê^k ê^l: the part of the weight with one plain e^0."""
        if self.start != 0:
            raise TensorError("normal weight needs the collar index convention (start=0)")
        quarter = Fraction(1, 4) if self.mode == EXACT else 0.25
        terms = {}
        for j in self.indices():
            if j == 0:
                continue
            for k in self.indices():
                for l in self.indices():
                    if k >= l:
                        continue
                    v = self.entry(0, j, k, l)
                    if not v:
                        continue
                    # ê^k ê^l with k<l counted twice in the free sum (k,l) & (l,k)
                    key = ((0, j), (k, l))
                    terms[key] = terms.get(key, Fraction(0) if self.mode == EXACT else 0.0) + 2 * v * quarter
        terms = {k: v for k, v in terms.items() if v}
        return BiGradedElement(self.n, terms, mode=self.mode, start=self.start)

    def normal_weight_stripped(self) -> BiGradedElement:
        """(1/4) R_0jkl e^j ê^k ê^l: normal weight with the e^0 factor removed."""
        from .algebra import contract
        return contract(self.normal_weight(), 0)

    def interior_weight(self) -> BiGradedElement:
        """curvature_weight minus normal_weight: all terms free of plain e^0."""
        return self.curvature_weight() - self.normal_weight()


class SecondFundamentalForm:
    """Symmetric h_ab, a,b in 1..n-1, boundary-orthonormal-frame components."""

    def __init__(self, n: int, entries=None, *, mode: str = EXACT):
        self.n = n
        self.mode = mode
        self.data: dict = {}
        if entries:
            for (a, b), value in entries:
                self.set_entry(a, b, value)

    def set_entry(self, a, b, value):
        if not (1 <= a <= self.n - 1 and 1 <= b <= self.n - 1):
            raise TensorError(f"boundary indices must lie in 1..{self.n - 1}")
        value = Fraction(value) if self.mode == EXACT else float(value)
        key = (a, b) if a <= b else (b, a)
        if key in self.data and self.data[key] != value:
            raise TensorError(f"inconsistent duplicate for h[{a},{b}]")
        if value:
            self.data[key] = value

    def entry(self, a, b):
        key = (a, b) if a <= b else (b, a)
        return self.data.get(key, Fraction(0) if self.mode == EXACT else 0.0)

    def trace(self):
        total = Fraction(0) if self.mode == EXACT else 0.0
        for a in range(1, self.n):
            total += self.entry(a, a)
        return total

    def is_zero(self):
        return not self.data

    def pairing_element(self) -> BiGradedElement:
        """h_ab e^a ∧ ê^b summed over all a, b (collar algebra, start=0)."""
        terms = {}
        for a in range(1, self.n):
            for b in range(1, self.n):
                v = self.entry(a, b)
                if v:
                    terms[((a,), (b,))] = v
        return BiGradedElement(self.n, terms, mode=self.mode, start=0)

    @classmethod
    def from_matrix(cls, mat, *, mode: str = FLOAT):
        mat = np.asarray(mat)
        n = mat.shape[0] + 1
        if not np.allclose(mat, mat.T, atol=1e-12):
            raise TensorError("second fundamental form must be symmetric")
        sym = (mat + mat.T) / 2.0
        out = cls(n, mode=mode)
        for a in range(1, n):
            for b in range(a, n):
                v = sym[a - 1, b - 1]
                if v:
                    out.set_entry(a, b, Fraction(v) if mode == EXACT else float(v))
        return out


# ---------------------------------------------------------------------------
# Random draws (seeded, exact) and file input
# ---------------------------------------------------------------------------

def random_curvature(n: int, rng: np.random.Generator, *, start: int = 0,
                     mode: str = EXACT, denominator: int = 4,
                     magnitude: int = 6, bianchi: bool = False) -> CurvatureTensor:
    """Random tensor with the curvature pair symmetries (optionally Bianchi).

    Draws a symmetric matrix on the antisymmetric index pairs, which is
    exactly the general solution of the three pair symmetries.
    """
    idx = list(range(start, start + n))
    pairs = [(i, j) for i in idx for j in idx if i < j]
    m = len(pairs)
    raw = rng.integers(-magnitude, magnitude + 1, size=(m, m))
    sym = raw + raw.T
    tensor = CurvatureTensor(n, mode=mode, start=start)
    for p, (i, j) in enumerate(pairs):
        for q, (k, l) in enumerate(pairs):
            if (i, j) > (k, l):
                continue
            v = int(sym[p, q])
            if v:
                tensor.set_entry(i, j, k, l,
                                 Fraction(v, denominator) if mode == EXACT else v / denominator)
    if bianchi:
        tensor = bianchi_project(tensor)
    if mode == FLOAT:
        tensor = tensor.to_float()
    return tensor


def bianchi_project(t: CurvatureTensor) -> CurvatureTensor:
    """Project onto tensors satisfying the first Bianchi identity.

    Removes the fully antisymmetric component: R - Alt(R) in the standard
    decomposition of pair-symmetric tensors; preserves the pair symmetries.
    """
    out = CurvatureTensor(t.n, mode=t.mode, start=t.start)
    idx = list(t.indices())
    third = Fraction(1, 3) if t.mode == EXACT else (1.0 / 3.0)
    seen = set()
    for i in idx:
        for j in idx:
            for k in idx:
                for l in idx:
                    key, _ = _canon(i, j, k, l)
                    if key is None or key in seen or key != (i, j, k, l):
                        continue
                    seen.add(key)
                    b = t.entry(i, j, k, l) + t.entry(i, k, l, j) + t.entry(i, l, j, k)
                    v = t.entry(i, j, k, l) - third * b
                    if v:
                        out.set_entry(i, j, k, l, v)
    return out


def random_second_fundamental(n: int, rng: np.random.Generator, *,
                              mode: str = EXACT, denominator: int = 4,
                              magnitude: int = 6) -> SecondFundamentalForm:
    m = n - 1
    raw = rng.integers(-magnitude, magnitude + 1, size=(m, m))
    sym = raw + raw.T
    h = SecondFundamentalForm(n, mode=mode)
    for a in range(1, n):
        for b in range(a, n):
            v = int(sym[a - 1, b - 1])
            if v:
                h.set_entry(a, b, Fraction(v, denominator) if mode == EXACT else v / denominator)
    return h


def load_tensor_file(path, *, mode: str = EXACT):
    """Read a JSON tensor file; returns (CurvatureTensor, SecondFundamentalForm).

    Values may be strings ("3/4"), integers, or floats; exact mode requires
    rational-representable values.
    """
    with open(path) as fh:
        payload = json.load(fh)
    try:
        n = int(payload["dimension"])
    except (KeyError, TypeError, ValueError) as exc:
        raise TensorError(f"tensor file {path} lacks a valid 'dimension'") from exc

    def parse(v):
        if mode == EXACT:
            return Fraction(str(v))
        return float(Fraction(str(v))) if isinstance(v, str) else float(v)

    curvature = CurvatureTensor(n, mode=mode, start=0)
    for row in payload.get("curvature", []):
        if len(row) != 5:
            raise TensorError(f"curvature rows are [i,j,k,l,value], got {row}")
        i, j, k, l, v = row
        curvature.set_entry(int(i), int(j), int(k), int(l), parse(v))
    second = SecondFundamentalForm(n, mode=mode)
    for row in payload.get("second_fundamental", []):
        if len(row) != 3:
            raise TensorError(f"second_fundamental rows are [a,b,value], got {row}")
        a, b, v = row
        second.set_entry(int(a), int(b), parse(v))
    return curvature, second


def save_tensor_file(path, curvature: CurvatureTensor | None = None,
                     second: SecondFundamentalForm | None = None, *, dimension=None):
    n = dimension or (curvature.n if curvature else second.n)
    payload = {"dimension": n, "curvature": [], "second_fundamental": []}
    if curvature:
        for (i, j, k, l), v in sorted(curvature.data.items()):
            payload["curvature"].append([i, j, k, l, str(v)])
    if second:
        for (a, b), v in sorted(second.data.items()):
            payload["second_fundamental"].append([a, b, str(v)])
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
