"""Combinatorial torsion of based cochain complexes with chosen cohomology bases.

A complex is stored cochain-style: maps d_p : C^p -> C^{p+1} with preferred
(cell) bases, plus a chosen basis of each cohomology group expressed in the
cell basis.  The torsion is the alternating product of transition
determinants

    ln tau = Σ_p (-1)^p ln |det T_p|,
    T_p = [ d(b^{p-1}) | h^p | b^p ]  in the preferred basis of C^p,

where b^p lifts a basis of the image of d_p.  This makes the basis-change
covariance exact: replacing h^p by h^p A changes ln tau by (-1)^p ln|det A|.
The interval with L^2-normalized harmonic bases gives ln tau = -ln(L)/2,
so matching the paper-style zeta convention (no 1/2) doubles the log.

Exact (Fraction) and float coefficient towers are both supported; exact
complexes also produce the torsion as an exact rational (up to sign).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction


class ComplexError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Small exact/float linear algebra
# ---------------------------------------------------------------------------

def _det(matrix):
    """Determinant by Gaussian elimination; exact for Fraction entries."""
    m = [row[:] for row in matrix]
    n = len(m)
    if n == 0:
        return Fraction(1)
    if any(len(row) != n for row in m):
        raise ComplexError("determinant of a non-square matrix")
    det = Fraction(1) if isinstance(m[0][0], (Fraction, int)) else 1.0
    for col in range(n):
        pivot_row = None
        best = None
        for r in range(col, n):
            v = m[r][col]
            if v:
                if isinstance(v, float):
                    if best is None or abs(v) > best:
                        best, pivot_row = abs(v), r
                else:
                    pivot_row = r
                    break
        if pivot_row is None:
            return 0 * det
        if pivot_row != col:
            m[col], m[pivot_row] = m[pivot_row], m[col]
            det = -det
        pivot = m[col][col]
        det = det * pivot
        for r in range(col + 1, n):
            if m[r][col]:
                factor = m[r][col] / pivot
                m[r] = [a - factor * b for a, b in zip(m[r], m[col])]
    return det


def _matvec(matrix, vec):
    return [sum(row[j] * vec[j] for j in range(len(vec))) for row in matrix]


def _rank_and_pivot_columns(matrix):
    """Row-echelon rank and pivot column indices (exact or float)."""
    if not matrix or not matrix[0]:
        return 0, []
    m = [row[:] for row in matrix]
    rows, cols = len(m), len(m[0])
    pivots = []
    r = 0
    for c in range(cols):
        pivot_row = None
        best = None
        for rr in range(r, rows):
            v = m[rr][c]
            if v and (isinstance(v, (Fraction, int)) or abs(v) > 1e-12):
                if isinstance(v, float):
                    if best is None or abs(v) > best:
                        best, pivot_row = abs(v), rr
                else:
                    pivot_row = rr
                    break
        if pivot_row is None:
            continue
        m[r], m[pivot_row] = m[pivot_row], m[r]
        pivot = m[r][c]
        for rr in range(r + 1, rows):
            if m[rr][c]:
                factor = m[rr][c] / pivot
                m[rr] = [a - factor * b for a, b in zip(m[rr], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return len(pivots), pivots


# ---------------------------------------------------------------------------
# Complexes
# ---------------------------------------------------------------------------

@dataclass
class BasedChainComplex:
    """Cochain complex with preferred bases and chosen cohomology bases.

    ``differentials[p]`` is the matrix of d_p : C^p -> C^{p+1} (rows indexed
    by C^{p+1} cells); ``cohomology_bases[p]`` lists basis vectors of H^p as
    coordinate columns in C^p.  ``rep_rank`` is the rank of the coefficient
    representation (already expanded into the ranks).
    """

    ranks: list
    differentials: dict
    cohomology_bases: dict
    rep_rank: int = 1
    geometry: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        top = len(self.ranks) - 1
        for p, d in self.differentials.items():
            if not 0 <= p < top + 1:
                raise ComplexError(f"differential in degree {p} out of range")
            rows = len(d)
            cols = len(d[0]) if d else 0
            if d and (rows != self.ranks[p + 1] or cols != self.ranks[p]):
                raise ComplexError(f"d_{p} has shape {rows}x{cols}, expected "
                                   f"{self.ranks[p + 1]}x{self.ranks[p]}")
        # d_{p+1} d_p = 0, exactly
        for p in range(top):
            d0 = self.differentials.get(p)
            d1 = self.differentials.get(p + 1)
            if not d0 or not d1:
                continue
            for j in range(len(d0[0])):
                col = [d0[i][j] for i in range(len(d0))]
                image = _matvec(d1, col)
                if any(image):
                    raise ComplexError(f"d_{p + 1} d_{p} != 0 at column {j}")

    def degree_count(self):
        return len(self.ranks)

    def differential(self, p):
        d = self.differentials.get(p)
        if d is None:
            return [[_zero_like(self)] * self.ranks[p] for _ in range(self.ranks[p + 1])] \
                if p + 1 < len(self.ranks) else []
        return d

    def is_exact_mode(self):
        for d in self.differentials.values():
            for row in d:
                for v in row:
                    if isinstance(v, float):
                        return False
        for basis in self.cohomology_bases.values():
            for vec in basis:
                for v in vec:
                    if isinstance(v, float):
                        return False
        return True


def _zero_like(cx):
    return Fraction(0) if cx.is_exact_mode() else 0.0


@dataclass(frozen=True)
class TorsionValue:
    ln_tau: float
    tau_abs_exact: Fraction | None
    convention: str
    basis_provenance: str

    def shifted_by_basis_change(self, degree: int, det_abs) -> "TorsionValue":
        ln_shift = float((-1) ** degree) * math.log(float(abs(det_abs)))
        exact = None
        if self.tau_abs_exact is not None and isinstance(det_abs, (Fraction, int)):
            exact = (self.tau_abs_exact * abs(Fraction(det_abs))
                     if degree % 2 == 0 else self.tau_abs_exact / abs(Fraction(det_abs)))
        return TorsionValue(self.ln_tau + ln_shift, exact, self.convention,
                            self.basis_provenance)


def r_torsion(cx: BasedChainComplex, *, lift_choice=None,
              provenance: str = "harmonic") -> TorsionValue:
    """Alternating-determinant torsion with the stored cohomology bases.

    ``lift_choice`` optionally maps degree -> list of column indices of C^p
    whose images span im(d_p); defaults to the pivot columns.  The result is
    independent of that choice.
    """
    n_deg = cx.degree_count()
    exact = cx.is_exact_mode()
    lifts = {}
    for p in range(n_deg - 1):
        d = cx.differentials.get(p)
        if not d or not d[0]:
            lifts[p] = []
            continue
        rank, pivots = _rank_and_pivot_columns(d)
        chosen = lift_choice.get(p, pivots) if lift_choice else pivots
        if len(chosen) != rank:
            raise ComplexError(f"lift in degree {p} must have {rank} columns")
        cols = [[d[i][j] for i in range(len(d))] for j in chosen]
        r2, _ = _rank_and_pivot_columns([list(row) for row in zip(*cols)]) if cols else (0, [])
        if cols and r2 != rank:
            raise ComplexError(f"chosen lift columns in degree {p} are not independent")
        lifts[p] = chosen

    ln_tau = 0.0
    tau_exact = Fraction(1) if exact else None
    for p in range(n_deg):
        dim = cx.ranks[p]
        cols = []
        if p >= 1 and lifts.get(p - 1):
            d_prev = cx.differentials[p - 1]
            for j in lifts[p - 1]:
                cols.append([d_prev[i][j] for i in range(len(d_prev))])
        for h in cx.cohomology_bases.get(p, []):
            if len(h) != dim:
                raise ComplexError(f"cohomology basis vector in degree {p} has wrong length")
            cols.append(list(h))
        for j in lifts.get(p, []):
            unit = [_zero_like(cx)] * dim
            unit[j] = Fraction(1) if exact else 1.0
            cols.append(unit)
        if len(cols) != dim:
            raise ComplexError(
                f"degree {p}: {len(cols)} transition columns for dimension {dim}; "
                "cohomology basis ranks are inconsistent with the complex")
        if dim == 0:
            continue
        matrix = [[cols[j][i] for j in range(dim)] for i in range(dim)]
        det = _det(matrix)
        if not det:
            raise ComplexError(f"degenerate transition matrix in degree {p} "
                               "(rank-deficient cohomology basis?)")
        ln_tau += (-1) ** p * math.log(abs(float(det)))
        if exact:
            a = abs(Fraction(det))
            tau_exact = tau_exact * a if p % 2 == 0 else tau_exact / a
    return TorsionValue(ln_tau, tau_exact, "alternating-determinant", provenance)


def replace_cohomology_basis(cx: BasedChainComplex, degree: int, change) -> BasedChainComplex:
    """New complex whose degree-p cohomology basis is the old one times ``change``."""
    basis = cx.cohomology_bases.get(degree)
    if basis is None:
        raise ComplexError(f"no cohomology basis in degree {degree}")
    k = len(basis)
    if len(change) != k or any(len(row) != k for row in change):
        raise ComplexError("basis change matrix has the wrong shape")
    new_basis = []
    for j in range(k):
        vec = [sum(basis[m][i] * change[m][j] for m in range(k))
               for i in range(len(basis[0]))]
        new_basis.append(vec)
    bases = dict(cx.cohomology_bases)
    bases[degree] = new_basis
    return BasedChainComplex(list(cx.ranks), dict(cx.differentials), bases,
                             cx.rep_rank, dict(cx.geometry), cx.name)


def euler_characteristic(cx: BasedChainComplex) -> int:
    """Σ (-1)^p dim C^p; cell ranks already include the representation rank."""
    return sum((-1) ** p * r for p, r in enumerate(cx.ranks))


# ---------------------------------------------------------------------------
# Model complexes: interval and circle with metric harmonic bases
# ---------------------------------------------------------------------------

def _block_expand(matrix, rank):
    """Tensor a scalar matrix with the identity of the representation rank."""
    out = []
    for row in matrix:
        for r in range(rank):
            out.append([v if rr == r else type(v)(0)
                        for v in row for rr in range(rank)])
    return out


def interval_complex(L, *, bc: str = "absolute", rank: int = 1,
                     segments: int = 1, harmonic: bool = True) -> BasedChainComplex:
    """CW interval of length L with ``segments`` equal edges.

    absolute: full cochain complex, H^0 = constants with the L^2-normalized
    harmonic representative (value 1/sqrt(L) at each vertex).
    relative: boundary vertices dropped, H^1 spanned by the harmonic volume
    form (each edge integrates to sqrt(L)/segments).
    """
    if L <= 0 or segments < 1:
        raise ComplexError("need positive length and at least one segment")
    s = segments
    exact = not harmonic
    one = Fraction(1) if exact else 1.0

    if bc == "absolute":
        n_v, n_e = s + 1, s
        d = [[one * 0] * n_v for _ in range(n_e)]
        for e in range(s):
            d[e][e] = -one
            d[e][e + 1] = one
        h0 = [one / math.sqrt(L) if harmonic else one] * n_v
        ranks = [n_v * rank, n_e * rank]
        cx = BasedChainComplex(
            ranks, {0: _block_expand(d, rank)},
            {0: _expand_vectors([h0], rank)},
            rep_rank=rank,
            geometry={"kind": "path", "L": L, "segments": s, "bc": bc},
            name=f"interval[{bc}]")
        return cx
    if bc == "relative":
        n_v, n_e = s - 1, s
        d = [[one * 0] * n_v for _ in range(n_e)]
        for e in range(s):
            # edge e runs from vertex e-1 to vertex e in interior numbering
            if 0 <= e - 1 < n_v:
                d[e][e - 1] = -one
            if e < n_v:
                d[e][e] = one
        h1 = [math.sqrt(L) / s if harmonic else one] * s
        ranks = [n_v * rank, n_e * rank]
        cx = BasedChainComplex(
            ranks, {0: _block_expand(d, rank)} if n_v else {},
            {1: _expand_vectors([h1], rank)},
            rep_rank=rank,
            geometry={"kind": "path", "L": L, "segments": s, "bc": bc},
            name=f"interval[{bc}]")
        return cx
    raise ComplexError(f"boundary condition must be absolute|relative, got {bc!r}")


def _expand_vectors(vectors, rank):
    """Rank-expand basis vectors (each scalar slot becomes a rank-block)."""
    out = []
    for vec in vectors:
        for r in range(rank):
            out.append([v if rr == r else type(v)(0)
                        for v in vec for rr in range(rank)])
    return out


def circle_complex(L, *, rank: int = 1, segments: int = 3, character: int = 1,
                   harmonic: bool = True) -> BasedChainComplex:
    """CW circle of circumference L; ``character`` = ±1 twists the last edge.

    With the trivial character, H^0 = constants and H^1 = the harmonic
    volume class; with character -1 the complex is acyclic.
    """
    if segments < 1:
        raise ComplexError("need at least one segment")
    if character not in (1, -1):
        raise ComplexError("orthogonal rank-one characters are ±1")
    s = segments
    exact = not harmonic
    one = Fraction(1) if exact else 1.0
    d = [[one * 0] * s for _ in range(s)]
    for e in range(s):
        d[e][e] = -one
        target = (e + 1) % s
        tw = character if e == s - 1 else 1
        d[e][target] = d[e][target] + tw * one
    bases = {}
    if character == 1:
        h0 = [one / math.sqrt(L) if harmonic else one] * s
        h1 = [math.sqrt(L) / s if harmonic else one] * s
        bases = {0: _expand_vectors([h0], rank), 1: _expand_vectors([h1], rank)}
    ranks = [s * rank, s * rank]
    return BasedChainComplex(
        ranks, {0: _block_expand(d, rank)}, bases, rep_rank=rank,
        geometry={"kind": "cycle", "L": L, "segments": s, "character": character},
        name=f"circle[chi={character}]")


def two_points_complex(rank: int = 1) -> BasedChainComplex:
    """∂(interval): two vertices, no edges; chi = 2 rank."""
    return BasedChainComplex([2 * rank], {}, {0: []}, rep_rank=rank,
                             name="two-points")


def disjoint_union(a: BasedChainComplex, b: BasedChainComplex) -> BasedChainComplex:
    if a.degree_count() != b.degree_count():
        raise ComplexError("union needs equal degree ranges")
    ranks = [ra + rb for ra, rb in zip(a.ranks, b.ranks)]
    diffs = {}
    for p in range(len(ranks) - 1):
        da, db = a.differentials.get(p), b.differentials.get(p)
        rows_a = a.ranks[p + 1]
        rows_b = b.ranks[p + 1]
        cols_a = a.ranks[p]
        cols_b = b.ranks[p]
        if rows_a + rows_b == 0 or cols_a + cols_b == 0:
            continue
        zero = Fraction(0) if a.is_exact_mode() and b.is_exact_mode() else 0.0
        block = [[zero] * (cols_a + cols_b) for _ in range(rows_a + rows_b)]
        if da:
            for i in range(rows_a):
                for j in range(cols_a):
                    block[i][j] = da[i][j]
        if db:
            for i in range(rows_b):
                for j in range(cols_b):
                    block[rows_a + i][cols_a + j] = db[i][j]
        diffs[p] = block
    return BasedChainComplex(ranks, diffs, {}, a.rep_rank,
                             name=f"{a.name}+{b.name}")


def subdivide(cx: BasedChainComplex) -> BasedChainComplex:
    """Barycentric subdivision of a geometric path or cycle complex.

    The metric data is carried along, so the induced harmonic cohomology
    identification is just the de Rham image on the finer cell structure.
    """
    geo = cx.geometry
    if geo.get("kind") == "path":
        return interval_complex(geo["L"], bc=geo["bc"], rank=cx.rep_rank,
                                segments=2 * geo["segments"])
    if geo.get("kind") == "cycle":
        return circle_complex(geo["L"], rank=cx.rep_rank,
                              segments=2 * geo["segments"],
                              character=geo["character"])
    raise ComplexError("subdivision implemented for 1-dimensional "
                       "geometric complexes (paths and cycles)")


# ---------------------------------------------------------------------------
# File interface
# ---------------------------------------------------------------------------

def load_complex_file(path) -> BasedChainComplex:
    """JSON: {"ranks": [...], "differentials": {"0": [[...]]},
    "cohomology_bases": {"0": [[...]]}, "rep_rank": 1}; entries may be
    strings ("3/4") for exact rationals."""
    with open(path) as fh:
        payload = json.load(fh)

    def parse(v):
        return Fraction(str(v)) if isinstance(v, str) else (
            Fraction(v) if isinstance(v, int) else float(v))

    try:
        ranks = [int(r) for r in payload["ranks"]]
        diffs = {int(p): [[parse(v) for v in row] for row in mat]
                 for p, mat in payload.get("differentials", {}).items()}
        bases = {int(p): [[parse(v) for v in vec] for vec in vecs]
                 for p, vecs in payload.get("cohomology_bases", {}).items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise ComplexError(f"malformed complex file {path}: {exc}") from exc
    return BasedChainComplex(ranks, diffs, bases,
                             rep_rank=int(payload.get("rep_rank", 1)),
                             name=str(payload.get("name", path)))


def torsion_report(tv: TorsionValue) -> dict:
    return {
        "ln_tau": tv.ln_tau,
        "tau_abs_exact": str(tv.tau_abs_exact) if tv.tau_abs_exact is not None else None,
        "convention": tv.convention,
        "basis_provenance": tv.basis_provenance,
    }
