"""Block-recursive solver for the twisted ABRR equation and the QRA equation checks.

The unknown Psi acts on W (x) M2 (x) M3 where W is the one-dimensional Cartan
module of formal weight lam.  It solves

    Psi = Rbar^-1_(23) * D Psi D^-1,    D = exp(h (lam H2 + H2^2 / 2)) sigma_2,

and is graded by m, the number of lowering steps on the last leg.  Block m
satisfies Psi_m (1 - c) = sum_(m' >= 1) (Rbar^-1)_(m') D Psi_(m - m') D^-1
entrywise, where c = D_i / D_j.  When c = 1 modulo h the equation is divided by
h and solved over rational functions of lam; the result is then required to be
polynomial.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from gmpy2 import mpq

from .coeff import CycloRing, LambdaRing, Ring, conv, series_inv_coeffs
from .modrep import (
    SeriesMatrix,
    WeightModule,
    cartan_module,
    ematrix,
    exp_scalar,
    irrep,
    place_legs,
    rbar_matrix,
    rmatrix,
    swap_matrix,
    tensor_module,
    zeta_scalar,
)


class ValuationError(ArithmeticError):
    """Raised when a solved block fails the denominator or valuation bound."""


def power_module(d: int, arity: int, ring: Ring, order: int, quantum: bool = True) -> WeightModule:
    """Left-nested tensor power (((V V) V) ...) of V(d) with the coproduct action."""
    M = irrep(d, ring, order, quantum)
    for _ in range(arity - 1):
        M = tensor_module(M, irrep(d, ring, order, quantum), quantum)
    return M


@dataclass
class PsiSolution:
    psi: SeriesMatrix
    blocks: dict = field(default_factory=dict)
    order: int = 0
    d: int = 1
    N: int = 2
    nu_power: int = 1
    arity: tuple = (1, 1)

    def block(self, m: int) -> SeriesMatrix:
        return self.blocks.get(m, SeriesMatrix.zero(self.psi.dims, self.psi.ring, self.order))


def solve_psi(
    d: int,
    N: int,
    K: int,
    arity: tuple = (1, 1),
    nu_power: int = 1,
    entry_order: str | int = "forward",
) -> PsiSolution:
    """Solve the twisted ABRR equation with formal lam on W (x) M2 (x) M3.

    M2, M3 are left-nested tensor powers of V(d) of the given arities.  The
    automorphism on leg 2 is sigma with zeta replaced by zeta^nu_power.
    ``entry_order`` ("forward", "reverse" or an integer shuffle seed) only
    permutes the order in which independent entries are solved and exists to
    test that the result does not depend on it.
    """
    ring = LambdaRing(N)
    work = K + 1
    M2 = power_module(d, arity[0], ring, work)
    M3 = power_module(d, arity[1], ring, work)
    dim2, dim3 = M2.dim, M3.dim
    dims = (1, dim2, dim3)
    lam = ring.lam()
    half = mpq(1, 2)

    # D on leg 2: exp(h (lam w + w^2/2)) zeta^(nu s)
    dvals = []
    for w, s in zip(M2.weights, M2.sigma_exps):
        x = lam * w + ring.lift(mpq(w * w) * half)
        z = zeta_scalar(ring, N, nu_power * s)
        dvals.append(tuple(c * z for c in exp_scalar(ring, x, work)))
    dinv = [series_inv_coeffs(v, work, ring.inv, ring.zero) for v in dvals]
    left = {i: dvals[i // dim3] for i in range(dim2 * dim3)}
    right = {i: dinv[i // dim3] for i in range(dim2 * dim3)}

    rbar_inv = rbar_matrix(M2, M3).with_dims(dims).inverse()
    w2 = M2.weights

    def block_of(i: int, j: int) -> int:
        return (w2[i // dim3] - w2[j // dim3]) // 2

    rinv_blocks: dict[int, SeriesMatrix] = {}
    for i, row in rbar_inv.rows.items():
        for j, c in row.items():
            m = block_of(i, j)
            rinv_blocks.setdefault(m, SeriesMatrix(dims, ring, work, {})).rows.setdefault(i, {})[j] = c
    zero = ring.zero
    blocks = {0: SeriesMatrix.identity(dims, ring, work)}
    conj = {0: blocks[0]}
    m_max = min(max(w2) - min(w2), max(M3.weights) - min(M3.weights)) // 2
    for m in range(1, m_max + 1):
        rhs = SeriesMatrix.zero(dims, ring, work)
        for mp in range(1, m + 1):
            rb = rinv_blocks.get(mp)
            if rb is None or (m - mp) not in conj:
                continue
            rhs = rhs + rb.matmul(conj[m - mp])
        entries = [(i, j, c) for i, row in rhs.rows.items() for j, c in row.items()]
        if entry_order == "reverse":
            entries.reverse()
        elif isinstance(entry_order, int):
            random.Random(entry_order).shuffle(entries)
        rows: dict = {}
        for i, j, r in entries:
            if block_of(i, j) != m:
                raise ValuationError("right-hand side is not weight-homogeneous")
            c = conv(left[i], right[j], work, zero)
            one_minus = tuple(((ring.one if k == 0 else zero) - x) for k, x in enumerate(c))
            if one_minus[0]:
                val = conv(r, series_inv_coeffs(one_minus, work, ring.inv, zero), work, zero)
            else:
                if r[0]:
                    raise ValuationError("valuation bound violated: nonzero constant term in a resonant block")
                num = r[1:]
                den = one_minus[1:]
                q = conv(num, series_inv_coeffs(den, work - 1, ring.inv, zero), work - 1, zero)
                val = q + (zero,)
            if any(val):
                rows.setdefault(i, {})[j] = val
        blk = SeriesMatrix(dims, ring, work, rows)
        blocks[m] = blk
        conj[m] = blk.conj_diag(left, right)

    # truncate, assert the structural statements
    out_blocks = {}
    total = SeriesMatrix.zero(dims, ring, K)
    for m, blk in blocks.items():
        b = blk.truncate(K)
        for row in b.rows.values():
            for c in row.values():
                for k, x in enumerate(c):
                    if not x.is_polynomial():
                        raise ValuationError(f"valuation bound violated: block {m} has a lam-denominator")
                    if x and k < m:
                        raise ValuationError(f"valuation bound violated: block {m} is nonzero at h^{k}")
        out_blocks[m] = b
        total = total + b
    return PsiSolution(total, out_blocks, K, d, N, nu_power, tuple(arity))


def lam_degree_bound_holds(sol: PsiSolution) -> bool:
    """Coefficient of h^k has lam-degree at most k (Psi is a series in h*lam and h)."""
    for row in sol.psi.rows.values():
        for c in row.values():
            for k, x in enumerate(c):
                if x and x.degree() > k:
                    return False
    return True


# ---------------------------------------------------------------------------
# twist families: Psi at arbitrary groupings and weight shifts
# ---------------------------------------------------------------------------

class AlgebraicTwist:
    """Solved twists for V(d), indexed by the arities of legs 2 and 3.

    With ``lam=None`` matrices carry the formal weight; otherwise they are
    evaluated at the given rational weight (ring Q(zeta_N)).
    """

    def __init__(self, d: int, N: int, K: int, lam=None):
        self.d, self.N, self.K, self.lam = d, N, K, lam
        self.ring = LambdaRing(N) if lam is None else CycloRing(N)
        self._solutions: dict = {}

    def solution(self, arity: tuple = (1, 1)) -> PsiSolution:
        if arity not in self._solutions:
            self._solutions[arity] = solve_psi(self.d, self.N, self.K, arity)
        return self._solutions[arity]

    def module(self, arity: int = 1) -> WeightModule:
        return power_module(self.d, arity, self.ring, self.K)

    def weight(self, shift=0):
        if self.lam is None:
            return self.ring.lam() + shift
        return self.ring.lift(mpq(self.lam) + shift)

    def psi(self, arity: tuple = (1, 1), shift=0) -> SeriesMatrix:
        m = self.solution(arity).psi
        if shift:
            m = m.shift_lambda(shift)
        if self.lam is not None:
            m = m.evaluate_lambda(self.lam)
        return m

    def E(self, shift=0) -> SeriesMatrix:
        W = cartan_module(self.weight(shift), self.ring, self.K)
        return ematrix(W, self.module(), self.N)

    def R(self) -> SeriesMatrix:
        V = self.module()
        return rmatrix(V, V)

    def phi(self) -> SeriesMatrix:
        dV = self.module().dim
        return SeriesMatrix.identity((dV, dV, dV), self.ring, self.K)


def psi_first_leg_grouped(family, arity: tuple, shift_weights) -> SeriesMatrix:
    """Psi^(12,3,4): block-diagonal over the basis of the grouped leg.

    For a basis vector of weight w in the extra leg, the W-weight becomes
    lam + w.  Returns a matrix on (1, len(shift_weights), dim2, dim3).
    """
    mats = [family.psi(arity, w) for w in shift_weights]
    base = mats[0]
    n1 = len(shift_weights)
    inner = base.size
    rows = {}
    for a, m in enumerate(mats):
        off = a * inner
        for i, row in m.rows.items():
            rows[off + i] = {off + j: c for j, c in row.items()}
    dims = (1, n1) + base.dims[1:]
    return SeriesMatrix(dims, base.ring, base.order, rows)


def grouped_psi_leg(family, grouping: str) -> SeriesMatrix:
    """Psi with a grouped leg on W (x) V (x) V (x) V.

    ``grouping`` is one of "1,2,3", "12,3,4", "1,23,4", "1,2,34".
    """
    V = family.module()
    d = V.dim
    dims = (1, d, d, d)
    if grouping == "1,2,3":
        return place_legs(family.psi((1, 1)), (0, 1, 2), dims)
    if grouping == "1,2,34":
        return family.psi((1, 2)).with_dims(dims)
    if grouping == "1,23,4":
        return family.psi((2, 1)).with_dims(dims)
    if grouping == "12,3,4":
        return psi_first_leg_grouped(family, (1, 1), list(V.weights)).with_dims(dims)
    raise ValueError(f"unknown grouping {grouping!r}")


# ---------------------------------------------------------------------------
# equation checks
# ---------------------------------------------------------------------------

def check_abrr(psi: SeriesMatrix, E: SeriesMatrix, rbar: SeriesMatrix) -> dict:
    """Residual of Psi E^(12) = (Rbar^(23))^-1 E^(12) Psi on W (x) M2 (x) M3."""
    dims = psi.dims
    E12 = place_legs(E, (0, 1), dims)
    Rb = place_legs(rbar.with_dims(dims[1:]), (1, 2), dims)
    res = psi.matmul(E12) - Rb.inverse().matmul(E12).matmul(psi)
    return {"equation": "Psi E12 = (Rbar23)^-1 E12 Psi", "max_residual_per_order": res.residual_per_order()}


def mixed_pentagon_residual(family, phi: SeriesMatrix | None = None) -> SeriesMatrix:
    V = family.module()
    d = V.dim
    dims = (1, d, d, d)
    lhs = grouped_psi_leg(family, "1,2,34").matmul(grouped_psi_leg(family, "12,3,4"))
    rhs = grouped_psi_leg(family, "1,23,4").matmul(grouped_psi_leg(family, "1,2,3"))
    if phi is not None:
        rhs = place_legs(phi, (1, 2, 3), dims).matmul(rhs)
    return lhs - rhs


def check_mixed_pentagon(family, phi: SeriesMatrix | None = None) -> dict:
    res = mixed_pentagon_residual(family, phi)
    return {
        "equation": "Psi^(1,2,34) Psi^(12,3,4) = Phi^(2,3,4) Psi^(1,23,4) Psi^(1,2,3)",
        "max_residual_per_order": res.residual_per_order(),
    }


def grouped_E(family) -> SeriesMatrix:
    """(Delta_B x id)(E): E with first leg W (x) V viewed as a Cartan module."""
    V = family.module()
    mats = [family.E(w) for w in V.weights]
    d = V.dim
    rows = {}
    for a, m in enumerate(mats):
        off = a * d
        for i, row in m.rows.items():
            rows[off + i] = {off + j: c for j, c in row.items()}
    return SeriesMatrix((1, d, d), mats[0].ring, mats[0].order, rows)


def octagon_residual(family, R: SeriesMatrix | None = None, psi: SeriesMatrix | None = None) -> SeriesMatrix:
    V = family.module()
    d = V.dim
    dims = (1, d, d)
    ring, K = family.ring, family.K
    R = family.R() if R is None else R
    psi = family.psi((1, 1)) if psi is None else psi
    psi = psi.with_dims(dims)
    s12 = swap_matrix(dims, 1, 2, ring, K)
    R23 = place_legs(R, (1, 2), dims)
    R32 = s12.matmul(R23).matmul(s12)
    psi132 = s12.matmul(psi).matmul(s12)
    E13 = place_legs(family.E(0), (0, 2), dims)
    rhs = psi.inverse().matmul(R32).matmul(psi132).matmul(E13).matmul(psi132.inverse()).matmul(R23).matmul(psi)
    return grouped_E(family) - rhs


def check_octagon(family, R: SeriesMatrix | None = None, psi: SeriesMatrix | None = None) -> dict:
    res = octagon_residual(family, R, psi)
    return {
        "equation": "E^(12,3) = Psi^-1 R32 Psi^(1,3,2) E13 (Psi^(1,3,2))^-1 R23 Psi",
        "max_residual_per_order": res.residual_per_order(),
    }


def h_invariance_residual(psi: SeriesMatrix, weights_per_leg: list) -> SeriesMatrix:
    """[Psi, total weight operator]; weights_per_leg lists h-eigenvalues per leg."""
    from itertools import product as _product

    ring = psi.ring
    totals = [sum(ws) for ws in _product(*weights_per_leg)]
    Hdiag = SeriesMatrix.diagonal(psi.dims, ring, psi.order, [[ring.lift(t)] for t in totals])
    return psi.matmul(Hdiag) - Hdiag.matmul(psi)


# ---------------------------------------------------------------------------
# comparison with the Shapovalov-built twist
# ---------------------------------------------------------------------------

def oracle_compare_shapovalov(d: int, N: int, K: int, m_max: int = 3, nu_power: int = 1) -> list[dict]:
    """Compare solved blocks with the symbolic twist terms evaluated on modules."""
    from .uqsl2 import evaluate_twist_block

    sol = solve_psi(d, N, K, (1, 1), nu_power)
    out = []
    for m in range(0, m_max + 1):
        if m > d:
            break
        sym = evaluate_twist_block(m, d, N, K, nu_power)
        res = sol.block(m) - sym
        out.append({"m": m, "d": d, "N": N, "max_residual_per_order": res.residual_per_order()})
    return out


# ---------------------------------------------------------------------------
# representation built from Psi
# ---------------------------------------------------------------------------

def qra_data(family, n: int, phi: SeriesMatrix | None = None):
    """Braid representation on W (x) V^(x n) using R, Phi, the solved Psi and E."""
    from .braid import RepData

    V = family.module()
    W = cartan_module(family.weight(0), family.ring, family.K)
    dims = (1,) + (V.dim,) * n
    psi_full = None
    if n >= 2:
        psi_full = family.psi((1, n - 1)).with_dims(dims)
    if phi is None and n >= 3:
        phi = family.phi()
    return RepData("qra", n, family.N, W, V, family.R(), family.E(0), phi=phi, psi_full=psi_full)
