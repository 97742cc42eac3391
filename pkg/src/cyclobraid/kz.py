"""Regularized holonomies of the reduced KZ systems and the analytic braid representation.

A connection is dG/dz = h A(z) G with A(z) = sum_p M_p / (z - p); the residue
matrices M_p already carry the 1/(2 pi i) prefactor.  Everything is expanded
in h: an order-k coefficient is a k-fold iterated integral.

Two integrators are provided.  ``holonomy_series`` runs per-order Picard
iteration on composite Gauss-Legendre panels along an explicit path.
``frobenius_solution`` builds the local solution P(w) w^(h M_p0) at a pole as
a convergent power series in w = (z - p0)/s; regularized holonomies between
two poles are G_p1(z)^-1 G_p0(z) for any z where both series converge.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .coeff import CC, QQ
from .modrep import (
    SeriesMatrix,
    WeightModule,
    cartan_module,
    casimir_t,
    ematrix,
    exp_nilpotent_matrix,
    irrep,
    place_legs,
    rmatrix_kz,
    tensor_module,
)

TWO_PI_I = 2j * math.pi


# ---------------------------------------------------------------------------
# truncated matrix series as arrays of shape (K+1, D, D)
# ---------------------------------------------------------------------------

def s_identity(K: int, D: int) -> np.ndarray:
    out = np.zeros((K + 1, D, D), dtype=complex)
    out[0] = np.eye(D)
    return out


def s_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    K = a.shape[0] - 1
    out = np.zeros_like(a)
    for k in range(K + 1):
        for i in range(k + 1):
            out[k] += a[i] @ b[k - i]
    return out


def s_inv(a: np.ndarray) -> np.ndarray:
    K = a.shape[0] - 1
    out = np.zeros_like(a)
    a0 = np.linalg.inv(a[0])
    out[0] = a0
    for k in range(1, K + 1):
        acc = np.zeros_like(a[0])
        for i in range(1, k + 1):
            acc += a[i] @ out[k - i]
        out[k] = -a0 @ acc
    return out


def s_exp(M: np.ndarray, c: complex, K: int) -> np.ndarray:
    """exp(h c M) for a constant matrix M."""
    D = M.shape[0]
    out = s_identity(K, D)
    for k in range(1, K + 1):
        out[k] = out[k - 1] @ (c * M) / k
    return out


def s_max_per_order(a: np.ndarray) -> list[float]:
    return [float(np.max(np.abs(x))) if x.size else 0.0 for x in a]


def to_series_matrix(arr: np.ndarray, dims) -> SeriesMatrix:
    return SeriesMatrix.from_numpy(tuple(dims), arr)


# ---------------------------------------------------------------------------
# connections and paths
# ---------------------------------------------------------------------------

@dataclass
class ConnectionSpec:
    """A(z) = sum_p residues[p] / (z - poles[p]) on a space with leg dims ``dims``."""

    poles: list
    residues: list
    dims: tuple
    name: str = "connection"

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    def A(self, z: complex) -> np.ndarray:
        out = np.zeros((self.size, self.size), dtype=complex)
        for p, M in zip(self.poles, self.residues):
            out += M / (z - p)
        return out

    def residue_at(self, pole: complex) -> np.ndarray:
        for p, M in zip(self.poles, self.residues):
            if abs(p - pole) < 1e-12:
                return M
        raise ValueError(f"{pole} is not a pole of {self.name}")

    def residue_sum(self) -> np.ndarray:
        """Minus the residue at infinity."""
        return sum(self.residues, np.zeros((self.size, self.size), dtype=complex))


@dataclass
class Segment:
    a: complex
    b: complex

    def point(self, t):
        return self.a + (self.b - self.a) * t

    def velocity(self, t):
        return (self.b - self.a) * np.ones_like(t)

    def describe(self) -> str:
        return f"segment({self.a}->{self.b})"


@dataclass
class Arc:
    center: complex
    radius: float
    theta0: float
    theta1: float

    def point(self, t):
        th = self.theta0 + (self.theta1 - self.theta0) * t
        return self.center + self.radius * np.exp(1j * th)

    def velocity(self, t):
        th = self.theta0 + (self.theta1 - self.theta0) * t
        return 1j * (self.theta1 - self.theta0) * self.radius * np.exp(1j * th)

    def describe(self) -> str:
        return f"arc(c={self.center}, r={self.radius}, {self.theta0}->{self.theta1})"


def polyline(*points) -> list:
    return [Segment(complex(a), complex(b)) for a, b in zip(points, points[1:])]


def full_loop(center: complex = 0, radius: float = 1.0) -> list:
    return [Arc(complex(center), radius, 0.0, 2 * math.pi)]


@dataclass
class HolonomyResult:
    matrix: np.ndarray
    path: str
    error_per_order: list = field(default_factory=list)
    method: str = ""

    def series(self, dims) -> SeriesMatrix:
        return to_series_matrix(self.matrix, dims)


class PoleProximityError(ValueError):
    pass


class QuadratureError(ArithmeticError):
    pass


@lru_cache(maxsize=None)
def _gl_panel(n: int):
    """Nodes, weights and cumulative-integration matrix on [-1, 1]."""
    from numpy.polynomial import legendre as L

    x, w = L.leggauss(n)
    V = L.legvander(x, n - 1)
    Vinv = np.linalg.inv(V)
    C = np.zeros((n, n))
    for j in range(n):
        anti = L.legint(Vinv[:, j], lbnd=-1)
        C[:, j] = L.legval(x, anti)
    return x, w, C


def _picard_piece(spec: ConnectionSpec, piece, K: int, panels: int, nodes: int) -> np.ndarray:
    x, w, C = _gl_panel(nodes)
    D = spec.size
    edges = np.linspace(0.0, 1.0, panels + 1)
    ts = np.concatenate([(edges[p] + edges[p + 1]) / 2 + (edges[p + 1] - edges[p]) / 2 * x for p in range(panels)])
    zs = piece.point(ts)
    vs = piece.velocity(ts)
    a = np.array([spec.A(z) * v for z, v in zip(zs, vs)])
    half = (edges[1:] - edges[:-1]) / 2
    out = s_identity(K, D)
    prev = np.broadcast_to(np.eye(D, dtype=complex), (len(ts), D, D))
    for k in range(1, K + 1):
        F = a @ prev
        cur = np.empty_like(F)
        offset = np.zeros((D, D), dtype=complex)
        for p in range(panels):
            sl = slice(p * nodes, (p + 1) * nodes)
            Fp = F[sl]
            cur[sl] = offset + half[p] * np.einsum("ij,jab->iab", C, Fp)
            offset = offset + half[p] * np.einsum("j,jab->ab", w, Fp)
        out[k] = offset
        prev = cur
    return out


def holonomy_series(
    spec: ConnectionSpec, path: list, K: int, tol: float = 1e-12, delta: float = 1e-3, nodes: int = 16
) -> HolonomyResult:
    """Solution at the end of ``path`` of dG = h A G dz with G(start) = 1.

    Pieces are composed left to right along the path; each piece doubles its
    panel count until successive estimates agree within ``tol`` per order.
    """
    D = spec.size
    total = s_identity(K, D)
    errors = [0.0] * (K + 1)
    for piece in path:
        probe = piece.point(np.linspace(0, 1, 2001))
        for p in spec.poles:
            if np.min(np.abs(probe - p)) < delta:
                raise PoleProximityError(f"path passes within {delta} of the pole {p}")
        panels = 4
        last = _picard_piece(spec, piece, K, panels, nodes)
        while True:
            panels *= 2
            cur = _picard_piece(spec, piece, K, panels, nodes)
            diff = s_max_per_order(cur - last)
            last = cur
            if max(diff) < tol:
                break
            if panels > 4096:
                raise QuadratureError(f"no convergence on {piece.describe()}: {diff}")
        errors = [e + d for e, d in zip(errors, diff)]
        total = s_mul(cur, total)
    desc = " . ".join(p.describe() for p in path)
    return HolonomyResult(total, desc, errors, "picard-gauss-legendre")


# ---------------------------------------------------------------------------
# local solutions at poles
# ---------------------------------------------------------------------------

def frobenius_solution(spec: ConnectionSpec, pole: complex, z: complex, K: int, tol: float = 1e-16) -> np.ndarray:
    """Solution normalized as P(w) w^(h M) near ``pole``, evaluated at z.

    w = |z - pole| is real positive and the local coordinate is z = pole + s w
    with s the unit direction from the pole to z.
    """
    D = spec.size
    M0 = spec.residue_at(pole)
    dz = complex(z) - pole
    r = abs(dz)
    s = dz / r
    others = [(p, M) for p, M in zip(spec.poles, spec.residues) if abs(p - pole) > 1e-12]
    wp = [((p - pole) / s, M) for p, M in others]
    radius = min(abs(x) for x, _ in wp) if wp else math.inf
    if r >= radius:
        raise ValueError("evaluation point lies outside the convergence disc")
    ratio = r / radius if wp else 0.0
    nterms = 1 if ratio == 0 else int(math.ceil(math.log(tol) / math.log(ratio))) + 8 * K + 8
    B = [-sum(M / x ** (j + 1) for x, M in wp) if wp else np.zeros((D, D), dtype=complex) for j in range(nterms)]
    Bs = np.array(B)
    # P[k, n] is the coefficient of h^k w^n
    P = np.zeros((K + 1, nterms + 1, D, D), dtype=complex)
    P[0, 0] = np.eye(D)
    for k in range(1, K + 1):
        prev = P[k - 1]
        for n in range(1, nterms + 1):
            acc = M0 @ prev[n] - prev[n] @ M0
            # sum_j B_j P_(n-1-j)
            acc = acc + np.einsum("jab,jbc->ac", Bs[:n], prev[n - 1 :: -1][:n])
            P[k, n] = acc / n
    powers = r ** np.arange(nterms + 1)
    Pw = np.einsum("knab,n->kab", P, powers)
    return s_mul(Pw, s_exp(M0, math.log(r), K))


def regularized_holonomy(
    spec: ConnectionSpec, from_pole: complex, to_pole: complex, K: int, route: str = "direct"
) -> HolonomyResult:
    """G_to^-1 G_from along the straight segment between the two poles.

    ``route="direct"`` matches both local solutions at the midpoint;
    ``route="bridged"`` matches them at 30% and 70% of the segment with a
    Picard transport in between, an independent estimate of the same limit.
    """
    a, b = complex(from_pole), complex(to_pole)
    if route == "direct":
        zm = (a + b) / 2
        G0 = frobenius_solution(spec, a, zm, K)
        G1 = frobenius_solution(spec, b, zm, K)
        T = s_mul(s_inv(G1), G0)
        return HolonomyResult(T, f"reg({a}->{b})", [0.0] * (K + 1), "frobenius-midpoint")
    if route == "bridged":
        za, zb = a + 0.3 * (b - a), a + 0.7 * (b - a)
        G0 = frobenius_solution(spec, a, za, K)
        G1 = frobenius_solution(spec, b, zb, K)
        hol = holonomy_series(spec, [Segment(za, zb)], K)
        T = s_mul(s_inv(G1), s_mul(hol.matrix, G0))
        return HolonomyResult(T, f"reg({a}->{b})", hol.error_per_order, "frobenius-bridged")
    raise ValueError(f"unknown route {route!r}")


# ---------------------------------------------------------------------------
# the two reduced systems
# ---------------------------------------------------------------------------

def classical_power_module(d: int, arity: int) -> WeightModule:
    M = irrep(d, QQ, 0, quantum=False)
    for _ in range(arity - 1):
        M = tensor_module(M, irrep(d, QQ, 0, quantum=False), quantum=False)
    return M


def _const(X: SeriesMatrix) -> np.ndarray:
    return X.dense_numpy()[0]


def _t_pair(d: int) -> tuple[np.ndarray, np.ndarray, tuple]:
    V = classical_power_module(d, 1)
    n = V.dim
    dims = (n, n, n)
    t = casimir_t(V, V)
    return _const(place_legs(t, (0, 1), dims)), _const(place_legs(t, (1, 2), dims)), dims


def g_system(d: int) -> ConnectionSpec:
    """dG/dz = h/(2 pi i) (t12/z + t23/(z-1)) G on V(d)^(x3)."""
    t12, t23, dims = _t_pair(d)
    return ConnectionSpec([0.0, 1.0], [t12 / TWO_PI_I, t23 / TWO_PI_I], dims, f"G-system V({d})")


def _matrix_of(X: SeriesMatrix) -> np.ndarray:
    return _const(X)


def h_system(M2: WeightModule, M3: WeightModule, lam: complex, N: int) -> ConnectionSpec:
    """Residue N(lam H2 + H2^2/2)/(2 pi i) at 0 and (Ad sigma^-a)_2 t23/(2 pi i) at zeta^a.

    sigma is the diagonal matrix zeta^(s_i) on M2, so Ad(sigma^-a) scales
    e by zeta^-a and f by zeta^a.
    """
    dims = (1, M2.dim, M3.dim)
    w2 = np.array(M2.weights, dtype=float)
    diag0 = np.kron(N * (lam * w2 + w2**2 / 2), np.ones(M3.dim))
    M0 = np.diag(diag0).astype(complex) / TWO_PI_I
    H2, E2, F2 = (_matrix_of(X) for X in (M2.H, M2.E, M2.F))
    H3, E3, F3 = (_matrix_of(X) for X in (M3.H, M3.E, M3.F))
    sig = np.array(M2.sigma_exps)
    poles, residues = [0.0], [M0]
    for a in range(N):
        z = cmath.exp(TWO_PI_I * a / N)
        S = np.diag(z**sig)
        Sinv = np.diag(z ** (-sig))
        Ea, Fa = Sinv @ E2 @ S, Sinv @ F2 @ S
        t = np.kron(H2, H3) + 2 * np.kron(Ea, F3) + 2 * np.kron(Fa, E3)
        poles.append(z if a else 1.0)
        residues.append(t / TWO_PI_I)
    return ConnectionSpec(poles, residues, dims, f"H-system N={N}")


# Orientation of the associator and twist relative to the transport
# T = G_1^-1 G_0 from 0 to 1.  The associator orientation is the one for which
# the hexagons hold with R = exp(h t/2).
PHI_FROM_TRANSPORT_INVERSE = False
PSI_FROM_TRANSPORT_INVERSE = False


def phi_kz(d: int, K: int, route: str = "direct") -> SeriesMatrix:
    """Drinfeld associator on V(d)^(x3): the transport G_1^-1 G_0."""
    spec = g_system(d)
    T = regularized_holonomy(spec, 0.0, 1.0, K, route).matrix
    if PHI_FROM_TRANSPORT_INVERSE:
        T = s_inv(T)
    return to_series_matrix(T, spec.dims)


def psi_kz(d: int, N: int, K: int, lam: complex, arity: tuple = (1, 1), route: str = "direct") -> SeriesMatrix:
    """Cyclotomic twist H_1^-1 H_0 on W_lam (x) M2 (x) M3."""
    M2 = classical_power_module(d, arity[0])
    M3 = classical_power_module(d, arity[1])
    spec = h_system(M2, M3, lam, N)
    T = regularized_holonomy(spec, 0.0, 1.0, K, route).matrix
    if PSI_FROM_TRANSPORT_INVERSE:
        T = s_inv(T)
    return to_series_matrix(T, spec.dims)


class KZTwist:
    """Numeric counterpart of abrr.AlgebraicTwist built from the H- and G-systems."""

    def __init__(self, d: int, N: int, K: int, lam: float, route: str = "direct"):
        self.d, self.N, self.K, self.lam, self.route = d, N, K, lam, route
        self.ring = CC
        self._psi: dict = {}

    def module(self, arity: int = 1) -> WeightModule:
        M = irrep(self.d, CC, self.K, quantum=False)
        for _ in range(arity - 1):
            M = tensor_module(M, irrep(self.d, CC, self.K, quantum=False), quantum=False)
        return M

    def weight(self, shift=0):
        return complex(self.lam + shift)

    def psi(self, arity: tuple = (1, 1), shift=0) -> SeriesMatrix:
        key = (tuple(arity), shift)
        if key not in self._psi:
            self._psi[key] = psi_kz(self.d, self.N, self.K, self.lam + shift, arity, self.route)
        return self._psi[key]

    def E(self, shift=0) -> SeriesMatrix:
        W = cartan_module(self.weight(shift), CC, self.K)
        return ematrix(W, self.module(), self.N)

    def R(self) -> SeriesMatrix:
        V = self.module()
        return rmatrix_kz(V, V)

    @cached_property
    def _phi(self) -> SeriesMatrix:
        return phi_kz(self.d, self.K, self.route)

    def phi(self) -> SeriesMatrix:
        return self._phi


def build_kz_qra(d: int, N: int, K: int, lam: float, n: int, route: str = "direct"):
    """Analytic representation data on W_lam (x) V(d)^(x n)."""
    from .abrr import qra_data

    fam = KZTwist(d, N, K, lam, route)
    return qra_data(fam, n, fam.phi() if n >= 3 else None)


# ---------------------------------------------------------------------------
# associator checks
# ---------------------------------------------------------------------------

def pentagon_residual(phi: SeriesMatrix, d: int) -> SeriesMatrix:
    """Phi^(1,2,34) Phi^(12,3,4) - Phi^(234) Phi^(1,23,4) Phi^(123) on V(d)^(x4)."""
    n = d + 1
    dims = (n, n, n, n)
    # Phi is invariant, so grouped legs use the classical coproduct action
    p = phi.with_dims((n, n, n))
    p_1_2_34 = _grouped_phi(phi, d, "1,2,34")
    p_12_3_4 = _grouped_phi(phi, d, "12,3,4")
    p_1_23_4 = _grouped_phi(phi, d, "1,23,4")
    lhs = p_1_2_34.matmul(p_12_3_4)
    rhs = place_legs(p, (1, 2, 3), dims).matmul(p_1_23_4).matmul(place_legs(p, (0, 1, 2), dims))
    return lhs - rhs


def _grouped_phi(phi: SeriesMatrix, d: int, grouping: str) -> SeriesMatrix:
    """Phi with one leg replaced by V(d) (x) V(d), from the G-system on the grouped modules."""
    K = phi.order
    n = d + 1
    V = classical_power_module(d, 1)
    VV = classical_power_module(d, 2)
    mods = {"12,3,4": (VV, V, V), "1,23,4": (V, VV, V), "1,2,34": (V, V, VV)}[grouping]
    spec = _g_system_modules(*mods)
    T = regularized_holonomy(spec, 0.0, 1.0, K).matrix
    if PHI_FROM_TRANSPORT_INVERSE:
        T = s_inv(T)
    return to_series_matrix(T, (n, n, n, n))


def _g_system_modules(A: WeightModule, B: WeightModule, C: WeightModule) -> ConnectionSpec:
    dims = (A.dim, B.dim, C.dim)
    tAB = _const(place_legs(casimir_t(A, B), (0, 1), dims))
    tBC = _const(place_legs(casimir_t(B, C), (1, 2), dims))
    return ConnectionSpec([0.0, 1.0], [tAB / TWO_PI_I, tBC / TWO_PI_I], dims, "G-system")


def hexagon_residuals(phi: SeriesMatrix, d: int) -> tuple[SeriesMatrix, SeriesMatrix]:
    """Both hexagons for R = exp(h t/2) with the cocommutative coproduct."""
    n = d + 1
    dims = (n, n, n)
    K = phi.order
    V = irrep(d, CC, K, quantum=False)
    R = rmatrix_kz(V, V)
    R12 = place_legs(R, (0, 1), dims)
    R13 = place_legs(R, (0, 2), dims)
    R23 = place_legs(R, (1, 2), dims)
    p = phi.with_dims(dims)

    def perm(X, order):
        # X^(order): leg i of X placed on leg order[i]
        from .modrep import reorder_legs

        return reorder_legs(X, order)

    t = casimir_t(V, V).scale(0.5)
    t13, t23, t12 = (place_legs(t, legs, dims) for legs in ((0, 2), (1, 2), (0, 1)))
    # (Delta x id) R = Phi^312 R13 (Phi^132)^-1 R23 Phi
    lhs1 = exp_nilpotent_matrix(t13 + t23)
    rhs1 = perm(p, (1, 2, 0)).matmul(R13).matmul(perm(p, (0, 2, 1)).inverse()).matmul(R23).matmul(p)
    # (id x Delta) R = (Phi^231)^-1 R13 Phi^213 R12 Phi^-1
    lhs2 = exp_nilpotent_matrix(t13 + t12)
    rhs2 = perm(p, (2, 0, 1)).inverse().matmul(R13).matmul(perm(p, (1, 0, 2))).matmul(R12).matmul(p.inverse())
    return lhs1 - rhs1, lhs2 - rhs2


def phi_h2_oracle(d: int) -> np.ndarray:
    """[t12, t23] / 24 on V(d)^(x3)."""
    t12, t23, _ = _t_pair(d)
    return (t12 @ t23 - t23 @ t12) / 24


# ---------------------------------------------------------------------------
# comparison of representations
# ---------------------------------------------------------------------------

class ConventionMismatch(ValueError):
    pass


def compare_representations(dataA, dataB, words, lam=None, tol: float = 1e-5) -> list[dict]:
    """Per-word, per-order |tr rho_A(w) - tr rho_B(w)|."""
    from .braid import WordEvaluator

    if dataA.N != dataB.N or tuple(dataA.sigma_exps) != tuple(dataB.sigma_exps) or dataA.n != dataB.n:
        raise ConventionMismatch("representations use different sigma matrices or strand counts")
    evA, evB = WordEvaluator(dataA), WordEvaluator(dataB)
    K = min(dataA.order, dataB.order)
    out = []
    for w in words:
        ta = evA(w).trace()
        tb = evB(w).trace()
        ca = [dataA.ring.to_complex(x, lam) for x in ta.coeffs[: K + 1]]
        cb = [dataB.ring.to_complex(x, lam) for x in tb.coeffs[: K + 1]]
        delta = [abs(x - y) for x, y in zip(ca, cb)]
        out.append({"word": str(w), "delta_per_order": delta, "tol": tol, "pass": max(delta) < tol})
    return out
