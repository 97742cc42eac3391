"""Type-B braid words and their matrix representations.

Words are read left to right with the first letter acting first, so the matrix
of ``l_1 l_2 ... l_k`` is ``M(l_k) ... M(l_2) M(l_1)``.  With this convention
``rho(w1 w2) = rho(w2) rho(w1)``.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Iterator


from .coeff import HSeries, Ring
from .modrep import (
    SeriesMatrix,
    WeightModule,
    ematrix,
    kmatrix,
    place_legs,
    rmatrix,
    swap_matrix,
    tensor_module,
)

TAU = 0  # generator index 0 is tau, i >= 1 is sigma_i

_LETTER = re.compile(r"^(t|s(\d+))(\^(-?1))?$")


@dataclass(frozen=True)
class BraidWord:
    """Word in tau^(+-1), sigma_i^(+-1) of the type-B braid group on n strands."""

    n: int
    letters: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        for g, e in self.letters:
            if e not in (1, -1):
                raise ValueError("exponents must be +1 or -1")
            if g < 0 or g > self.n - 1:
                raise ValueError(f"generator index {g} out of range for n={self.n}")

    @classmethod
    def parse(cls, text: str, n: int) -> "BraidWord":
        """Parse the syntax "t s1 s2^-1 t^-1" (empty string = identity)."""
        letters = []
        for tok in text.split():
            m = _LETTER.match(tok)
            if not m:
                raise ValueError(f"bad braid letter {tok!r}")
            g = 0 if m.group(1) == "t" else int(m.group(2))
            if m.group(1) != "t" and g < 1:
                raise ValueError(f"bad braid letter {tok!r}")
            e = int(m.group(4)) if m.group(4) else 1
            letters.append((g, e))
        return cls(n, tuple(letters))

    def __str__(self):
        out = []
        for g, e in self.letters:
            base = "t" if g == 0 else f"s{g}"
            out.append(base if e == 1 else base + "^-1")
        return " ".join(out)

    def __len__(self):
        return len(self.letters)

    def __mul__(self, other: "BraidWord") -> "BraidWord":
        if other.n != self.n:
            raise ValueError("strand count mismatch")
        return BraidWord(self.n, self.letters + other.letters)

    def inverse(self) -> "BraidWord":
        return BraidWord(self.n, tuple((g, -e) for g, e in reversed(self.letters)))

    def is_reduced(self) -> bool:
        return all(a[0] != b[0] or a[1] != -b[1] for a, b in zip(self.letters, self.letters[1:]))


def reduced_words(n: int, max_len: int) -> Iterator[BraidWord]:
    """All freely reduced words of length 1..max_len, in a fixed order."""
    gens = [(g, e) for g in range(n) for e in (1, -1)]
    frontier: list[tuple] = [()]
    for _ in range(max_len):
        nxt = []
        for w in frontier:
            for letter in gens:
                if w and w[-1][0] == letter[0] and w[-1][1] == -letter[1]:
                    continue
                nxt.append(w + (letter,))
        for w in nxt:
            yield BraidWord(n, w)
        frontier = nxt


def random_word(n: int, length: int, rng: random.Random) -> BraidWord:
    gens = [(g, e) for g in range(n) for e in (1, -1)]
    letters: list = []
    while len(letters) < length:
        letter = rng.choice(gens)
        if letters and letters[-1][0] == letter[0] and letters[-1][1] == -letter[1]:
            continue
        letters.append(letter)
    return BraidWord(n, tuple(letters))


def presentation_relations(n: int) -> list[tuple[str, BraidWord, BraidWord]]:
    rels = []
    P = lambda s: BraidWord.parse(s, n)  # noqa: E731
    if n >= 2:
        rels.append(("t s1 t s1 = s1 t s1 t", P("t s1 t s1"), P("s1 t s1 t")))
    for i in range(2, n):
        rels.append((f"t s{i} = s{i} t", P(f"t s{i}"), P(f"s{i} t")))
    for i in range(1, n - 1):
        a, b = f"s{i}", f"s{i + 1}"
        rels.append((f"{a} {b} {a} = {b} {a} {b}", P(f"{a} {b} {a}"), P(f"{b} {a} {b}")))
    for i in range(1, n):
        for j in range(i + 2, n):
            rels.append((f"s{i} s{j} = s{j} s{i}", P(f"s{i} s{j}"), P(f"s{j} s{i}")))
    return rels


# ---------------------------------------------------------------------------
# representation data
# ---------------------------------------------------------------------------

@dataclass
class RepData:
    """Everything needed to evaluate words on W (x) V^(x n).

    ``variant`` is "algebraic" (uses R, K, E) or "qra" (uses R, Phi, Psi, E).
    ``psi_full`` is the twist with its last leg expanded to V^(x (n-1)),
    already on the full leg dims; ``phi`` lives on V^(x 3) and ``None`` means
    the trivial associator.
    """

    variant: str
    n: int
    N: int
    W: WeightModule
    V: WeightModule
    R: SeriesMatrix
    E: SeriesMatrix
    K: SeriesMatrix | None = None
    phi: SeriesMatrix | None = None
    psi_full: SeriesMatrix | None = None
    tau_product: str = "ascending"
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def ring(self) -> Ring:
        return self.R.ring

    @property
    def order(self) -> int:
        return self.R.order

    @property
    def dims(self) -> tuple:
        return (self.W.dim,) + (self.V.dim,) * self.n

    @property
    def sigma_exps(self) -> tuple:
        return self.V.sigma_exps

    def identity(self) -> SeriesMatrix:
        return SeriesMatrix.identity(self.dims, self.ring, self.order)

    def generator(self, g: int, e: int) -> SeriesMatrix:
        key = (g, e)
        if key not in self._cache:
            if e == 1:
                self._cache[key] = self._build(g)
            else:
                self._cache[key] = self.generator(g, 1).inverse()
        return self._cache[key]

    def _build(self, g: int) -> SeriesMatrix:
        if self.variant == "algebraic":
            return _algebraic_generator(self, g)
        if self.variant == "qra":
            return _qra_generator(self, g)
        raise ValueError(f"unknown variant {self.variant!r}")


def _sigma_plain(data: RepData, i: int) -> SeriesMatrix:
    dims = data.dims
    Ri = place_legs(data.R, (i, i + 1), dims)
    return swap_matrix(dims, i, i + 1, data.ring, data.order).matmul(Ri)


def _algebraic_generator(data: RepData, g: int) -> SeriesMatrix:
    dims = data.dims
    if g >= 1:
        return _sigma_plain(data, g)
    Rinv = data._cache.get("Rinv")
    if Rinv is None:
        Rinv = data.R.inverse()
        data._cache["Rinv"] = Rinv
    idx = list(range(2, data.n + 1))
    if data.tau_product == "descending":
        idx.reverse()
    elif data.tau_product != "ascending":
        raise ValueError("tau_product must be 'ascending' or 'descending'")
    out = data.identity()
    for i in idx:
        out = out.matmul(place_legs(Rinv, (1, i), dims))
    for i in idx:
        out = out.matmul(place_legs(data.K, (1, i), dims))
    return out.matmul(place_legs(data.E, (0, 1), dims))


def _phi_on(data: RepData, i: int) -> SeriesMatrix | None:
    """Phi^(1..i-1, i, i+1) on the full dims, or None when trivial."""
    if i == 1 or data.phi is None:
        return None
    if i != 2:
        raise NotImplementedError("associator insertion is implemented for n <= 3")
    return place_legs(data.phi, (1, 2, 3), data.dims)


def _qra_generator(data: RepData, g: int) -> SeriesMatrix:
    dims = data.dims
    if data.n >= 3 and data.phi is None:
        raise ValueError("the QRA representation needs an associator for n >= 3")
    if g >= 1:
        core = _sigma_plain(data, g)
        phi = _phi_on(data, g)
        if phi is None:
            return core
        return phi.inverse().matmul(core).matmul(phi)
    psi = data.psi_full
    E01 = place_legs(data.E, (0, 1), dims)
    if psi is None:
        core = E01
    else:
        core = psi.matmul(E01).matmul(psi.inverse())
    if data.n >= 3:
        phi = _phi_on(data, 2)
        if data.n > 3:
            raise NotImplementedError("associator insertion is implemented for n <= 3")
        core = phi.inverse().matmul(core).matmul(phi)
    return core


def rho(word: BraidWord, data: RepData) -> SeriesMatrix:
    if word.n != data.n:
        raise ValueError("word and representation have different strand counts")
    out = data.identity()
    for g, e in word.letters:
        out = data.generator(g, e).matmul(out)
    return out


def rho_algebraic(word: BraidWord, data: RepData) -> SeriesMatrix:
    if data.variant != "algebraic":
        raise ValueError("rho_algebraic needs algebraic data")
    return rho(word, data)


def rho_qra(word: BraidWord, data: RepData) -> SeriesMatrix:
    if data.variant != "qra":
        raise ValueError("rho_qra needs QRA data")
    return rho(word, data)


class WordEvaluator:
    """Evaluates many words, sharing prefixes through a memo table."""

    def __init__(self, data: RepData):
        self.data = data
        self.memo: dict[tuple, SeriesMatrix] = {(): data.identity()}

    def __call__(self, word: BraidWord) -> SeriesMatrix:
        key = word.letters
        if key in self.memo:
            return self.memo[key]
        prev = self(BraidWord(word.n, key[:-1]))
        g, e = key[-1]
        val = self.data.generator(g, e).matmul(prev)
        self.memo[key] = val
        return val


def character(data: RepData, word: BraidWord) -> HSeries:
    return rho(word, data).trace()


def check_presentation(data: RepData) -> list[dict]:
    """Residual per order of every defining relation of the type-B braid group."""
    out = []
    for name, lhs, rhs in presentation_relations(data.n):
        res = rho(lhs, data) - rho(rhs, data)
        out.append({"relation": name, "residual_per_order": res.residual_per_order()})
    return out


# ---------------------------------------------------------------------------
# builders and axiom checks
# ---------------------------------------------------------------------------

def algebraic_data(W: WeightModule, V: WeightModule, n: int, N: int, tau_product: str = "ascending") -> RepData:
    """The representation built from the quantum group R, K and E."""
    return RepData(
        "algebraic",
        n,
        N,
        W,
        V,
        rmatrix(V, V),
        ematrix(W, V, N),
        K=kmatrix(V, V),
        tau_product=tau_product,
    )


def axioms_check(R: SeriesMatrix, K: SeriesMatrix, E: SeriesMatrix, W: WeightModule, V: WeightModule) -> list[dict]:
    """Residuals of the four sufficient conditions for a type-B representation.

    R and K act on V (x) V, E on W (x) V.
    """
    ring, order = R.ring, R.order
    dV = V.dim
    d3 = (dV, dV, dV)
    dW = (W.dim, dV, dV)
    R12, R13, R23 = (place_legs(R, p, d3) for p in ((0, 1), (0, 2), (1, 2)))
    qybe = R12 @ R13 @ R23 - R23 @ R13 @ R12

    s23 = swap_matrix(dW, 1, 2, ring, order)
    cR23 = s23 @ place_legs(R, (1, 2), dW)
    K23 = place_legs(K, (1, 2), dW)
    lhs_b = place_legs(E, (0, 1), dW) @ place_legs(E, (0, 2), dW) @ K23 @ K23
    cond_b = lhs_b @ cR23 - cR23 @ lhs_b

    KK = place_legs(K, (0, 1), d3) @ place_legs(K, (0, 2), d3)
    cond_c = KK @ R23 - R23 @ KK

    s12 = swap_matrix((dV, dV), 0, 1, ring, order)
    cond_d = s12 @ K @ s12 - K
    return [
        {"relation": "QYBE", "residual_per_order": qybe.residual_per_order()},
        {"relation": "E12 E13 (K23)^2 commutes with (23) R23", "residual_per_order": cond_b.residual_per_order()},
        {"relation": "K12 K13 commutes with R23", "residual_per_order": cond_c.residual_per_order()},
        {"relation": "K12 = K21", "residual_per_order": cond_d.residual_per_order()},
    ]


def coproduct_identities(W: WeightModule, V: WeightModule, N: int) -> list[dict]:
    """Hopf-level identities from which the four conditions follow."""
    dV = V.dim
    VV = tensor_module(V, V)
    R = rmatrix(V, V)
    K = kmatrix(V, V)
    E = ematrix(W, V, N)
    d3 = (dV, dV, dV)
    dW = (W.dim, dV, dV)
    R12, R13, R23 = (place_legs(R, p, d3) for p in ((0, 1), (0, 2), (1, 2)))
    delta_left = rmatrix(VV, V).with_dims(d3)
    delta_right = rmatrix(V, VV).with_dims(d3)
    E_split = ematrix(W, VV, N).with_dims(dW)
    K23 = place_legs(K, (1, 2), dW)
    E_prod = place_legs(E, (0, 1), dW) @ place_legs(E, (0, 2), dW) @ K23 @ K23
    K_split = kmatrix(V, VV).with_dims(d3)
    K_prod = place_legs(K, (0, 1), d3) @ place_legs(K, (0, 2), d3)
    return [
        {"relation": "(D x id)(R) = R13 R23", "residual_per_order": (delta_left - R13 @ R23).residual_per_order()},
        {"relation": "(id x D)(R) = R13 R12", "residual_per_order": (delta_right - R13 @ R12).residual_per_order()},
        {"relation": "(id x D)(E) = E12 E13 (K23)^2", "residual_per_order": (E_split - E_prod).residual_per_order()},
        {"relation": "(id x D)(K) = K12 K13", "residual_per_order": (K_split - K_prod).residual_per_order()},
    ]


def all_zero(report: list[dict], tol: float = 0.0) -> bool:
    key = lambda r: r.get("residual_per_order", r.get("max_residual_per_order"))  # noqa: E731
    return all(max(key(r)) <= tol for r in report)
