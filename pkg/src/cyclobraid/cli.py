"""Command-line front door: check suites, object dumps, KZ numerics and frozen fixtures.

Exit codes: 0 when every residual is within its bound (exact rings: 0,
floating point: --tol), 1 when a suite fails or a fixture differs, 2 for
usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from gmpy2 import mpq

from . import abrr, braid, kz, uqsl2
from .coeff import CycloRing, LambdaRing
from .modrep import SeriesMatrix, cartan_module, ematrix, irrep, kmatrix, rbar_matrix, rmatrix

FIXTURE_ENV = "CYCLOBRAID_FIXTURE_DIR"
SUITES = ("axioms", "presentation", "abrr", "pentagon", "octagon", "shapovalov-oracle", "kz", "compare")
EXACT_SUITES = SUITES[:6]
DUMP_OBJECTS = ("R", "K", "E", "psi", "phi-kz", "psi-kz", "rep-matrix", "character", "shapovalov")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    N: int = 2
    d: int = 1
    n: int = 2
    lam: str = "formal"
    order: int = 3
    tol: float = 1e-5
    seed: int = 0
    words: str = "auto"
    max_length: int = 4
    corrupt: str | None = None
    algebra: str = "sl2"

    def validate(self, min_order: int = 1):
        if self.order < min_order:
            raise UsageError(f"--order must be at least {min_order}")
        if self.tol <= 0:
            raise UsageError("--tol must be positive")
        if self.N < 2:
            raise UsageError("--N must be at least 2")
        if self.d < 1:
            raise UsageError("--d must be at least 1")
        if self.n < 1:
            raise UsageError("--n must be at least 1")
        if self.lam != "formal":
            _ = self.lam_exact
        return self

    @property
    def formal(self) -> bool:
        return self.lam == "formal"

    @property
    def lam_exact(self):
        try:
            return mpq(self.lam)
        except ValueError:
            raise UsageError(f"--lambda must be 'formal' or a rational number, got {self.lam!r}") from None

    def lam_float(self) -> float:
        if self.formal:
            raise UsageError("this command needs a numeric --lambda")
        return float(self.lam_exact)

    def ring(self):
        return LambdaRing(self.N) if self.formal else CycloRing(self.N)

    def weight(self, ring):
        return ring.lam() if self.formal else ring.lift(self.lam_exact)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def emit(obj, out: str | None):
    text = canonical_json(obj)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _complex_matrix_json(arr: np.ndarray) -> list:
    return [[[float(x.real), float(x.imag)] for x in row] for row in arr]


def _kz_matrix_json(X: SeriesMatrix) -> dict:
    arr = X.dense_numpy()
    return {"dims": list(X.dims), "order": X.order, "ring": "CC", "coeffs": [_complex_matrix_json(a) for a in arr]}


# ---------------------------------------------------------------------------
# object builders
# ---------------------------------------------------------------------------

def _modules(cfg: RunConfig):
    ring = cfg.ring()
    V = irrep(cfg.d, ring, cfg.order)
    W = cartan_module(cfg.weight(ring), ring, cfg.order)
    return ring, W, V


def corrupt_matrix(X: SeriesMatrix) -> SeriesMatrix:
    """X plus h^2 times the corner matrix unit: breaks weight conservation."""
    ring = X.ring
    coeffs = [ring.zero] * (X.order + 1)
    if X.order >= 2:
        coeffs[2] = ring.one
    bump = SeriesMatrix(X.dims, ring, X.order, {0: {X.size - 1: tuple(coeffs)}})
    return X + bump


def algebraic_rep(cfg: RunConfig, tau_product: str = "ascending"):
    ring, W, V = _modules(cfg)
    data = braid.algebraic_data(W, V, cfg.n, cfg.N, tau_product)
    if cfg.corrupt:
        target = {"R": "R", "K": "K", "E": "E"}[cfg.corrupt]
        setattr(data, target, corrupt_matrix(getattr(data, target)))
        data._cache.clear()
    return data


def _word_list(cfg: RunConfig):
    if cfg.words == "auto":
        mode = "all" if cfg.n <= 2 else "20"
    else:
        mode = cfg.words
    if mode == "all":
        return list(braid.reduced_words(cfg.n, cfg.max_length))
    try:
        count = int(mode)
    except ValueError:
        raise UsageError("--words must be 'all', 'auto' or a count") from None
    rng = random.Random(cfg.seed)
    return [braid.random_word(cfg.n, rng.randint(1, 2 * cfg.max_length - 2), rng) for _ in range(count)]


# ---------------------------------------------------------------------------
# check suites
# ---------------------------------------------------------------------------

def _max_of(entry: dict) -> float:
    vals = entry.get("residual_per_order", entry.get("max_residual_per_order", entry.get("delta_per_order")))
    return max(vals) if vals else 0.0


def _suite_axioms(cfg: RunConfig) -> tuple[list, bool]:
    ring, W, V = _modules(cfg)
    R, K, E = rmatrix(V, V), kmatrix(V, V), ematrix(W, V, cfg.N)
    if cfg.corrupt == "R":
        R = corrupt_matrix(R)
    elif cfg.corrupt == "K":
        K = corrupt_matrix(K)
    elif cfg.corrupt == "E":
        E = corrupt_matrix(E)
    rep = braid.axioms_check(R, K, E, W, V) + braid.coproduct_identities(W, V, cfg.N)
    return rep, True


def _suite_presentation(cfg: RunConfig) -> tuple[list, bool]:
    return braid.check_presentation(algebraic_rep(cfg)), True


def _family(cfg: RunConfig):
    return abrr.AlgebraicTwist(cfg.d, cfg.N, cfg.order, None if cfg.formal else cfg.lam_exact)


def _suite_abrr(cfg: RunConfig) -> tuple[list, bool]:
    fam = _family(cfg)
    out = []
    for arity in ((1, 1), (1, 2)):
        sol = fam.solution(arity)
        M2, M3 = fam.module(arity[0]), fam.module(arity[1])
        psi = fam.psi(arity)
        W = cartan_module(fam.weight(0), fam.ring, fam.K)
        rep = abrr.check_abrr(psi, ematrix(W, M2, cfg.N), rbar_matrix(M2, M3))
        rep["arity"] = list(arity)
        out.append(rep)
        bound = abrr.lam_degree_bound_holds(sol)
        out.append({"equation": "lambda degree <= k at order h^k", "arity": list(arity),
                    "max_residual_per_order": [0.0 if bound else 1.0]})
    return out, True


def _suite_pentagon(cfg: RunConfig) -> tuple[list, bool]:
    return [abrr.check_mixed_pentagon(_family(cfg))], True


def _suite_octagon(cfg: RunConfig) -> tuple[list, bool]:
    fam = _family(cfg)
    R = corrupt_matrix(fam.R()) if cfg.corrupt == "R" else None
    return [abrr.check_octagon(fam, R=R)], True


def _suite_shapovalov(cfg: RunConfig) -> tuple[list, bool]:
    out = []
    for r in uqsl2.verify_K_recursion(3):
        out.append({"equation": f"K recursion m={r['m']}", "max_residual_per_order": [0.0 if r["zero"] else 1.0]})
    for m in range(1, 5):
        ok = uqsl2.equal_up_to_unit(uqsl2.gram_factor(m), uqsl2.dck_determinant(m))
        out.append({"equation": f"Gram factor ~ determinant m={m}", "max_residual_per_order": [0.0 if ok else 1.0]})
    for r in abrr.oracle_compare_shapovalov(cfg.d, cfg.N, cfg.order, min(3, cfg.d)):
        r["equation"] = f"solved block = symbolic twist m={r['m']}"
        out.append(r)
    return out, True


def _suite_kz(cfg: RunConfig) -> tuple[list, bool]:
    lam = cfg.lam_float()
    K = min(cfg.order, 3)
    out = []
    M = np.array([[1, 2], [0, -1]], dtype=complex)
    spec = kz.ConnectionSpec([0.0], [M / kz.TWO_PI_I], (2,), "single pole")
    hol = kz.holonomy_series(spec, kz.full_loop(), K)
    out.append({"equation": "full loop = exp(h M)", "max_residual_per_order": kz.s_max_per_order(hol.matrix - kz.s_exp(M, 1, K))})
    fam = kz.KZTwist(cfg.d, cfg.N, K, lam)
    phi = fam.phi()
    h2 = phi.dense_numpy()[2] - kz.phi_h2_oracle(cfg.d) if K >= 2 else np.zeros(1)
    out.append({"equation": "Phi h^2 coefficient = [t12, t23]/24", "max_residual_per_order": [float(np.max(np.abs(h2)))]})
    hx1, hx2 = kz.hexagon_residuals(phi, cfg.d)
    out.append({"equation": "hexagon (Delta x id) R", "max_residual_per_order": hx1.residual_per_order()})
    out.append({"equation": "hexagon (id x Delta) R", "max_residual_per_order": hx2.residual_per_order()})
    out.append({"equation": "pentagon", "max_residual_per_order": kz.pentagon_residual(phi, cfg.d).residual_per_order()})
    out.append(abrr.check_mixed_pentagon(fam, phi))
    out.append(abrr.check_octagon(fam))
    return out, False


def _suite_compare(cfg: RunConfig) -> tuple[list, bool]:
    lam = cfg.lam_float()
    words = _word_list(cfg)
    alg = algebraic_rep(cfg)
    ana = kz.build_kz_qra(cfg.d, cfg.N, cfg.order, lam, cfg.n)
    return kz.compare_representations(ana, alg, words, tol=cfg.tol), False


SUITE_FUNCS = {
    "axioms": _suite_axioms,
    "presentation": _suite_presentation,
    "abrr": _suite_abrr,
    "pentagon": _suite_pentagon,
    "octagon": _suite_octagon,
    "shapovalov-oracle": _suite_shapovalov,
    "kz": _suite_kz,
    "compare": _suite_compare,
}


def run_suite(name: str, cfg: RunConfig) -> dict:
    results, exact = SUITE_FUNCS[name](cfg)
    bound = 0.0 if exact else cfg.tol
    if exact:
        ok = all(_max_of(r) == 0 for r in results)
    else:
        ok = all(_max_of(r) < bound for r in results)
    return {"suite": name, "exact": exact, "bound": bound, "pass": ok, "results": results}


def cmd_check(cfg: RunConfig, suites: list[str]) -> tuple[int, dict]:
    cfg.validate()
    if "all" in suites:
        suites = list(EXACT_SUITES) + ([] if cfg.formal else ["kz", "compare"])
    if cfg.corrupt and cfg.corrupt not in ("R", "K", "E"):
        raise UsageError("--corrupt takes R, K or E")
    reports = [run_suite(s, cfg) for s in suites]
    ok = all(r["pass"] for r in reports)
    report = {"config": asdict(cfg), "suites": reports, "pass": ok}
    return (0 if ok else 1), report


# ---------------------------------------------------------------------------
# dumps
# ---------------------------------------------------------------------------

def _parse_word(cfg: RunConfig, text: str | None):
    if not text:
        raise UsageError("this object needs --word")
    try:
        return braid.BraidWord.parse(text, cfg.n)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def shapovalov_dump(m_max: int) -> dict:
    out = []
    for m in range(0, m_max + 1):
        K1, K2, K3 = uqsl2.shapovalov_inverse(m)
        entry = {
            "m": m,
            "K_m": f"{uqsl2.canonical_text(K1)} (x) {uqsl2.canonical_text(K2)} (x) ({K3.as_expr()})",
            "det_m": str(uqsl2.dck_determinant(m).as_expr()),
            "gram": str(uqsl2.gram_factor(m).as_expr()),
        }
        if m >= 1:
            entry["psi_m"] = uqsl2.twist_term(m).to_text()
        out.append(entry)
    return {"object": "shapovalov", "terms": out}


def cmd_dump(cfg: RunConfig, obj: str, word: str | None = None, blocks: int | None = None) -> dict:
    cfg.validate(min_order=0)
    head = {"object": obj, "config": asdict(cfg)}
    if obj == "shapovalov":
        return {**head, **shapovalov_dump(blocks if blocks is not None else 3)}
    if obj in ("R", "K", "E"):
        ring, W, V = _modules(cfg)
        X = {"R": lambda: rmatrix(V, V), "K": lambda: kmatrix(V, V), "E": lambda: ematrix(W, V, cfg.N)}[obj]()
        return {**head, "matrix": X.to_json()}
    if obj == "psi":
        if cfg.order < 1:
            raise UsageError("psi needs --order >= 1")
        sol = abrr.solve_psi(cfg.d, cfg.N, cfg.order)
        top = min(cfg.d, blocks if blocks is not None else cfg.d)
        return {**head, "blocks": [{"m": m, "matrix": sol.block(m).to_json()} for m in range(top + 1)]}
    if obj == "phi-kz":
        if cfg.n < 3:
            raise UsageError("the associator acts on three strands: phi-kz needs --n >= 3")
        return {**head, "matrix": _kz_matrix_json(kz.phi_kz(cfg.d, cfg.order))}
    if obj == "psi-kz":
        return {**head, "matrix": _kz_matrix_json(kz.psi_kz(cfg.d, cfg.N, cfg.order, cfg.lam_float()))}
    if obj in ("rep-matrix", "character"):
        w = _parse_word(cfg, word)
        data = algebraic_rep(cfg)
        X = braid.rho(w, data)
        key = "matrix" if obj == "rep-matrix" else "trace"
        val = X.to_json() if obj == "rep-matrix" else [data.ring.dumps(c) for c in X.trace().coeffs]
        return {**head, "word": str(w), key: val}
    raise UsageError(f"unknown object {obj!r}")


# ---------------------------------------------------------------------------
# kz subcommand
# ---------------------------------------------------------------------------

def _trace_powers(arr: np.ndarray, D: int) -> list:
    out, P = [], kz.s_identity(arr.shape[0] - 1, D)
    for _ in range(D):
        P = kz.s_mul(P, arr)
        out.append(np.einsum("kii->k", P))
    return out


def cmd_kz(cfg: RunConfig, action: str, route: str = "direct", system: str = "h") -> tuple[int, dict]:
    cfg.validate()
    if action == "compare":
        return cmd_check(cfg, ["compare"])
    lam = cfg.lam_float()
    head = {"action": action, "config": asdict(cfg), "tol": cfg.tol}
    if action == "holonomy":
        if system == "g":
            spec = kz.g_system(cfg.d)
        else:
            spec = kz.h_system(kz.classical_power_module(cfg.d, 1), kz.classical_power_module(cfg.d, 1), lam, cfg.N)
        res = kz.holonomy_series(spec, kz.full_loop(0, 0.5), cfg.order)
        # the loop holonomy is conjugate to exp(2 pi i h M_0): compare traces of powers
        ref = kz.s_exp(spec.residue_at(0.0) * kz.TWO_PI_I, 1, cfg.order)
        D = spec.size
        diffs = [np.abs(a - b) for a, b in zip(_trace_powers(res.matrix, D), _trace_powers(ref, D))]
        per_order = [float(max(d[k] for d in diffs)) for k in range(cfg.order + 1)]
        report = {**head, "system": spec.name, "path": res.path, "quadrature_error_per_order": res.error_per_order,
                  "equation": "tr H^j = tr exp(2 pi i h M_0)^j", "max_residual_per_order": per_order}
        ok = max(per_order) < cfg.tol
    elif action == "phi":
        phi = kz.phi_kz(cfg.d, cfg.order, route)
        h2 = phi.dense_numpy()[2] - kz.phi_h2_oracle(cfg.d) if cfg.order >= 2 else np.zeros(1)
        dev = float(np.max(np.abs(h2)))
        report = {**head, "matrix": _kz_matrix_json(phi), "h2_deviation": dev}
        ok = dev < cfg.tol
    elif action == "psi":
        fam = kz.KZTwist(cfg.d, cfg.N, cfg.order, lam, route)
        octo = abrr.check_octagon(fam)
        report = {**head, "matrix": _kz_matrix_json(fam.psi()), "octagon": octo}
        ok = max(octo["max_residual_per_order"]) < cfg.tol
    else:
        raise UsageError(f"unknown kz action {action!r}")
    report["pass"] = ok
    return (0 if ok else 1), report


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------

FIXTURES = {
    "R_d1_order4": ("R", {"d": 1, "N": 2, "order": 4}, None),
    "R_d2_order0": ("R", {"d": 2, "N": 2, "order": 0}, None),
    "K_d1_order2": ("K", {"d": 1, "N": 2, "order": 2}, None),
    "E_d1_N3_order3": ("E", {"d": 1, "N": 3, "order": 3}, None),
    "psi_d1_N2_order4": ("psi", {"d": 1, "N": 2, "order": 4}, None),
    "psi_d2_N3_order3": ("psi", {"d": 2, "N": 3, "order": 3}, None),
    "rep_t_s1_d1_N3_order2": ("rep-matrix", {"d": 1, "N": 3, "n": 2, "order": 2}, "t s1"),
    "character_tau2_d1_N2_lam2": ("character", {"d": 1, "N": 2, "n": 2, "lam": "2", "order": 4}, "t t"),
    "shapovalov_m3": ("shapovalov", {}, None),
}


def fixture_dir(override: str | None = None) -> Path:
    if override:
        return Path(override)
    return Path(os.environ.get(FIXTURE_ENV, "tests/fixtures"))


def fixture_text(name: str) -> str:
    obj, kw, word = FIXTURES[name]
    return canonical_json(cmd_dump(RunConfig(**kw), obj, word))


def cmd_fixtures(action: str, directory: Path, names: list[str] | None = None) -> tuple[int, dict]:
    names = names or sorted(FIXTURES)
    unknown = [n for n in names if n not in FIXTURES]
    if unknown:
        raise UsageError(f"unknown fixtures: {unknown}")
    results = []
    if action == "write":
        directory.mkdir(parents=True, exist_ok=True)
    for name in names:
        path = directory / f"{name}.json"
        text = fixture_text(name)
        if action == "write":
            path.write_text(text)
            results.append({"fixture": name, "status": "written"})
        elif not path.exists():
            results.append({"fixture": name, "status": "missing"})
        else:
            results.append({"fixture": name, "status": "match" if path.read_text() == text else "differs"})
    ok = all(r["status"] in ("written", "match") for r in results)
    return (0 if ok else 1), {"action": action, "directory": str(directory), "fixtures": results, "pass": ok}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, order: int = 3):
    p.add_argument("--d", type=int, default=1, help="highest weight of V(d)")
    p.add_argument("--N", type=int, default=2, help="order of the root of unity")
    p.add_argument("--n", type=int, default=2, help="number of strands")
    p.add_argument("--lambda", dest="lam", default="formal", help="'formal' or a rational weight")
    p.add_argument("--order", type=int, default=order, help="truncation order in h")
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--words", default="auto", help="'all', 'auto' or a random sample size")
    p.add_argument("--max-length", type=int, default=4)
    p.add_argument("--out", default=None, help="write JSON here instead of stdout")


def _config(args) -> RunConfig:
    return RunConfig(N=args.N, d=args.d, n=args.n, lam=args.lam, order=args.order, tol=args.tol, seed=args.seed,
                     words=args.words, max_length=args.max_length, corrupt=getattr(args, "corrupt", None))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cyclobraid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="run check suites")
    _common(p)
    p.add_argument("--suite", action="append", choices=SUITES + ("all",), required=True)
    p.add_argument("--corrupt", choices=("R", "K", "E"), default=None, help="negative control: perturb a matrix")

    p = sub.add_parser("dump", help="serialize an object")
    p.add_argument("object", choices=DUMP_OBJECTS)
    _common(p)
    p.add_argument("--word", default=None, help='braid word such as "t s1 s2^-1 t^-1"')
    p.add_argument("--blocks", type=int, default=None, help="highest block / term index")

    p = sub.add_parser("psi", help="solve for the twist and dump its blocks")
    _common(p)
    p.add_argument("--blocks", type=int, default=None)

    p = sub.add_parser("shapovalov", help="dump K_m, det_m and the twist terms")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--out", default=None)

    p = sub.add_parser("kz", help="KZ holonomies")
    p.add_argument("action", choices=("holonomy", "psi", "phi", "compare"))
    _common(p)
    p.add_argument("--route", choices=("direct", "bridged"), default="direct")
    p.add_argument("--system", choices=("g", "h"), default="h")

    p = sub.add_parser("fixtures", help="write or verify frozen exact outputs")
    p.add_argument("action", choices=("write", "verify"))
    p.add_argument("--dir", default=None, help=f"fixture directory (default ${FIXTURE_ENV} or tests/fixtures)")
    p.add_argument("--name", action="append", default=None)
    p.add_argument("--out", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "check":
            code, report = cmd_check(_config(args), args.suite)
        elif args.command == "dump":
            code, report = 0, cmd_dump(_config(args), args.object, args.word, args.blocks)
        elif args.command == "psi":
            code, report = 0, cmd_dump(_config(args), "psi", blocks=args.blocks)
        elif args.command == "shapovalov":
            if args.m < 0:
                raise UsageError("--m must be nonnegative")
            code, report = 0, shapovalov_dump(args.m)
        elif args.command == "kz":
            code, report = cmd_kz(_config(args), args.action, args.route, args.system)
        else:
            code, report = cmd_fixtures(args.action, fixture_dir(args.dir), args.name)
    except UsageError as exc:
        print(f"cyclobraid: error: {exc}", file=sys.stderr)
        return 2
    emit(report, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
