"""Translate cone membership of Delta - lambda*I into a semidefinite program.

The Gram matrix P lives on coordinates (matrix row i, basis element x),
flattened as i*m + x.  For every product g = x^-1 y and every entry (i, j)
with i <= j there is one linear constraint <A_g, P^{i,j}> = target_{i,j}(g);
targets outside the support of Delta are zero but still constrained, and
the objective variable enters the (i, i, identity) constraints only.

The embedded solver is a first-order operator-splitting scheme: it
alternates exact projection onto the affine constraint subspace (the
constraint Gram operator is diagonal apart from a rank-one coupling
through lambda) with projection onto the PSD cone by dense
eigendecomposition.  It is adequate up to nm of about 1500; larger
instances should go through the SDPA export to an external solver.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from .groups import GroupElement, SupportBasis, model_from_spec
from .ring import EXACT, RingElement, RingMatrix
from .fox import Laplacian1


class SupportTooSmallError(ValueError):
    """The target's support is not contained in E* E."""

    def __init__(self, uncovered):
        self.uncovered = list(uncovered)
        shown = ", ".join(repr(k) for k in self.uncovered[:5])
        more = "" if len(self.uncovered) <= 5 else f" (+{len(self.uncovered) - 5} more)"
        super().__init__(
            f"support basis too small: {len(self.uncovered)} target support "
            f"elements are not products x^-1 y over the basis: {shown}{more}"
        )


@dataclass
class SdpProblem:
    n: int
    basis: SupportBasis
    targets: Dict[Tuple[int, int, int], float]

    def __post_init__(self):
        table = self.basis.products()
        self._table = table
        self.m = len(self.basis)
        self.npairs = len(table)
        self.identity_pid = table.identity_pid
        self.inverse_pid = table.inverse_pid

    @property
    def table(self):
        return self._table

    def target(self, i: int, j: int, pid: int) -> float:
        if i <= j:
            return self.targets.get((i, j, pid), 0.0)
        return self.targets.get((j, i, self.inverse_pid[pid]), 0.0)

    def constraint_count(self) -> int:
        """Logical constraints: one per (i <= j, product)."""
        return self.n * (self.n + 1) // 2 * self.npairs

    def export_keys(self) -> List[Tuple[int, int, int]]:
        """Deterministic constraint order used by the SDPA export."""
        keys = []
        for i in range(self.n):
            for j in range(i, self.n):
                for pid in range(self.npairs):
                    if i == j and self.inverse_pid[pid] < pid:
                        continue
                    keys.append((i, j, pid))
        return keys

    def same_problem(self, other: "SdpProblem") -> bool:
        return (
            self.n == other.n
            and self.basis.model.spec() == other.basis.model.spec()
            and [e.key for e in self.basis] == [e.key for e in other.basis]
            and self.basis.radius == other.basis.radius
            and self.targets == other.targets
        )


def build_problem(source, basis: SupportBasis) -> SdpProblem:
    """Build the SDP for `source - lambda * I` over the given basis.

    `source` is a Laplacian1 or a square *-invariant exact RingMatrix whose
    support must be covered by products over the basis.
    """
    matrix = source.matrix if isinstance(source, Laplacian1) else source
    if matrix.n_rows != matrix.n_cols:
        raise ValueError("target matrix must be square")
    if matrix.kind != EXACT:
        raise ValueError("problem targets must be exact")
    if matrix.model.model_id != basis.model.model_id:
        raise ValueError("target and basis use different models")
    if not matrix.is_star_invariant():
        raise ValueError("target matrix must be *-invariant")
    table = basis.products()
    uncovered = []
    seen_uncovered = set()
    for row in matrix.entries:
        for e in row:
            for g in e.support():
                if g.key not in table.pair_index and g.key not in seen_uncovered:
                    seen_uncovered.add(g.key)
                    uncovered.append(g.key)
    if uncovered:
        raise SupportTooSmallError(uncovered)
    n = matrix.n_rows
    targets: Dict[Tuple[int, int, int], float] = {}
    for i in range(n):
        for j in range(i, n):
            e = matrix.entry(i, j)
            for g in e.support():
                pid = table.pair_index[g.key]
                targets[(i, j, pid)] = float(e.coefficient(g))
    return SdpProblem(n, basis, targets)


def reconstruct_exact(problem: SdpProblem, P) -> RingMatrix:
    """Exact x* P x as a rational RingMatrix.

    P entries are converted to Fractions (exact for floats), so this is a
    rational evaluation of the constraint linear map, independent of any
    solver state.
    """
    table = problem.table
    basis = problem.basis
    model = basis.model
    n, m = problem.n, problem.m

    def frac(v) -> Fraction:
        return v if isinstance(v, Fraction) else Fraction(float(v))

    pairs_by_pid: List[List[Tuple[int, int]]] = [[] for _ in range(problem.npairs)]
    for x in range(m):
        row = table.pid[x]
        for y in range(m):
            pairs_by_pid[row[y]].append((x, y))
    entries = []
    for i in range(n):
        row_out = []
        for j in range(n):
            coeffs = {}
            for pid, elem in enumerate(table.pair_elements):
                total = Fraction(0)
                for x, y in pairs_by_pid[pid]:
                    total += frac(P[i * m + x][j * m + y] if isinstance(P, list) else P[i * m + x, j * m + y])
                if total:
                    coeffs[elem] = total
            row_out.append(RingElement(model, coeffs))
        entries.append(row_out)
    return RingMatrix(model, entries)


# ---------------------------------------------------------------------------
# SDPA sparse export / import
# ---------------------------------------------------------------------------

_META_PREFIX = "*META "


def export_sdpa(problem: SdpProblem) -> str:
    """Sparse SDPA (.dat-s) text for the problem.

    File is the standard SDPA dual form: maximize <F0, Y> subject to
    <Fk, Y> = c_k with Y PSD.  Y = blockdiag(P, s, t), where P is the
    nm x nm Gram block and lambda = s - t splits the free objective
    variable over a diagonal block of size 2.
    """
    table = problem.table
    n, m, npairs = problem.n, problem.m, problem.npairs
    keys = problem.export_keys()
    meta = {
        "version": 1,
        "n": n,
        "model": problem.basis.model.spec(),
        "radius": problem.basis.radius,
        "basis": [problem.basis.model.key_to_json(e.key) for e in problem.basis],
    }
    lines = [
        "* gapcert sparse SDPA export (format v1)",
        "* dual form: maximize <F0,Y> s.t. <Fk,Y>=c_k, Y PSD",
        "* Y = blockdiag(P, s, t); P is the nm x nm Gram block, lambda = s - t",
        _META_PREFIX + json.dumps(meta, separators=(",", ":"), sort_keys=True),
        f"{len(keys)}",
        "2",
        f"{n * m} -2",
        " ".join(repr(problem.targets.get(k, 0.0)) for k in keys),
        "0 2 1 1 1.0",
        "0 2 2 2 -1.0",
    ]
    inverse_pid = problem.inverse_pid
    pairs_by_pid: List[List[Tuple[int, int]]] = [[] for _ in range(npairs)]
    for x in range(m):
        row = table.pid[x]
        for y in range(m):
            pairs_by_pid[row[y]].append((x, y))
    for k, (i, j, pid) in enumerate(keys, start=1):
        if i == j:
            pattern = list(pairs_by_pid[pid])
            if inverse_pid[pid] != pid:
                pattern += pairs_by_pid[inverse_pid[pid]]
            for x, y in pattern:
                p, q = i * m + x, i * m + y
                if p < q:
                    lines.append(f"{k} 1 {p + 1} {q + 1} 0.5")
                elif p == q:
                    lines.append(f"{k} 1 {p + 1} {q + 1} 1.0")
            if pid == problem.identity_pid:
                lines.append(f"{k} 2 1 1 1.0")
                lines.append(f"{k} 2 2 2 -1.0")
        else:
            for x, y in pairs_by_pid[pid]:
                p, q = i * m + x, j * m + y
                lines.append(f"{k} 1 {p + 1} {q + 1} 0.5")
    return "\n".join(lines) + "\n"


def import_sdpa(text: str) -> SdpProblem:
    """Rebuild an SdpProblem from an export; inverse of export_sdpa."""
    meta = None
    body_tokens: List[str] = []
    entry_lines = 0
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith(_META_PREFIX):
            meta = json.loads(line[len(_META_PREFIX):])
            continue
        if not line or line.startswith("*") or line.startswith('"'):
            continue
        body_tokens.extend(line.split())
    if meta is None:
        raise ValueError("missing *META line; not a gapcert export")
    model = model_from_spec(meta["model"])
    elements = [GroupElement(model, model.key_from_json(k)) for k in meta["basis"]]
    basis = SupportBasis(elements, meta.get("radius"))
    n = int(meta["n"])
    m = len(basis)
    pos = 0

    def take(count):
        nonlocal pos
        out = body_tokens[pos:pos + count]
        if len(out) != count:
            raise ValueError("truncated SDPA file")
        pos += count
        return out

    mdim = int(take(1)[0])
    nblocks = int(take(1)[0])
    if nblocks != 2:
        raise ValueError(f"expected 2 blocks, found {nblocks}")
    block1, block2 = (int(t) for t in take(2))
    if block1 != n * m or block2 != -2:
        raise ValueError("block structure does not match metadata")
    c = [float(t) for t in take(mdim)]
    # remaining tokens are entry quintuples; validated by count only
    remaining = len(body_tokens) - pos
    if remaining % 5 != 0:
        raise ValueError("malformed entry lines")
    shell = SdpProblem(n, basis, {})
    keys = shell.export_keys()
    if len(keys) != mdim:
        raise ValueError(
            f"constraint count mismatch: file has {mdim}, basis implies {len(keys)}"
        )
    targets: Dict[Tuple[int, int, int], float] = {}
    inverse_pid = shell.inverse_pid
    for key, value in zip(keys, c):
        if value == 0.0:
            continue
        i, j, pid = key
        targets[key] = value
        if i == j and inverse_pid[pid] != pid:
            targets[(i, j, inverse_pid[pid])] = value
    return SdpProblem(n, basis, targets)


# ---------------------------------------------------------------------------
# Embedded solver
# ---------------------------------------------------------------------------


@dataclass
class SolveOptions:
    tol_primal: float = 1e-8
    tol_dual: float = 1e-8
    max_iter: int = 20000
    over_relaxation: float = 1.6
    rho: float = 1.0
    adaptive_rho: bool = True
    fixed_lambda: Optional[float] = None
    check_every: int = 25
    stall_window: int = 1000
    progress: Optional[object] = None  # callable(iter, lam, rp, rd)


@dataclass
class SdpSolution:
    lam: float
    P: np.ndarray
    primal_residual: float
    dual_residual: float
    constraint_residual: float
    iterations: int
    status: str
    accepted: List[Tuple[int, float]] = field(default_factory=list)


def _psd_project(A: np.ndarray) -> np.ndarray:
    S = 0.5 * (A + A.T)
    w, V = np.linalg.eigh(S)
    if w[0] >= 0.0:
        return S
    pos = w > 0.0
    if not pos.any():
        return np.zeros_like(S)
    Z = (V[:, pos] * w[pos]) @ V[:, pos].T
    return 0.5 * (Z + Z.T)


def solve(problem: SdpProblem, opts: Optional[SolveOptions] = None) -> SdpSolution:
    """Maximize lambda over the problem's affine slice of the PSD cone.

    Deterministic cold start at P = 0, lambda = 0.  Status is "optimal"
    when both residuals pass their tolerances, "infeasible-suspected" when
    the primal residual plateaus well above tolerance while the iterates
    stop moving, and "max-iter" otherwise.
    """
    opts = opts or SolveOptions()
    n, m, npairs = problem.n, problem.m, problem.npairs
    N = n * m
    K = n * n * npairs
    pid_np = np.asarray(problem.table.pid, dtype=np.int64)
    base = (np.arange(n)[:, None] * n + np.arange(n)[None, :]) * npairs
    cid = (base[:, None, :, None] + pid_np[None, :, None, :]).reshape(N, N)
    cidf = np.ascontiguousarray(cid).ravel()
    cnt = np.tile(np.bincount(pid_np.ravel(), minlength=npairs).astype(float), n * n)
    b = np.zeros(K)
    for (i, j, pid), v in problem.targets.items():
        b[(i * n + j) * npairs + pid] = v
        if i != j:
            b[(j * n + i) * npairs + problem.inverse_pid[pid]] = v
    lam_ids = np.array(
        [(i * n + i) * npairs + problem.identity_pid for i in range(n)], dtype=np.int64
    )
    fixed = opts.fixed_lambda is not None
    if fixed:
        b = b.copy()
        b[lam_ids] -= opts.fixed_lambda
    m_f = float(m)

    def proj_affine(V: np.ndarray, vlam: float) -> Tuple[np.ndarray, float]:
        sums = np.bincount(cidf, weights=V.ravel(), minlength=K)
        resid = sums - b
        if fixed:
            mu = resid / cnt
            lam_out = float(opts.fixed_lambda)
        else:
            resid[lam_ids] += vlam
            rl = resid[lam_ids]
            mu_l = rl / m_f - rl.sum() / (m_f * (m_f + n))
            mu = resid / cnt
            mu[lam_ids] = mu_l
            lam_out = vlam - mu_l.sum()
        X = (V.ravel() - mu[cidf]).reshape(N, N)
        return X, lam_out

    rho = opts.rho
    alpha = opts.over_relaxation
    Z = np.zeros((N, N))
    U = np.zeros((N, N))
    zlam = 0.0
    accepted: List[Tuple[int, float]] = []
    history: List[float] = []
    status = "max-iter"
    X, xlam, rp, rd = Z, 0.0, math.inf, math.inf
    it = 0
    for it in range(1, opts.max_iter + 1):
        push = 0.0 if fixed else 1.0 / rho
        X, xlam = proj_affine(Z - U, zlam + push)
        Xr = alpha * X + (1.0 - alpha) * Z
        xrlam = alpha * xlam + (1.0 - alpha) * zlam
        Z_new = _psd_project(Xr + U)
        U = U + Xr - Z_new
        rp = float(np.linalg.norm(X - Z_new))
        rd = rho * float(np.linalg.norm(Z_new - Z))
        Z = Z_new
        zlam = xrlam
        if it % opts.check_every == 0 or it == 1:
            if opts.progress is not None:
                opts.progress(it, xlam, rp, rd)
            if rp <= 10 * opts.tol_primal and rd <= 10 * opts.tol_dual:
                if not accepted or xlam >= accepted[-1][1] - 1e-12:
                    accepted.append((it, xlam))
            if rp <= opts.tol_primal and rd <= opts.tol_dual:
                status = "optimal"
                break
            history.append(rp)
            window = max(2, opts.stall_window // opts.check_every)
            if (
                len(history) > window
                and rp > 100 * opts.tol_primal
                and history[-1] > 0.999 * history[-window]
                and rd < max(10 * opts.tol_dual, 1e-6)
            ):
                status = "infeasible-suspected"
                break
            if opts.adaptive_rho and it % 100 == 0:
                if rp > 10 * rd:
                    rho *= 2.0
                    U /= 2.0
                elif rd > 10 * rp:
                    rho /= 2.0
                    U *= 2.0
    if status == "optimal" and (not accepted or accepted[-1][0] != it):
        if not accepted or xlam >= accepted[-1][1] - 1e-12:
            accepted.append((it, xlam))
    sums = np.bincount(cidf, weights=Z.ravel(), minlength=K)
    err = sums - b
    if not fixed:
        err[lam_ids] += xlam
    constraint_residual = float(np.linalg.norm(err))
    return SdpSolution(
        lam=float(xlam),
        P=Z,
        primal_residual=rp,
        dual_residual=rd,
        constraint_residual=constraint_residual,
        iterations=it,
        status=status,
        accepted=accepted,
    )
