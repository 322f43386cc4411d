"""Turn an inexact SDP solution into a rigorous spectral-gap bound.

Given a numeric (P, lambda) for `target - lambda*I = x* P x`, take a real
square root Q of P (so Q^T Q is PSD by construction even when P has tiny
negative eigenvalues), evaluate the residual

    r = target - lambda*I - x* Q^T Q x

in interval arithmetic with exact target coefficients and point intervals
for lambda and the entries of Q, and bound it by its l1 norm: for any
lambda0 <= inf(lambda - |r|_1), the matrix target - lambda0*I is a sum of
hermitian squares, because the residual is dominated by |r|_1 * I through
the order-unit construction.  Every floating-point step here either
carries one-ulp outward widening or is an exact compensated sum, so the
reported lambda0 is a mathematically valid lower bound.

Certificates are self-contained canonical JSON: they store the
presentation text, the model, the relator subset, the support basis, Q at
full precision, and the solver's lambda, so verification recomputes
everything without touching solver state.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .fox import Laplacian1, laplacian1
from .groups import GroupElement, SupportBasis, ball, model_from_spec, validate_model
from .intervals import Interval, down, up
from .ring import EXACT
from .words import parse_presentation

_NEG_INF = -np.inf
_POS_INF = np.inf


class CertificateError(ValueError):
    pass


class HashMismatchError(CertificateError):
    pass


class SupportReconstructionError(CertificateError):
    pass


def psd_sqrt(P: np.ndarray) -> np.ndarray:
    """Symmetric square root of the PSD part of P.

    P is symmetrized first; negative eigenvalues are clamped to zero, so
    Q^T Q is positive semidefinite whatever numerical noise P carries.
    """
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("psd_sqrt needs a square matrix")
    S = 0.5 * (P + P.T)
    w, V = np.linalg.eigh(S)
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.T


def _gram_enclosure(Q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Entrywise interval enclosure of Q^T Q.

    Accumulates rank-one updates; each elementwise product and sum is
    widened one ulp outward, matching the scalar interval policy.
    """
    rows, N = Q.shape
    lo = np.zeros((N, N))
    hi = np.zeros((N, N))
    for k in range(rows):
        row = Q[k]
        p = np.multiply.outer(row, row)
        lo = np.nextafter(lo + np.nextafter(p, _NEG_INF), _NEG_INF)
        hi = np.nextafter(hi + np.nextafter(p, _POS_INF), _POS_INF)
    return lo, hi


def _pair_block_sums(
    lo: np.ndarray, hi: np.ndarray, n: int, m: int, pid: Sequence[Sequence[int]], npairs: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Interval sums of Gram blocks over each product class.

    Output S[pid][i, j] encloses sum_{x^-1 y = g_pid} (Q^T Q)_{(i,x),(j,y)};
    accumulation order is x-major then y, widened per addition.
    """
    G4lo = lo.reshape(n, m, n, m)
    G4hi = hi.reshape(n, m, n, m)
    Slo = np.zeros((npairs, n, n))
    Shi = np.zeros((npairs, n, n))
    for x in range(m):
        row = pid[x]
        for y in range(m):
            p = row[y]
            Slo[p] = np.nextafter(Slo[p] + G4lo[:, x, :, y], _NEG_INF)
            Shi[p] = np.nextafter(Shi[p] + G4hi[:, x, :, y], _POS_INF)
    return Slo, Shi


@dataclass
class GapResult:
    lambda0: float
    residual_l1: Interval
    status: str
    certificate: Optional["Certificate"]


def certified_gap(
    target,
    basis: SupportBasis,
    Q: np.ndarray,
    lam: float,
) -> GapResult:
    """Certify target - lambda0*I as a sum of squares, lambda0 rounded down.

    `target` is a Laplacian1 (which yields a full self-contained
    certificate) or a plain exact *-invariant RingMatrix (no certificate,
    bound only).  Q may be rectangular with n*|E| columns; its entries are
    promoted to point intervals, lambda to the point interval of its
    double value.
    """
    if isinstance(target, Laplacian1):
        matrix = target.matrix
    else:
        matrix = target
    if matrix.kind != EXACT:
        raise ValueError("certification needs the exact target")
    if matrix.n_rows != matrix.n_cols:
        raise ValueError("target must be square")
    if not matrix.is_star_invariant():
        raise ValueError("target must be *-invariant for the l1 domination")
    if matrix.model.model_id != basis.model.model_id:
        raise ValueError("target and basis use different models")
    n = matrix.n_rows
    m = len(basis)
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[1] != n * m:
        raise ValueError(
            f"Q must have {n * m} = n*|E| columns (got shape {Q.shape}); "
            "a wider Q would imply support outside the basis"
        )
    if not np.isfinite(Q).all():
        raise ValueError("Q contains non-finite entries")
    lam = float(lam)
    table = basis.products()
    npairs = len(table)
    glo, ghi = _gram_enclosure(Q)
    Slo, Shi = _pair_block_sums(glo, ghi, n, m, table.pid, npairs)

    lam_iv = Interval.point(lam)
    handled = np.zeros((npairs, n, n), dtype=bool)
    scalar_lo: List[float] = []
    scalar_hi: List[float] = []
    ident = matrix.model.identity()
    for i in range(n):
        for j in range(n):
            entry = matrix.entry(i, j)
            support = entry.support()
            if i == j and ident not in entry.coeffs:
                support.append(ident)
            for g in support:
                iv = Interval.from_fraction(Fraction(entry.coefficient(g)))
                if i == j and g == ident:
                    iv = iv - lam_iv
                pid = table.pair_index.get(g.key)
                if pid is not None:
                    iv = iv - Interval(float(Slo[pid, i, j]), float(Shi[pid, i, j]))
                    handled[pid, i, j] = True
                a = abs(iv)
                scalar_lo.append(a.lo)
                scalar_hi.append(a.hi)
    # remaining product classes: residual coefficient is exactly -S there
    free = ~handled
    a = -Shi[free]
    bnd = -Slo[free]
    abs_lo = np.where(a > 0.0, a, np.where(bnd < 0.0, -bnd, 0.0))
    abs_hi = np.maximum(np.abs(a), np.abs(bnd))
    # math.fsum is exactly rounded, so one outward ulp makes the sums safe
    total_lo = down(math.fsum(scalar_lo + abs_lo.tolist()))
    total_hi = up(math.fsum(scalar_hi + abs_hi.tolist()))
    residual_l1 = Interval(max(0.0, total_lo), total_hi)
    lambda0 = down(lam - total_hi)
    status = "certified-positive" if lambda0 > 0.0 else "no-positive-gap"

    certificate = None
    if isinstance(target, Laplacian1):
        certificate = make_certificate(target, basis, Q, lam, lambda0, residual_l1, status)
    return GapResult(lambda0, residual_l1, status, certificate)


def floor_display(x: float) -> str:
    """Human-facing bound, floored to two decimals (never rounded up)."""
    return f"{math.floor(x * 100) / 100:.2f}"


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


@dataclass
class Certificate:
    presentation_text: str
    presentation_sha256: str
    model_spec: dict
    relator_indices: Tuple[int, ...]
    relator_labels: Tuple[str, ...]
    basis_keys: list
    basis_radius: Optional[int]
    lam: str
    lambda0: str
    residual_l1_sup: str
    status: str
    q_entries: List[List[str]]
    toolchain: dict

    def to_json_dict(self) -> dict:
        # field order is fixed; certificates are canonical byte streams
        return {
            "format": "gapcert-certificate-v1",
            "toolchain": self.toolchain,
            "presentation": {
                "text": self.presentation_text,
                "sha256": self.presentation_sha256,
            },
            "model": self.model_spec,
            "relators": {
                "indices": list(self.relator_indices),
                "labels": list(self.relator_labels),
            },
            "basis": {"radius": self.basis_radius, "keys": self.basis_keys},
            "solver_lambda": self.lam,
            "certified_lambda0": self.lambda0,
            "residual_l1_sup": self.residual_l1_sup,
            "status": self.status,
            "q": {
                "rows": len(self.q_entries),
                "cols": len(self.q_entries[0]) if self.q_entries else 0,
                "entries": self.q_entries,
            },
        }

    def to_bytes(self) -> bytes:
        return json.dumps(self.to_json_dict(), separators=(",", ":")).encode("utf-8")

    @classmethod
    def from_json_dict(cls, data: dict) -> "Certificate":
        if data.get("format") != "gapcert-certificate-v1":
            raise CertificateError("unknown certificate format")
        return cls(
            presentation_text=data["presentation"]["text"],
            presentation_sha256=data["presentation"]["sha256"],
            model_spec=data["model"],
            relator_indices=tuple(data["relators"]["indices"]),
            relator_labels=tuple(data["relators"]["labels"]),
            basis_keys=data["basis"]["keys"],
            basis_radius=data["basis"]["radius"],
            lam=data["solver_lambda"],
            lambda0=data["certified_lambda0"],
            residual_l1_sup=data["residual_l1_sup"],
            status=data["status"],
            q_entries=data["q"]["entries"],
            toolchain=data["toolchain"],
        )

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "Certificate":
        with open(path, "rb") as fh:
            return cls.from_json_dict(json.loads(fh.read().decode("utf-8")))

    def q_matrix(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.q_entries], dtype=float)


def _toolchain() -> dict:
    try:
        from . import __version__ as version
    except ImportError:  # pragma: no cover
        version = "unknown"
    return {"package": "gapcert", "version": version, "numpy": np.__version__}


def make_certificate(
    lap: Laplacian1,
    basis: SupportBasis,
    Q: np.ndarray,
    lam: float,
    lambda0: float,
    residual_l1: Interval,
    status: str,
) -> Certificate:
    p = lap.presentation
    model = lap.model
    return Certificate(
        presentation_text=p.to_text(),
        presentation_sha256=p.sha256(),
        model_spec=model.spec(),
        relator_indices=tuple(lap.relator_indices),
        relator_labels=tuple(p.labels[k] for k in lap.relator_indices),
        basis_keys=[model.key_to_json(e.key) for e in basis],
        basis_radius=basis.radius,
        lam=repr(float(lam)),
        lambda0=repr(float(lambda0)),
        residual_l1_sup=repr(float(residual_l1.hi)),
        status=status,
        q_entries=[[repr(float(v)) for v in row] for row in np.asarray(Q, dtype=float)],
        toolchain=_toolchain(),
    )


@dataclass
class VerifyResult:
    passed: bool
    lambda0: float
    stored_lambda0: float
    message: str


def verify_certificate(
    cert: Certificate,
    target_relator_indices: Optional[Sequence[int]] = None,
) -> VerifyResult:
    """Re-derive the bound from the certificate alone.

    Recomputes the Laplacian from the stored presentation, model and
    relator subset, re-enumerates the basis, and re-runs the interval
    certification from the stored Q and lambda.  Passes iff the recomputed
    lambda0 is at least the stored one.  A target relator superset is
    accepted because extra relators only add squares to the Laplacian.
    """
    recomputed = hashlib.sha256(cert.presentation_text.encode("utf-8")).hexdigest()
    if recomputed != cert.presentation_sha256:
        raise HashMismatchError("presentation text does not match its stored hash")
    p = parse_presentation(cert.presentation_text)
    model = model_from_spec(cert.model_spec)
    validate_model(p, model)
    stored = tuple(cert.relator_indices)
    for k in stored:
        if not 0 <= k < len(p.relators):
            raise CertificateError(f"stored relator index {k} out of range")
    if target_relator_indices is not None:
        if not set(target_relator_indices) >= set(stored):
            return VerifyResult(
                False,
                float("nan"),
                float(cert.lambda0),
                "target relator set does not contain the certified subset",
            )
    try:
        elements = [GroupElement(model, model.key_from_json(k)) for k in cert.basis_keys]
        basis = SupportBasis(elements, cert.basis_radius)
    except ValueError as exc:
        raise SupportReconstructionError(f"stored basis is invalid: {exc}") from exc
    if cert.basis_radius is not None:
        expected = ball(model, cert.basis_radius)
        if [e.key for e in expected] != [e.key for e in basis]:
            raise SupportReconstructionError(
                "stored basis does not match the ball of the stored radius"
            )
    lap = laplacian1(model, p, stored)
    Q = cert.q_matrix()
    lam = float(cert.lam)
    result = certified_gap(lap, basis, Q, lam)
    stored_lambda0 = float(cert.lambda0)
    passed = result.lambda0 >= stored_lambda0
    message = (
        "re-verified" if passed else
        f"recomputed lambda0 {result.lambda0!r} fell below stored {stored_lambda0!r}"
    )
    return VerifyResult(passed, result.lambda0, stored_lambda0, message)
