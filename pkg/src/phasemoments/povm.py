"""Finite joint observables: marginals, product constructions and the
projective-marginal factorization check.

If one marginal of a joint observable is projection valued, the joint is
forced into product form with commuting marginals. On a finite outcome grid
that is directly checkable: residuals over all singletons, and over every
union in the finite product algebra, where additivity makes the singleton
check sufficient.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

__all__ = [
    "FiniteJointPOM",
    "marginals",
    "make_projective_product_pom",
    "verify_product_form",
    "ProductFormReport",
    "adversarial_search",
    "SearchReport",
    "random_projection_partition",
    "random_effect_resolution",
]

_PSD_TOL = 1e-12
_SUM_TOL = 1e-10
_PROJ_TOL = 1e-10
_PASS_TOL = 1e-9


def _opnorm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2))


@dataclass(frozen=True)
class FiniteJointPOM:
    """m x n array of d x d effects M(i, j) resolving the identity."""

    effects: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.effects, dtype=complex)
        if e.ndim != 4 or e.shape[2] != e.shape[3]:
            raise ValueError("effects must have shape (m, n, d, d)")
        m, n, d, _ = e.shape
        for i in range(m):
            for j in range(n):
                a = e[i, j]
                if np.abs(a - a.conj().T).max() > 1e-12:
                    raise ValueError(f"effect ({i},{j}) not Hermitian")
                if np.linalg.eigvalsh(a).min() < -_PSD_TOL:
                    raise ValueError(f"effect ({i},{j}) not PSD within {_PSD_TOL}")
        total = e.sum(axis=(0, 1))
        if np.abs(total - np.eye(d)).max() > _SUM_TOL:
            raise ValueError("effects do not sum to the identity")
        object.__setattr__(self, "effects", e)

    @property
    def dim(self) -> int:
        return self.effects.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return self.effects.shape[:2]


def marginals(pom: FiniteJointPOM) -> tuple[np.ndarray, np.ndarray]:
    """Row sums and column sums; each is a resolution of identity."""
    return pom.effects.sum(axis=1), pom.effects.sum(axis=0)


def _is_projective(effects: np.ndarray) -> bool:
    return all(_opnorm(e @ e - e) <= _PROJ_TOL for e in effects)


def make_projective_product_pom(P, B, require_commute: bool = False) -> FiniteJointPOM:
    """Joint observable M(i, j) = P_i B_j P_i from orthogonal projections P_i
    summing to I and effects B_j summing to I.

    With require_commute the B_j must commute with every P_i (e.g. be block
    diagonal in P's eigenbasis), in which case M(i, j) = P_i B_j exactly.
    """
    P = [np.asarray(p, dtype=complex) for p in P]
    B = [np.asarray(b, dtype=complex) for b in B]
    d = P[0].shape[0]
    if not _is_projective(np.array(P)):
        raise ValueError("P must consist of orthogonal projections")
    if np.abs(sum(P) - np.eye(d)).max() > _SUM_TOL:
        raise ValueError("projections must sum to the identity")
    if np.abs(sum(B) - np.eye(d)).max() > _SUM_TOL:
        raise ValueError("effects must sum to the identity")
    if require_commute:
        worst = max(_opnorm(p @ b - b @ p) for p in P for b in B)
        if worst > 1e-12:
            raise ValueError(f"commutation violated (residual {worst})")
    eff = np.array([[p @ b @ p for b in B] for p in P])
    return FiniteJointPOM(eff)


@dataclass(frozen=True)
class ProductFormReport:
    projective_marginal: str
    commute_residual: float
    product_residual: float
    union_commute_residual: float
    union_product_residual: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "projective_marginal": self.projective_marginal,
            "commute_residual": self.commute_residual,
            "product_residual": self.product_residual,
            "union_commute_residual": self.union_commute_residual,
            "union_product_residual": self.union_product_residual,
            "pass": self.passed,
        }


def _subset_sums(effects: np.ndarray) -> list[np.ndarray]:
    n = effects.shape[0]
    out = []
    for size in range(1, n + 1):
        for idx in combinations(range(n), size):
            out.append(effects[list(idx)].sum(axis=0))
    return out


def verify_product_form(pom: FiniteJointPOM) -> ProductFormReport:
    """Check commuting marginals and M(X x Y) = M1(X) M2(Y).

    Requires at least one projective marginal (the hypothesis of the
    structure result); raises otherwise. Residuals are operator norms, both
    over singletons and over every union in the finite product algebra.
    """
    m1, m2 = marginals(pom)
    proj1, proj2 = _is_projective(m1), _is_projective(m2)
    if not (proj1 or proj2):
        raise ValueError("no projective marginal: factorization hypothesis unmet")
    which = {(True, True): "both", (True, False): "first", (False, True): "second"}[
        (proj1, proj2)
    ]
    commute = max(_opnorm(a @ b - b @ a) for a in m1 for b in m2)
    product = max(
        _opnorm(pom.effects[i, j] - m1[i] @ m2[j])
        for i in range(pom.shape[0])
        for j in range(pom.shape[1])
    )
    # unions in the product algebra: sums over index subsets
    sums1 = _subset_sums(m1)
    sums2 = _subset_sums(m2)
    union_commute = max(_opnorm(a @ b - b @ a) for a in sums1 for b in sums2)
    union_product = 0.0
    m, n = pom.shape
    for size_r in range(1, m + 1):
        for rows in combinations(range(m), size_r):
            row_sum = pom.effects[list(rows)].sum(axis=0)
            mr = m1[list(rows)].sum(axis=0)
            for size_c in range(1, n + 1):
                for cols in combinations(range(n), size_c):
                    lhs = row_sum[list(cols)].sum(axis=0)
                    rhs = mr @ m2[list(cols)].sum(axis=0)
                    union_product = max(union_product, _opnorm(lhs - rhs))
    passed = commute <= _PASS_TOL and product <= _PASS_TOL
    return ProductFormReport(
        projective_marginal=which,
        commute_residual=commute,
        product_residual=product,
        union_commute_residual=union_commute,
        union_product_residual=union_product,
        passed=passed,
    )


# --- randomized construction and adversarial search -------------------------

def _haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_projection_partition(dim: int, blocks: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Random orthogonal projections summing to I, from a Haar basis."""
    if not 1 <= blocks <= dim:
        raise ValueError("need 1 <= blocks <= dim")
    u = _haar_unitary(dim, rng)
    cuts = sorted(rng.choice(np.arange(1, dim), size=blocks - 1, replace=False)) if blocks > 1 else []
    bounds = [0, *cuts, dim]
    out = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        cols = u[:, lo:hi]
        out.append(cols @ cols.conj().T)
    return out


def random_effect_resolution(dim: int, outcomes: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Random PSD effects B_j summing to I via symmetric normalization."""
    raw = []
    for _ in range(outcomes):
        g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        raw.append(g @ g.conj().T)
    total = sum(raw)
    w, v = np.linalg.eigh(total)
    inv_sqrt = v @ np.diag(w**-0.5) @ v.conj().T
    return [inv_sqrt @ a @ inv_sqrt for a in raw]


def _psd_projection(a: np.ndarray) -> np.ndarray:
    h = 0.5 * (a + a.conj().T)
    w, v = np.linalg.eigh(h)
    return v @ np.diag(np.clip(w, 0.0, None)) @ v.conj().T


@dataclass
class SearchReport:
    attempts: int = 0
    rejected_marginal_not_projective: int = 0
    rejected_invalid_pom: int = 0
    lemma_passed: int = 0
    counterexamples: int = 0
    worst_product_residual: float = 0.0
    failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "attempts": self.attempts,
            "rejected_marginal_not_projective": self.rejected_marginal_not_projective,
            "rejected_invalid_pom": self.rejected_invalid_pom,
            "lemma_passed": self.lemma_passed,
            "counterexamples": self.counterexamples,
            "worst_product_residual": self.worst_product_residual,
            "failures": self.failures[:50],
        }


def adversarial_search(rng: np.random.Generator, attempts: int = 1000,
                       dims=(2, 3, 4), scale: float = 0.05,
                       threshold: float = 1e-6) -> SearchReport:
    """Randomized attempts to build a valid joint observable with a projective
    first marginal but product residual above ``threshold``.

    Two arms: free perturb-and-project, where renormalization destroys the
    projective marginal or the POM invariants; and row-resolved constructions
    M(i, j) = P_i B^i_j P_i with independent effect resolutions per row, which
    keep the first marginal projective by design yet always land back in the
    factorizing family. Every failure mode is logged.
    """
    report = SearchReport()
    for t in range(attempts):
        report.attempts += 1
        dim = int(rng.choice(dims))
        m = int(rng.integers(2, min(4, dim) + 1))
        n = int(rng.integers(2, 5))
        P = random_projection_partition(dim, m, rng)

        if t % 2 == 0:
            # row-resolved: projectivity-preserving by construction
            eff = np.array(
                [
                    [p @ b @ p for b in random_effect_resolution(dim, n, rng)]
                    for p in P
                ]
            )
        else:
            base = make_projective_product_pom(P, random_effect_resolution(dim, n, rng))
            noisy = np.array(
                [
                    [
                        _psd_projection(base.effects[i, j] + scale * _hermitian_noise(dim, rng))
                        for j in range(n)
                    ]
                    for i in range(m)
                ]
            )
            total = noisy.sum(axis=(0, 1))
            w, v = np.linalg.eigh(total)
            if w.min() <= 1e-12:
                report.rejected_invalid_pom += 1
                report.failures.append({"attempt": t, "reason": "singular normalizer"})
                continue
            inv_sqrt = v @ np.diag(w**-0.5) @ v.conj().T
            eff = np.einsum("ab,ijbc,cd->ijad", inv_sqrt, noisy, inv_sqrt)

        try:
            pom = FiniteJointPOM(eff)
        except ValueError as exc:
            report.rejected_invalid_pom += 1
            report.failures.append({"attempt": t, "reason": str(exc)})
            continue
        m1, _ = marginals(pom)
        if not _is_projective(m1):
            report.rejected_marginal_not_projective += 1
            report.failures.append(
                {"attempt": t, "reason": "first marginal lost projectivity"}
            )
            continue
        result = verify_product_form(pom)
        report.worst_product_residual = max(
            report.worst_product_residual, result.product_residual
        )
        if result.product_residual > threshold:
            report.counterexamples += 1
            report.failures.append(
                {"attempt": t, "reason": "counterexample", "residual": result.product_residual}
            )
        else:
            report.lemma_passed += 1
    return report


def _hermitian_noise(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + g.conj().T)
