"""Disorder laws with exact log-moment generating functions and tilts.

``lam(beta) = log E exp(beta * omega)``; the tilted law has density
``exp(beta * omega - lam(beta))`` against the base law. ``excess`` is
``beta * lam'(beta) - lam(beta)``, which equals the relative entropy of the
tilted law with respect to the base one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import special

from .errors import ContractViolation


class EnvironmentLaw:
    """Common interface; concrete variants below."""

    variant: str = ""

    def lam(self, beta: float) -> float:
        raise NotImplementedError

    def lam_prime(self, beta: float) -> float:
        raise NotImplementedError

    def excess(self, beta: float) -> float:
        return beta * self.lam_prime(beta) - self.lam(beta)

    @property
    def ess_sup(self) -> float:
        raise NotImplementedError

    @property
    def mass_at_sup(self) -> float:
        raise NotImplementedError

    @property
    def mean(self) -> float:
        return self.lam_prime(0.0)

    def from_uniform(self, u):
        """Inverse transform; the single path from uniforms to disorder values."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        return self.from_uniform(rng.random(size))

    def tilt(self, beta: float) -> "EnvironmentLaw":
        raise NotImplementedError

    def tilted_sample(self, beta: float, rng: np.random.Generator, size=None):
        return self.tilt(beta).sample(rng, size)

    def prob_below(self, k: float) -> float:
        """P[omega < k]."""
        raise NotImplementedError

    @property
    def enumerable(self) -> bool:
        return False

    def to_config(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_config(block: dict) -> "EnvironmentLaw":
        block = {str(k).lower(): v for k, v in block.items()}
        kind = str(block.get("variant", block.get("env", "gaussian"))).lower()
        if kind == "gaussian":
            return Gaussian(float(block.get("mean", 0.0)))
        if kind == "bernoulli":
            return Bernoulli(float(block.get("p", 0.5)))
        if kind in ("discrete", "discretefinite", "discrete_finite"):
            atoms = block.get("atoms")
            if isinstance(atoms, str):
                # "v1:p1,v2:p2"
                atoms = [tuple(float(t) for t in part.split(":")) for part in atoms.split(",")]
            return DiscreteFinite(tuple((float(v), float(p)) for v, p in atoms))
        raise ValueError(f"unknown environment variant {kind!r}")


@dataclass(frozen=True)
class Gaussian(EnvironmentLaw):
    """Unit-variance normal; ``mean`` is nonzero only for tilted copies."""

    mean_: float = 0.0
    variant = "gaussian"

    def lam(self, beta):
        return self.mean_ * beta + 0.5 * beta * beta

    def lam_prime(self, beta):
        return self.mean_ + beta

    def excess(self, beta):
        return 0.5 * beta * beta

    @property
    def ess_sup(self):
        return math.inf

    @property
    def mass_at_sup(self):
        return 0.0

    def from_uniform(self, u):
        return self.mean_ + special.ndtri(u)

    def tilt(self, beta):
        return Gaussian(self.mean_ + beta)

    def prob_below(self, k):
        return float(special.ndtr(k - self.mean_))

    def to_config(self):
        out = {"variant": "gaussian"}
        if self.mean_:
            out["mean"] = self.mean_
        return out


@dataclass(frozen=True)
class Bernoulli(EnvironmentLaw):
    """omega in {0, 1} with P[omega = 1] = p."""

    p: float = 0.5
    variant = "bernoulli"

    def __post_init__(self):
        # p = 1 is admitted for tilts at very large beta
        if not 0.0 < self.p <= 1.0:
            raise ValueError("Bernoulli p must lie in (0, 1)")

    def _logit(self, beta):
        if self.p == 1.0:
            return math.inf
        return beta + math.log(self.p) - math.log1p(-self.p)

    def lam(self, beta):
        p = self.p
        if p == 1.0:
            return beta
        if beta > 0:
            return beta + math.log(p + (1.0 - p) * math.exp(-beta))
        return math.log1p(p * math.expm1(beta))

    def lam_prime(self, beta):
        return float(special.expit(self._logit(beta)))

    def excess(self, beta):
        p = self.p
        if p == 1.0:
            return 0.0
        z = self._logit(beta)
        lw1 = float(special.log_expit(z))
        lw0 = float(special.log_expit(-z))
        return math.exp(lw1) * (lw1 - math.log(p)) + math.exp(lw0) * (lw0 - math.log1p(-p))

    @property
    def ess_sup(self):
        return 1.0

    @property
    def mass_at_sup(self):
        return self.p

    @property
    def atoms(self):
        if self.p == 1.0:
            return ((1.0, 1.0),)
        return ((0.0, 1.0 - self.p), (1.0, self.p))

    @property
    def enumerable(self):
        return True

    def from_uniform(self, u):
        return np.where(np.asarray(u) > 1.0 - self.p, 1.0, 0.0)

    def tilt(self, beta):
        return Bernoulli(self.lam_prime(beta))

    def prob_below(self, k):
        if k <= 0.0:
            return 0.0
        return 1.0 if k > 1.0 else 1.0 - self.p

    def to_config(self):
        return {"variant": "bernoulli", "p": self.p}


@dataclass(frozen=True)
class DiscreteFinite(EnvironmentLaw):
    """Finitely many atoms ``((value, probability), ...)``."""

    atoms: Tuple[Tuple[float, float], ...] = ((0.0, 0.5), (1.0, 0.5))
    variant = "discrete"

    def __post_init__(self):
        atoms = tuple(sorted((float(v), float(p)) for v, p in self.atoms))
        if not atoms:
            raise ValueError("need at least one atom")
        if any(p <= 0.0 for _, p in atoms):
            raise ValueError("atom probabilities must be positive")
        if abs(math.fsum(p for _, p in atoms) - 1.0) > 1e-12:
            raise ValueError("atom probabilities must sum to 1")
        if len({v for v, _ in atoms}) != len(atoms):
            raise ValueError("atom values must be distinct")
        object.__setattr__(self, "atoms", atoms)

    @property
    def values(self):
        return np.array([v for v, _ in self.atoms])

    @property
    def probs(self):
        return np.array([p for _, p in self.atoms])

    def _log_weights(self, beta):
        lw = np.log(self.probs) + beta * self.values
        return lw - special.logsumexp(lw)

    def lam(self, beta):
        return float(special.logsumexp(np.log(self.probs) + beta * self.values))

    def lam_prime(self, beta):
        return float(np.dot(np.exp(self._log_weights(beta)), self.values))

    def excess(self, beta):
        lw = self._log_weights(beta)
        return float(np.dot(np.exp(lw), lw - np.log(self.probs)))

    @property
    def ess_sup(self):
        return self.atoms[-1][0]

    @property
    def mass_at_sup(self):
        return self.atoms[-1][1]

    @property
    def enumerable(self):
        return True

    def from_uniform(self, u):
        cum = np.cumsum(self.probs)[:-1]
        return self.values[np.searchsorted(cum, u, side="right")]

    def tilt(self, beta):
        w = np.exp(self._log_weights(beta))
        keep = w > 0
        w = w[keep] / w[keep].sum()
        return DiscreteFinite(tuple(zip(self.values[keep].tolist(), w.tolist())))

    def prob_below(self, k):
        return float(self.probs[self.values < k].sum())

    def to_config(self):
        return {"variant": "discrete", "atoms": [list(a) for a in self.atoms]}


def lemma_a1_diagnostics(env: EnvironmentLaw, beta_grid: Sequence[float], k_threshold: float,
                         check: bool = True) -> dict:
    """Large-beta behaviour of the tilted law on a grid.

    Per beta: tilted P[omega < K], lam'(beta), excess(beta). Targets are the
    essential supremum s and -log P[omega = s]. With ``check`` the monotone
    approach to the targets is asserted.
    """
    s = env.ess_sup
    if not k_threshold < s:
        raise ValueError("K must lie below the essential supremum")
    grid = sorted(float(b) for b in beta_grid)
    rows = []
    for b in grid:
        t = env.tilt(b)
        rows.append({
            "beta": b,
            "tilted_below_K": t.prob_below(k_threshold),
            "lambda_prime": env.lam_prime(b),
            "excess": env.excess(b),
        })
    mass = env.mass_at_sup
    target_excess = -math.log(mass) if mass > 0 else math.inf
    below = np.array([r["tilted_below_K"] for r in rows])
    lp = np.array([r["lambda_prime"] for r in rows])
    ex = np.array([r["excess"] for r in rows])
    tol = 1e-12
    monotone = bool(
        np.all(np.diff(below) <= tol)
        and np.all(np.diff(lp) >= -tol)
        and np.all(lp <= s + tol)
        and (np.all(np.diff(ex) >= -tol) if grid and grid[0] >= 0 else True)
        and np.all(ex <= target_excess + 1e-9)
    )
    if check and not monotone:
        raise ContractViolation("tilted-law diagnostics are not monotone on the grid")
    return {
        "rows": rows,
        "ess_sup": s,
        "target_excess": target_excess,
        "monotone": monotone,
    }
