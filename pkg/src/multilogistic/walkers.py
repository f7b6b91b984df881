"""Random-walker ensemble for the high-noise (thermodynamic) regime.

Walkers live in log-population space, where proportional growth is an
additive random walk. Each step proposes u_i + dt*(drift_i + sigma_i*xi_i),
rejects proposals that would sink a walker below the population floor, and
applies one global additive shift so the total population stays pinned.
Long runs equilibrate to the rank-size law solved in :mod:`.maxent`.

A single ensemble mutates its own state and is not thread-safe; independent
ensembles (distinct seeds) can run in parallel freely. The noise stream
comes from a counter-based Philox generator, so a run is fully determined
by (seed, parameters) regardless of how steps are chunked.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InputDataError, NumericsError
from .maxent import RankDistribution

__all__ = [
    "WalkerEnsemble",
    "EnsembleStats",
    "normalization_shift",
    "scale_invariance_corr",
]

_CHUNK_STEPS = 4096  # normals buffer: chunk * n doubles


def normalization_shift(u_proposed, total: float) -> float:
    """Additive log-space shift restoring sum(exp(u)) = total.

    This is the exact correction -log(sum(exp(u))/total), not its
    small-step linearization, so the constraint holds to rounding after
    every application.
    """
    u = np.asarray(u_proposed, dtype=float)
    if not np.all(np.isfinite(u)):
        raise InputDataError("proposals must be finite")
    if not total > 0.0:
        raise InputDataError("total must be positive")
    m = float(u.max())
    return math.log(total) - (m + math.log(np.exp(u - m).sum()))


@dataclass(frozen=True)
class EnsembleStats:
    """Summary of an equilibrated run."""

    rank_table: RankDistribution
    corr_coeff: float
    step_count: int


class WalkerEnsemble:
    """n log-space walkers with conserved total and a hard floor.

    Two update schemes share the same per-step ingredients (one normal per
    walker, the floor, the exact correction):

    * ``"sequential"`` (default): walkers move one at a time, the restoring
      rescale is applied after every move, and a move is rejected outright
      if it would leave any population below the floor. This samples the
      flat measure on the constraint surface and equilibrates to the
      analytic rank law.
    * ``"sweep"``: all proposals are applied at once, floor-violating
      proposals individually revert, then one global correction is applied
      (stragglers below the floor are pinned there and the rest
      renormalized, repeated until clean). The literal batch update; its
      boundary handling steadily shifts mass from the floor into the
      largest walkers, so the long-run state is condensed rather than the
      rank law.
    """

    def __init__(self, x0, total, floor, dt, sigma, drift=0.0, seed=0,
                 scheme="sequential"):
        x = np.asarray(x0, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise InputDataError("need at least two walkers")
        n = x.size
        if not (total > 0.0 and floor > 0.0 and dt > 0.0):
            raise InputDataError("total, floor and dt must be positive")
        if total <= n * floor:
            raise InputDataError(
                f"floor infeasible: total {total:.6g} <= n*floor {n * floor:.6g}"
            )
        if np.any(x < floor):
            raise InputDataError("every initial population must be at the floor or above")
        if scheme not in ("sequential", "sweep"):
            raise InputDataError("scheme must be 'sequential' or 'sweep'")
        self.total = float(total)
        self.floor = float(floor)
        self.dt = float(dt)
        self.scheme = scheme
        self.sigma = np.broadcast_to(np.asarray(sigma, float), (n,)).copy()
        self.drift = np.broadcast_to(np.asarray(drift, float), (n,)).copy()
        if np.any(self.sigma < 0.0):
            raise InputDataError("sigma must be non-negative")
        self.seed = int(seed)
        self._rng = np.random.Generator(np.random.Philox(self.seed))
        self.x = x * (self.total / x.sum())
        if np.any(self.x < self.floor * (1.0 - 1e-12)):
            raise InputDataError("initial populations infeasible after normalization")
        self.step_count = 0

    @classmethod
    def uniform(cls, n, total, floor, dt, sigma, drift=0.0, seed=0,
                scheme="sequential"):
        """All walkers starting at the mean population total/n."""
        return cls(np.full(n, total / n), total, floor, dt, sigma, drift, seed,
                   scheme=scheme)

    @classmethod
    def from_rates(cls, x0, total, floor, rates, seed=0, scheme="sequential"):
        """Construct from a :class:`~multilogistic.core.StochasticRates` model."""
        from .core import StochasticRates

        if not isinstance(rates, StochasticRates):
            raise InputDataError("from_rates expects a StochasticRates model")
        return cls(x0, total, floor, rates.dt, rates.sigma, rates.mean, seed,
                   scheme=scheme)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def u(self) -> np.ndarray:
        """Log-populations (the walkers' natural coordinates)."""
        return np.log(self.x)

    @property
    def populations(self) -> np.ndarray:
        return self.x.copy()

    def total_error(self) -> float:
        return abs(float(self.x.sum()) - self.total)

    def step(self):
        self.run(1)

    def run(self, steps: int):
        """Advance the ensemble by ``steps`` steps."""
        if steps < 0:
            raise InputDataError("steps must be non-negative")
        advance = (kernels.advance_walkers_seq if self.scheme == "sequential"
                   else kernels.advance_walkers)
        done = 0
        while done < steps:
            chunk = min(steps - done, _CHUNK_STEPS)
            normals = self._rng.standard_normal((chunk, self.n))
            bad = advance(
                self.x, normals, self.drift, self.sigma,
                self.dt, self.total, self.floor,
            )
            if bad >= 0:
                raise NumericsError(
                    f"walker update failed at step {self.step_count + done + bad}"
                )
            done += chunk
        self.step_count += steps

    def run_to_equilibrium(self, burn_in: int, sample_every: int, samples: int) -> EnsembleStats:
        """Burn in, then collect a rank table and the scale-invariance diagnostic.

        The rank table is the mean over ``samples`` snapshots of the sorted
        populations, snapshots spaced ``sample_every`` steps apart. The
        diagnostic pairs each snapshot with the very next step, so the
        velocity estimate uses consecutive states. A degenerate run (e.g.
        sigma = 0) leaves the correlation undefined; it is reported as NaN
        here, while :func:`scale_invariance_corr` itself raises.
        """
        if burn_in < 1 or samples < 1 or sample_every < 1:
            raise InputDataError("burn_in, sample_every and samples must be >= 1")
        self.run(burn_in)
        rank_acc = np.zeros(self.n)
        before = np.empty((samples, self.n))
        after = np.empty((samples, self.n))
        for s in range(samples):
            before[s] = self.u
            self.run(1)
            after[s] = self.u
            rank_acc += np.sort(self.x)[::-1]
            if s < samples - 1:
                self.run(sample_every - 1)
        rank_table = RankDistribution(
            np.arange(1, self.n + 1, dtype=float), rank_acc / samples
        )
        try:
            corr = scale_invariance_corr(
                np.stack([before.ravel(), after.ravel()]), self.dt
            )
        except NumericsError:
            corr = float("nan")
        return EnsembleStats(rank_table, corr, self.step_count)


def scale_invariance_corr(u_snapshots, dt: float) -> float:
    """Pearson correlation between log-size and squared relative growth.

    ``u_snapshots`` is a sequence of consecutive log-population vectors
    spaced ``dt`` apart. Velocities are estimated by forward differences,
    paired with the left snapshot, and pooled over walkers and pairs. A
    value near zero means growth fluctuations are size-independent, the
    fingerprint of scale invariance.
    """
    snaps = np.asarray(u_snapshots, dtype=float)
    if snaps.ndim != 2 or snaps.shape[0] < 2:
        raise InputDataError("need at least two snapshots")
    if not dt > 0.0:
        raise InputDataError("dt must be positive")
    udot = np.diff(snaps, axis=0) / dt
    u = snaps[:-1].ravel()
    v = (udot**2).ravel()
    if np.std(u) == 0.0 or np.std(v) == 0.0:
        raise NumericsError("correlation undefined: zero variance in inputs")
    return float(np.corrcoef(u, v)[0, 1])
