"""Monte Carlo result containers and binomial confidence intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# Two-sided 95% normal quantile used throughout.
WILSON_Z = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    Unlike the Wald interval it stays inside [0, 1] and gives a nonzero upper
    bound when no successes were observed.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    # at the extremes the analytic bounds are exact; avoid rounding residue
    low = 0.0 if successes == 0 else max(0.0, center - half)
    high = 1.0 if successes == trials else min(1.0, center + half)
    return low, high


@dataclass(frozen=True)
class ErrorEstimate:
    """Empirical error rate with its Wilson 95% interval."""

    successes: int
    trials: int
    estimate: float = field(init=False)
    ci_low: float = field(init=False)
    ci_high: float = field(init=False)

    def __post_init__(self):
        lo, hi = wilson_interval(self.successes, self.trials)
        object.__setattr__(self, "estimate", self.successes / self.trials)
        object.__setattr__(self, "ci_low", lo)
        object.__setattr__(self, "ci_high", hi)


@dataclass
class SimResult:
    """Type I / Type II error estimates from one simulation run.

    ``type1`` maps message index to its estimate; ``type2`` maps ordered
    pairs (sent, tested).  ``extras`` carries run-specific diagnostics such
    as the pair-sampling mode or atypicality rates.  The config digest is
    attached by the harness when the run came from a config file.
    """

    kind: str
    type1: dict[int, ErrorEstimate]
    type2: dict[tuple[int, int], ErrorEstimate]
    trials: int
    seed: int
    extras: dict = field(default_factory=dict)
    config_digest: str | None = None

    @property
    def max_type1(self) -> ErrorEstimate:
        return max(self.type1.values(), key=lambda e: e.estimate)

    @property
    def max_type2(self) -> ErrorEstimate:
        return max(self.type2.values(), key=lambda e: e.estimate)

    def rows(self) -> list[dict]:
        """Flatten to one record per estimate, in a fixed deterministic order."""
        out = []
        for i in sorted(self.type1):
            est = self.type1[i]
            out.append(self._row("type1", i, None, est))
        for i, j in sorted(self.type2):
            est = self.type2[(i, j)]
            out.append(self._row("type2", i, j, est))
        return out

    def _row(self, metric: str, i, j, est: ErrorEstimate) -> dict:
        return {
            "metric": metric,
            "message_i": i,
            "message_j": j,
            "estimate": est.estimate,
            "ci_low": est.ci_low,
            "ci_high": est.ci_high,
            "trials": est.trials,
            "seed": self.seed,
        }
