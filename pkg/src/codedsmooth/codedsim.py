"""Straggler-tolerant coded-computing simulator.

N workers each evaluate the wrapped function on one coded sample; up to S of
them never return. The decoder spline is fitted only on the surviving
(point, output) pairs and still evaluated at the original batch abscissas.
Straggling is simulated by omission, not latency: which results return is
the only thing the estimate depends on.

Drop policies: ``uniform_random`` removes exactly S uniformly chosen
workers; ``adversarial_contiguous`` removes the contiguous run of S workers
whose loss widens the decoder's knot gap the most (contiguous holes are the
worst case for spline interpolation).
"""

import io
from dataclasses import dataclass, field

import numpy as np

from .coded import get_module
from .errors import ValidationError
from .seeding import stream_rng
from .spline import Knots, build_operator

POLICIES = ("uniform_random", "adversarial_contiguous")

# benchmark functions for rate experiments (vectorized, elementwise)
BENCH_FUNCTIONS = {
    "sin": np.sin,
    "gauss_bump": lambda x: np.exp(-4.0 * x * x),
    "cubic": lambda x: x * x * x - x,
    "const": lambda x: np.full_like(np.asarray(x, dtype=np.float64), 0.5),
}


def sample_inputs(k: int, seed: int) -> np.ndarray:
    """The shared uniform(-1, 1) scalar-column batch used by rate experiments."""
    return stream_rng(seed, "inputs").uniform(-1.0, 1.0, (k, 1))


@dataclass(frozen=True)
class StragglerScenario:
    n_workers: int
    max_stragglers: int = 0
    policy: str = "uniform_random"
    seed: int = 0

    def __post_init__(self):
        if self.n_workers < 4:
            raise ValidationError("need at least 4 workers")
        if self.max_stragglers < 0:
            raise ValidationError("straggler count must be >= 0")
        if self.max_stragglers >= self.n_workers - 3:
            raise ValidationError("need at least 4 returned results: S < N - 3")
        if self.policy not in POLICIES:
            raise ValidationError(f"unknown policy {self.policy!r}")


@dataclass
class WorkerResult:
    index: int
    point: float
    output: np.ndarray
    returned: bool


@dataclass
class SweepRow:
    n_workers: int
    stragglers: int
    policy: str
    seed: int
    mse: float


@dataclass
class SimReport:
    rows: list = field(default_factory=list)

    def cell_means(self) -> dict:
        """(N, S) -> mean MSE over seeds."""
        sums, counts = {}, {}
        for r in self.rows:
            key = (r.n_workers, r.stragglers)
            sums[key] = sums.get(key, 0.0) + r.mse
            counts[key] = counts.get(key, 0) + 1
        return {key: sums[key] / counts[key] for key in sums}

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("N,S,policy,seed,mse\n")
        for r in self.rows:
            buf.write(f"{r.n_workers},{r.stragglers},{r.policy},{r.seed},{r.mse:.17g}\n")
        return buf.getvalue()


def returned_indices(scenario: StragglerScenario, beta: np.ndarray) -> np.ndarray:
    """Sorted indices of the workers whose results arrive."""
    n, s = scenario.n_workers, scenario.max_stragglers
    if s == 0:
        return np.arange(n)
    if scenario.policy == "uniform_random":
        rng = stream_rng(scenario.seed, "stragglers")
        dropped = rng.choice(n, size=s, replace=False)
        return np.setdiff1d(np.arange(n), dropped)
    # adversarial_contiguous: pick the run whose removal leaves the widest gap
    best_start, best_gap = 0, -1.0
    for start in range(n - s + 1):
        left = beta[start - 1] if start > 0 else beta[0]
        right = beta[start + s] if start + s < n else beta[-1]
        if right - left > best_gap:
            best_gap, best_start = right - left, start
    return np.concatenate([np.arange(best_start), np.arange(best_start + s, n)])


def run_coded_job(f, x: np.ndarray, scenario: StragglerScenario) -> tuple:
    """Execute one encode/compute/decode round under the scenario.

    Returns (estimates, mse) where mse is the mean over batch rows of the
    squared output-vector error. With S = 0 this takes exactly the plain
    module path, so the results are bit-identical to ``module.forward``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 4:
        raise ValidationError(f"need a (K >= 4, d) batch, got shape {x.shape}")
    module = get_module(x.shape[0], scenario.n_workers)
    coded = module.encode(x)
    outputs = f(coded)

    keep = returned_indices(scenario, module.beta)
    if len(keep) < 4:
        raise ValidationError("fewer than 4 returned results; cannot decode")
    if len(keep) == scenario.n_workers:
        estimates = module.decode(outputs)
    else:
        dec = build_operator(Knots(module.beta[keep]), module.alpha)
        estimates = dec.apply(outputs[keep])

    diff = estimates - f(x)
    mse = float(np.mean(np.sum(diff * diff, axis=1)))
    return estimates, mse


def worker_table(f, x: np.ndarray, scenario: StragglerScenario) -> list:
    """Per-worker view of one round (index, point, output, returned flag)."""
    x = np.asarray(x, dtype=np.float64)
    module = get_module(x.shape[0], scenario.n_workers)
    outputs = f(module.encode(x))
    keep = set(returned_indices(scenario, module.beta).tolist())
    return [WorkerResult(j, float(module.beta[j]), outputs[j], j in keep)
            for j in range(scenario.n_workers)]


def sweep(f, x: np.ndarray, n_list, s_list, seeds, policy: str = "uniform_random") -> SimReport:
    """Grid of runs over (N, S, seed); deterministic given the seed list."""
    report = SimReport()
    for n in n_list:
        for s in s_list:
            for seed in seeds:
                scenario = StragglerScenario(n, s, policy, seed)
                _, mse = run_coded_job(f, x, scenario)
                report.rows.append(SweepRow(n, s, policy, seed, mse))
    return report


def fit_scaling_exponent(report: SimReport) -> float:
    """Least-squares slope of log mean-MSE against log((S+1)/N).

    Needs at least 4 grid cells spanning at least a factor of 8 in
    (S+1)/N; zero MSE cells (exact recovery) cannot be fitted.
    """
    means = report.cell_means()
    if len(means) < 4:
        raise ValidationError("need at least 4 (N, S) grid cells")
    ratios = np.array([(s + 1) / n for (n, s) in means.keys()])
    mses = np.array(list(means.values()))
    if ratios.max() / ratios.min() < 8.0:
        raise ValidationError("grid must span at least 8x in (S+1)/N")
    if np.any(mses <= 0.0):
        raise ValidationError("zero MSE in a grid cell; exponent undefined")
    return float(np.polyfit(np.log(ratios), np.log(mses), 1)[0])
