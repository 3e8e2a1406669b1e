"""Dual-path training of small MLPs on the synthetic tasks.

Three methods share one loop: plain minimization of the task loss, mixup,
and the coded-smoothing regularizer. The coded method routes the batch
through a parallel smoothing path (encode -> network -> decode, parameters
shared with the direct path) and mixes the two losses as
(1 - mu) * direct + mu * smoothed. The number of coded samples can ramp
linearly from the batch size K up to gamma*K over training.

Randomness is split into named streams (init / shuffle / mixup) so that
methods consuming fewer streams stay bit-compatible: a mu=0 coded run
replays the plain run exactly.
"""

import io
from dataclasses import dataclass, field

import numpy as np

from . import autodiff
from .autodiff import Tensor
from .coded import CodedSmoothingModule, get_module
from .datasets import Dataset, DatasetSpec, make_dataset, n_classes, one_hot, task_of
from .errors import NumericError, ShapeError, ValidationError
from .models import MLP, MLPSpec
from .seeding import stream_rng


@dataclass(frozen=True)
class ERM:
    """Plain training on the task loss."""


@dataclass(frozen=True)
class Mixup:
    alpha: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValidationError("mixup alpha must be > 0")


@dataclass(frozen=True)
class Coded:
    mu: float = 0.5
    gamma: float = 1.5
    n_schedule: str = "linear_ramp"  # or "constant" (pins N = K)

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValidationError("mu must be in [0, 1]")
        if self.gamma < 1.0:
            raise ValidationError("gamma must be >= 1")
        if self.n_schedule not in ("constant", "linear_ramp"):
            raise ValidationError(f"unknown n_schedule {self.n_schedule!r}")


@dataclass(frozen=True)
class TrainPlan:
    dataset: DatasetSpec
    model: MLPSpec
    epochs: int = 100
    batch_size: int = 128
    lr: float = 0.05
    lr_decay_epochs: tuple = ()
    momentum: float = 0.9
    seed: int = 0
    method: object = ERM()

    def __post_init__(self):
        if self.batch_size < 4:
            raise ValidationError("batch size must be >= 4")
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if self.dataset.n_train < self.batch_size:
            raise ValidationError("dataset smaller than one batch")


@dataclass
class EpochRecord:
    epoch: int
    loss_main: float
    loss_coded: float  # nan when no smoothing path ran
    test_metric: float
    n_coded: int


@dataclass
class Metrics:
    records: list = field(default_factory=list)
    boundary_smoothness: float = float("nan")

    @property
    def final_test_metric(self) -> float:
        return self.records[-1].test_metric

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("epoch,loss_main,loss_coded,test_metric,N\n")
        for r in self.records:
            buf.write(f"{r.epoch},{r.loss_main:.17g},{r.loss_coded:.17g},"
                      f"{r.test_metric:.17g},{r.n_coded}\n")
        return buf.getvalue()


def schedule_n(method: Coded, epoch: int, total_epochs: int, k: int) -> int:
    """Coded-sample count for this epoch.

    linear_ramp goes from K at the first epoch to round(gamma*K) at the
    last (a single-epoch run stays at K); constant pins N = K. Result is
    clamped into [K, round(gamma*K)] and is non-decreasing in epoch.
    """
    top = int(round(method.gamma * k))
    if method.n_schedule == "constant" or total_epochs <= 1:
        return k
    frac = epoch / (total_epochs - 1)
    n = int(round(k + (method.gamma * k - k) * frac))
    return max(max(4, k), min(n, top))


def mixup_batch(x: np.ndarray, y: np.ndarray, alpha: float, rng) -> tuple:
    """Convex combination of the batch with a permuted partner batch.

    One lambda ~ Beta(alpha, alpha) per batch; labels must be one-hot or
    probability rows so the mixed labels stay rows summing to one.
    """
    lam = rng.beta(alpha, alpha)
    part = rng.permutation(x.shape[0])
    xbar = lam * x + (1.0 - lam) * x[part]
    ybar = lam * y + (1.0 - lam) * y[part]
    return xbar, ybar


def _task_loss(pred: Tensor, target: np.ndarray, task: str) -> Tensor:
    if task == "classification":
        return autodiff.softmax_cross_entropy(pred, target)
    return autodiff.mse_loss(pred, target)


def dual_path_terms(model: MLP, module, x: np.ndarray, target: np.ndarray,
                    mu: float, task: str):
    """(combined, main, coded) loss tensors for one batch.

    mu = 0 skips the smoothing path entirely (the step is then identical to
    plain training and ``module`` may be None); mu = 1 returns only the
    smoothed-path loss, so no gradient ever reaches the tape through the
    direct output.
    """
    if not 0.0 <= mu <= 1.0:
        raise ValidationError("mu must be in [0, 1]")
    l_main = _task_loss(model(Tensor(x)), target, task)
    if mu == 0.0:
        return l_main, l_main, None
    if x.shape[0] != module.k:
        raise ShapeError(f"batch has {x.shape[0]} rows but module expects {module.k}")
    l_coded = _task_loss(module.forward(Tensor(x), model), target, task)
    if mu == 1.0:
        return l_coded, l_main, l_coded
    combined = autodiff.add(autodiff.scale(l_main, 1.0 - mu),
                            autodiff.scale(l_coded, mu))
    return combined, l_main, l_coded


def dual_path_loss(model: MLP, module: CodedSmoothingModule, x: np.ndarray,
                   target: np.ndarray, mu: float, task: str = "classification") -> Tensor:
    """(1 - mu) * direct loss + mu * smoothed-path loss, as a scalar tensor."""
    combined, _, _ = dual_path_terms(model, module, x, target, mu, task)
    return combined


def boundary_smoothness(model: MLP, grid: np.ndarray) -> float:
    """Mean input-gradient norm of the logit margin over a point grid.

    The margin is logit[1] - logit[0]; only models with 2-d inputs (and at
    least two outputs) qualify.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if model.input_dim != 2 or grid.ndim != 2 or grid.shape[1] != 2:
        raise ValidationError("boundary smoothness needs a 2-d input model and (g, 2) grid")
    if model.output_dim < 2:
        raise ValidationError("boundary smoothness needs >= 2 output logits")
    sel = np.zeros((model.output_dim, 1))
    sel[0, 0] = -1.0
    sel[1, 0] = 1.0
    x = Tensor(grid, requires_grad=True)
    margin = autodiff.matmul(model(x), Tensor(sel))
    autodiff.tsum(margin).backward()
    return float(np.mean(np.sqrt(np.sum(x.grad * x.grad, axis=1))))


def margin_grid(side: int = 25) -> np.ndarray:
    """The fixed evaluation grid: side x side lattice over [-1, 1]^2."""
    line = np.linspace(-1.0, 1.0, side)
    gx, gy = np.meshgrid(line, line)
    return np.column_stack([gx.ravel(), gy.ravel()])


def evaluate_model(model: MLP, x: np.ndarray, y, task: str) -> float:
    """Test accuracy for classification, mean squared error otherwise."""
    out = model.predict(x)
    if task == "classification":
        return float(np.mean(np.argmax(out, axis=1) == y))
    target = x if task == "autoencoder" else y
    diff = out - target
    return float(np.mean(diff * diff))


def _check_model_fits(plan: TrainPlan, task: str, data: Dataset) -> None:
    want_in = data.train_x.shape[1]
    if plan.model.widths[0] != want_in:
        raise ValidationError(f"model input width {plan.model.widths[0]} != data dim {want_in}")
    if task == "classification":
        want_out = n_classes(plan.dataset.kind)
    elif task == "autoencoder":
        want_out = want_in
    else:
        want_out = data.train_y.shape[1]
    if plan.model.widths[-1] != want_out:
        raise ValidationError(f"model output width {plan.model.widths[-1]} != task width {want_out}")


def train(plan: TrainPlan) -> tuple:
    """Run the plan; returns (model, metrics). Bit-deterministic given the plan.

    Epochs shuffle the training set; a trailing partial batch (< K rows) is
    dropped since the smoothing module needs exactly K rows. Loss is guarded
    against NaN/Inf every step. With mu = 0 the smoothing path is never
    instantiated, so the run (and its metrics CSV) is identical to plain
    training.
    """
    data = make_dataset(plan.dataset)
    task = task_of(plan.dataset.kind)
    k = plan.batch_size
    if plan.dataset.n_train < 2 * k:
        raise ValidationError(f"n_train must be >= 2 * batch size ({2 * k})")
    _check_model_fits(plan, task, data)

    model = MLP(plan.model, stream_rng(plan.seed, "init"))
    params = model.parameters()
    rng_shuffle = stream_rng(plan.seed, "data-shuffle")
    rng_mixup = stream_rng(plan.seed, "mixup")
    method = plan.method
    coded_active = isinstance(method, Coded) and method.mu > 0.0

    if task == "classification":
        train_targets = one_hot(data.train_y, n_classes(plan.dataset.kind))
    elif task == "autoencoder":
        train_targets = data.train_x
    else:
        train_targets = data.train_y

    metrics = Metrics()
    lr = plan.lr
    n_batches = data.train_x.shape[0] // k
    for epoch in range(plan.epochs):
        if epoch in plan.lr_decay_epochs:
            lr /= 10.0
        if coded_active:
            n_coded = schedule_n(method, epoch, plan.epochs, k)
            module = get_module(k, n_coded)
        else:
            n_coded = k
            module = None

        order = rng_shuffle.permutation(data.train_x.shape[0])
        main_vals = []
        coded_vals = []
        for b in range(n_batches):
            idx = order[b * k:(b + 1) * k]
            xb = data.train_x[idx]
            tb = train_targets[idx]
            if isinstance(method, Coded):
                loss, l_main, l_coded = dual_path_terms(model, module, xb, tb,
                                                        method.mu, task)
                main_vals.append(l_main.item())
                if l_coded is not None:
                    coded_vals.append(l_coded.item())
            elif isinstance(method, Mixup):
                xm, tm = mixup_batch(xb, tb, method.alpha, rng_mixup)
                loss = _task_loss(model(Tensor(xm)), tm, task)
                main_vals.append(loss.item())
            else:
                loss = _task_loss(model(Tensor(xb)), tb, task)
                main_vals.append(loss.item())
            if not np.isfinite(loss.data):
                raise NumericError(f"non-finite loss at epoch {epoch}, batch {b}")
            loss.backward()
            autodiff.sgd_momentum_step(params, lr, plan.momentum)

        metrics.records.append(EpochRecord(
            epoch=epoch,
            loss_main=float(np.mean(main_vals)),
            loss_coded=float(np.mean(coded_vals)) if coded_vals else float("nan"),
            test_metric=evaluate_model(model, data.test_x, data.test_y, task),
            n_coded=n_coded,
        ))

    if model.input_dim == 2 and model.output_dim >= 2:
        metrics.boundary_smoothness = boundary_smoothness(model, margin_grid())
    return model, metrics
