"""
ann.py — 3→H→1 feed-forward network trained by Levenberg-Marquardt.

Hidden layer tanh, output identity. Inputs are min-max normalized features,
outputs live in a normalized target space (TargetScale maps back to percent).
Each epoch solves (JᵀJ + μI)δ = −Jᵀr, retrying with larger μ until a step
lowers the training SSE or μ passes its ceiling.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla

from .config import LmConfig
from .dataset import (
    Dataset, DataSplit, FeatureScaler, Prediction, Target, TargetScale, fit_scaler,
)
from .errors import DataError, NumericalError
from .kernels import mlp_forward, mlp_jacobian

logger = logging.getLogger(__name__)

N_INPUTS = 3
MU_FLOOR = 1e-20


# ─────────────────────────────────────────────────────────────────────
# Model
# ─────────────────────────────────────────────────────────────────────

def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MlpModel:
    target: Target
    w1: np.ndarray                  # (H, 3)
    b1: np.ndarray                  # (H,)
    w2: np.ndarray                  # (H,)
    b2: float
    scaler: FeatureScaler | None = None
    target_scale: TargetScale | None = None
    hidden_activation: str = "tanh"
    output_activation: str = "identity"

    def __post_init__(self):
        w1, b1, w2 = _frozen(self.w1), _frozen(self.b1), _frozen(self.w2)
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "w2", w2)
        object.__setattr__(self, "b2", float(self.b2))
        # one hidden layer, 3 inputs, 1 output
        if w1.ndim != 2 or w1.shape[1] != N_INPUTS or w1.shape[0] < 1:
            raise ValueError(f"w1 must have shape (H, {N_INPUTS}) with H ≥ 1, got {w1.shape}")
        h = w1.shape[0]
        if b1.shape != (h,) or w2.shape != (h,):
            raise ValueError(f"b1 and w2 must have shape ({h},), got {b1.shape} and {w2.shape}")
        if (self.hidden_activation, self.output_activation) != ("tanh", "identity"):
            raise ValueError("only tanh hidden / identity output activations are supported")
        if not np.all(np.isfinite(self.theta)):
            raise NumericalError("network parameters must be finite")

    @property
    def hidden_count(self) -> int:
        return self.w1.shape[0]

    @property
    def parameter_count(self) -> int:
        return 5 * self.hidden_count + 1

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2, [self.b2]])

    def with_theta(self, theta: np.ndarray) -> MlpModel:
        return MlpModel.from_theta(
            theta, self.hidden_count, self.target, self.scaler, self.target_scale
        )

    @classmethod
    def from_theta(cls, theta, hidden: int, target: Target,
                   scaler: FeatureScaler | None = None,
                   target_scale: TargetScale | None = None) -> MlpModel:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (5 * hidden + 1,):
            raise ValueError(f"expected {5 * hidden + 1} parameters, got {theta.shape}")
        return cls(
            target=target,
            w1=theta[:3 * hidden].reshape(hidden, 3),
            b1=theta[3 * hidden:4 * hidden],
            w2=theta[4 * hidden:5 * hidden],
            b2=float(theta[5 * hidden]),
            scaler=scaler,
            target_scale=target_scale,
        )

    def predict_percent(self, features) -> np.ndarray:
        if self.scaler is None or self.target_scale is None:
            raise DataError("network has no fitted scaler / target scale")
        z = self.scaler.apply(np.asarray(features, dtype=np.float64).reshape(-1, 3))
        return self.target_scale.denormalize(mlp_forward(self.theta, z, self.hidden_count))


def init_weights(config: LmConfig, target: Target = Target.LA,
                 scaler: FeatureScaler | None = None,
                 target_scale: TargetScale | None = None) -> MlpModel:
    """Uniform [−0.5, 0.5] draws from a generator seeded by config.seed."""
    hidden = config.hidden_count
    if hidden < 1:
        raise DataError(f"hidden_count must be ≥ 1, got {hidden}")
    rng = np.random.default_rng(config.seed)
    theta = rng.uniform(-0.5, 0.5, size=5 * hidden + 1)
    return MlpModel.from_theta(theta, hidden, target, scaler, target_scale)


def _as_batch(x) -> np.ndarray:
    X = np.ascontiguousarray(np.asarray(x, dtype=np.float64).reshape(-1, N_INPUTS))
    if not np.all(np.isfinite(X)):
        raise NumericalError("non-finite network input")
    return X


def forward(model: MlpModel, x):
    """Normalized output for one normalized triple (float) or a batch (array)."""
    single = np.ndim(x) == 1
    out = mlp_forward(model.theta, _as_batch(x), model.hidden_count)
    return float(out[0]) if single else out


def jacobian(model: MlpModel, batch) -> np.ndarray:
    X = _as_batch(batch)
    if X.shape[0] == 0:
        raise DataError("jacobian needs a non-empty batch")
    return mlp_jacobian(model.theta, X, model.hidden_count)


# ─────────────────────────────────────────────────────────────────────
# Levenberg-Marquardt
# ─────────────────────────────────────────────────────────────────────

class StopReason(Enum):
    GOAL_REACHED = "goal_reached"
    MAX_EPOCHS = "max_epochs"
    GRADIENT_FLOOR = "gradient_floor"
    VALIDATION_STOP = "validation_stop"
    MU_CEILING = "mu_ceiling"


@dataclass(frozen=True, eq=False)
class LmStep:
    model: MlpModel
    sse: float
    accepted: bool
    mu: float
    stop: StopReason | None = None


def _sse(model: MlpModel, X: np.ndarray, y: np.ndarray) -> float:
    r = mlp_forward(model.theta, X, model.hidden_count) - y
    return float(r @ r)


def lm_step(model: MlpModel, X, y, mu: float, config: LmConfig,
            sse: float | None = None, jac: np.ndarray | None = None) -> LmStep:
    """
    One damped trial. Accepted → μ·mu_dec with the candidate model; rejected →
    the same model object and μ·mu_inc. μ already above mu_max → MU_CEILING.
    """
    if not mu > 0:
        raise ValueError(f"mu must be > 0, got {mu}")
    X = _as_batch(X)
    y = np.asarray(y, dtype=np.float64)
    theta = model.theta
    H = model.hidden_count

    r = mlp_forward(theta, X, H) - y
    current = float(r @ r) if sse is None else sse
    if not np.isfinite(current):
        raise NumericalError(f"training SSE is not finite ({current})")
    if mu > config.mu_max:
        return LmStep(model, current, False, mu, StopReason.MU_CEILING)

    J = mlp_jacobian(theta, X, H) if jac is None else jac
    A = J.T @ J
    A[np.diag_indices_from(A)] += mu
    try:
        delta = sla.cho_solve(sla.cho_factor(A, check_finite=False), -(J.T @ r),
                              check_finite=False)
    except (sla.LinAlgError, ValueError):
        delta = None

    if delta is not None and np.all(np.isfinite(delta)):
        candidate = theta + delta
        r_new = mlp_forward(candidate, X, H) - y
        cand_sse = float(r_new @ r_new)
        if not np.isfinite(cand_sse):
            raise NumericalError(f"candidate SSE is not finite at mu={mu:.3e}")
        if cand_sse < current:
            return LmStep(model.with_theta(candidate), cand_sse, True,
                          max(mu * config.mu_dec, MU_FLOOR))

    new_mu = mu * config.mu_inc
    stop = StopReason.MU_CEILING if new_mu > config.mu_max else None
    return LmStep(model, current, False, new_mu, stop)


@dataclass(frozen=True)
class TrainReport:
    epochs_run: int
    train_mse: tuple[float, ...]        # [0] initial, then one per accepted epoch
    val_mse: tuple[float, ...]          # empty without validation samples
    mu_trace: tuple[float, ...]
    stop_reason: StopReason
    final_mu: float
    final_train_mse: float              # of the returned parameters
    best_epoch: int | None
    n_train: int
    n_validation: int
    config: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()


def _partition(dataset: Dataset, indices, target: Target) -> Dataset:
    return dataset.subset(indices).with_target(target)


def train_lm(dataset: Dataset, data_split: DataSplit, target: Target,
             config: LmConfig) -> tuple[MlpModel, TrainReport]:
    train = _partition(dataset, data_split.train, target)
    if len(train) < 2:
        raise DataError(
            f"need ≥ 2 training samples with {target.label} to train the network, "
            f"got {len(train)}"
        )
    val = _partition(dataset, data_split.validation, target)

    scaler = fit_scaler(train)
    tscale = TargetScale.fit(train.targets(target))
    X = _as_batch(scaler.apply(train.features()))
    y = tscale.normalize(train.targets(target))
    Xv = _as_batch(scaler.apply(val.features())) if len(val) else None
    yv = tscale.normalize(val.targets(target)) if len(val) else None

    n = len(train)
    warnings: list[str] = []
    if n < config.parameter_count:
        msg = (f"{n} training samples for {config.parameter_count} parameters; "
               "the fit is underdetermined")
        logger.warning(f"[LM] {msg}")
        warnings.append(msg)

    model = init_weights(config, target, scaler, tscale)
    H = config.hidden_count
    sse = _sse(model, X, y)
    if not np.isfinite(sse):
        raise NumericalError("initial training SSE is not finite")
    mu = config.mu0

    train_trace = [sse / n]
    mu_trace = [mu]
    val_trace: list[float] = []
    best_model, best_epoch, best_val, fails = model, None, np.inf, 0
    if Xv is not None:
        best_val = _sse(model, Xv, yv) / len(val)
        val_trace.append(best_val)
        best_epoch = 0

    epochs = 0
    while True:
        if sse / n <= config.goal_mse:
            stop = StopReason.GOAL_REACHED
            break
        J = mlp_jacobian(model.theta, X, H)
        r = mlp_forward(model.theta, X, H) - y
        if np.max(np.abs(J.T @ r)) <= config.min_grad:
            stop = StopReason.GRADIENT_FLOOR
            break
        if epochs >= config.max_epochs:
            stop = StopReason.MAX_EPOCHS
            break

        step = lm_step(model, X, y, mu, config, sse=sse, jac=J)
        while not step.accepted and step.stop is None:
            step = lm_step(model, X, y, step.mu, config, sse=sse, jac=J)
        mu = step.mu
        if not step.accepted:
            stop = StopReason.MU_CEILING
            break

        model, sse = step.model, step.sse
        epochs += 1
        train_trace.append(sse / n)
        mu_trace.append(mu)

        if Xv is not None:
            v = _sse(model, Xv, yv) / len(val)
            val_trace.append(v)
            if v < best_val:
                best_model, best_epoch, best_val, fails = model, epochs, v, 0
            else:
                fails += 1
                if fails >= config.max_val_fail:
                    stop = StopReason.VALIDATION_STOP
                    model = best_model
                    break

    final_mse = _sse(model, X, y) / n
    logger.info(
        f"[LM] {target.label} seed={config.seed}: stop={stop.value} epochs={epochs} "
        f"mse={final_mse:.3e} mu={mu:.1e}"
    )
    report = TrainReport(
        epochs_run=epochs,
        train_mse=tuple(train_trace),
        val_mse=tuple(val_trace),
        mu_trace=tuple(mu_trace),
        stop_reason=stop,
        final_mu=mu,
        final_train_mse=final_mse,
        best_epoch=best_epoch,
        n_train=n,
        n_validation=len(val),
        config=config.model_dump(),
        warnings=tuple(warnings),
    )
    return model, report


def train_lm_restarts(dataset: Dataset, data_split: DataSplit, target: Target,
                      config: LmConfig, restarts: int = 1,
                      workers: int = 1) -> tuple[MlpModel, TrainReport]:
    """
    Train with seeds seed, seed+1, …; keep the lowest final training MSE
    (ties → lowest seed). Restarts may run on a thread pool; the reduction
    does not depend on completion order.
    """
    if restarts < 1:
        raise DataError(f"restarts must be ≥ 1, got {restarts}")
    configs = [config.model_copy(update={"seed": config.seed + k}) for k in range(restarts)]

    def run(cfg: LmConfig):
        try:
            return cfg.seed, train_lm(dataset, data_split, target, cfg)
        except NumericalError as e:
            logger.warning(f"[LM] restart seed={cfg.seed} failed: {e}")
            return cfg.seed, None

    if workers > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, configs))
    else:
        results = [run(cfg) for cfg in configs]

    done = [(res[1].final_train_mse, seed, res) for seed, res in results if res is not None]
    if not done:
        raise NumericalError(f"all {restarts} training restarts failed")
    _, seed, (model, report) = min(done, key=lambda t: (t[0], t[1]))
    if restarts > 1:
        logger.info(f"[LM] best of {restarts} restarts: seed={seed} "
                    f"mse={report.final_train_mse:.3e}")
    return model, report


def predict_ann(model: MlpModel, features) -> Prediction:
    x = np.asarray(features, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise NumericalError(f"non-finite feature in {tuple(x)}")
    value = float(model.predict_percent(x)[0])
    return Prediction(value, bool(model.scaler.is_extrapolated(x)))
