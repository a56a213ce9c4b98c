"""Online linear regression harness with absolute loss.

Per round the engine predicts yhat = <w_t, x_t>, pays |yhat - y_t|, and
the loss subgradient sgn(yhat - y_t) * x_t is linearized into each
engine using that engine's own sign convention: the coin-betting family
and OGD maximize reward and receive the negated subgradient; the
dimension-free-exponentiated-gradient and AdaNormal baselines follow
their listings and receive the raw loss gradient.

Each runner owns its auxiliary binary stream: the symbol revealed at the
end of round t is the quantized gradient actually fed to that engine,
and the side-information state for round t is derived from the symbols
of earlier rounds only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from betolo.ctw import CtwComponent, CtwOlo
from betolo.mixture import AdditionCombiner, MixtureOlo
from betolo.olo_engines import KtOlo
from betolo.per_state import (
    PerStateAdanormal,
    PerStateDfeg,
    PerStateOgd,
    ProductKtState,
    product_kt_action,
    product_kt_update,
)
from betolo.side_information import (
    BinaryQuantizer,
    SuffixTree,
    markov_context,
    match_suffix,
    quantize,
)

__all__ = [
    "ConfigError",
    "DataError",
    "RegressionExample",
    "PreprocessSpec",
    "ExperimentConfig",
    "ExperimentResult",
    "ALGORITHMS",
    "DEFAULT_ETA_GRID",
    "absolute_loss_subgradient",
    "preprocess",
    "synthesize_sequence",
    "synthesize_regression",
    "run_experiment",
]


class ConfigError(ValueError):
    """Invalid experiment configuration (wrong key, value, or range)."""


class DataError(ValueError):
    """Invalid input data (unparseable, inconsistent, or out of domain)."""


@dataclass(frozen=True)
class RegressionExample:
    """One regression round: unit-norm features plus a real target."""

    features: np.ndarray
    target: float

    def __post_init__(self) -> None:
        norm = float(np.linalg.norm(self.features))
        if abs(norm - 1.0) > 1e-9:
            raise DataError(f"feature norm {norm!r} is not 1 after preprocessing")


def absolute_loss_subgradient(
    w: Sequence[float], x: Sequence[float], y: float
) -> np.ndarray:
    """Loss subgradient sgn(<w, x> - y) * x, with sgn(0) = +1."""
    x = np.asarray(x, dtype=float)
    sign = 1.0 if float(np.dot(w, x)) - y >= 0.0 else -1.0
    return sign * x


@dataclass(frozen=True)
class PreprocessSpec:
    """Column treatment for a raw numeric table.

    Indices refer to the raw table's columns.  The target column is
    excluded from the features automatically; dropped columns are
    removed before any other step.
    """

    target_column: int
    drop_columns: Tuple[int, ...] = ()
    log1p_columns: Tuple[int, ...] = ()
    log_columns: Tuple[int, ...] = ()


def _interpolate_column(values: List[Optional[float]], label: str) -> np.ndarray:
    present = [(i, v) for i, v in enumerate(values) if v is not None]
    if not present:
        raise DataError(f"column {label} has no values at all")
    if len(present) == len(values):
        return np.array([v for _, v in present])
    idx = np.array([i for i, _ in present], dtype=float)
    vals = np.array([v for _, v in present])
    return np.interp(np.arange(len(values), dtype=float), idx, vals)


def preprocess(
    rows: Sequence[Sequence[Optional[float]]], spec: PreprocessSpec
) -> List[RegressionExample]:
    """Raw table -> unit-norm examples.

    Pipeline: drop declared columns, linearly interpolate missing values
    per column, apply the declared logarithmic maps, normalize each
    feature row to unit norm, append the all-one bias coordinate, and
    scale by 1/sqrt(2).  A row whose features are all zero becomes the
    pure-bias vector (0, ..., 0, 1).
    """
    if not rows:
        raise DataError("empty table")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"row {i} has {len(row)} cells, expected {width}")
    target_col = spec.target_column % width
    if target_col in spec.drop_columns:
        raise ConfigError("target column cannot be dropped")
    feature_cols = [
        c for c in range(width) if c != target_col and c not in spec.drop_columns
    ]
    for c in spec.log1p_columns + spec.log_columns:
        if c not in feature_cols:
            raise ConfigError(f"mapped column {c} is not a feature column")

    columns = {
        c: _interpolate_column([row[c] for row in rows], str(c))
        for c in feature_cols + [target_col]
    }
    for c in spec.log1p_columns:
        vals = columns[c]
        if np.any(vals <= -1.0):
            bad = int(np.argmax(vals <= -1.0))
            raise DataError(
                f"ln(1+x) map on value {vals[bad]!r} <= -1 at row {bad}, column {c}"
            )
        columns[c] = np.log1p(vals)
    for c in spec.log_columns:
        vals = columns[c]
        if np.any(vals <= 0.0):
            bad = int(np.argmax(vals <= 0.0))
            raise DataError(
                f"ln x map on nonpositive value {vals[bad]!r} at row {bad}, column {c}"
            )
        columns[c] = np.log(vals)

    examples = []
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for i in range(len(rows)):
        feats = np.array([columns[c][i] for c in feature_cols])
        norm = float(np.linalg.norm(feats))
        if norm == 0.0:
            vec = np.zeros(len(feature_cols) + 1)
            vec[-1] = 1.0
        else:
            vec = np.append(feats / norm, 1.0) * inv_sqrt2
        examples.append(RegressionExample(vec, float(columns[target_col][i])))
    return examples


def _unit(base: Sequence[float]) -> np.ndarray:
    g = np.asarray(base, dtype=float)
    if float(np.linalg.norm(g)) > 1.0 + 1e-12:
        raise ConfigError(f"base gradient norm {float(np.linalg.norm(g))!r} > 1")
    return g


def synthesize_sequence(
    kind: str,
    rounds: int,
    seed: int,
    dim: int = 2,
    base: Optional[Sequence[float]] = None,
    start_sign: int = 1,
    order: int = 2,
    flip_prob: float = 0.1,
    tree: Optional[SuffixTree] = None,
    leaf_probs: Optional[Dict[str, float]] = None,
) -> List[np.ndarray]:
    """Reproducible unit-ball gradient streams of several structures.

    alternating: base, -base, base, ... (times start_sign).
    markov: sign chain with s_t = -s_{t-order}, each step flipped with
        probability flip_prob (pure order-k dependence, no shorter-order
        signal).
    tree: sign drawn from the leaf-conditional head probability of the
        suffix tree matched against the signs of the previous rounds
        (+1 padding).
    iid: uniform draws from the unit ball.
    """
    if rounds < 0:
        raise ConfigError("rounds must be nonnegative")
    rng = np.random.default_rng(seed)
    if base is None:
        b = np.zeros(dim)
        b[0] = 1.0
    else:
        b = _unit(base)

    if kind == "alternating":
        if start_sign not in (1, -1):
            raise ConfigError("start_sign must be +1 or -1")
        return [float(start_sign) * ((-1.0) ** t) * b for t in range(rounds)]
    if kind == "iid":
        out = []
        for _ in range(rounds):
            v = rng.standard_normal(dim)
            v /= np.linalg.norm(v)
            out.append(v * rng.uniform() ** (1.0 / dim))
        return out
    if kind == "markov":
        if order < 1:
            raise ConfigError("order must be >= 1")
        signs: List[int] = []
        for t in range(rounds):
            desired = 1 if t < order else -signs[t - order]
            if rng.uniform() < flip_prob:
                desired = -desired
            signs.append(desired)
        return [s * b for s in signs]
    if kind == "tree":
        if tree is None or leaf_probs is None:
            raise ConfigError("tree kind needs a suffix tree and leaf head-probabilities")
        missing = set(tree.leaves) - set(leaf_probs)
        if missing:
            raise ConfigError(f"leaf_probs missing entries for {sorted(missing)}")
        omega: List[int] = []
        out = []
        for t in range(1, rounds + 1):
            ctx = markov_context(omega, t, tree.depth)
            p_head = leaf_probs[match_suffix(tree, ctx)]
            s = 1 if rng.uniform() < p_head else -1
            out.append(s * b)
            omega.append(s)
        return out
    raise ConfigError(f"unknown sequence kind {kind!r}")


def synthesize_regression(
    kind: str, rounds: int, seed: int, noise_scale: float = 0.35, flip_prob: float = 0.1
) -> List[RegressionExample]:
    """Synthetic regression streams.

    markov2: the target sign follows s_t = -s_{t-2} with flips; features
        are the unit-normalized (1, noise, noise), so the first
        coordinate always carries the target's sign through the loss
        gradient.  No shorter-order signal exists: depth-1 contexts are
        uninformative by symmetry.
    iid: unit features with a fixed hidden linear model plus noise.
    """
    rng = np.random.default_rng(seed)
    if kind == "markov2":
        signs: List[int] = []
        examples = []
        for t in range(rounds):
            desired = 1 if t < 2 else -signs[t - 2]
            if rng.uniform() < flip_prob:
                desired = -desired
            signs.append(desired)
            raw = np.concatenate(([1.0], rng.normal(0.0, noise_scale, size=2)))
            raw /= np.linalg.norm(raw)
            examples.append(RegressionExample(raw, float(desired)))
        return examples
    if kind == "iid":
        hidden = np.array([0.8, -0.4, 0.4, 0.2])
        examples = []
        for _ in range(rounds):
            v = rng.standard_normal(4)
            v /= np.linalg.norm(v)
            y = float(np.dot(hidden, v)) + 0.1 * float(rng.standard_normal())
            examples.append(RegressionExample(v, y))
        return examples
    raise ConfigError(f"unknown synthetic regression kind {kind!r}")


ALGORITHMS = (
    "kt",
    "per_state_kt",
    "ctw",
    "ctw_mixture",
    "ctw_addition",
    "ogd",
    "dfeg",
    "adanormal",
)

DEFAULT_ETA_GRID = (0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0)


@dataclass
class ExperimentConfig:
    """One experiment: algorithm + data + side-information wiring."""

    algorithm: str
    data: str
    rounds: int
    seed: int
    config_id: str = ""
    depth: int = 1
    quantizer_axes: Tuple[int, ...] = (0,)
    initial_wealth: float = 1.0
    eta: Optional[float] = None
    eta_grid: Optional[Tuple[float, ...]] = None
    lipschitz: float = 1.0
    dfeg_delta: float = 1.0
    dfeg_a: float = 1.0
    adanormal_a: Optional[float] = None
    adanormal_eps: float = 1.0
    preprocess_spec: Optional[PreprocessSpec] = None

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(
                f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}"
            )
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if self.depth < 0:
            raise ConfigError("depth must be >= 0")
        if not self.initial_wealth > 0:
            raise ConfigError("initial_wealth must be positive")
        if not self.quantizer_axes:
            raise ConfigError("at least one quantizer axis is required")
        if not self.config_id:
            self.config_id = f"{self.algorithm}_d{self.depth}"


@dataclass
class ExperimentResult:
    """Per-round trace plus summary values of one experiment run."""

    config_id: str
    algorithm: str
    rows: List[Tuple[int, float, float]]  # (round, cum_loss, wealth)
    final_loss: float
    extras: Dict[str, float] = field(default_factory=dict)


class _AuxStream:
    """Auxiliary symbol log of one quantizer axis over fed gradients."""

    def __init__(self, axis: int, depth: int):
        self.quantizer = BinaryQuantizer(axis_index=axis)
        self.depth = depth
        self.omega: List[int] = []

    def context(self) -> str:
        return markov_context(self.omega, len(self.omega) + 1, self.depth)

    def push(self, fed_gradient: np.ndarray) -> int:
        symbol = quantize(self.quantizer, fed_gradient)
        self.omega.append(symbol)
        return symbol


class _KtRunner:
    def __init__(self, config: ExperimentConfig, dim: int):
        self.engine = KtOlo(dim=dim, initial_wealth=config.initial_wealth)

    @property
    def wealth(self) -> float:
        return self.engine.wealth

    def predict(self) -> np.ndarray:
        return self.engine.action()

    def learn(self, loss_gradient: np.ndarray) -> None:
        self.engine.update(-loss_gradient)


class _PerStateKtRunner:
    def __init__(self, config: ExperimentConfig, dim: int):
        self.state = ProductKtState(dim, initial_wealth=config.initial_wealth)
        self.aux = _AuxStream(config.quantizer_axes[0], config.depth)

    @property
    def wealth(self) -> float:
        return self.state.ledger.current_wealth

    def predict(self) -> np.ndarray:
        return product_kt_action(self.state, self.aux.context())

    def learn(self, loss_gradient: np.ndarray) -> None:
        g = -loss_gradient
        product_kt_update(self.state, self.aux.context(), g)
        self.aux.push(g)


class _CtwRunner:
    def __init__(self, config: ExperimentConfig, dim: int, axis: Optional[int] = None):
        self.engine = CtwOlo(
            depth=config.depth, dim=dim, initial_wealth=config.initial_wealth
        )
        self.aux = _AuxStream(
            config.quantizer_axes[0] if axis is None else axis, config.depth
        )

    @property
    def wealth(self) -> float:
        return self.engine.wealth

    def predict(self) -> np.ndarray:
        return self.engine.action(self.aux.context())

    def learn(self, loss_gradient: np.ndarray) -> None:
        g = -loss_gradient
        ctx = self.aux.context()
        symbol = self.aux.push(g)
        self.engine.update(ctx, g, omega_t=symbol)

    # No-argument engine protocol for the addition combiner.
    def action(self) -> np.ndarray:
        return self.predict()

    def update(self, g: np.ndarray) -> None:
        self.learn(-np.asarray(g, dtype=float))


class _CtwMixtureRunner:
    def __init__(self, config: ExperimentConfig, dim: int):
        components = [
            CtwComponent(depth=config.depth, dim=dim) for _ in config.quantizer_axes
        ]
        self.mixture = MixtureOlo(
            components, initial_wealth=config.initial_wealth
        )
        self.auxes = [_AuxStream(a, config.depth) for a in config.quantizer_axes]

    @property
    def wealth(self) -> float:
        return self.mixture.wealth

    def predict(self) -> np.ndarray:
        return self.mixture.action([aux.context() for aux in self.auxes])

    def learn(self, loss_gradient: np.ndarray) -> None:
        g = -loss_gradient
        self.mixture.update([aux.context() for aux in self.auxes], g)
        for aux in self.auxes:
            aux.push(g)


class _CtwAdditionRunner:
    def __init__(self, config: ExperimentConfig, dim: int):
        per_axis_wealth = config.initial_wealth / len(config.quantizer_axes)
        sub = []
        for axis in config.quantizer_axes:
            sub_config = ExperimentConfig(
                algorithm="ctw",
                data=config.data,
                rounds=config.rounds,
                seed=config.seed,
                depth=config.depth,
                quantizer_axes=(axis,),
                initial_wealth=per_axis_wealth,
            )
            sub.append(_CtwRunner(sub_config, dim, axis=axis))
        self.combiner = AdditionCombiner(sub)

    @property
    def wealth(self) -> float:
        return self.combiner.wealth

    def predict(self) -> np.ndarray:
        return self.combiner.action()

    def learn(self, loss_gradient: np.ndarray) -> None:
        self.combiner.update(-loss_gradient)


class _OgdRunner:
    def __init__(self, config: ExperimentConfig, dim: int, eta: float):
        self.engine = PerStateOgd(eta, dim, initial_wealth=config.initial_wealth)
        self.aux = _AuxStream(config.quantizer_axes[0], config.depth)

    @property
    def wealth(self) -> float:
        return self.engine.wealth

    def predict(self) -> np.ndarray:
        return self.engine.action(self.aux.context())

    def learn(self, loss_gradient: np.ndarray) -> None:
        g = -loss_gradient
        self.engine.update(self.aux.context(), g)
        self.aux.push(g)


class _DfegRunner:
    def __init__(self, config: ExperimentConfig, dim: int):
        self.engine = PerStateDfeg(
            config.lipschitz,
            config.dfeg_delta,
            config.dfeg_a,
            dim,
            initial_wealth=config.initial_wealth,
        )
        self.aux = _AuxStream(config.quantizer_axes[0], config.depth)
        self._x_norm = 1.0

    @property
    def wealth(self) -> float:
        return self.engine.wealth

    def observe_features(self, x: np.ndarray) -> None:
        self._x_norm = float(np.linalg.norm(x))

    def predict(self) -> np.ndarray:
        return self.engine.begin_round(self.aux.context(), self._x_norm)

    def learn(self, loss_gradient: np.ndarray) -> None:
        self.engine.finish_round(loss_gradient)
        self.aux.push(loss_gradient)


class _AdanormalRunner:
    def __init__(self, config: ExperimentConfig, dim: int):
        L = config.lipschitz
        a = config.adanormal_a
        if a is None:
            a = 3.0 * L * L * math.pi / 4.0
        self.engine = PerStateAdanormal(
            L, a, config.adanormal_eps, dim, initial_wealth=config.initial_wealth
        )
        self.aux = _AuxStream(config.quantizer_axes[0], config.depth)

    @property
    def wealth(self) -> float:
        return self.engine.wealth

    def predict(self) -> np.ndarray:
        return self.engine.action(self.aux.context())

    def learn(self, loss_gradient: np.ndarray) -> None:
        self.engine.update(self.aux.context(), loss_gradient)
        self.aux.push(loss_gradient)


def _load_examples(config: ExperimentConfig) -> List[RegressionExample]:
    source, _, detail = config.data.partition(":")
    if source == "synthetic":
        if not detail:
            raise ConfigError("synthetic data needs a kind, e.g. synthetic:markov2")
        return synthesize_regression(detail, config.rounds, config.seed)
    if source == "csv":
        if not detail:
            raise ConfigError("csv data needs a path, e.g. csv:/path/to/file.csv")
        if config.preprocess_spec is None:
            raise ConfigError("csv data needs a preprocess spec (target column etc.)")
        rows = _read_csv_table(detail)
        examples = preprocess(rows, config.preprocess_spec)
        if len(examples) < config.rounds:
            raise DataError(
                f"table has {len(examples)} usable rows, config asks for "
                f"{config.rounds}"
            )
        return examples[: config.rounds]
    raise ConfigError(f"unknown data source {config.data!r}")


def _read_csv_table(path: str) -> List[List[Optional[float]]]:
    import csv as _csv

    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with handle:
        reader = _csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        rows: List[List[Optional[float]]] = []
        for lineno, row in enumerate(reader, start=2):
            parsed: List[Optional[float]] = []
            for col, cell in enumerate(row):
                cell = cell.strip()
                if cell == "":
                    parsed.append(None)
                    continue
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}:{lineno}: non-numeric cell {cell!r} in column "
                        f"{header[col] if col < len(header) else col}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path} has a header but no data rows")
    return rows


def _make_runner(config: ExperimentConfig, dim: int, eta: Optional[float] = None):
    for axis in config.quantizer_axes:
        if axis >= dim:
            raise ConfigError(
                f"quantizer axis {axis} out of range for feature dimension {dim}"
            )
    try:
        if config.algorithm == "kt":
            return _KtRunner(config, dim)
        if config.algorithm == "per_state_kt":
            return _PerStateKtRunner(config, dim)
        if config.algorithm == "ctw":
            return _CtwRunner(config, dim)
        if config.algorithm == "ctw_mixture":
            return _CtwMixtureRunner(config, dim)
        if config.algorithm == "ctw_addition":
            return _CtwAdditionRunner(config, dim)
        if config.algorithm == "ogd":
            return _OgdRunner(config, dim, eta if eta is not None else 1.0)
        if config.algorithm == "dfeg":
            return _DfegRunner(config, dim)
        if config.algorithm == "adanormal":
            return _AdanormalRunner(config, dim)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown algorithm {config.algorithm!r}")


def _run_single(
    config: ExperimentConfig,
    examples: List[RegressionExample],
    eta: Optional[float] = None,
) -> ExperimentResult:
    dim = examples[0].features.shape[0]
    runner = _make_runner(config, dim, eta=eta)
    rows: List[Tuple[int, float, float]] = []
    cum_loss = 0.0
    for t, example in enumerate(examples, start=1):
        x, y = example.features, example.target
        if isinstance(runner, _DfegRunner):
            runner.observe_features(x)
        w = runner.predict()
        yhat = float(np.dot(w, x))
        cum_loss += abs(yhat - y)
        runner.learn(absolute_loss_subgradient(w, x, y))
        rows.append((t, cum_loss, runner.wealth))
    return ExperimentResult(
        config_id=config.config_id,
        algorithm=config.algorithm,
        rows=rows,
        final_loss=cum_loss,
    )


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run one experiment; for OGD without a fixed step scale, sweep the
    grid and report the best final cumulative loss (the tuning protocol
    all OGD baselines use)."""
    examples = _load_examples(config)
    if config.algorithm == "ogd" and config.eta is None:
        grid = config.eta_grid if config.eta_grid is not None else DEFAULT_ETA_GRID
        best: Optional[ExperimentResult] = None
        best_eta = None
        for eta in grid:
            result = _run_single(config, examples, eta=eta)
            if best is None or result.final_loss < best.final_loss:
                best, best_eta = result, eta
        assert best is not None and best_eta is not None
        best.extras["eta"] = float(best_eta)
        return best
    eta = config.eta
    result = _run_single(config, examples, eta=eta)
    if eta is not None:
        result.extras["eta"] = float(eta)
    return result
