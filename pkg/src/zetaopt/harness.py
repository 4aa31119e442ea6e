"""Experiment orchestration: training runs, the two-optimizer comparison
protocol, and metrics CSV emission.

A run builds its dataset, splits it, optionally corrupts the training
labels, trains the MLP for the configured epochs, and records one metrics
row per optimizer step plus one test-split row per epoch.  Runs are
deterministic end to end for a fixed config: reruns produce byte-identical
CSV files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import IO

import numpy as np

from . import optim
from .config import DataSpec, ExperimentConfig
from .data import (
    Dataset,
    inject_label_noise,
    iterate_batches,
    load_csv_dataset,
    make_blobs,
    make_spirals,
    train_test_split,
)
from .nn_core import LossConfig, MlpConfig, ParamSet, entropy_regularized_loss, mlp_backward, mlp_forward, mlp_init

__all__ = [
    "MetricsRecord",
    "RunSummary",
    "ConditionComparison",
    "ComparisonSummary",
    "CSV_HEADER",
    "build_dataset",
    "run_experiment",
    "run_comparison",
    "write_metrics_csv",
    "format_summary_table",
    "write_summary_csv",
]

CSV_HEADER = (
    "run_id,optimizer,step,epoch,split,loss,accuracy,"
    "lr,s_t,zeta_s,delta_t,rho_t,boost,grad_norm,update_norm"
)


@dataclass
class MetricsRecord:
    """One telemetry row; diagnostic fields are None where inapplicable
    (Adam steps, test-split evaluations)."""

    run_id: str
    optimizer: str
    step: int
    epoch: int
    split: str
    loss: float
    accuracy: float
    lr: float | None = None
    s_t: float | None = None
    zeta_s: float | None = None
    delta_t: float | None = None
    rho_t: float | None = None
    boost: float | None = None
    grad_norm: float | None = None
    update_norm: float | None = None


@dataclass
class RunSummary:
    run_id: str
    optimizer: str
    dataset: str
    condition: str
    n_train: int
    n_test: int
    epochs: int
    steps: int
    final_test_loss: float
    final_test_accuracy: float
    majority_baseline: float
    epoch_test_loss: list[float]
    epoch_test_accuracy: list[float]
    init_checksum: str
    csv_path: str | None


@dataclass
class ConditionComparison:
    condition: str
    zeta: RunSummary
    adam: RunSummary


@dataclass
class ComparisonSummary:
    conditions: list[ConditionComparison]


def build_dataset(spec: DataSpec) -> Dataset:
    """Materialize the dataset a DataSpec describes."""
    if spec.kind == "blobs":
        return make_blobs(spec.n, spec.dim, spec.classes, spec.spread, spec.seed)
    if spec.kind == "spirals":
        return make_spirals(spec.n, spec.classes, spec.spiral_noise, spec.seed)
    if spec.kind == "csv":
        if not spec.csv_path:
            raise ValueError("csv dataset requires csv_path")
        return load_csv_dataset(
            spec.csv_path, spec.classes, spec.csv_header, spec.csv_scale
        )
    raise ValueError(f"unknown dataset kind {spec.kind!r}")


def _fmt(x: float | int | str | None) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".9g")


def _write_record(fh: IO[str], r: MetricsRecord) -> None:
    fh.write(
        ",".join(
            [
                r.run_id,
                r.optimizer,
                str(r.step),
                str(r.epoch),
                r.split,
                _fmt(r.loss),
                _fmt(r.accuracy),
                _fmt(r.lr),
                _fmt(r.s_t),
                _fmt(r.zeta_s),
                _fmt(r.delta_t),
                _fmt(r.rho_t),
                _fmt(r.boost),
                _fmt(r.grad_norm),
                _fmt(r.update_norm),
            ]
        )
        + "\n"
    )


def write_metrics_csv(records: list[MetricsRecord], path: str | Path) -> None:
    """Write the metrics CSV: fixed header, floats at 9 significant
    digits, empty cells for inapplicable fields."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            for r in records:
                _write_record(fh, r)
    except OSError as e:
        raise OSError(f"cannot write metrics CSV '{path}': {e}") from e


def _evaluate(params: ParamSet, ds: Dataset) -> tuple[float, float]:
    """Test-split metrics: plain cross-entropy (no entropy term) and accuracy."""
    logits = mlp_forward(params, ds.features)
    loss, _ = entropy_regularized_loss(logits, ds.labels, LossConfig(entropy_weight=0.0))
    acc = float((logits.argmax(axis=1) == ds.labels).mean())
    return loss, acc


def _accuracy(logits: np.ndarray, labels: np.ndarray) -> float:
    return float((logits.argmax(axis=1) == labels).mean())


def _majority_baseline(labels: np.ndarray, num_classes: int) -> float:
    counts = np.bincount(labels, minlength=num_classes)
    return float(counts.max() / len(labels))


def run_experiment(cfg: ExperimentConfig) -> tuple[list[MetricsRecord], RunSummary]:
    """Run one training experiment and return (records, summary).

    The schedule horizon is set to the run's true total step count,
    epochs * ceil(n_train / batch) (with drop_last, floor instead).
    When cfg.out_dir is set the records are also written to
    <out_dir>/<run_id>.csv.
    """
    ds = build_dataset(cfg.data)
    train, test = train_test_split(ds, cfg.data.test_fraction, cfg.data.seed + 1)
    condition = "clean"
    if cfg.data.noise_rate > 0.0:
        train, _ = inject_label_noise(
            train, cfg.data.noise_rate, cfg.data.effective_noise_seed
        )
        condition = f"noisy{round(cfg.data.noise_rate * 100):d}"

    run_id = cfg.run_id or f"{cfg.data.kind}-{condition}-{cfg.optimizer}"
    n_train = len(train)
    plan = cfg.batch_plan()
    if cfg.drop_last:
        steps_per_epoch = n_train // plan.batch_size
    else:
        steps_per_epoch = math.ceil(n_train / plan.batch_size)
    if steps_per_epoch < 1:
        raise ValueError(f"run '{run_id}': batch size {plan.batch_size} leaves no batches")
    total_steps = cfg.epochs * steps_per_epoch

    mlp_cfg = MlpConfig(
        input_dim=train.dim,
        hidden_dim=cfg.hidden_dim,
        num_classes=ds.num_classes,
        seed=cfg.seed,
    )
    params = mlp_init(mlp_cfg)
    init_checksum = params.checksum()

    use_zeta = cfg.optimizer == "zeta"
    hp = replace(cfg.zeta, total_steps=total_steps)
    zstate = optim.ZetaState.for_params(params)
    astate = optim.AdamState.for_params(params)

    records: list[MetricsRecord] = []
    epoch_test_loss: list[float] = []
    epoch_test_acc: list[float] = []
    step = 0
    try:
        for epoch in range(1, cfg.epochs + 1):
            for xb, yb in iterate_batches(train, plan, epoch):
                step += 1
                logits = mlp_forward(params, xb)
                loss, dlogits = entropy_regularized_loss(logits, yb, cfg.loss)
                acc = _accuracy(logits, yb)
                mlp_backward(params, xb, dlogits)

                if use_zeta:
                    pert, diag = optim.zeta_step_phase1(params, zstate, hp, loss)
                    if hp.sam_rho > 0.0:
                        logits_p = mlp_forward(params, xb)
                        _, dlogits_p = entropy_regularized_loss(logits_p, yb, cfg.loss)
                        mlp_backward(params, xb, dlogits_p)
                    optim.zeta_step_phase2(params, zstate, hp, pert, diag)
                    records.append(
                        MetricsRecord(
                            run_id, "zeta", step, epoch, "train", loss, acc,
                            lr=diag.eta_t, s_t=diag.s_t, zeta_s=diag.zeta_s,
                            delta_t=diag.delta_t, rho_t=diag.rho_t,
                            boost=diag.boost, grad_norm=diag.grad_norm,
                            update_norm=diag.update_norm,
                        )
                    )
                else:
                    gnorm = optim.global_grad_norm(params)
                    before = params.flat_values()
                    optim.adam_step(params, astate, cfg.adam)
                    unorm = float(np.linalg.norm(params.flat_values() - before))
                    records.append(
                        MetricsRecord(
                            run_id, "adam", step, epoch, "train", loss, acc,
                            lr=cfg.adam.eta, grad_norm=gnorm, update_norm=unorm,
                        )
                    )

            test_loss, test_acc = _evaluate(params, test)
            epoch_test_loss.append(test_loss)
            epoch_test_acc.append(test_acc)
            records.append(
                MetricsRecord(
                    run_id, cfg.optimizer, step, epoch, "test", test_loss, test_acc
                )
            )
    except (ValueError, RuntimeError) as e:
        raise RuntimeError(f"run '{run_id}' failed at step {step}: {e}") from e

    csv_path = None
    if cfg.out_dir is not None:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = str(out / f"{run_id}.csv")
        write_metrics_csv(records, csv_path)

    summary = RunSummary(
        run_id=run_id,
        optimizer=cfg.optimizer,
        dataset=ds.name,
        condition=condition,
        n_train=n_train,
        n_test=len(test),
        epochs=cfg.epochs,
        steps=step,
        final_test_loss=epoch_test_loss[-1],
        final_test_accuracy=epoch_test_acc[-1],
        majority_baseline=_majority_baseline(test.labels, ds.num_classes),
        epoch_test_loss=epoch_test_loss,
        epoch_test_accuracy=epoch_test_acc,
        init_checksum=init_checksum,
        csv_path=csv_path,
    )
    return records, summary


def run_comparison(
    cfg: ExperimentConfig, noise_rates: tuple[float, ...] | None = None
) -> ComparisonSummary:
    """Run the zeta-vs-Adam protocol on each noise condition.

    Both optimizers see the same dataset, split, noisy labels, and
    initial parameters (same seed; verified by checksum).  Per-run CSVs
    are written when cfg.out_dir is set; summary artifacts are left to
    the report layer.
    """
    rates = cfg.noise_rates if noise_rates is None else tuple(noise_rates)
    conditions: list[ConditionComparison] = []
    for rate in rates:
        per_opt: dict[str, RunSummary] = {}
        for name in ("zeta", "adam"):
            run_cfg = replace(
                cfg,
                optimizer=name,
                data=replace(cfg.data, noise_rate=rate),
                run_id=None,
            )
            _, summary = run_experiment(run_cfg)
            per_opt[name] = summary
        if per_opt["zeta"].init_checksum != per_opt["adam"].init_checksum:
            raise RuntimeError(
                "comparison runs started from different parameters; "
                "checksums differ"
            )
        conditions.append(
            ConditionComparison(
                condition=per_opt["zeta"].condition,
                zeta=per_opt["zeta"],
                adam=per_opt["adam"],
            )
        )
    return ComparisonSummary(conditions=conditions)


def format_summary_table(summary: ComparisonSummary) -> str:
    """Fixed-width side-by-side table of final test metrics."""
    lines = [
        f"{'condition':<12} {'optimizer':<10} {'test_acc':>9} {'test_loss':>10} "
        f"{'baseline':>9} {'steps':>6}"
    ]
    for cond in summary.conditions:
        for run in (cond.zeta, cond.adam):
            lines.append(
                f"{cond.condition:<12} {run.optimizer:<10} "
                f"{run.final_test_accuracy:>9.4f} {run.final_test_loss:>10.4f} "
                f"{run.majority_baseline:>9.4f} {run.steps:>6d}"
            )
    return "\n".join(lines)


def write_summary_csv(summary: ComparisonSummary, path: str | Path) -> None:
    """Delimited comparison summary, one row per (condition, optimizer)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            "condition,optimizer,final_test_accuracy,final_test_loss,"
            "majority_baseline,n_train,n_test,steps\n"
        )
        for cond in summary.conditions:
            for run in (cond.zeta, cond.adam):
                fh.write(
                    ",".join(
                        [
                            cond.condition,
                            run.optimizer,
                            _fmt(run.final_test_accuracy),
                            _fmt(run.final_test_loss),
                            _fmt(run.majority_baseline),
                            str(run.n_train),
                            str(run.n_test),
                            str(run.steps),
                        ]
                    )
                    + "\n"
                )
