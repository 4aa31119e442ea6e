"""Command-line interface.

Subcommands:
  run       train one experiment from a config file
  compare   zeta-vs-Adam protocol with CSV + SVG + curve reports
  zeta-eval print zeta(s) for inspection
  selftest  quick invariant suite, one ok/FAIL line per check
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import optim
from .config import (
    ConfigError,
    build_experiment_config,
    default_compare_config,
    load_config_file,
)
from .data import inject_label_noise, make_blobs
from .harness import (
    format_summary_table,
    run_comparison,
    run_experiment,
    write_summary_csv,
)
from .nn_core import (
    LossConfig,
    MlpConfig,
    ParamEntry,
    ParamSet,
    entropy_regularized_loss,
    finite_diff_check,
    mlp_backward,
    mlp_forward,
    mlp_init,
    softmax,
)
from .zeta_special import zeta

__all__ = ["cli_main", "main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zetaopt",
        description="Zeta-scaled optimizer benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="train one experiment from a config file")
    p_run.add_argument("--config", required=True, help="path to a key-value config file")
    p_run.add_argument("--out", default=None, help="output directory (default: runs)")
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="run the zeta-vs-adam comparison")
    p_cmp.add_argument(
        "--config",
        default=None,
        help="path to a key-value config file (default: built-in blobs comparison)",
    )
    p_cmp.add_argument("--out", default=None, help="output directory (default: runs)")
    p_cmp.set_defaults(func=_cmd_compare)

    p_zeta = sub.add_parser("zeta-eval", help="evaluate the Riemann zeta function")
    p_zeta.add_argument("--s", type=float, required=True, help="argument, must be > 1")
    p_zeta.set_defaults(func=_cmd_zeta_eval)

    p_self = sub.add_parser("selftest", help="run the quick invariant suite")
    p_self.set_defaults(func=_cmd_selftest)
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    kv = load_config_file(args.config)
    cfg = build_experiment_config(kv, out_dir=args.out, seed=args.seed)
    if cfg.out_dir is None:
        cfg = replace(cfg, out_dir="runs")
    records, summary = run_experiment(cfg)

    from .report import render_run_curves

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    curves = out / f"{summary.run_id}_curves.png"
    render_run_curves(records, summary, curves)
    print(f"run {summary.run_id}: {summary.steps} steps on {summary.dataset}")
    print(
        f"final test accuracy {summary.final_test_accuracy:.4f}, "
        f"test loss {summary.final_test_loss:.4f} "
        f"(majority baseline {summary.majority_baseline:.4f})"
    )
    print(f"metrics: {summary.csv_path}")
    print(f"figure:  {curves}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    if args.config is not None:
        kv = load_config_file(args.config)
        cfg = build_experiment_config(kv, out_dir=args.out)
    else:
        cfg = default_compare_config()
        if args.out is not None:
            cfg = replace(cfg, out_dir=args.out)
    if cfg.out_dir is None:
        cfg = replace(cfg, out_dir="runs")

    summary = run_comparison(cfg)

    from .report import render_comparison_curves, render_summary_svg

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    svg = out / "summary.svg"
    curves = out / "curves.png"
    table_csv = out / "summary.csv"
    render_summary_svg(summary, svg)
    render_comparison_curves(summary, curves)
    write_summary_csv(summary, table_csv)
    print(format_summary_table(summary))
    print(f"summary: {table_csv}")
    print(f"figure:  {svg}")
    print(f"curves:  {curves}")
    return 0


def _cmd_zeta_eval(args: argparse.Namespace) -> int:
    print(f"{zeta(args.s):.9f}")
    return 0


def _zeta_bracket(s: float, rel_halfwidth: float = 4.5e-10) -> tuple[float, float]:
    """Partial sum plus integral tail bounds; independent spot oracle.

    The term count is sized so the bracket half-width stays below
    rel_halfwidth relative to zeta(s).
    """
    zeta_lb = max(1.0, 1.0 / (s - 1.0))
    n_terms = max(10, int(math.ceil((2.0 * rel_halfwidth * zeta_lb) ** (-1.0 / s))))
    ns = np.arange(1, n_terms + 1, dtype=np.float64)
    partial = float(np.sum(ns**-s))
    lo = partial + (n_terms + 1.0) ** (1.0 - s) / (s - 1.0)
    hi = partial + n_terms ** (1.0 - s) / (s - 1.0)
    return lo, hi


def _selftest_checks() -> list[tuple[str, bool, str]]:
    results: list[tuple[str, bool, str]] = []

    def check(name: str, ok: bool, detail: str = "") -> None:
        results.append((name, ok, detail))

    v = zeta(2.0)
    check("zeta(2) = pi^2/6", abs(v - math.pi**2 / 6.0) < 1e-10, f"{v!r}")
    check("zeta(1.5) ~ 2.612", abs(zeta(1.5) - 2.612) < 5e-4, f"{zeta(1.5)!r}")
    ok = True
    for s in (1.8, 2.2, 2.9, 3.5):
        lo, hi = _zeta_bracket(s)
        mid = 0.5 * (lo + hi)
        ok = ok and abs(zeta(s) - mid) / mid < 1e-9 and lo <= zeta(s) <= hi
    check("zeta bracket oracle", ok)

    hp = optim.ZetaHyperParams(total_steps=100)
    check(
        "s-schedule endpoints",
        optim.s_schedule(0, hp) == hp.s_min
        and optim.s_schedule(50, hp) == hp.s_max
        and optim.s_schedule(25, hp) == (hp.s_min + hp.s_max) / 2.0,
    )
    check(
        "lr-schedule endpoints",
        optim.lr_schedule(0, hp) == hp.eta * (1.0 - hp.weight_decay * hp.eta)
        and optim.lr_schedule(100, hp) == 0.0,
    )

    p = softmax(np.random.default_rng(0).uniform(-50, 50, size=(16, 9)))
    check("softmax rows sum to 1", bool(np.abs(p.sum(axis=1) - 1.0).max() < 1e-12))

    params = mlp_init(MlpConfig(5, 4, 3, seed=11))
    x = np.random.default_rng(1).standard_normal((6, 5))
    y = np.random.default_rng(2).integers(0, 3, size=6)
    lcfg = LossConfig()
    _, dlg = entropy_regularized_loss(mlp_forward(params, x), y, lcfg)
    mlp_backward(params, x, dlg)
    err = finite_diff_check(
        params,
        lambda ps: entropy_regularized_loss(mlp_forward(ps, x), y, lcfg)[0],
        1e-5,
    )
    check("mlp gradient check", err <= 1e-6, f"max rel err {err:.2e}")

    check("adam equivalence", _adam_equivalence_gap(steps=50) <= 1e-12)

    ds = make_blobs(2000, 8, 5, 1.0, seed=3)
    noisy, flipped = inject_label_noise(ds, 0.1, seed=4)
    frac = len(flipped) / len(ds)
    ok = abs(frac - 0.1) < 3.0 * math.sqrt(0.1 * 0.9 / len(ds))
    ok = ok and bool((noisy.labels[flipped] != ds.labels[flipped]).all())
    check("label noise stats", ok, f"flipped fraction {frac:.3f}")

    a = make_blobs(100, 6, 3, 0.5, seed=9)
    b = make_blobs(100, 6, 3, 0.5, seed=9)
    check(
        "blob determinism",
        bool((a.features == b.features).all() and (a.labels == b.labels).all()),
    )
    return results


def _adam_equivalence_gap(steps: int) -> float:
    """Max per-coordinate gap between the hybrid optimizer in its Adam
    corner (mix 1, SAM/damping/decay off, huge horizon for a flat LR)
    and the reference Adam on a shared logistic-regression problem."""
    rng = np.random.default_rng(5)
    n, d = 40, 8
    x = rng.standard_normal((n, d))
    w_true = rng.standard_normal(d)
    y = (x @ w_true > 0).astype(np.float64)

    def make_params() -> ParamSet:
        w = np.zeros((1, d))
        return ParamSet([ParamEntry("w", w.copy(), np.zeros_like(w), False)])

    def grad_loss(ps: ParamSet) -> float:
        w = ps["w"].value.ravel()
        z = x @ w
        p = 1.0 / (1.0 + np.exp(-z))
        ps["w"].grad[:] = ((p - y) @ x / n)[None, :]
        eps = 1e-12
        return float(-np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)))

    hp_z = optim.ZetaHyperParams(
        eta=0.001,
        clip_bound=math.inf,
        base_damp=0.0,
        adam_mix=1.0,
        total_steps=10**9,
        weight_decay=0.0,
        sam_rho=0.0,
    )
    hp_a = optim.AdamHyperParams(eta=0.001)
    pz, pa = make_params(), make_params()
    sz = optim.ZetaState.for_params(pz)
    sa = optim.AdamState.for_params(pa)
    gap = 0.0
    for _ in range(steps):
        loss = grad_loss(pz)
        pert, diag = optim.zeta_step_phase1(pz, sz, hp_z, loss)
        optim.zeta_step_phase2(pz, sz, hp_z, pert, diag)
        grad_loss(pa)
        optim.adam_step(pa, sa, hp_a)
        gap = max(gap, float(np.abs(pz["w"].value - pa["w"].value).max()))
    return gap


def _cmd_selftest(args: argparse.Namespace) -> int:
    results = _selftest_checks()
    failed = 0
    for name, ok, detail in results:
        tag = "ok  " if ok else "FAIL"
        suffix = f"  ({detail})" if detail else ""
        print(f"{tag} - {name}{suffix}")
        if not ok:
            failed += 1
    if failed:
        print(f"{failed} of {len(results)} checks failed", file=sys.stderr)
        return 1
    print(f"all {len(results)} checks passed")
    return 0


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
