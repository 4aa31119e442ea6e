"""Zeta-scaled hybrid optimizer and the reference Adam baseline.

One optimizer step runs in two phases.  Phase 1 preprocesses the clean
gradient (clip, centralize), derives the step scalars (zeta exponent and
value, adaptive damping, cosine boost), builds a provisional update from
copy-on-write moments, and nudges the parameters along that update's unit
direction.  The caller then re-evaluates the gradient at the perturbed
point and phase 2 restores the original parameters, commits the moment
update from the perturbed gradient, and descends with the cosine-annealed
learning rate.  With sam_rho = 0 phase 2 may run immediately and the pair
collapses exactly to a single-pass step.

Scalar conventions, fixed here and relied on by the tests:
  - the gradient norm is one global L2 norm over all parameters, taken
    after clipping and before centralization; it feeds the norm EMA, the
    cosine similarity, and the zeta-branch denominator in both phases;
  - phase 2 reuses phase 1's s_t, zeta(s_t), delta_t, boost and grad norm;
  - the previous-gradient snapshot for the next step's cosine similarity
    is the clean gradient after clipping and centralization;
  - moments are committed once per step, in phase 2;
  - steps are 1-indexed, matching the bias corrections and the 1/(1-0.9^t)
    factor in the damping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .nn_core import ParamSet
from .zeta_special import zeta

__all__ = [
    "ZetaHyperParams",
    "AdamHyperParams",
    "ZetaState",
    "AdamState",
    "StepDiagnostics",
    "s_schedule",
    "lr_schedule",
    "clip_gradients",
    "centralize_gradients",
    "global_grad_norm",
    "cosine_boost",
    "update_damping",
    "zeta_step_phase1",
    "zeta_step_phase2",
    "adam_step",
]


@dataclass(frozen=True)
class ZetaHyperParams:
    """All tunable constants of the zeta optimizer.

    eta and the beta/epsilon trio follow Adam conventions; s_min/s_max
    bound the triangular zeta-exponent schedule; clip_bound clamps
    gradient entries elementwise; base_damp scales the adaptive damping;
    adam_mix blends the Adam and zeta update branches; total_steps is the
    schedule horizon; sam_rho is the perturbation radius (0 disables the
    two-pass protocol).
    """

    eta: float = 0.0015
    s_min: float = 1.1
    s_max: float = 2.0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_bound: float = 1.0
    base_damp: float = 0.1
    adam_mix: float = 0.5
    total_steps: int = 1000
    weight_decay: float = 0.01
    sam_rho: float = 0.05

    def __post_init__(self) -> None:
        if not (1.0 < self.s_min <= self.s_max <= 2.0):
            raise ValueError(
                f"need 1 < s_min <= s_max <= 2, got [{self.s_min}, {self.s_max}]"
            )
        if self.total_steps < 1:
            raise ValueError("total_steps must be >= 1")
        if not (self.epsilon > 0.0):
            raise ValueError("epsilon must be > 0")
        if not (self.clip_bound > 0.0):
            raise ValueError("clip_bound must be > 0")
        if not (self.eta > 0.0):
            raise ValueError("eta must be > 0")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if not (0.0 <= b < 1.0):
                raise ValueError(f"{name} must be in [0, 1)")
        if not (0.0 <= self.adam_mix <= 1.0):
            raise ValueError("adam_mix must be in [0, 1]")
        if self.weight_decay < 0.0 or self.sam_rho < 0.0 or self.base_damp < 0.0:
            raise ValueError("weight_decay, sam_rho, base_damp must be >= 0")


@dataclass(frozen=True)
class AdamHyperParams:
    eta: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if not (self.eta > 0.0) or not (self.epsilon > 0.0):
            raise ValueError("eta and epsilon must be > 0")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if not (0.0 <= b < 1.0):
                raise ValueError(f"{name} must be in [0, 1)")


@dataclass
class ZetaState:
    """Mutable per-run optimizer state; t = 0 before the first step."""

    t: int
    m: list[np.ndarray]
    v: list[np.ndarray]
    prev_grad_flat: np.ndarray
    gnorm_ema: float = 0.0
    loss_ema: float = 0.0
    awaiting_phase2: bool = field(default=False, repr=False)

    @classmethod
    def for_params(cls, params: ParamSet) -> "ZetaState":
        return cls(
            t=0,
            m=[np.zeros_like(e.value) for e in params],
            v=[np.zeros_like(e.value) for e in params],
            prev_grad_flat=np.zeros(params.num_scalars),
        )


@dataclass
class AdamState:
    t: int
    m: list[np.ndarray]
    v: list[np.ndarray]

    @classmethod
    def for_params(cls, params: ParamSet) -> "AdamState":
        return cls(
            t=0,
            m=[np.zeros_like(e.value) for e in params],
            v=[np.zeros_like(e.value) for e in params],
        )


@dataclass
class StepDiagnostics:
    """Scalars derived during one step, for logging and tests.

    eta_t and the final update_norm are filled in by phase 2; after
    phase 1 alone update_norm holds the provisional update's norm (the
    one that scales the perturbation direction).
    """

    s_t: float
    zeta_s: float
    delta_t: float
    rho_t: float
    boost: float
    eta_t: float
    grad_norm: float
    update_norm: float


def s_schedule(t: int, hp: ZetaHyperParams) -> float:
    """Triangular zeta-exponent wave: s_min at t = 0 (mod T), s_max at T/2."""
    frac = (t % hp.total_steps) / hp.total_steps
    return hp.s_min + (hp.s_max - hp.s_min) * (1.0 - abs(1.0 - 2.0 * frac))


def lr_schedule(t: int, hp: ZetaHyperParams) -> float:
    """Cosine-annealed learning rate with a one-shot decay correction.

    eta_c = eta * 0.5 * (1 + cos(pi t / T)), then eta_t = eta_c * (1 -
    weight_decay * eta_c): the decay factor is applied once to the cosine
    value rather than solved as a fixed point, which differs from the
    exact fixed point only at O((weight_decay * eta_c)^2).
    """
    eta_c = hp.eta * 0.5 * (1.0 + math.cos(math.pi * (t / hp.total_steps)))
    return eta_c * (1.0 - hp.weight_decay * eta_c)


def clip_gradients(params: ParamSet, clip_bound: float) -> None:
    """Clamp every gradient entry into [-clip_bound, clip_bound] in place."""
    if not (clip_bound > 0.0):
        raise ValueError("clip_bound must be > 0")
    for e in params:
        np.clip(e.grad, -clip_bound, clip_bound, out=e.grad)


def centralize_gradients(params: ParamSet) -> None:
    """Subtract each row's mean from weight-matrix gradients, in place.

    Bias-like entries (is_matrix False) are left untouched.
    """
    for e in params:
        if e.is_matrix:
            e.grad -= e.grad.mean(axis=1, keepdims=True)


def global_grad_norm(params: ParamSet) -> float:
    """Single L2 norm over the concatenation of all parameter gradients."""
    total = 0.0
    for e in params:
        total += float((e.grad * e.grad).sum())
    return math.sqrt(total)


def cosine_boost(
    g_flat: np.ndarray, prev_g_flat: np.ndarray, delta_t: float, eps: float
) -> tuple[float, float]:
    """Clamped cosine similarity of successive gradients and its boost.

    rho_t = max(0, <g, g_prev> / (|g| |g_prev| + eps)) and
    b_t = 1 + 0.2 * delta_t * rho_t.  An all-zero previous gradient (the
    first step) gives rho_t = 0 and boost 1 through the eps guard.
    """
    if g_flat.shape != prev_g_flat.shape:
        raise ValueError(
            f"gradient vectors differ in length: {g_flat.shape} vs {prev_g_flat.shape}"
        )
    denom = float(np.linalg.norm(g_flat)) * float(np.linalg.norm(prev_g_flat)) + eps
    rho = max(0.0, float(g_flat @ prev_g_flat) / denom)
    return rho, 1.0 + delta_t * 0.2 * rho


def update_damping(
    state: ZetaState, grad_norm: float, loss: float, hp: ZetaHyperParams
) -> float:
    """Advance the gradient-norm and loss EMAs and return delta_t.

    Both EMAs start at zero and blend with weight 0.1; the closing
    1/(1 - 0.9^t) factor is the matching bias correction, finite because
    steps are 1-indexed.
    """
    if state.t < 1:
        raise ValueError("update_damping requires state.t >= 1")
    state.gnorm_ema = 0.9 * state.gnorm_ema + 0.1 * grad_norm
    state.loss_ema = 0.9 * state.loss_ema + 0.1 * loss
    return (
        hp.base_damp
        * (1.0 + state.gnorm_ema / (1.0 + state.gnorm_ema))
        * (1.0 / max(0.1, state.loss_ema))
        / (1.0 - 0.9**state.t)
    )


def _check_finite_grads(params: ParamSet) -> None:
    for e in params:
        if not np.isfinite(e.grad).all():
            raise ValueError(f"non-finite gradient in parameter '{e.name}'")


def _hybrid_update(
    m: list[np.ndarray],
    v: list[np.ndarray],
    t: int,
    hp: ZetaHyperParams,
    grad_norm: float,
    s_t: float,
    zeta_s: float,
    boost: float,
) -> list[np.ndarray]:
    """Per-parameter hybrid update from the given (bias-corrected) moments."""
    bc1 = 1.0 - hp.beta1**t
    bc2 = 1.0 - hp.beta2**t
    zeta_scale = hp.eta * boost / (grad_norm ** (s_t - 1.0) + hp.epsilon) / zeta_s
    updates = []
    for mi, vi in zip(m, v):
        m_hat = mi / bc1
        v_hat = vi / bc2
        u_adam = m_hat / (np.sqrt(v_hat) + hp.epsilon)
        u_zeta = zeta_scale * m_hat
        updates.append(hp.adam_mix * u_adam + (1.0 - hp.adam_mix) * u_zeta)
    return updates


def _global_norm(arrays: list[np.ndarray]) -> float:
    return math.sqrt(sum(float((a * a).sum()) for a in arrays))


def zeta_step_phase1(
    params: ParamSet, state: ZetaState, hp: ZetaHyperParams, loss: float
) -> tuple[list[np.ndarray], StepDiagnostics]:
    """First half of a step: preprocess the clean gradient and perturb.

    Advances state.t, clips and centralizes params.grad in place, updates
    the EMAs, and applies theta += sam_rho * u / (|u| + eps) built from
    copy-on-write moments.  Returns the applied perturbation tensors and
    the step diagnostics; both must be handed to zeta_step_phase2 after
    the caller refreshes params.grad at the perturbed point (skippable
    when sam_rho = 0, in which case the perturbation is exactly zero).
    """
    if state.awaiting_phase2:
        raise RuntimeError("zeta_step_phase1 called while a phase 2 is pending")
    _check_finite_grads(params)
    state.t += 1
    t = state.t

    clip_gradients(params, hp.clip_bound)
    s_t = s_schedule(t, hp)
    zeta_s = zeta(s_t)
    grad_norm = global_grad_norm(params)
    delta_t = update_damping(state, grad_norm, loss, hp)
    rho_t, boost = cosine_boost(
        params.flat_grads(), state.prev_grad_flat, delta_t, hp.epsilon
    )
    centralize_gradients(params)

    # Provisional moments: committed only in phase 2, from the perturbed
    # gradient, so one gradient sample enters the EMAs per step.
    m_prov = [
        hp.beta1 * mi + (1.0 - hp.beta1) * e.grad for mi, e in zip(state.m, params)
    ]
    v_prov = [
        hp.beta2 * vi + (1.0 - hp.beta2) * e.grad * e.grad
        for vi, e in zip(state.v, params)
    ]
    updates = _hybrid_update(m_prov, v_prov, t, hp, grad_norm, s_t, zeta_s, boost)
    state.prev_grad_flat = params.flat_grads()

    update_norm = _global_norm(updates)
    scale = hp.sam_rho / (update_norm + hp.epsilon)
    perturbation = [scale * u for u in updates]
    for e, p in zip(params, perturbation):
        e.value += p

    diag = StepDiagnostics(
        s_t=s_t,
        zeta_s=zeta_s,
        delta_t=delta_t,
        rho_t=rho_t,
        boost=boost,
        eta_t=math.nan,
        grad_norm=grad_norm,
        update_norm=update_norm,
    )
    state.awaiting_phase2 = True
    return perturbation, diag


def zeta_step_phase2(
    params: ParamSet,
    state: ZetaState,
    hp: ZetaHyperParams,
    perturbation: list[np.ndarray],
    diag: StepDiagnostics,
) -> None:
    """Second half of a step: restore, commit moments, descend.

    Expects params.grad to hold the gradient at the perturbed point.
    Undoes the perturbation, re-applies clip and centralization (no-ops
    when the gradient was not refreshed), commits the moment update, and
    applies theta -= lr_schedule(t) * u using phase 1's step scalars.
    Fills diag.eta_t and replaces diag.update_norm with the applied
    update's norm.
    """
    if not state.awaiting_phase2:
        raise RuntimeError("zeta_step_phase2 called without a matching phase 1")
    if len(perturbation) != len(params):
        raise ValueError("perturbation entry count does not match params")
    for e, p in zip(params, perturbation):
        if p.shape != e.value.shape:
            raise ValueError(
                f"perturbation shape {p.shape} != parameter '{e.name}' "
                f"shape {e.value.shape}"
            )
    _check_finite_grads(params)
    t = state.t

    for e, p in zip(params, perturbation):
        e.value -= p

    clip_gradients(params, hp.clip_bound)
    centralize_gradients(params)
    for i, e in enumerate(params):
        state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * e.grad
        state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * e.grad * e.grad
    updates = _hybrid_update(
        state.m,
        state.v,
        t,
        hp,
        diag.grad_norm,
        diag.s_t,
        diag.zeta_s,
        diag.boost,
    )

    eta_t = lr_schedule(t, hp)
    for e, u in zip(params, updates):
        e.value -= eta_t * u

    diag.eta_t = eta_t
    diag.update_norm = _global_norm(updates)
    state.awaiting_phase2 = False


def adam_step(params: ParamSet, state: AdamState, hp: AdamHyperParams) -> None:
    """Textbook Adam: moment EMAs, bias correction, fixed learning rate.

    No clipping, no centralization, no schedules; the baseline the hybrid
    optimizer reduces to at adam_mix = 1 with the extras disabled.
    """
    _check_finite_grads(params)
    state.t += 1
    t = state.t
    bc1 = 1.0 - hp.beta1**t
    bc2 = 1.0 - hp.beta2**t
    for i, e in enumerate(params):
        state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * e.grad
        state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * e.grad * e.grad
        m_hat = state.m[i] / bc1
        v_hat = state.v[i] / bc2
        e.value -= hp.eta * m_hat / (np.sqrt(v_hat) + hp.epsilon)
