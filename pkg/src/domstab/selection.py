"""Validity screening and priority-ordered selection among fitted models.

A fit is valid when it clears three checks:

* fit quality: r2 at or above ``r2_min``;
* parameter precision: every standard error at most ``se_ratio_max`` times
  the parameter magnitude.  The logistic-family shape parameter ``a`` is
  exempt: its fitted values are routinely near zero with a wide but harmless
  error band, and penalizing that would throw away otherwise tight fits;
* parameter sanity: every parameter magnitude at most ``magnitude_max``
  (a carrying-capacity estimate in the millions is a divergence artifact,
  not biology).

Selection walks the priority order and returns the first valid fit.  When
nothing is valid the linear fit is returned as the backup, flagged
``backup-invalid``, so downstream reports always have a row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import SelectionError
from .fitting import ModelFit
from .models import (
    EquilibriumPoint,
    JointAmbiguous,
    ModelKind,
    Regime,
    qualitative_equilibria,
    regime_at,
)

__all__ = [
    "SelectionPolicy",
    "ValidityReport",
    "SelectedModel",
    "SummaryRow",
    "validate",
    "select",
    "summarize",
    "regime_narrative",
]

DEFAULT_PRIORITY = (
    ModelKind.LOGISTIC,
    ModelKind.LOGISTIC_SINE,
    ModelKind.LINEAR_QUADRATIC,
    ModelKind.QUADRATIC_QUADRATIC,
    ModelKind.LINEAR,
)

_SE_EXEMPT = {
    ModelKind.LOGISTIC: ("a",),
    ModelKind.LOGISTIC_SINE: ("a",),
}


@dataclass(frozen=True)
class SelectionPolicy:
    r2_min: float = 0.30
    se_ratio_max: float = 20.0
    magnitude_max: float = 1e6
    priority: tuple[ModelKind, ...] = DEFAULT_PRIORITY


@dataclass(frozen=True)
class ValidityReport:
    fit: ModelFit
    r2_ok: bool
    se_ok: bool
    magnitude_ok: bool
    reasons: tuple[str, ...]

    @property
    def valid(self) -> bool:
        return self.r2_ok and self.se_ok and self.magnitude_ok


def validate(fit: ModelFit, policy: SelectionPolicy = SelectionPolicy()) -> ValidityReport:
    """Run the three validity checks on one fit."""
    reasons: list[str] = []

    r2_ok = math.isfinite(fit.r2) and fit.r2 >= policy.r2_min
    if not r2_ok:
        reasons.append(f"r2 {_short(fit.r2)} below {_short(policy.r2_min)}")

    exempt = _SE_EXEMPT.get(fit.kind, ())
    se_ok = True
    for name in fit.kind.param_names:
        if name in exempt:
            continue
        value = fit.params[name]
        se = fit.std_errors.get(name, math.inf)
        if not math.isfinite(se):
            se_ok = False
            reasons.append(f"se({name}) is not finite")
            continue
        limit = policy.se_ratio_max * abs(value)
        if se > limit:
            se_ok = False
            reasons.append(
                f"se({name}) {_short(se)} exceeds {_short(policy.se_ratio_max)}x |{name}|"
            )

    magnitude_ok = True
    for name in fit.kind.param_names:
        if abs(fit.params[name]) > policy.magnitude_max:
            magnitude_ok = False
            reasons.append(f"|{name}| {_short(fit.params[name])} exceeds {_short(policy.magnitude_max)}")

    if not fit.converged:
        se_ok = False
        reasons.append("fit did not converge")

    return ValidityReport(
        fit=fit, r2_ok=r2_ok, se_ok=se_ok, magnitude_ok=magnitude_ok, reasons=tuple(reasons)
    )


def _short(x: float) -> str:
    return f"{x:.4g}"


@dataclass(frozen=True)
class SelectedModel:
    subject_id: str
    fit: ModelFit
    report: ValidityReport
    rationale: str
    backup: bool = False  # True when nothing was valid and linear stood in

    @property
    def kind(self) -> ModelKind:
        return self.fit.kind


def select(
    fits: Mapping[ModelKind, ModelFit],
    policy: SelectionPolicy = SelectionPolicy(),
    subject_id: str = "",
) -> SelectedModel:
    """First valid fit in priority order; linear as flagged backup otherwise."""
    if not fits:
        raise SelectionError("no fits to select from")
    reports = {kind: validate(fit, policy) for kind, fit in fits.items()}
    for kind in policy.priority:
        report = reports.get(kind)
        if report is not None and report.valid:
            return SelectedModel(
                subject_id=subject_id,
                fit=report.fit,
                report=report,
                rationale=f"first valid kind in priority order: {kind.value}",
            )
    linear = reports.get(ModelKind.LINEAR)
    if linear is None:
        raise SelectionError("no fit is valid and no linear backup was supplied")
    return SelectedModel(
        subject_id=subject_id,
        fit=linear.fit,
        report=linear,
        rationale="backup-invalid: no kind passed the validity checks",
        backup=True,
    )


# ---------------------------------------------------------------- narrative


def _collapse_regimes(regimes: Sequence[Regime]) -> list[Regime]:
    runs: list[Regime] = []
    for regime in regimes:
        if not runs or runs[-1] is not regime:
            runs.append(regime)
    return runs


def regime_narrative(fit: ModelFit, sample_points: int = 101) -> str:
    """One-line description of how the regime changes over the observed
    dominance range, read off the analytic derivative plus, for piecewise
    kinds, the qualitative equilibrium verdicts."""
    lo, hi = fit.dominance_min, fit.dominance_max
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return "no observed dominance range"
    kind = fit.kind
    step = (hi - lo) / (sample_points - 1)
    regimes: list[Regime] = []
    for i in range(sample_points):
        dom = lo + i * step
        regime = regime_at(kind, fit.params, dom)
        if isinstance(regime, JointAmbiguous):
            continue
        regimes.append(regime)
    runs = _collapse_regimes(regimes)

    if len(runs) == 1:
        text = f"{runs[0].value} throughout"
    elif len(runs) <= 3:
        text = " then ".join(r.value for r in runs)
    else:
        labels = sorted({r.value for r in runs})
        text = f"alternating {'/'.join(labels)} ({len(runs)} phases)"

    if kind is ModelKind.LOGISTIC:
        r = fit.params["r"]
        if r < 0:
            text += "; change rate flattens toward zero at high dominance"
        elif r > 0:
            text += "; change rate saturates toward K at high dominance"
    elif kind is ModelKind.LOGISTIC_SINE:
        text += "; zero-change crossings recur at the sine nodes"
    elif kind.piecewise:
        parts = []
        for point in qualitative_equilibria(kind, fit.params):
            where = f"{point.point_kind} at D={point.location:.3g}"
            parts.append(f"{where} ({point.verdict})")
        if parts:
            text += "; " + ", ".join(parts)
    return text


@dataclass(frozen=True)
class SummaryRow:
    subject_id: str
    kind: ModelKind
    quality: str
    signs: str
    narrative: str
    backup: bool


def _sign_annotations(fit: ModelFit) -> str:
    if fit.kind is ModelKind.LINEAR:
        b = fit.params["b"]
        return f"b{_sign_mark(b)}"
    if fit.kind.logistic_family:
        return f"r{_sign_mark(fit.params['r'])}"
    derived = fit.derived
    if derived is None:
        return ""
    parts = [f"b1{_sign_mark(derived.b1)}"]
    if derived.c1 is not None:
        parts.append(f"c1{_sign_mark(derived.c1)}")
    parts.append(f"c2{_sign_mark(derived.c2)}")
    return " ".join(parts)


def _sign_mark(x: float) -> str:
    if x > 0:
        return ">0"
    if x < 0:
        return "<0"
    return "=0"


def summarize(selected: Sequence[SelectedModel]) -> list[SummaryRow]:
    """One row per subject: kind, quality, branch signs, regime narrative."""
    rows = []
    for item in selected:
        fit = item.fit
        if fit.kind is ModelKind.LINEAR and fit.pearson_r is not None:
            quality = f"R={fit.pearson_r:.2f}"
        else:
            quality = f"r2={fit.r2:.2f}"
        rows.append(
            SummaryRow(
                subject_id=item.subject_id,
                kind=fit.kind,
                quality=quality,
                signs=_sign_annotations(fit),
                narrative=regime_narrative(fit),
                backup=item.backup,
            )
        )
    return rows
