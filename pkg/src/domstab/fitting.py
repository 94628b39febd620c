"""Least-squares fitting of the stability-response models.

Three fitting routes, one per model family:

* linear: closed-form ordinary least squares, Pearson R reported alongside.
* logistic / logistic-sine: damped Gauss-Newton (Levenberg-style lambda
  adaptation) with analytic Jacobians, run from a deterministic multi-start
  grid; the accepted-step sum of squares is non-increasing by construction.
* linear-quadratic / quadratic-quadratic: the breakpoint d is profiled over
  a deterministic candidate grid (quartile points of every gap between
  consecutive distinct dominance values); conditional on d the model is
  linear in its remaining parameters and solved exactly.

Standard errors come from sqrt(diag(s^2 (J^T J)^-1)) with s^2 the residual
variance on n - p degrees of freedom; for the piecewise kinds they are
conditional on the chosen breakpoint, whose own uncertainty is reported as
the local candidate-grid resolution.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateFitError,
    InsufficientSupportError,
    NonConvergenceError,
    PreconditionError,
    SingularInformationError,
)
from .models import (
    DerivedParams,
    ModelKind,
    derived_params,
    evaluate_array,
    param_vector,
)
from .stability import StabilitySeries

__all__ = [
    "FitInput",
    "ModelFit",
    "GN_MAX_ITER",
    "GN_RELATIVE_SS_TOL",
    "GN_STEP_TOL",
    "fit_linear",
    "fit_logistic_family",
    "fit_piecewise",
    "fit_model",
    "goodness",
    "std_errors",
    "breakpoint_candidates",
    "default_starts",
]

GN_MAX_ITER = 500
GN_RELATIVE_SS_TOL = 1e-10
GN_STEP_TOL = 1e-10
_LAMBDA_INIT = 1e-3
_LAMBDA_MAX = 1e12
_ABORT_GRACE = 12  # iterations granted before a lagging start may be cut
_N_EXPLORE = 24  # starts kept after ranking the grid by initial SS
_EXPLORE_MAX_ITER = 120  # iteration budget per start during exploration
_POLISH_ATTEMPTS = 3  # best exploration endpoints re-run with the full budget


@dataclass(frozen=True)
class FitInput:
    """Paired (dominance, change rate) points for one stability series."""

    dominance: np.ndarray
    change_rate: np.ndarray

    def __post_init__(self):
        dom = np.asarray(self.dominance, dtype=float)
        chg = np.asarray(self.change_rate, dtype=float)
        if dom.ndim != 1 or dom.shape != chg.shape:
            raise ValueError("dominance and change_rate must be 1-d and equal length")
        if not (np.all(np.isfinite(dom)) and np.all(np.isfinite(chg))):
            raise ValueError("fit input must be finite")
        object.__setattr__(self, "dominance", dom)
        object.__setattr__(self, "change_rate", chg)

    @classmethod
    def from_series(cls, series: StabilitySeries) -> "FitInput":
        return cls(
            dominance=np.array(series.dominance, dtype=float),
            change_rate=np.array(series.change_rate, dtype=float),
        )

    @property
    def n(self) -> int:
        return int(self.dominance.size)

    @property
    def dominance_range(self) -> tuple[float, float]:
        return float(self.dominance.min()), float(self.dominance.max())


@dataclass(frozen=True)
class ModelFit:
    """One fitted model: parameters, uncertainties, and fit quality."""

    kind: ModelKind
    params: dict[str, float]
    std_errors: dict[str, float]
    r2: float
    r2_adj: float
    residual_ss: float
    n: int
    converged: bool
    iterations: int
    pearson_r: float | None = None          # linear fits only
    derived: DerivedParams | None = None    # piecewise fits only
    dominance_min: float = math.nan
    dominance_max: float = math.nan
    flags: tuple[str, ...] = ()
    ss_trace: tuple[float, ...] = ()        # accepted-step SS of the winning start


def _require_points(inp: FitInput, kind: ModelKind) -> None:
    if inp.n < kind.arity + 1:
        raise PreconditionError(
            f"{kind.value} fit needs at least {kind.arity + 1} points, got {inp.n}"
        )


def _goodness_from_ss(
    ss_res: float, chg: np.ndarray, p: int
) -> tuple[float, float, list[str]]:
    flags: list[str] = []
    n = chg.size
    ss_tot = float(np.sum((chg - chg.mean()) ** 2))
    if ss_tot == 0.0:
        flags.append("degenerate-r2")
        return math.nan, math.nan, flags
    r2 = 1.0 - ss_res / ss_tot
    if n - p - 1 <= 0:
        flags.append("r2-adj-undefined")
        return r2, math.nan, flags
    r2_adj = 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1)
    return r2, r2_adj, flags


def goodness(fit: ModelFit, inp: FitInput) -> tuple[float, float]:
    """Recompute (r2, r2_adj) of a fit against an input series."""
    pred = evaluate_array(fit.kind, fit.params, inp.dominance)
    ss_res = float(np.sum((inp.change_rate - pred) ** 2))
    r2, r2_adj, _ = _goodness_from_ss(ss_res, inp.change_rate, fit.kind.arity)
    return r2, r2_adj


# ---------------------------------------------------------------- std errors


def _param_jacobian(kind: ModelKind, vec: np.ndarray, dom: np.ndarray) -> np.ndarray:
    """Jacobian of model output w.r.t. parameters, one column per parameter."""
    if kind is ModelKind.LINEAR:
        return np.column_stack([np.ones_like(dom), dom])
    if kind.logistic_family:
        big_k, a, r = vec
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            expo = np.exp(-r * dom)
            phi = 1.0 / (1.0 + a * expo)
            cols = np.column_stack(
                [
                    phi,
                    -big_k * expo * phi * phi,
                    big_k * a * dom * expo * phi * phi,
                ]
            )
            if kind is ModelKind.LOGISTIC_SINE:
                cols = cols * np.sin(dom / math.pi)[:, None]
        return cols
    raise PreconditionError(f"no parameter Jacobian for {kind.value}")


def _piecewise_design(kind: ModelKind, d: float, dom: np.ndarray) -> np.ndarray:
    """Design matrix of the model conditional on breakpoint d (linear in the rest)."""
    gap = np.abs(dom - d)
    if kind is ModelKind.LINEAR_QUADRATIC:
        # columns: a, b, c, e
        return np.column_stack(
            [np.ones_like(dom), dom, dom**2 + gap * (dom + d), gap]
        )
    if kind is ModelKind.QUADRATIC_QUADRATIC:
        # columns: a, b, c, e, f
        return np.column_stack(
            [np.ones_like(dom), dom, dom**2, gap * (dom + d), gap]
        )
    raise PreconditionError(f"{kind.value} is not piecewise")


def _linear_se_from_design(design: np.ndarray, ss_res: float, dof: int) -> np.ndarray:
    if dof <= 0:
        raise PreconditionError("no residual degrees of freedom for standard errors")
    info = design.T @ design
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        raise SingularInformationError("normal-equations matrix is singular") from None
    diag = np.diag(cov).copy()
    if not np.all(np.isfinite(diag)):
        raise SingularInformationError("normal-equations matrix is singular")
    diag[diag < 0] = 0.0  # roundoff guard
    return np.sqrt(diag * (ss_res / dof))


def std_errors(fit: ModelFit, inp: FitInput) -> dict[str, float]:
    """Standard errors of the fitted parameters.

    Raises SingularInformationError when the information matrix cannot be
    inverted; the fit constructors catch that and report +inf instead.
    For piecewise kinds the breakpoint's entry is the local resolution of the
    candidate grid rather than a curvature-based error.
    """
    kind = fit.kind
    vec = param_vector(kind, fit.params)
    dom = inp.dominance
    pred = evaluate_array(kind, fit.params, dom)
    ss_res = float(np.sum((inp.change_rate - pred) ** 2))
    dof = inp.n - kind.arity
    if kind.piecewise:
        d = fit.params["d"]
        design = _piecewise_design(kind, d, dom)
        se = _linear_se_from_design(design, ss_res, dof)
        names = [name for name in kind.param_names if name != "d"]
        out = dict(zip(names, (float(s) for s in se)))
        out["d"] = _grid_resolution(breakpoint_candidates(dom), d)
        return {name: out[name] for name in kind.param_names}
    jac = _param_jacobian(kind, vec, dom)
    if not np.all(np.isfinite(jac)):
        raise SingularInformationError("Jacobian is non-finite at the optimum")
    se = _linear_se_from_design(jac, ss_res, dof)
    return dict(zip(kind.param_names, (float(s) for s in se)))


def _infinite_ses(kind: ModelKind) -> dict[str, float]:
    return {name: math.inf for name in kind.param_names}


# ---------------------------------------------------------------- linear


def fit_linear(inp: FitInput) -> ModelFit:
    """Closed-form OLS of change rate on dominance."""
    kind = ModelKind.LINEAR
    _require_points(inp, kind)
    dom, chg = inp.dominance, inp.change_rate
    sxx = float(np.sum((dom - dom.mean()) ** 2))
    if sxx == 0.0:
        raise DegenerateFitError("dominance values have zero variance")
    sxy = float(np.sum((dom - dom.mean()) * (chg - chg.mean())))
    syy = float(np.sum((chg - chg.mean()) ** 2))
    slope = sxy / sxx
    intercept = float(chg.mean() - slope * dom.mean())
    pred = intercept + slope * dom
    ss_res = float(np.sum((chg - pred) ** 2))
    flags: list[str] = []
    if syy > 0.0:
        pearson = sxy / math.sqrt(sxx * syy)
    else:
        pearson = math.nan
        flags.append("degenerate-r")
    r2, r2_adj, more = _goodness_from_ss(ss_res, chg, kind.arity)
    flags.extend(more)
    params = {"a": intercept, "b": slope}
    fit = ModelFit(
        kind=kind,
        params=params,
        std_errors=_infinite_ses(kind),
        r2=r2,
        r2_adj=r2_adj,
        residual_ss=ss_res,
        n=inp.n,
        converged=True,
        iterations=0,
        pearson_r=pearson,
        dominance_min=inp.dominance_range[0],
        dominance_max=inp.dominance_range[1],
        flags=tuple(flags),
    )
    return _with_std_errors(fit, inp)


def _with_std_errors(fit: ModelFit, inp: FitInput) -> ModelFit:
    try:
        ses = std_errors(fit, inp)
    except SingularInformationError:
        return dataclasses.replace(
            fit,
            std_errors=_infinite_ses(fit.kind),
            flags=fit.flags + ("singular-information",),
        )
    return dataclasses.replace(fit, std_errors=ses)


# ---------------------------------------------------------------- logistic


def default_starts(inp: FitInput) -> list[tuple[float, float, float]]:
    """Deterministic multi-start grid of (K, a, r) for the logistic kinds.

    r is scaled to the observed dominance span; a covers both signs and four
    orders of magnitude; K covers the observed change-rate magnitude plus a
    per-(a, r) linear least-squares guess (the model is linear in K).
    """
    chg_max = float(np.max(np.abs(inp.change_rate)))
    lo, hi = inp.dominance_range
    span = hi - lo
    if span == 0.0:
        raise DegenerateFitError("dominance values have zero range")
    r_scales = (0.1, 1.0, 10.0, 100.0)
    a_values = (1e-4, 1.0, 1e4, -1e-4, -1.0, -1e4)
    k_values = (chg_max, -chg_max, 2.0 * chg_max, -2.0 * chg_max)
    starts = []
    for a in a_values:
        for scale in r_scales:
            for r in (scale / span, -scale / span):
                starts.append((math.nan, a, r))  # placeholder: projected K
                for k in k_values:
                    starts.append((k, a, r))
    return starts


def _project_k(kind: ModelKind, a: float, r: float, inp: FitInput) -> float | None:
    """Optimal K for fixed (a, r): the model is linear in K."""
    shape = evaluate_array(kind, (1.0, a, r), inp.dominance)
    if not np.all(np.isfinite(shape)):
        return None
    denom = float(shape @ shape)
    if denom <= 0.0:
        return None
    return float((shape @ inp.change_rate) / denom)


def _gauss_newton(
    kind: ModelKind,
    start: np.ndarray,
    inp: FitInput,
    abort_ss: float | None = None,
    max_iter: int = GN_MAX_ITER,
) -> tuple[np.ndarray, float, int, bool, list[float]]:
    """Damped Gauss-Newton from one start.

    Returns (params, ss, iterations, converged, accepted-SS trace).  Steps
    are accepted only when they reduce the sum of squares, so the trace is
    non-increasing.  When ``abort_ss`` is given, a start still far above it
    after a grace period is cut short (deterministically) rather than run to
    the full iteration cap.
    """
    dom, chg = inp.dominance, inp.change_rate
    vec = start.astype(float).copy()
    resid = chg - evaluate_array(kind, vec, dom)
    if not np.all(np.isfinite(resid)):
        return vec, math.inf, 0, False, []
    ss = float(resid @ resid)
    trace = [ss]
    lam = _LAMBDA_INIT
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if (
            abort_ss is not None
            and iterations > _ABORT_GRACE
            and ss > 1.5 * abort_ss + 1e-12
        ):
            return vec, ss, iterations, False, trace
        jac = _param_jacobian(kind, vec, dom)
        if not np.all(np.isfinite(jac)):
            break
        jtj = jac.T @ jac
        jtr = jac.T @ resid
        stepped = False
        while lam <= _LAMBDA_MAX:
            damped = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-12))
            try:
                step = np.linalg.solve(damped, jtr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = vec + step
            trial_resid = chg - evaluate_array(kind, trial, dom)
            with np.errstate(over="ignore", invalid="ignore"):
                trial_ss = float(trial_resid @ trial_resid) if np.all(
                    np.isfinite(trial_resid)
                ) else math.inf
            if trial_ss < ss:
                step_norm = float(np.linalg.norm(step))
                rel_drop = (ss - trial_ss) / max(ss, 1e-300)
                vec, resid, ss = trial, trial_resid, trial_ss
                trace.append(ss)
                lam = max(lam / 10.0, 1e-12)
                stepped = True
                if rel_drop < GN_RELATIVE_SS_TOL or step_norm < GN_STEP_TOL:
                    converged = True
                break
            lam *= 10.0
        if not stepped:
            # no downhill step found at any damping: stationary point
            converged = bool(np.all(np.isfinite(vec))) and ss < math.inf
            break
        if converged:
            break
    return vec, ss, iterations, converged, trace


def fit_logistic_family(
    kind: ModelKind,
    inp: FitInput,
    starts: Iterable[tuple[float, float, float]] | None = None,
) -> ModelFit:
    """Multi-start damped Gauss-Newton fit of a logistic-family model.

    The start grid is first ranked by initial SS and only the most promising
    starts are explored under a reduced iteration budget; the best exploration
    endpoints are then polished with the full budget.  The best converged
    result (lowest SS, parameter-vector order breaking ties) wins.  If nothing
    converges a NonConvergenceError is raised with the best attempt attached
    as ``best``.
    """
    if not kind.logistic_family:
        raise PreconditionError(f"{kind.value} is not a logistic-family kind")
    _require_points(inp, kind)
    chg_max = float(np.max(np.abs(inp.change_rate)))
    if chg_max == 0.0:
        # all change rates are zero: K = 0 reproduces the data exactly
        fit = ModelFit(
            kind=kind,
            params={"K": 0.0, "a": 1.0, "r": 0.0},
            std_errors=_infinite_ses(kind),
            r2=math.nan,
            r2_adj=math.nan,
            residual_ss=0.0,
            n=inp.n,
            converged=True,
            iterations=0,
            dominance_min=inp.dominance_range[0],
            dominance_max=inp.dominance_range[1],
            flags=("degenerate-zero-change", "degenerate-r2"),
        )
        return _with_std_errors(fit, inp)

    candidates = list(starts) if starts is not None else default_starts(inp)
    dom, chg = inp.dominance, inp.change_rate
    ranked: list[tuple[float, tuple[float, float, float]]] = []
    for k0, a0, r0 in candidates:
        if math.isnan(k0):
            projected = _project_k(kind, a0, r0, inp)
            if projected is None:
                continue
            k0 = projected
        with np.errstate(over="ignore", invalid="ignore"):
            resid = chg - evaluate_array(kind, np.array([k0, a0, r0]), dom)
            ss0 = float(resid @ resid) if np.all(np.isfinite(resid)) else math.inf
        if math.isfinite(ss0):
            ranked.append((ss0, (k0, a0, r0)))
    ranked.sort(key=lambda item: (item[0], item[1]))

    explored: list[tuple[tuple[float, tuple[float, ...]], np.ndarray, int, bool, list[float]]] = []
    abort_at: float | None = None
    for _, start_vec in ranked[:_N_EXPLORE]:
        vec, ss, iters, ok, trace = _gauss_newton(
            kind,
            np.array(start_vec),
            inp,
            abort_ss=abort_at,
            max_iter=_EXPLORE_MAX_ITER,
        )
        if not math.isfinite(ss):
            continue
        explored.append(((ss, tuple(vec)), vec, iters, ok, trace))
        if abort_at is None or ss < abort_at:
            abort_at = ss
    explored.sort(key=lambda item: item[0])

    best: tuple[float, tuple[float, ...]] | None = None
    best_result = None
    best_attempt = None  # best regardless of convergence, for the error path
    seen: set[tuple[float, ...]] = set()
    for key0, vec0, iters0, _, trace0 in explored:
        if key0[1] in seen:
            continue
        seen.add(key0[1])
        if len(seen) > _POLISH_ATTEMPTS:
            break
        vec, ss, iters, ok, trace = _gauss_newton(kind, vec0, inp)
        if not math.isfinite(ss):
            continue
        iters += iters0
        trace = trace0 + trace[1:]
        key = (ss, tuple(vec))
        if best_attempt is None or key < best_attempt[0]:
            best_attempt = (key, vec, ss, iters, ok, trace)
        if ok and (best is None or key < best):
            best = key
            best_result = (vec, ss, iters, trace)

    if best_result is None:
        if best_attempt is None:
            raise NonConvergenceError(f"{kind.value}: every start failed")
        _, vec, ss, iters, ok, trace = best_attempt
        failed = _assemble_logistic_fit(
            kind, inp, vec, ss, iters, converged=False, trace=trace
        )
        raise NonConvergenceError(f"{kind.value}: no start converged", best=failed)
    vec, ss, iters, trace = best_result
    return _assemble_logistic_fit(kind, inp, vec, ss, iters, converged=True, trace=trace)


def _assemble_logistic_fit(
    kind: ModelKind,
    inp: FitInput,
    vec: np.ndarray,
    ss: float,
    iterations: int,
    converged: bool,
    trace: list[float],
) -> ModelFit:
    r2, r2_adj, flags = _goodness_from_ss(ss, inp.change_rate, kind.arity)
    if not converged:
        flags = list(flags) + ["non-converged"]
    fit = ModelFit(
        kind=kind,
        params={"K": float(vec[0]), "a": float(vec[1]), "r": float(vec[2])},
        std_errors=_infinite_ses(kind),
        r2=r2,
        r2_adj=r2_adj,
        residual_ss=ss,
        n=inp.n,
        converged=converged,
        iterations=iterations,
        dominance_min=inp.dominance_range[0],
        dominance_max=inp.dominance_range[1],
        flags=tuple(flags),
        ss_trace=tuple(trace),
    )
    return _with_std_errors(fit, inp)


# ---------------------------------------------------------------- piecewise


def breakpoint_candidates(dom: np.ndarray) -> list[float]:
    """Candidate breakpoints: quartile points of each gap between consecutive
    distinct dominance values, kept only where both sides retain at least
    three distinct values."""
    distinct = np.unique(np.asarray(dom, dtype=float))
    out = []
    for u, v in zip(distinct[:-1], distinct[1:]):
        for q in (0.25, 0.5, 0.75):
            cand = u + q * (v - u)
            left = int(np.sum(distinct < cand))
            right = int(np.sum(distinct > cand))
            if left >= 3 and right >= 3:
                out.append(float(cand))
    return out


def _grid_resolution(candidates: Sequence[float], d: float) -> float:
    """Local spacing of the candidate grid around d."""
    if len(candidates) < 2:
        return math.inf
    arr = np.asarray(sorted(candidates))
    idx = int(np.argmin(np.abs(arr - d)))
    gaps = []
    if idx > 0:
        gaps.append(arr[idx] - arr[idx - 1])
    if idx < len(arr) - 1:
        gaps.append(arr[idx + 1] - arr[idx])
    return float(max(gaps))


def _insert_d(kind: ModelKind, beta: np.ndarray, d: float) -> dict[str, float]:
    if kind is ModelKind.LINEAR_QUADRATIC:
        a, b, c, e = beta
        return {"a": float(a), "b": float(b), "c": float(c), "d": float(d), "e": float(e)}
    a, b, c, e, f = beta
    return {
        "a": float(a),
        "b": float(b),
        "c": float(c),
        "d": float(d),
        "e": float(e),
        "f": float(f),
    }


def fit_piecewise(kind: ModelKind, inp: FitInput) -> ModelFit:
    """Breakpoint-profiled exact least squares for the piecewise kinds."""
    if not kind.piecewise:
        raise PreconditionError(f"{kind.value} is not piecewise")
    _require_points(inp, kind)
    dom, chg = inp.dominance, inp.change_rate
    if np.unique(dom).size < 2:
        raise DegenerateFitError("dominance values have zero range")
    candidates = breakpoint_candidates(dom)
    if not candidates:
        raise InsufficientSupportError(
            "no breakpoint candidate has three distinct dominance values on each side"
        )
    best_key = None
    best = None
    for d in candidates:
        design = _piecewise_design(kind, d, dom)
        beta, *_ = np.linalg.lstsq(design, chg, rcond=None)
        resid = chg - design @ beta
        ss = float(resid @ resid)
        key = (ss, d, tuple(beta))
        if best_key is None or key < best_key:
            best_key = key
            best = (d, beta, ss)
    d, beta, ss = best
    params = _insert_d(kind, beta, d)
    r2, r2_adj, flags = _goodness_from_ss(ss, chg, kind.arity)
    fit = ModelFit(
        kind=kind,
        params=params,
        std_errors=_infinite_ses(kind),
        r2=r2,
        r2_adj=r2_adj,
        residual_ss=ss,
        n=inp.n,
        converged=True,
        iterations=len(candidates),
        derived=derived_params(kind, params),
        dominance_min=inp.dominance_range[0],
        dominance_max=inp.dominance_range[1],
        flags=tuple(flags),
    )
    return _with_std_errors(fit, inp)


# ---------------------------------------------------------------- dispatch


def fit_model(kind: ModelKind, inp: FitInput) -> ModelFit:
    """Fit one model kind with its family's route."""
    if kind is ModelKind.LINEAR:
        return fit_linear(inp)
    if kind.logistic_family:
        return fit_logistic_family(kind, inp)
    return fit_piecewise(kind, inp)
