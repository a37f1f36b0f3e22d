"""Fitting the initiator (a, b, c) to observed feature counts.

The fit minimizes a sum over features of D(F, E(F)) / N(F, E(F)) where D
is a squared or absolute distance and N one of four normalizations; the
squared/expected pair is the classic moment criterion and the
squared/observed^2 pair is a sum of squared relative errors.  Three
minimizers are provided: an exhaustive grid sweep, a multistart bounded
simplex search, and a closed-form solver that matches only the leading
power term of each expected count.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .features import FeatureCounts
from .moments import (
    FEATURE_NAMES,
    ExpectedFeatures,
    KroneckerParams,
    expected_feature_arrays,
    expected_features,
)

DISTANCES = ("sq", "abs")
NORMALIZATIONS = ("f", "f2", "e", "e2")

# A quadratic denominator is not a sensible scale for an absolute distance.
_FORBIDDEN = {("abs", "f2"), ("abs", "e2")}


class FitFailure(RuntimeError):
    """No start produced a finite objective value."""


class LeadingTermInfeasible(ValueError):
    """The hairpin/edge system of the leading-term solver has no real solution.

    Happens exactly when N * sum d_i(d_i - 1) < (sum d_i)^2, i.e. when the
    degree variance is smaller than the degree mean (any regular graph, for
    instance).
    """


@dataclass(frozen=True)
class ObjectiveSpec:
    """Distance / normalization / feature-subset choice for the fit."""

    distance: str = "sq"
    normalization: str = "f2"
    features: tuple = FEATURE_NAMES

    def __post_init__(self):
        if self.distance not in DISTANCES:
            raise ValueError(f"unknown distance {self.distance!r}")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if (self.distance, self.normalization) in _FORBIDDEN:
            raise ValueError(
                f"distance {self.distance!r} with normalization "
                f"{self.normalization!r} is not a meaningful combination"
            )
        feats = tuple(self.features)
        if not feats:
            raise ValueError("feature set must not be empty")
        for f in feats:
            if f not in FEATURE_NAMES:
                raise ValueError(f"unknown feature {f!r}")
        if len(set(feats)) != len(feats):
            raise ValueError(f"duplicate features in {feats!r}")
        object.__setattr__(self, "features", feats)

    @property
    def code(self) -> str:
        return f"d{self.distance}-{self.normalization}"

    @classmethod
    def from_code(cls, code: str, features=FEATURE_NAMES) -> "ObjectiveSpec":
        """Parse codes like "dsq-f2" or "dabs-e"."""
        try:
            dist_part, norm_part = code.split("-", 1)
        except ValueError:
            raise ValueError(f"bad objective code {code!r}") from None
        if not dist_part.startswith("d"):
            raise ValueError(f"bad objective code {code!r}")
        return cls(distance=dist_part[1:], normalization=norm_part,
                   features=tuple(features))


@dataclass
class FitResult:
    params: KroneckerParams
    objective_value: float
    expected: ExpectedFeatures
    feature_ratios: dict
    method: str
    elapsed: float
    warnings: list = field(default_factory=list)
    held_out: str | None = None
    diagnostics: dict | None = None

    def to_dict(self) -> dict:
        d = {
            "params": self.params.to_dict(),
            "objective": self.objective_value,
            "method": self.method,
            "expected": self.expected.to_dict(),
            "ratios": self.feature_ratios,
            "elapsed": self.elapsed,
            "warnings": list(self.warnings),
        }
        if self.held_out is not None:
            d["held_out"] = self.held_out
        if self.diagnostics is not None:
            d["diagnostics"] = self.diagnostics
        return d


def effective_features(spec: ObjectiveSpec, obs: FeatureCounts):
    """The usable subset of spec.features for these observations.

    A feature observed as zero cannot be scaled by itself; under the
    observed-count normalizations it is dropped (with a warning) rather
    than poisoning the whole objective.
    """
    kept = []
    dropped = []
    for f in spec.features:
        if spec.normalization in ("f", "f2") and obs.get(f) == 0:
            dropped.append(f)
        else:
            kept.append(f)
    notes = [
        f"feature {f!r} observed as 0; dropped under normalization "
        f"{spec.normalization!r}" for f in dropped
    ]
    return tuple(kept), notes


def _term(dist: str, norm: str, F, E) -> float:
    if dist == "sq":
        d = (F - E) * (F - E)
    else:
        d = abs(F - E)
    if d == 0.0:
        return 0.0
    if norm == "f":
        n = F
    elif norm == "f2":
        n = F * F
    elif norm == "e":
        n = E
    else:
        n = E * E
    if n == 0.0:
        return math.inf
    return d / n


def evaluate_objective(
    params: KroneckerParams, spec: ObjectiveSpec, obs: FeatureCounts
) -> float:
    """Sum over the feature subset of D(F, E(F)) / N(F, E(F)).

    Zero-observed features under observed-count normalizations are dropped
    (a warning is emitted); a zero expectation against a nonzero
    observation under an expectation normalization contributes +inf, since
    such parameters cannot explain the data.
    """
    feats, notes = effective_features(spec, obs)
    for note in notes:
        warnings.warn(note, stacklevel=2)
    exp = expected_features(params)
    total = 0.0
    for f in feats:
        total += _term(spec.distance, spec.normalization,
                       float(obs.get(f)), exp.get(f))
    return total


def feature_ratios(exp: ExpectedFeatures, obs: FeatureCounts) -> dict:
    """E(F)/F for every feature with a nonzero observation (else None)."""
    out = {}
    for f in FEATURE_NAMES:
        F = obs.get(f)
        out[f] = exp.get(f) / F if F else None
    return out


def _require_fittable(spec: ObjectiveSpec):
    # three free parameters need at least three moment equations
    if len(spec.features) < 3:
        raise ValueError(
            f"fitting three parameters needs >= 3 features, "
            f"got {spec.features!r} (smaller subsets are fine for "
            f"evaluation only)"
        )


def _finish(params: KroneckerParams, spec, obs, method: str, t0: float,
            notes, held_out=None, diagnostics=None) -> FitResult:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        obj = evaluate_objective(params, spec, obs)
    if not math.isfinite(obj):
        notes = list(notes) + [
            "objective is infinite: some expectation is 0 against a "
            "nonzero observation under an expectation normalization"
        ]
    exp = expected_features(params)
    return FitResult(
        params=params,
        objective_value=obj,
        expected=exp,
        feature_ratios=feature_ratios(exp, obs),
        method=method,
        elapsed=time.perf_counter() - t0,
        warnings=list(notes),
        held_out=held_out,
        diagnostics=diagnostics,
    )


# ---------------------------------------------------------------------------
# grid search
# ---------------------------------------------------------------------------


def fit_grid(
    obs: FeatureCounts,
    r: int,
    spec: ObjectiveSpec | None = None,
    points_per_dim: int = 100,
) -> FitResult:
    """Exhaustive sweep of an equally spaced grid on {[0,1]^3 : a >= c}.

    Ties are broken toward the lexicographically smallest (a, b, c).
    points_per_dim counts points inclusive of both endpoints; 101 gives
    the exact hundredths lattice.
    """
    t0 = time.perf_counter()
    spec = spec or ObjectiveSpec()
    if points_per_dim < 2:
        raise ValueError("points_per_dim must be >= 2")
    _require_fittable(spec)
    feats, notes = effective_features(spec, obs)

    axis = np.linspace(0.0, 1.0, points_per_dim)
    aa, bb, cc = np.meshgrid(axis, axis, axis, indexing="ij")
    aa = aa.ravel()
    bb = bb.ravel()
    cc = cc.ravel()
    keep = aa >= cc  # flattened order is lexicographic in (a, b, c)
    aa, bb, cc = aa[keep], bb[keep], cc[keep]

    exp_arrays = dict(zip(FEATURE_NAMES, expected_feature_arrays(aa, bb, cc, r)))
    total = np.zeros(aa.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        for f in feats:
            F = float(obs.get(f))
            E = exp_arrays[f]
            if spec.distance == "sq":
                d = (F - E) ** 2
            else:
                d = np.abs(F - E)
            if spec.normalization == "f":
                n = np.full_like(E, F)
            elif spec.normalization == "f2":
                n = np.full_like(E, F * F)
            elif spec.normalization == "e":
                n = E
            else:
                n = E * E
            term = np.where(d == 0.0, 0.0, np.where(n == 0.0, np.inf, d / n))
            total += term

    idx = int(np.argmin(total))  # first minimum = lexicographically smallest
    params = KroneckerParams(float(aa[idx]), float(bb[idx]), float(cc[idx]), r)
    return _finish(params, spec, obs, "grid", t0, notes)


# ---------------------------------------------------------------------------
# multistart derivative-free search
# ---------------------------------------------------------------------------

_SIMPLEX_OPTIONS = dict(xatol=1e-8, fatol=np.inf, maxiter=2000)


def fit_direct(
    obs: FeatureCounts,
    r: int,
    spec: ObjectiveSpec | None = None,
    starts: int = 50,
    seed: int = 0,
) -> FitResult:
    """Best of ``starts`` bounded Nelder-Mead runs from random points.

    The objective can have kinks (absolute distance) and flat boundary
    regions, so a derivative-free simplex with box projection is used.
    Deterministic given (seed, starts); each run stops when the simplex
    diameter falls below 1e-8 or after 2000 iterations.
    """
    t0 = time.perf_counter()
    spec = spec or ObjectiveSpec()
    if starts < 1:
        raise ValueError("starts must be >= 1")
    _require_fittable(spec)
    feats, notes = effective_features(spec, obs)
    obs_vals = {f: float(obs.get(f)) for f in feats}

    def objective(x):
        a, b, c = np.clip(x, 0.0, 1.0)
        exp = expected_features(KroneckerParams(float(a), float(b), float(c), r))
        total = 0.0
        for f in feats:
            total += _term(spec.distance, spec.normalization,
                           obs_vals[f], exp.get(f))
        return total

    rng = np.random.default_rng(seed)
    best = None  # (objective, (a, b, c))
    for _ in range(starts):
        x0 = rng.random(3)
        if x0[0] < x0[2]:
            x0[0], x0[2] = x0[2], x0[0]
        res = minimize(objective, x0, method="Nelder-Mead",
                       bounds=[(0.0, 1.0)] * 3, options=_SIMPLEX_OPTIONS)
        a, b, c = (float(v) for v in np.clip(res.x, 0.0, 1.0))
        if a < c:
            a, c = c, a
        val = objective((a, b, c))
        if not math.isfinite(val):
            continue
        cand = (val, (a, b, c))
        if best is None or cand < best:
            best = cand
    if best is None:
        raise FitFailure(
            f"all {starts} starts produced a non-finite objective"
        )
    a, b, c = best[1]
    params = KroneckerParams(a, b, c, r)
    return _finish(params, spec, obs, "direct", t0, notes)


# ---------------------------------------------------------------------------
# leading-term matching
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LeadingTransforms:
    """Root-transformed counts and the implied row sums of the initiator.

    e = (2E)^(1/r), h = (2H)^(1/r), delta = (6 triangles)^(1/r),
    t = (6 tripins)^(1/r); x_hat estimates a+b and y_hat estimates b+c.
    When the system is solvable, h <= e^2 <= 2h and x_hat >= y_hat.
    """

    e: float
    h: float
    delta: float
    t: float
    x_hat: float
    y_hat: float

    def to_dict(self) -> dict:
        return {
            "e": self.e, "h": self.h, "delta": self.delta, "t": self.t,
            "x_hat": self.x_hat, "y_hat": self.y_hat,
        }


def compute_leading_transforms(obs: FeatureCounts, r: int) -> LeadingTransforms:
    """Invert the leading edge/hairpin terms for a+b and b+c.

    Raises LeadingTermInfeasible when 4E^2 lies outside [2H, 2^(r+1) H],
    i.e. when the quadratic for (a+b, b+c) has no real solution in the
    admissible branch.
    """
    if r < 1:
        raise ValueError("leading-term matching needs r >= 1")
    E, H = obs.edges, obs.hairpins
    if E <= 0 or H <= 0:
        raise ValueError(
            "leading-term matching needs positive edge and hairpin counts"
        )
    # exact feasibility check: h <= e^2 <= 2h in count form
    if not (2 * H <= 4 * E * E):
        raise LeadingTermInfeasible(
            f"4E^2 = {4 * E * E} < 2H = {2 * H}: no real-valued solution"
        )
    if not (4 * E * E <= (2 ** (r + 1)) * H):
        raise LeadingTermInfeasible(
            f"4E^2 = {4 * E * E} exceeds 2^(r+1) H = {(2 ** (r + 1)) * H}: "
            "degree variance below degree mean, no real-valued solution"
        )
    e = (2.0 * E) ** (1.0 / r)
    h = (2.0 * H) ** (1.0 / r)
    delta = (6.0 * obs.triangles) ** (1.0 / r) if obs.triangles > 0 else 0.0
    t = (6.0 * obs.tripins) ** (1.0 / r) if obs.tripins > 0 else 0.0
    root = math.sqrt(max(2.0 * h - e * e, 0.0))
    return LeadingTransforms(
        e=e, h=h, delta=delta, t=t,
        x_hat=(e + root) / 2.0, y_hat=(e - root) / 2.0,
    )


def fit_leading(
    obs: FeatureCounts,
    r: int,
    spec: ObjectiveSpec | None = None,
    b_step: float = 1e-4,
) -> FitResult:
    """Closed-form leading-term estimate plus a 1-d sweep for b.

    a(b) = x_hat - b and c(b) = y_hat - b (clamped to [0, 1]) satisfy the
    leading edge and hairpin equations; b is then chosen on a uniform grid
    to minimize |a^3 + c^3 + 3 b^2 (a + c) - delta|, the leading triangle
    mismatch.  ``spec`` only selects the objective reported on the result
    (default squared relative errors over all four features).
    """
    t0 = time.perf_counter()
    spec = spec or ObjectiveSpec()
    transforms = compute_leading_transforms(obs, r)
    if obs.triangles <= 0:
        raise ValueError(
            "leading-term matching needs a positive triangle count to "
            "pick b"
        )

    steps = int(round(1.0 / b_step))
    b_grid = np.linspace(0.0, 1.0, steps + 1)
    a_grid = np.clip(transforms.x_hat - b_grid, 0.0, 1.0)
    c_grid = np.clip(transforms.y_hat - b_grid, 0.0, 1.0)
    mismatch = np.abs(
        a_grid ** 3 + c_grid ** 3 + 3.0 * b_grid ** 2 * (a_grid + c_grid)
        - transforms.delta
    )
    best_val = mismatch.min()
    ties = np.nonzero(mismatch == best_val)[0]
    key = min((a_grid[i], b_grid[i], c_grid[i]) for i in ties)
    params = KroneckerParams(float(key[0]), float(key[1]), float(key[2]), r)
    _, notes = effective_features(spec, obs)
    return _finish(params, spec, obs, "leading", t0, notes,
                   diagnostics={"transforms": transforms.to_dict(),
                                "delta_mismatch": float(best_val)})


# ---------------------------------------------------------------------------
# combination protocols
# ---------------------------------------------------------------------------


def fit_best(
    obs: FeatureCounts,
    r: int,
    spec: ObjectiveSpec | None = None,
    seed: int = 0,
    starts: int = 50,
    grid_points: int = 100,
) -> FitResult:
    """Best of the direct, grid and leading fits under one objective.

    The leading solver is skipped (with a note) when infeasible; the
    returned result carries per-method diagnostics and the winner's
    parameters.
    """
    t0 = time.perf_counter()
    spec = spec or ObjectiveSpec()
    candidates: list[tuple[float, tuple, FitResult]] = []
    diagnostics = {}
    notes = []
    try:
        direct = fit_direct(obs, r, spec, starts=starts, seed=seed)
    except FitFailure as exc:
        diagnostics["direct"] = {"error": str(exc)}
        notes.append(f"direct fit failed: {exc}")
        direct = None
    grid = fit_grid(obs, r, spec, points_per_dim=grid_points)
    for res in (direct, grid):
        if res is None:
            continue
        p = res.params
        diagnostics[res.method] = {
            "params": p.to_dict(),
            "objective": res.objective_value,
            "elapsed": res.elapsed,
        }
        candidates.append((res.objective_value, (p.a, p.b, p.c), res))
    try:
        leading = fit_leading(obs, r, spec)
    except (LeadingTermInfeasible, ValueError) as exc:
        diagnostics["leading"] = {"error": str(exc)}
        notes.append(f"leading-term fit skipped: {exc}")
    else:
        p = leading.params
        diagnostics["leading"] = {
            "params": p.to_dict(),
            "objective": leading.objective_value,
            "elapsed": leading.elapsed,
        }
        candidates.append((leading.objective_value, (p.a, p.b, p.c), leading))

    obj, _, winner = min(candidates, key=lambda cand: cand[:2])
    diagnostics["winner"] = winner.method
    return FitResult(
        params=winner.params,
        objective_value=obj,
        expected=winner.expected,
        feature_ratios=winner.feature_ratios,
        method="best",
        elapsed=time.perf_counter() - t0,
        warnings=winner.warnings + notes,
        diagnostics=diagnostics,
    )


def fit_partial(
    obs: FeatureCounts,
    r: int,
    spec: ObjectiveSpec,
    seed: int = 0,
    starts: int = 50,
    grid_points: int = 100,
) -> FitResult:
    """fit_best on a three-feature subset, reporting the held-out ratio.

    The excluded feature's E(F)/F on the result is a cross-validated check
    of how well the fit predicts a moment it never saw.
    """
    if len(spec.features) != 3:
        raise ValueError(
            f"partial fit needs exactly 3 features, got {len(spec.features)}"
        )
    held_out = next(f for f in FEATURE_NAMES if f not in spec.features)
    res = fit_best(obs, r, spec, seed=seed, starts=starts,
                   grid_points=grid_points)
    res.held_out = held_out
    res.method = "best"
    return res
