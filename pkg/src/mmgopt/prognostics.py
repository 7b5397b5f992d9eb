"""Degradation prognostics: signal model, Bayesian rate updates, remaining-life
distributions and the resulting dynamic maintenance cost curves.

A DER's condition signal follows ``h(kappa, phi, t) + noise`` where ``kappa`` is
a shared shape parameter and ``phi`` an individual, uncertain degradation rate.
Two forms are supported:

* ``linear``:       h = kappa + phi * t
* ``exponential``:  h = kappa * exp(phi * t)   (updated on log(h / kappa))

Both are linear in ``phi`` after transformation, so a Gaussian prior on
``phi`` stays Gaussian under Gaussian observation noise.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.special import ndtr

FORMS = ("linear", "exponential")


@dataclass(frozen=True)
class DegradationModel:
    kappa: float
    prior_mean: float
    prior_var: float
    noise_var: float
    threshold: float
    form: str = "linear"
    pm_cost: float | None = None
    cm_cost: float | None = None

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown degradation form {self.form!r}")
        if self.noise_var < 0:
            raise ValueError("noise_var must be >= 0")
        if not self.prior_var > 0:
            raise ValueError("prior_var must be > 0")
        if self.form == "exponential" and not self.kappa > 0:
            raise ValueError("exponential form needs kappa > 0")
        if not self.threshold > self.mean_signal(self.prior_mean, 0.0):
            raise ValueError("threshold must exceed the initial signal level")

    def mean_signal(self, phi, t):
        if self.form == "linear":
            return self.kappa + phi * t
        return self.kappa * np.exp(phi * t)

    def transform(self, signal):
        """Map a raw signal onto the scale where it is ``phi * t`` plus noise."""
        if self.form == "linear":
            return np.asarray(signal, float) - self.kappa
        return np.log(np.maximum(np.asarray(signal, float), 1e-300) / self.kappa)

    @property
    def critical_level(self) -> float:
        """Transformed threshold; the signal fails once ``phi * t`` reaches it."""
        if math.isinf(self.threshold):
            return math.inf
        return float(self.transform(self.threshold))


@dataclass(frozen=True)
class PosteriorState:
    mean: float
    var: float
    n_obs: int = 0
    t_last: float = 0.0
    last_signal: float | None = None


def prior_state(model: DegradationModel) -> PosteriorState:
    return PosteriorState(model.prior_mean, model.prior_var)


def simulate_signal(model: DegradationModel, seed: int, horizon: int, phi: float | None = None,
                    start: float = 0.0):
    """Sample a trajectory at weeks ``0..horizon`` (index = week).

    ``phi`` pins the rate instead of drawing it from the prior, and ``start``
    shifts the clock for a DER that has already been in service.
    Returns ``(trajectory, failure_week)`` with ``failure_week=None`` when the
    threshold is never reached within the horizon.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rng = np.random.default_rng(seed)
    rate = rng.normal(model.prior_mean, math.sqrt(model.prior_var)) if phi is None else phi
    t = np.arange(horizon + 1, dtype=float)
    noise = rng.normal(0.0, math.sqrt(model.noise_var), horizon + 1) if model.noise_var > 0 \
        else np.zeros(horizon + 1)
    if model.form == "linear":
        traj = model.mean_signal(rate, start + t) + noise
    else:
        traj = model.kappa * np.exp(rate * (start + t) + noise)
    hit = np.flatnonzero(traj[1:] >= model.threshold)
    return traj, (int(hit[0]) + 1 if hit.size else None)


def update_posterior(model: DegradationModel, observations: Sequence[tuple[float, float]],
                     prior: PosteriorState | None = None) -> PosteriorState:
    """Conjugate Gaussian update of the rate from ``(time, signal)`` pairs.

    With ``noise_var == 0`` the rate is recovered by least squares and the
    posterior variance collapses to zero.
    """
    if len(observations) == 0:
        raise ValueError("at least one observation is required")
    times = np.array([o[0] for o in observations], float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("observation times must be strictly increasing")
    if prior is not None and prior.n_obs and times[0] <= prior.t_last:
        raise ValueError("observation times must follow the prior's last observation")
    prior = prior or prior_state(model)
    signals = np.array([o[1] for o in observations], float)
    z = model.transform(signals)
    sxx = float(times @ times)
    sxz = float(times @ z)
    if model.noise_var == 0 or prior.var == 0:
        if prior.var == 0:
            mean, var = prior.mean, 0.0
        else:
            mean, var = sxz / sxx, 0.0
    else:
        precision = 1.0 / prior.var + sxx / model.noise_var
        var = 1.0 / precision
        mean = var * (prior.mean / prior.var + sxz / model.noise_var)
    return PosteriorState(float(mean), float(var), prior.n_obs + len(observations),
                          float(times[-1]), float(signals[-1]))


@dataclass(frozen=True)
class RemainingLifeDistribution:
    """Weekly remaining-life pmf; ``pmf[k]`` is P(R = k + 1)."""

    origin: float
    pmf: np.ndarray
    tail_mass: float

    @property
    def horizon(self) -> int:
        return len(self.pmf)

    def survival(self) -> np.ndarray:
        """S(t) for t = 0..horizon, with S(0) = 1."""
        s = self.tail_mass + np.concatenate([np.cumsum(self.pmf[::-1])[::-1], [0.0]])
        return np.minimum(s, 1.0)


def compute_rld(post: PosteriorState, model: DegradationModel, T_max: int) -> RemainingLifeDistribution:
    """Distribution of the first week in which the mean trajectory reaches the threshold.

    Mass for rates that would already have crossed before the origin (while
    the last observation is still below threshold) is assigned to week 1.
    """
    if T_max < 1:
        raise ValueError("T_max must be >= 1")
    t_o = post.t_last
    crit = model.critical_level
    weeks = np.arange(1, T_max + 1, dtype=float)
    if post.last_signal is not None and post.last_signal >= model.threshold or crit <= 0:
        pmf = np.zeros(T_max)
        pmf[0] = 1.0
        return RemainingLifeDistribution(t_o, pmf, 0.0)
    if math.isinf(crit):
        return RemainingLifeDistribution(t_o, np.zeros(T_max), 1.0)
    level = crit / (t_o + weeks)
    if post.var > 0:
        surv = ndtr((level - post.mean) / math.sqrt(post.var))
    else:
        surv = (post.mean < level).astype(float)
    prev = np.concatenate([[1.0], surv[:-1]])
    pmf = np.maximum(prev - surv, 0.0)
    return RemainingLifeDistribution(t_o, pmf, float(surv[-1]))


@dataclass(frozen=True)
class CostCurve:
    """Cost rate of maintaining in week t; ``values[k]`` is for week k + 1."""

    values: np.ndarray
    pm_cost: float
    cm_cost: float

    def at(self, week: int) -> float:
        return float(self.values[week - 1])


def dynamic_cost(rld: RemainingLifeDistribution, C_p: float, C_f: float,
                 t_o: float | None = None) -> CostCurve:
    """Expected maintenance cost per unit of service life if PM happens in week t.

    The service-life integral is a left Riemann sum over weeks with S(0) = 1.
    """
    if not (C_f >= C_p > 0):
        raise ValueError("need C_f >= C_p > 0")
    t_o = rld.origin if t_o is None else t_o
    if t_o < 0:
        raise ValueError("t_o must be >= 0")
    S = rld.survival()
    denom = np.cumsum(S[:-1]) + t_o
    if np.any(denom <= 0):
        raise ValueError("degenerate-life")
    num = C_p * S[1:] + C_f * (1.0 - S[1:])
    return CostCurve(num / denom, float(C_p), float(C_f))


def maintenance_deadline(rld: RemainingLifeDistribution, reliability: float, T: int) -> int:
    """First week whose survival probability drops below ``reliability``; ``T`` if none."""
    if not 0 < reliability < 1:
        raise ValueError("reliability threshold must lie in (0, 1)")
    S = rld.survival()
    for t in range(1, T + 1):
        s = S[t] if t <= rld.horizon else S[-1]
        if s < reliability:
            return t
    return T


@dataclass(frozen=True)
class DegradationState:
    """Everything the planner needs to know about one DER's condition."""

    model: DegradationModel
    observations: tuple = ()
    posterior: PosteriorState | None = None
    rld: RemainingLifeDistribution | None = None
    cost: CostCurve | None = None

    @classmethod
    def from_history(cls, model: DegradationModel, observations: Iterable[tuple[float, float]],
                     T_max: int, pm_cost: float | None = None, cm_cost: float | None = None):
        obs = tuple((float(t), float(y)) for t, y in observations)
        post = update_posterior(model, obs) if obs else prior_state(model)
        rld = compute_rld(post, model, T_max)
        cp = pm_cost if pm_cost is not None else model.pm_cost
        cf = cm_cost if cm_cost is not None else model.cm_cost
        cost = dynamic_cost(rld, cp, cf, max(post.t_last, 0.0)) if cp is not None and \
            (post.t_last > 0 or rld.pmf[0] < 1) else None
        return cls(model, obs, post, rld, cost)


def load_degradation_library(path) -> dict[str, DegradationModel]:
    """Read ``{type_name: {form, kappa, prior_mean, prior_var, noise_var, threshold, pm_cost, cm_cost}}``."""
    raw = json.loads(Path(path).read_text())
    out = {}
    for name, rec in raw.items():
        rec = dict(rec)
        if rec.get("threshold") in ("inf", "Infinity"):
            rec["threshold"] = math.inf
        out[name] = DegradationModel(**rec)
    return out


def dump_degradation_library(models: dict[str, DegradationModel], path=None) -> str:
    recs = {}
    for name, m in models.items():
        d = {k: getattr(m, k) for k in ("form", "kappa", "prior_mean", "prior_var", "noise_var",
                                        "threshold", "pm_cost", "cm_cost")}
        if math.isinf(d["threshold"]):
            d["threshold"] = "inf"
        recs[name] = d
    text = json.dumps(recs, indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def read_signals(path) -> dict[str, list[tuple[float, float]]]:
    out: dict[str, list[tuple[float, float]]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(row["der_id"], []).append((float(row["week"]), float(row["signal"])))
    for v in out.values():
        v.sort()
    return out


def write_signals(signals: dict[str, Sequence[tuple[float, float]]], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["der_id", "week", "signal"])
        for der, obs in signals.items():
            for t, y in obs:
                w.writerow([der, repr(float(t)), repr(float(y))])


__all__ = ["CostCurve", "DegradationModel", "DegradationState", "PosteriorState",
           "RemainingLifeDistribution", "compute_rld", "dump_degradation_library", "dynamic_cost",
           "load_degradation_library", "maintenance_deadline", "prior_state", "read_signals",
           "simulate_signal", "update_posterior", "write_signals"]
