"""Euler-Maruyama simulation of the noisy ring and first-passage statistics.

The SDE is ``dx_i = [f(x_i) + gamma/2 (x_{i+1} - 2 x_i + x_{i-1})] dt + sigma dB_i``.
Every trajectory draws its Gaussian increments from its own Philox stream
keyed by ``(seed, trajectory index)``, so results do not depend on how the
trajectories are split across workers.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numba
import numpy as np
from scipy import stats

from .model import ModelParams, drift, gamma_1
from .symmetry import orbit_of

log = logging.getLogger(__name__)

DEFAULT_R_SMALL = 0.1
DEFAULT_R_LARGE = 0.4
DEFAULT_MAX_TIME = 1e5
MAX_DT = 1e-3
CENSOR_WARN = 0.05
MIN_HITS = 100

# kernel status codes
HIT, CENSORED, NONFINITE, RETURNED = 0, 1, 2, 3
CSV_COLUMNS = ("sigma", "trial", "tau", "censored", "min_dist_O", "min_dist_A")


class UnderpoweredError(RuntimeError):
    """Not enough uncensored hits or successful transitions for a statistic."""


def default_dt(sigma: float) -> float:
    return min(MAX_DT, sigma * sigma / 4)


@dataclass(frozen=True)
class SdeParams:
    model: ModelParams
    noise: float
    dt: float | None = None
    seed: int = 0
    max_time: float = DEFAULT_MAX_TIME

    def __post_init__(self):
        if not self.noise >= 0:
            raise ValueError("noise must be >= 0")
        if self.dt is None:
            object.__setattr__(self, "dt", default_dt(self.noise) if self.noise > 0 else MAX_DT)
        limit = MAX_DT if self.noise == 0 else default_dt(self.noise)
        if not 0 < self.dt <= limit * (1 + 1e-12):
            raise ValueError(f"dt={self.dt} must lie in (0, {limit}]")
        if not self.max_time > 0:
            raise ValueError("max_time must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def max_steps(self) -> int:
        return int(math.ceil(self.max_time / self.dt))


@dataclass(frozen=True)
class HittingSpec:
    """Ball radii plus the centres the statistics refer to.

    ``a_orbit`` holds every group image of the relevant 1-saddle (empty when
    the origin is the gate, i.e. above the synchronisation threshold).
    """

    n_particles: int
    r_small: float = DEFAULT_R_SMALL
    r_large: float = DEFAULT_R_LARGE
    a_orbit: np.ndarray | None = None

    def __post_init__(self):
        if not 0 < self.r_small < self.r_large < 0.5:
            raise ValueError("radii must satisfy 0 < r_small < r_large < 1/2")
        a = np.zeros((0, self.n_particles)) if self.a_orbit is None else np.atleast_2d(np.asarray(self.a_orbit, float))
        if a.shape[1] != self.n_particles:
            raise ValueError("A-orbit points have the wrong dimension")
        object.__setattr__(self, "a_orbit", np.ascontiguousarray(a))

    def target(self, name: str) -> np.ndarray:
        n = self.n_particles
        if name == "I+":
            return np.ones(n)
        if name == "I-":
            return -np.ones(n)
        if name == "O":
            return np.zeros(n)
        raise ValueError(f"unknown target {name!r}")


def critical_orbit(p: ModelParams) -> np.ndarray:
    """Group images of the gate saddle between I- and I+ (empty above the threshold)."""
    if p.gamma >= gamma_1(p.n):
        return np.zeros((0, p.n))
    from .landscape import connect_saddles, find_stationary_points, minimax_saddle, synchronised_minima

    s = find_stationary_points(p)
    graph = connect_saddles(p, s)
    lo, hi = synchronised_minima(s)
    level, _ = minimax_saddle(graph, lo, hi)
    gates = {e.saddle for e in graph.edges if abs(graph.value(e.saddle) - level) < 1e-9}
    # one representative per orbit; its images cover the other gates
    reps = {s.points[i].orbit_id: i for i in sorted(gates, reverse=True)}
    return np.concatenate([orbit_of(s.points[i].coords).points for _, i in sorted(reps.items())])


def em_step(s: SdeParams, x, gaussians) -> np.ndarray:
    """One explicit Euler-Maruyama step (reference implementation)."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(gaussians, dtype=float)
    if x.shape != g.shape or x.shape[-1] != s.model.n:
        raise ValueError("state and noise must both have length N")
    out = x + s.dt * drift(s.model, x) + (s.noise * math.sqrt(s.dt)) * g
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite state")
    return out


# --- compiled kernel ---------------------------------------------------------


@numba.njit(cache=True)
def _dist2(x, c):
    acc = 0.0
    for i in range(x.shape[0]):
        d = x[i] - c[i]
        acc += d * d
    return acc


@numba.njit(cache=True)
def _run(x0, gamma, sigma, dt, max_steps, rng, start, target, r, big, a_orbit, conditioned):
    """Integrate one trajectory.

    Stops on entering ``B(target, r)`` (status HIT). With ``conditioned`` the
    path also stops, with status RETURNED, on re-entering ``B(start, r)``
    after having left ``B(start, big)``. Returns ``(status, steps, min
    distance to O, min distance to the A-orbit)``.
    """
    n = x0.shape[0]
    x = x0.copy()
    xn = np.empty(n)
    g = np.empty(n)
    amp = sigma * math.sqrt(dt)
    half = 0.5 * gamma
    r2, big2 = r * r, big * big
    d_o = math.inf
    d_a = math.inf
    left = False
    status = CENSORED
    steps = max_steps
    for step in range(1, max_steps + 1):
        for i in range(n):
            g[i] = rng.standard_normal()
        for i in range(n):
            xi = x[i]
            right = x[i + 1] if i + 1 < n else x[0]
            lft = x[i - 1] if i > 0 else x[n - 1]
            xn[i] = xi + dt * ((xi - xi * xi * xi) + half * ((right + lft) - 2.0 * xi)) + amp * g[i]
        norm = 0.0
        for i in range(n):
            x[i] = xn[i]
            norm += xn[i] * xn[i]
        if not math.isfinite(norm):
            status, steps = NONFINITE, step
            break
        if norm < d_o:
            d_o = norm
        for k in range(a_orbit.shape[0]):
            dk = _dist2(x, a_orbit[k])
            if dk < d_a:
                d_a = dk
        if _dist2(x, target) < r2:
            status, steps = HIT, step
            break
        if conditioned:
            ds = _dist2(x, start)
            if left:
                if ds < r2:
                    status, steps = RETURNED, step
                    break
            elif ds > big2:
                left = True
    return status, steps, math.sqrt(d_o), math.sqrt(d_a)


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream for trajectory ``index``."""
    return np.random.Generator(np.random.Philox(key=np.array([index, seed], dtype=np.uint64)))


@dataclass(frozen=True)
class HitRecord:
    sigma: float
    trial: int
    tau: float
    censored: bool
    min_dist_O: float
    min_dist_A: float
    status: int = HIT

    def row(self) -> tuple:
        return (self.sigma, self.trial, self.tau, self.censored, self.min_dist_O, self.min_dist_A)


def _simulate(s: SdeParams, spec: HittingSpec, x0, target: str, index: int, conditioned: bool) -> HitRecord:
    x0 = np.ascontiguousarray(np.asarray(x0, dtype=float))
    if x0.shape != (s.model.n,):
        raise ValueError("x0 has the wrong dimension")
    start = spec.target("I-") if conditioned else x0
    status, steps, d_o, d_a = _run(
        x0, s.model.gamma, s.noise, s.dt, s.max_steps, trajectory_rng(s.seed, index),
        np.ascontiguousarray(start), spec.target(target), spec.r_small, spec.r_large, spec.a_orbit, conditioned,
    )
    if status == NONFINITE:
        log.warning("trajectory %d blew up after %d steps", index, steps)
    return HitRecord(s.noise, index, steps * s.dt, status == CENSORED, d_o, d_a, int(status))


def first_hit(s: SdeParams, spec: HittingSpec, x0, target: str = "I+", index: int = 0) -> HitRecord:
    """First entrance time into ``B(target, r_small)`` with path minimum distances."""
    if np.linalg.norm(np.asarray(x0, float) - spec.target(target)) < spec.r_small:
        raise ValueError("x0 already lies in the target ball")
    return _simulate(s, spec, x0, target, index, conditioned=False)


def _batch(args) -> list[HitRecord]:
    s, spec, x0, target, indices, conditioned = args
    return [_simulate(s, spec, x0, target, i, conditioned) for i in indices]


def _map_trials(s, spec, x0, target, indices, conditioned, workers) -> list[HitRecord]:
    indices = list(indices)
    if workers <= 1 or len(indices) < 2:
        return _batch((s, spec, x0, target, indices, conditioned))
    chunks = [indices[k::workers] for k in range(workers)]
    with ProcessPoolExecutor(workers) as ex:
        parts = list(ex.map(_batch, [(s, spec, x0, target, c, conditioned) for c in chunks]))
    return sorted((r for part in parts for r in part), key=lambda r: r.trial)


def run_hits(s: SdeParams, spec: HittingSpec, n_trials: int, x0=None, target: str = "I+", workers: int = 1) -> list[HitRecord]:
    x0 = spec.target("I-") if x0 is None else x0
    return _map_trials(s, spec, x0, target, range(n_trials), False, workers)


@dataclass
class PassageStats:
    n_trials: int
    n_success: int
    passage_O: float
    passage_A: float
    records: list[HitRecord] = field(repr=False, default_factory=list)


def first_return_conditioned(
    s: SdeParams,
    spec: HittingSpec,
    x0=None,
    *,
    n_success: int = 100,
    max_trials: int = 10**7,
    batch: int = 2000,
    workers: int = 1,
) -> PassageStats:
    """Passage fractions among excursions from I- that reach I+ before returning.

    Each trial runs from ``x0`` until ``min(tau_+, tau_-)``, ``tau_-`` being
    the first return to ``B(I-, r_small)`` after leaving ``B(I-, r_large)``.
    Trials are drawn in batches until ``n_success`` of them end at I+.
    """
    x0 = spec.target("I-") if x0 is None else np.asarray(x0, float)
    if np.linalg.norm(x0 - spec.target("I-")) >= spec.r_small:
        raise ValueError("x0 must lie in the small ball around I-")
    ok: list[HitRecord] = []
    done = 0
    while len(ok) < n_success and done < max_trials:
        hi = min(done + batch, max_trials)
        recs = _map_trials(s, spec, x0, "I+", range(done, hi), True, workers)
        ok += [r for r in recs if r.status == HIT]
        done = hi
    if not ok:
        raise UnderpoweredError(f"no successful transition in {done} trials")
    if len(ok) < n_success:
        log.warning("only %d of %d requested successes within %d trials", len(ok), n_success, done)
    ok = ok[:n_success] if len(ok) > n_success else ok
    pass_o = float(np.mean([r.min_dist_O < spec.r_small for r in ok]))
    pass_a = float(np.mean([r.min_dist_A < spec.r_small for r in ok])) if len(spec.a_orbit) else math.nan
    return PassageStats(done, len(ok), pass_o, pass_a, ok)


# --- Arrhenius regression ------------------------------------------------------


@dataclass
class SigmaSummary:
    sigma: float
    n_hits: int
    n_censored: int
    mean_tau: float
    ci95: tuple[float, float]

    @property
    def censored_fraction(self) -> float:
        return self.n_censored / max(1, self.n_hits + self.n_censored)

    @property
    def flagged(self) -> bool:
        return self.censored_fraction > CENSOR_WARN


def summarise(records: list[HitRecord]) -> SigmaSummary:
    sig = records[0].sigma
    taus = np.array([r.tau for r in records if not r.censored and r.status == HIT])
    n_cens = sum(r.censored for r in records)
    if len(taus) == 0:
        return SigmaSummary(sig, 0, n_cens, math.nan, (math.nan, math.nan))
    m = float(np.mean(taus))
    half = 1.96 * float(np.std(taus, ddof=1)) / math.sqrt(len(taus)) if len(taus) > 1 else math.inf
    return SigmaSummary(sig, len(taus), n_cens, m, (m - half, m + half))


@dataclass
class TransitionStats:
    n_trials: int
    hit_times: list[HitRecord] = field(repr=False)
    per_sigma: list[SigmaSummary]
    slope: float
    intercept: float
    slope_stderr: float
    passage_O: float = math.nan
    passage_A: float = math.nan

    @property
    def arrhenius(self) -> tuple[float, float, float]:
        return self.slope, self.intercept, self.slope_stderr

    def monotone(self) -> bool:
        """Means strictly decrease with sigma, with non-overlapping 95% intervals."""
        ss = sorted(self.per_sigma, key=lambda q: q.sigma)
        return all(a.ci95[0] > b.ci95[1] for a, b in zip(ss, ss[1:]))

    def write_csv(self, path) -> None:
        write_hits_csv(self.hit_times, path)


def write_hits_csv(records: list[HitRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([repr(float(r.sigma)), r.trial, repr(float(r.tau)), int(r.censored), repr(float(r.min_dist_O)), repr(float(r.min_dist_A))])


def fit_arrhenius(per_sigma: list[SigmaSummary]) -> tuple[float, float, float]:
    inv = np.array([1 / q.sigma**2 for q in per_sigma])
    logs = np.log([q.mean_tau for q in per_sigma])
    res = stats.linregress(inv, logs)
    return float(res.slope), float(res.intercept), float(res.stderr)


def arrhenius_fit(template: SdeParams, sigmas, trials: int, spec: HittingSpec | None = None, *, workers: int = 1, min_hits: int = MIN_HITS) -> TransitionStats:
    """Mean first-hitting time of ``B(I+, r)`` from I- for each noise level, and the
    slope of ``ln E[tau]`` against ``1/sigma^2``."""
    sigmas = sorted({float(v) for v in sigmas}, reverse=True)
    if len(sigmas) < 3:
        raise ValueError("need at least three noise levels")
    spec = spec or HittingSpec(template.model.n)
    records, summaries = [], []
    for sig in sigmas:
        s = replace(template, noise=sig, dt=default_dt(sig) if template.dt is None or template.dt > default_dt(sig) else template.dt)
        recs = run_hits(s, spec, trials, workers=workers)
        q = summarise(recs)
        log.info("sigma=%.3f: %d hits, mean tau %.4g, censored %d", sig, q.n_hits, q.mean_tau, q.n_censored)
        if q.flagged:
            log.warning("sigma=%.3f: censored fraction %.1f%% above 5%%", sig, 100 * q.censored_fraction)
        if q.n_hits < min_hits:
            raise UnderpoweredError(f"sigma={sig}: only {q.n_hits} uncensored hits (need {min_hits})")
        records += recs
        summaries.append(q)
    slope, icpt, err = fit_arrhenius(summaries)
    return TransitionStats(len(records), records, summaries, slope, icpt, err)


def halved_dt_shift(template: SdeParams, trials: int, spec: HittingSpec | None = None, workers: int = 1) -> float:
    """Relative shift of ``ln E[tau]`` when the time step is halved (control run)."""
    spec = spec or HittingSpec(template.model.n)
    base = summarise(run_hits(template, spec, trials, workers=workers))
    half = summarise(run_hits(replace(template, dt=template.dt / 2), spec, trials, workers=workers))
    return abs(math.log(half.mean_tau) - math.log(base.mean_tau)) / abs(math.log(base.mean_tau))


# --- barrier near the threshold ------------------------------------------------


@dataclass
class BarrierConsistency:
    n_particles: int
    detunings: np.ndarray
    barriers: np.ndarray  # h_N from the landscape
    fitted_c: float
    expected_c: float

    @property
    def relative_error(self) -> float:
        return abs(self.fitted_c - self.expected_c) / self.expected_c


def expected_barrier_coefficient(n: int) -> float:
    return 0.25 if n in (2, 4) else 1.0 / 6.0


def barrier_consistency(n: int, detunings=(0.02, 0.04, 0.06, 0.08, 0.1), **kw) -> BarrierConsistency:
    """Fit ``h_N = 1/4 - c (1 - gamma/gamma_1)^2`` from landscape barriers."""
    from .landscape import barrier_height, connect_saddles, find_stationary_points

    d = np.asarray(detunings, dtype=float)
    if np.any(d <= 0) or np.any(d > 0.1 + 1e-12):
        raise ValueError("detunings must lie in (0, 0.1]")
    g1 = gamma_1(n)
    hs = []
    for delta in d:
        p = ModelParams(n, g1 * (1 - delta))
        hs.append(barrier_height(p, connect_saddles(p, find_stationary_points(p, **kw))))
    hs = np.array(hs)
    # least squares for c in 1/4 - h = c delta^2
    c = float(np.dot(d**2, 0.25 - hs) / np.dot(d**2, d**2))
    return BarrierConsistency(n, d, hs, c, expected_barrier_coefficient(n))
