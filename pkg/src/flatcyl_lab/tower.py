"""Exponential Young towers with heavy-tailed piecewise-constant observables.

Two models live here.  The synthetic tower realizes the joint law
mu(R0 = n, J = alpha_i) = 2 sigma_i^2 n^{-3} for n >= 2 exactly, with the
residual mass parked at n = 1; the base is full-branch Gibbs-Markov with
affine branches, so in the default tau == 1 mode consecutive cells are
i.i.d. and the tail conditions hold by construction.  The coupled model
replaces the synthetic law by the true excursion statistics: winding counts
from the flux measure and neck times from the transition integrals.

Return times R have infinite variance (tails ~ n^{-3}); empirical second
moments are estimated by the median of per-block statistics throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta as _zeta

from .errors import InfeasibleTowerError
from .flux import exact_tail, sigma_R_sq, neck_time_interpolant
from .stats import (StatReport, ks_to_normal, loglog_fit, median_of_means,
                    median_of_variances, quantile_variance)
from .surface import ProfileParams

ZETA3 = float(_zeta(3.0))
FEASIBLE_SIGMA_TOT_SQ = 1.0 / (2.0 * (ZETA3 - 1.0))


@dataclass(frozen=True)
class TowerSpec:
    """Synthetic tower configuration.

    alphas      observable values alpha_i taken by J
    sigma_sqs   per-value weights sigma_i^2 (law 2 sigma_i^2 n^{-3}, n >= 2)
    tau_mode    "unit" (tau == 1, i.i.d. cells) or "geometric"
    tau_gamma   geometric ratio of the return-time tail in geometric mode
    tau_max     truncation of the geometric return times
    n_table     size of the inverse-CDF table for R0
    """

    alphas: tuple = (1.0, -1.0)
    sigma_sqs: tuple = (0.25, 0.25)
    tau_mode: str = "unit"
    tau_gamma: float = 0.5
    tau_max: int = 40
    n_table: int = 10 ** 7


class TowerModel:
    def __init__(self, spec: TowerSpec):
        if len(spec.alphas) != len(spec.sigma_sqs):
            raise InfeasibleTowerError("alphas and sigma_sqs length mismatch")
        if any(s < 0 for s in spec.sigma_sqs):
            raise InfeasibleTowerError("sigma_i^2 must be nonnegative")
        if spec.tau_mode not in ("unit", "geometric"):
            raise InfeasibleTowerError(f"unknown tau_mode {spec.tau_mode!r}")
        self.spec = spec
        self.sigma_tot_sq = float(sum(spec.sigma_sqs))
        tail_mass = 2.0 * self.sigma_tot_sq * (ZETA3 - 1.0)
        if tail_mass > 1.0 + 1e-15:
            raise InfeasibleTowerError(
                f"sigma_total^2 = {self.sigma_tot_sq} exceeds the feasibility "
                f"bound {FEASIBLE_SIGMA_TOT_SQ}")
        self.mass_n1 = 1.0 - tail_mass  # residual mass placed at n = 1
        self.sigma_J_sq = float(
            sum(a * a * s for a, s in zip(spec.alphas, spec.sigma_sqs)))
        if self.sigma_tot_sq > 0:
            self.p_alpha = np.array(
                [s / self.sigma_tot_sq for s in spec.sigma_sqs])
        else:
            # J == 0 degenerate branch: everything sits in the first cell
            self.p_alpha = np.array(
                [1.0 / len(spec.alphas)] * len(spec.alphas))
        self._cdf = None

    # -- exact law ---------------------------------------------------------

    def mu(self, n: int, i: int) -> float:
        """mu_Delta(R0 = n, J = alpha_i).

        The tail law defines the cells with n >= 2; the residual cell at
        n = 1 carries J = 0 (it is assigned to a zero entry of alphas when
        one exists, and is otherwise a separate implicit cell whose mass is
        the attribute mass_n1)."""
        if n < 1:
            return 0.0
        if n == 1:
            zeros = [j for j, a in enumerate(self.spec.alphas) if a == 0.0]
            if zeros and i == zeros[0]:
                return self.mass_n1
            return 0.0
        return 2.0 * self.spec.sigma_sqs[i] / n ** 3

    def mu_R0(self, n: int) -> float:
        if n == 1:
            return self.mass_n1
        return sum(self.mu(n, i) for i in range(len(self.spec.alphas)))

    def R0_tail(self, n: int) -> float:
        """P(R0 > n) exactly."""
        if n < 1:
            return 1.0
        k = np.arange(2, n + 1)
        h3 = float(np.sum(1.0 / k ** 3)) if n >= 2 else 0.0
        return 2.0 * self.sigma_tot_sq * (ZETA3 - 1.0 - h3)

    def R0_mean(self) -> float:
        zeta2 = math.pi ** 2 / 6.0
        return self.mass_n1 + 2.0 * self.sigma_tot_sq * (zeta2 - 1.0)

    def JR0_mean(self) -> float:
        # J = 0 on the residual cell; on tail cells J is independent of R0
        zeta2 = math.pi ** 2 / 6.0
        mean_J = float(np.dot(self.spec.alphas, self.p_alpha))
        return mean_J * 2.0 * self.sigma_tot_sq * (zeta2 - 1.0)

    def tau_values(self) -> np.ndarray:
        if self.spec.tau_mode == "unit":
            return np.array([1])
        return np.arange(1, self.spec.tau_max + 1)

    def tau_probs(self) -> np.ndarray:
        """Base-measure distribution of the return time tau."""
        if self.spec.tau_mode == "unit":
            return np.array([1.0])
        g = self.spec.tau_gamma
        w = (1.0 - g) * g ** np.arange(self.spec.tau_max)
        return w / w.sum()

    def tau_mean(self) -> float:
        return float(np.dot(self.tau_values(), self.tau_probs()))

    # -- sampling ----------------------------------------------------------

    def _build_cdf(self):
        n = np.arange(1, self.spec.n_table + 1, dtype=np.float64)
        pmf = 2.0 * self.sigma_tot_sq / n ** 3
        pmf[0] = self.mass_n1
        cdf = np.cumsum(pmf)
        cdf[-1] = max(cdf[-1], 1.0)  # clamp: tail mass beyond the table
        self._cdf = cdf

    def sample_R0(self, rng, size) -> np.ndarray:
        """i.i.d. R0 draws via the inverse-CDF table (tail clamped at
        n_table; mass beyond is ~ sigma_tot^2/n_table^2)."""
        if self.sigma_tot_sq == 0.0:
            return np.ones(size, dtype=np.int64)
        if self._cdf is None:
            self._build_cdf()
        u = rng.random(size)
        return np.searchsorted(self._cdf, u, side="right").astype(np.int64) + 1

    def sample_J(self, rng, size) -> np.ndarray:
        alphas = np.asarray(self.spec.alphas)
        idx = rng.choice(len(alphas), size=size, p=self.p_alpha)
        return alphas[idx]

    def sample_JR0(self, rng, shape):
        """(R0, J*R0) draws; the residual cell R0 = 1 carries J = 0."""
        r0 = self.sample_R0(rng, shape)
        j = self.sample_J(rng, shape)
        return r0, np.where(r0 == 1, 0.0, j * r0)

    def sample_tau(self, rng, size) -> np.ndarray:
        if self.spec.tau_mode == "unit":
            return np.ones(size, dtype=np.int64)
        return rng.choice(self.tau_values(), size=size, p=self.tau_probs())


def build_tower(spec: TowerSpec) -> TowerModel:
    return TowerModel(spec)


def exact_second_moment(model: TowerModel, p: int) -> float:
    """sum_{m <= p} sum_i alpha_i^2 m^2 mu(R0 = m, J = alpha_i) by direct
    summation of the exact law; grows like 2 sigma_J^2 log p + O(1)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    total = sum(a * a * model.mu(1, i)
                for i, a in enumerate(model.spec.alphas))
    if p >= 2 and model.sigma_tot_sq > 0:
        m = np.arange(2, p + 1, dtype=np.float64)
        inv = float(np.sum(1.0 / m))
        total += sum(a * a * 2.0 * s * inv
                     for a, s in zip(model.spec.alphas, model.spec.sigma_sqs))
    return float(total)


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

_OBSERVABLES = ("JR0", "R0", "indicator_base")


def simulate(model: TowerModel, n_steps, n_samples: int, seed: int,
             observable: str = "JR0", chunk: int = 4096):
    """Birkhoff sums of the observable over n_steps tower iterations for
    n_samples independent orbits.

    n_steps may be an int or an increasing sequence of checkpoints; the
    return value is an array (n_samples,) or a dict {n: array}.  In unit
    tau mode cells are i.i.d. and sums are accumulated chunkwise without
    materializing orbits.
    """
    if observable not in _OBSERVABLES:
        raise ValueError(f"unknown observable {observable!r}")
    scalar = np.isscalar(n_steps)
    grid = [int(n_steps)] if scalar else sorted(int(n) for n in n_steps)
    n_max = grid[-1]
    rng = np.random.default_rng(seed)

    if model.spec.tau_mode != "unit":
        out = _simulate_tower_orbits(model, grid, n_samples, rng, observable)
        return out[grid[0]] if scalar else out

    sums = np.zeros(n_samples, dtype=np.float64)
    out = {}
    done = 0
    targets = iter(grid)
    target = next(targets)
    while done < n_max:
        step = min(chunk, n_max - done, target - done)
        vals = _draw_values(model, rng, (n_samples, step), observable)
        sums += vals.sum(axis=1)
        done += step
        if done == target:
            out[target] = sums.copy()
            target = next(targets, None)
            if target is None:
                break
    return out[grid[0]] if scalar else out


def _draw_values(model, rng, shape, observable):
    if observable == "indicator_base":
        return np.ones(shape, dtype=np.float64)  # tau == 1: always at base
    if observable == "R0":
        return model.sample_R0(rng, shape).astype(np.float64)
    _, x = model.sample_JR0(rng, shape)
    return x


def _simulate_tower_orbits(model, grid, n_samples, rng, observable):
    """Geometric tau mode: walk the tower column by column."""
    out = {n: np.zeros(n_samples) for n in grid}
    for i in range(n_samples):
        series = orbit_series(model, grid[-1],
                              int(rng.integers(0, 2 ** 62)), observable)
        csum = np.cumsum(series)
        for n in grid:
            out[n][i] = csum[n - 1]
    return out


def orbit_series(model: TowerModel, n_steps: int, seed: int,
                 observable: str = "JR0") -> np.ndarray:
    """One long tower orbit as a value series of length n_steps.

    Observables are constant on columns, so the orbit is the cell sequence
    with each cell repeated tau times.
    """
    if observable not in _OBSERVABLES:
        raise ValueError(f"unknown observable {observable!r}")
    rng = np.random.default_rng(seed)
    tau_bar = model.tau_mean()
    pieces = []
    total = 0
    while total < n_steps:
        batch = int((n_steps - total) / tau_bar * 1.1) + 1024
        tau = model.sample_tau(rng, batch)
        if observable == "indicator_base":
            cell_vals = None
        elif observable == "R0":
            cell_vals = model.sample_R0(rng, batch)
        else:
            _, cell_vals = model.sample_JR0(rng, batch)
        if observable == "indicator_base":
            # 1 at level 0 of each column, 0 above
            series = np.zeros(int(tau.sum()), dtype=np.float64)
            series[np.concatenate(([0], np.cumsum(tau)[:-1]))] = 1.0
        else:
            series = np.repeat(cell_vals.astype(np.float64), tau)
        pieces.append(series)
        total += len(series)
    return np.concatenate(pieces)[:n_steps]


def orbit_series_pair(model: TowerModel, n_steps: int, seed: int):
    """(R0 series, J*R0 series) along one tower orbit; the two series are
    guaranteed to come from the same cell sequence."""
    rng = np.random.default_rng(seed)
    tau_bar = model.tau_mean()
    r_pieces, x_pieces = [], []
    total = 0
    while total < n_steps:
        batch = int((n_steps - total) / tau_bar * 1.1) + 1024
        tau = model.sample_tau(rng, batch)
        r0, x = model.sample_JR0(rng, batch)
        r_pieces.append(np.repeat(r0.astype(np.float64), tau))
        x_pieces.append(np.repeat(x, tau))
        total += len(r_pieces[-1])
    return (np.concatenate(r_pieces)[:n_steps],
            np.concatenate(x_pieces)[:n_steps])


# ---------------------------------------------------------------------------
# statistical experiments on the synthetic tower
# ---------------------------------------------------------------------------

def nonstandard_clt_test(model: TowerModel, observable: str, n_grid,
                         n_samples: int, seed: int,
                         blocks: int = 16) -> StatReport:
    """Variance ratio Var(S_n)/(n log n) against sigma_J^2 and KS distance
    of S_n/(n log n)^{1/2} to the fitted-variance normal.

    The summands have infinite variance, so any sample variance (blockwise
    or not) is inflated by stragglers; the ratio uses the IQR-based bulk
    variance, which tracks the CLT scale.
    """
    if model.sigma_J_sq == 0.0:
        sums = simulate(model, max(n_grid), n_samples, seed, observable)
        return StatReport(
            name="clt_degenerate",
            values={"max_abs_sum": float(np.max(np.abs(sums)))},
            seed=seed, notes="sigma_J^2 = 0: standard branch, sums vanish")
    grid = sorted(int(n) for n in n_grid)
    all_sums = simulate(model, grid, n_samples, seed, observable)
    mean_step = model.JR0_mean() if observable == "JR0" else model.R0_mean()
    rows = []
    ratios = {}
    ks = {}
    for n in grid:
        s = all_sums[n] - n * mean_step
        var = quantile_variance(s)
        ratio = var / (n * math.log(n))
        ratios[n] = ratio
        norm = s / math.sqrt(n * math.log(n))
        ks[n] = ks_to_normal(norm, ratio)
        rows.append({"n": n, "variance_ratio": ratio, "ks_distance": ks[n]})
    n_top = grid[-1]
    return StatReport(
        name="nonstandard_clt",
        values={"sigma_J_sq": model.sigma_J_sq,
                "ratio_final": ratios[n_top], "ks_final": ks[n_top],
                **{f"ratio_{n}": ratios[n] for n in grid}},
        rows=rows, seed=seed)


def pair_condition_check(model, k_max: int = 6, l_max: int = 6,
                         n_set=(1, 2, 8, 32), orbit_len: int = 2 * 10 ** 6,
                         seed: int = 0, eps: float = 0.5) -> StatReport:
    """Empirical joint law mu(R0 = k, R0 o f^n = l) against product tails.

    Returns the smallest feasible constants for the k^-3 l^-3 bound (coupled
    law) and the k^-(2+eps) l^-(2+eps) bound (synthetic condition).
    """
    if isinstance(model, CoupledModel):
        series = model.orbit_R_series(orbit_len, seed)
    else:
        series = orbit_series(model, orbit_len, seed, "R0")
    sup_c3 = 0.0
    sup_c2e = 0.0
    rows = []
    for n in n_set:
        a, b = series[:-n], series[n:]
        for k in range(1, k_max + 1):
            mask = a == k
            for l in range(1, l_max + 1):
                joint = float(np.mean(mask & (b == l)))
                c3 = joint * k ** 3 * l ** 3
                c2e = joint * k ** (2 + eps) * l ** (2 + eps)
                sup_c3 = max(sup_c3, c3)
                sup_c2e = max(sup_c2e, c2e)
                rows.append({"n": n, "k": k, "l": l, "joint": joint})
    return StatReport(
        name="pair_condition",
        values={"sup_C_cubed": sup_c3, "sup_C_2plus_eps": sup_c2e,
                "eps": eps},
        rows=rows, seed=seed)


def Adde_correlation(model: TowerModel, d: int, e: int, d_p: int, e_p: int,
                     n_max: int = 24, orbit_len: int = 4 * 10 ** 6,
                     seed: int = 0) -> StatReport:
    """Correlations of the centered truncated observables
    A_{d,e} = (J R0 - conditional mean) 1_{d <= R0 < e}; exponential decay
    fit in the lag."""
    r, x = orbit_series_pair(model, orbit_len, seed)

    def centered(lo, hi):
        ind = (r >= lo) & (r < hi)
        if not np.any(ind):
            return np.zeros_like(x)
        return (x - np.mean(x[ind])) * ind

    A = centered(d, e)
    Ap = centered(d_p, e_p)
    rows = []
    lags = range(1, n_max + 1)
    cors = []
    for n in lags:
        c = float(np.mean(A[:-n] * Ap[n:]))
        cors.append(c)
        rows.append({"lag": n, "corr": c})
    cors = np.array(cors)
    values = {"max_abs_corr": float(np.max(np.abs(cors)))}
    pos = np.abs(cors) > 0
    if model.spec.tau_mode != "unit" and np.sum(pos) >= 3:
        ln = np.log(np.abs(cors[pos]))
        nn = np.array(list(lags))[pos]
        slope = float(np.polyfit(nn, ln, 1)[0])
        values["fitted_gamma"] = math.exp(slope)
    return StatReport(name="Adde_correlation", values=values,
                      rows=rows, seed=seed)


# ---------------------------------------------------------------------------
# coupled model
# ---------------------------------------------------------------------------

class CoupledModel:
    """Tower over the true excursion law of the flat-cylinder sections.

    Cells n >= 1 carry the exact flux mass of {R_C = n}; the discrete
    return time is R = R_C + R_N with R_N the neck winding count (one
    winding per 2 pi of flow time, R_N = round(Upsilon_N / 2 pi)); J takes
    alpha0 / alpha_pi with probability 1/2 each on excursion cells.  The
    complement (non-winding crossings plus the rest of the section) is a
    single bounded cell with R = 1, J = 0.
    """

    def __init__(self, params: ProfileParams, A_total: float = 16.0 * math.pi,
                 alpha0: float = 1.0, alpha_pi: float = -1.0,
                 h_bar: float = 1.0, n_max: int = 10 ** 6,
                 quad_tol: float = 1e-9):
        if A_total <= 0:
            raise InfeasibleTowerError("A_total must be positive")
        self.params = params
        self.L = params.L
        self.A_total = A_total
        self.alpha0, self.alpha_pi = alpha0, alpha_pi
        self.h_bar = h_bar
        self.n_max = n_max

        n = np.arange(1, n_max + 1, dtype=np.float64)
        t_n = self.L / (n * math.pi)
        t_n1 = self.L / ((n + 1) * math.pi)
        sq_diff = (self.L / math.pi) ** 2 * (2 * n + 1) / (n * (n + 1)) ** 2
        sa = np.sqrt(1.0 + t_n ** 2)
        sb = np.sqrt(1.0 + t_n1 ** 2)
        masses = 8.0 * math.pi * sq_diff / (sa * sb * (sa + sb))
        self.p_exc = masses / A_total
        p_exc_total = float(self.p_exc.sum())
        if p_exc_total >= 1.0:
            raise InfeasibleTowerError(
                f"A_total = {A_total} too small for the excursion mass")
        self.p_bounded = 1.0 - p_exc_total

        # representative neck time per winding class: midpoint in tan(psi)
        ups = neck_time_interpolant(params, quad_tol=quad_tol)
        t_mid = 0.5 * (t_n + t_n1)
        x = np.maximum(1.0 - np.cos(np.arctan(t_mid)), 1e-13)
        self.R_neck = np.rint(2.0 * ups(x) / (2.0 * math.pi)).astype(np.int64)
        self.R_exc = np.arange(1, n_max + 1, dtype=np.int64) + self.R_neck

        self.sigma_R_sq = sigma_R_sq(self.L, A_total)
        self.I_v = alpha0 ** 2 + alpha_pi ** 2
        self.sigma_J_sq = 0.5 * self.sigma_R_sq * self.I_v
        self.tau_bar = 1.0
        self.R_bar = float(self.p_bounded
                           + np.dot(self.p_exc, self.R_exc))
        self.sigma_v_sq = self.sigma_J_sq / (h_bar * self.R_bar)
        self.b_S = self.sigma_R_sq / (2.0 * h_bar * self.R_bar)
        self._cdf = np.concatenate(([self.p_bounded],
                                    self.p_bounded + np.cumsum(self.p_exc)))

    # -- exact quantities --------------------------------------------------

    def phi_star_tail(self, n: int) -> float:
        """mu(phi_* > n) by exact summation over cells (tau == 1 so
        phi_* = R); ~ tau_bar sigma_R^2 n^{-2}."""
        mask = self.R_exc > n
        tail = float(self.p_exc[mask].sum())
        if n >= 1:
            # analytic remainder beyond the cell table
            tail += 4.0 * self.L ** 2 / math.pi / self.A_total / self.n_max ** 2
        return tail if n >= 1 else 1.0

    # -- sampling ----------------------------------------------------------

    def sample_cells(self, rng, size):
        """Cell indices: 0 = bounded, k >= 1 = winding class k."""
        u = rng.random(size)
        return np.searchsorted(self._cdf, u, side="right")

    def step_arrays(self, rng, size):
        """(R, J*R_C) per step of the section map."""
        idx = self.sample_cells(rng, size)
        R = np.where(idx == 0, 1, self.R_exc[np.maximum(idx - 1, 0)])
        sign = rng.random(size) < 0.5
        jval = np.where(sign, self.alpha0, self.alpha_pi)
        JRc = np.where(idx == 0, 0.0, jval * idx)
        return R, JRc

    def orbit_R_series(self, n_steps: int, seed: int) -> np.ndarray:
        """R_C values along the section map (for the pair condition)."""
        rng = np.random.default_rng(seed)
        return self.sample_cells(rng, n_steps)

    # -- experiments -------------------------------------------------------

    def wip_report(self, n: int, n_samples: int, t_list=(0.25, 0.5, 1.0),
                   seed: int = 0, chunk: int = 4096,
                   blocks: int = 16) -> StatReport:
        """Finite-dimensional marginals of W_n(t) = V_{t n}/(n log n)^{1/2},
        where flow time advances by h_bar * R per section step and V sums
        J * R_C.  Var(W_n(t)) is compared with sigma_v^2 t."""
        rng = np.random.default_rng(seed)
        t_list = sorted(t_list)
        thresholds = [t * n for t in t_list]
        time_acc = np.zeros(n_samples)
        v_acc = np.zeros(n_samples)
        W = {t: np.full(n_samples, np.nan) for t in t_list}
        pending = {t: np.ones(n_samples, dtype=bool) for t in t_list}
        norm = math.sqrt(n * math.log(n))
        while any(p.any() for p in pending.values()):
            R, JRc = self.step_arrays(rng, (n_samples, chunk))
            ct = time_acc[:, None] + np.cumsum(self.h_bar * R, axis=1)
            cv = v_acc[:, None] + np.cumsum(JRc, axis=1)
            for t, T in zip(t_list, thresholds):
                if not pending[t].any():
                    continue
                crossed_idx = (ct < T).sum(axis=1)
                hit = pending[t] & (crossed_idx < chunk)
                rows = np.nonzero(hit)[0]
                if rows.size:
                    ci = crossed_idx[rows]
                    val = np.where(ci > 0, cv[rows, np.maximum(ci - 1, 0)],
                                   v_acc[rows])
                    W[t][rows] = val / norm
                    pending[t][rows] = False
            time_acc = ct[:, -1]
            v_acc = cv[:, -1]
        values = {"sigma_v_sq": self.sigma_v_sq, "b_S": self.b_S,
                  "I_v": self.I_v, "R_bar": self.R_bar,
                  "identity_gap": abs(self.sigma_v_sq
                                      - self.b_S * self.I_v)}
        rows = []
        for t in t_list:
            var = quantile_variance(W[t])
            values[f"var_W_{t}"] = var
            values[f"target_{t}"] = self.sigma_v_sq * t
            rows.append({"t": t, "var": var,
                         "target": self.sigma_v_sq * t})
        # increment correlation between W(t1) and W(t2)-W(t1)
        t1, t2 = t_list[0], t_list[-1]
        inc = W[t2] - W[t1]
        c = np.corrcoef(W[t1], inc)[0, 1]
        values["increment_corr"] = float(c)
        return StatReport(name="wip_marginals", values=values,
                          rows=rows, seed=seed)


def decay_experiments(coupled: CoupledModel, orbit_len: int = 10 ** 8,
                      lags=tuple(int(2 ** k) for k in range(3, 8)),
                      seed: int = 0, tail_n: int = 1000) -> StatReport:
    """Return-tail and correlation-decay experiments on the coupled model.

    (i)  n^2 mu(phi_* > n) against tau_bar sigma_R^2 by exact summation;
    (ii) autocovariance of the section (renewal) indicator along a long
         orbit of the discrete-time suspension by R: fitted log-log slope
         over the lags and n*Cov against tau_bar sigma_R^2 (int v)(int w).
    """
    lags = sorted(int(l) for l in lags)
    if orbit_len < 100 * lags[-1]:
        raise ValueError("orbit too short for the requested lags")
    tail_ratio = (tail_n ** 2 * coupled.phi_star_tail(tail_n)
                  / (coupled.tau_bar * coupled.sigma_R_sq))

    # renewal indicator orbit: one section visit every R steps
    rng = np.random.default_rng(seed)
    v = np.zeros(orbit_len + 1, dtype=np.float32)
    filled = 0
    pos = 0
    while pos <= orbit_len:
        R, _ = coupled.step_arrays(rng, 1 << 20)
        epochs = pos + np.cumsum(R)
        v[pos] = 1.0
        inside = epochs[epochs <= orbit_len]
        v[inside] = 1.0
        pos = int(epochs[-1])
        filled += 1
    v = v[:orbit_len]
    vbar = float(v.mean())
    rows = []
    covs = []
    for lag in lags:
        c = float(np.dot(v[:-lag], v[lag:]) / (orbit_len - lag)) - vbar ** 2
        covs.append(c)
        rows.append({"lag": lag, "cov": c})
    covs = np.array(covs)
    slope, _, r2 = loglog_fit(lags, np.abs(covs))
    n_cov = np.array(lags) * covs
    target = coupled.tau_bar * coupled.sigma_R_sq * vbar * vbar
    return StatReport(
        name="decay",
        values={"tail_ratio": tail_ratio,
                "cov_slope": slope, "cov_slope_r2": r2,
                "n_cov_mean": float(np.mean(n_cov)),
                "n_cov_target": target, "v_bar": vbar},
        rows=rows, seed=seed)
