"""Analytic detection performance: missed-detection, false-alarm, and error
probabilities for the non-coherent detectors, plus threshold optimization.

Conditioned on the backscatter-link gain v, every test statistic is a
Hermitian quadratic form in complex Gaussians, so its characteristic
function is a product of exponential-component factors whose means are the
eigenvalues of (signal covariance + noise) — including the correlation the
multipath forward link induces across designated subcarriers. Marginalizing
over the Rayleigh gain (v^2 substitution, Gauss-Laguerre nodes) yields the
unconditional CF, and Gil-Pelaez inversion the probabilities.

Cross-device spectral wrap is not modeled: for layouts whose device images
stay inside the band (every fully-orthogonal OFSK layout, and MFSK layouts
where the last block's pairs fit) the conditional model is exact. A device's
own wrapped image onto its bit-0 set (possible for MFSK when the last data
subcarrier sits near the band edge) is modeled exactly through a joint
signed quadratic form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.linalg import eigh
from scipy.special import roots_laguerre

from .allocation import AllocationMap
from .config import OFSK, ValidatedConfig
from .gilpelaez import ExponentialMixtureCF, GridCdf, MixtureCF, cdf_gil_pelaez

H1_MODELS = ("eigen", "iid", "aggregate")


def bin_covariance(tap_powers, bins, n: int) -> np.ndarray:
    """Covariance of the channel frequency response across the given bins.

    C[a, b] = sum_l p_l e^{-j 2 pi (k_a - k_b) l / n}; unit diagonal when the
    tap powers sum to one.
    """
    k = np.asarray(bins, dtype=float)
    p = np.asarray(tap_powers, dtype=float)
    l = np.arange(p.size)
    delta = k[:, None] - k[None, :]
    return np.einsum("l,abl->ab", p, np.exp(-2j * np.pi * delta[..., None] * l / n))


def covariance_eigenvalues(tap_powers, bins, n: int) -> np.ndarray:
    c = bin_covariance(tap_powers, bins, n)
    w = np.linalg.eigvalsh(c)
    return np.clip(w, 0.0, None)


def signed_form_means(cov: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Eigen-means of z^H diag(signs) z for z ~ CN(0, cov)."""
    w, v = eigh(cov)
    w = np.clip(w, 0.0, None)
    s = v * np.sqrt(w)[None, :]
    a = s.conj().T @ (signs[:, None] * s)
    return np.linalg.eigvalsh(a)


def laguerre_rule(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for integral_0^inf f(g) e^{-g} dg (v^2 substitution)."""
    x, w = roots_laguerre(n_nodes)
    return x, w


def rayleigh_gain_rule(scale: float, per_panel: int = 24, tail_nodes: int = 32,
                       cap: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature for integral_0^inf f(g) e^{-g} dg when f transitions near a
    known small scale (the squared-gain detection knee, about sigma^2/alpha^2).

    Pure Gauss-Laguerre misses transitions far below its smallest node, which
    is exactly where missed-detection mass lives at high SNR. This rule lays
    log-spaced Gauss-Legendre panels across [0, cap] keyed to the scale and
    finishes with a shifted Laguerre tail.
    """
    pn, pw = np.polynomial.legendre.leggauss(per_panel)
    scale = float(min(max(scale, 1e-12), cap))
    edges = [0.0]
    g = scale
    while g < cap:
        edges.append(g)
        g *= 10.0
    edges.append(cap)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        x = mid + half * pn
        nodes.append(x)
        weights.append(half * pw * np.exp(-x))
    xt, wt = roots_laguerre(tail_nodes)
    nodes.append(cap + xt)
    weights.append(np.exp(-cap) * wt)
    return np.concatenate(nodes), np.concatenate(weights)


@dataclass(frozen=True)
class OfskSlice:
    """Everything the OFSK analytic point needs for one (config, SNR) cell."""

    n_bins: int
    sigma_w: float
    alpha_sq: float
    eigenvalues: tuple[float, ...]
    laguerre_nodes: int = 64
    h1_model: str = "eigen"

    def h0_cf(self) -> ExponentialMixtureCF:
        return ExponentialMixtureCF.erlang(self.n_bins, 1.0 / self.sigma_w)

    def h1_means_given_g(self, g: float) -> np.ndarray:
        if self.h1_model == "eigen":
            mu = np.asarray(self.eigenvalues)
        elif self.h1_model == "iid":
            mu = np.ones(self.n_bins)
        elif self.h1_model == "aggregate":
            # Literal reading with the per-bin channel powers summed inside
            # every component mean; kept for comparison, not for accuracy.
            mu = np.full(self.n_bins, float(np.sum(self.eigenvalues)))
        else:
            raise ValueError(f"unknown h1_model {self.h1_model!r}")
        return self.alpha_sq * g * mu + self.sigma_w

    def h1_cf_given_g(self, g: float) -> ExponentialMixtureCF:
        return ExponentialMixtureCF.from_means_grouped(self.h1_means_given_g(g))

    def h1_cf(self, refine: int = 1) -> MixtureCF:
        nodes, weights = rayleigh_gain_rule(self.sigma_w / max(self.alpha_sq, 1e-30),
                                            per_panel=24 * refine, tail_nodes=32 * refine)
        comps = tuple(self.h1_cf_given_g(float(g)) for g in nodes)
        return MixtureCF(weights=tuple(float(w) for w in weights), components=comps)


def ofsk_slice(config: ValidatedConfig, alloc: AllocationMap, snr_db: float,
               device: int = 1, h1_model: str = "eigen",
               laguerre_nodes: int = 64) -> OfskSlice:
    """Build the OFSK analytic inputs for one device at one SNR point.

    Requires the default single-tap backscatter link; with more taps the
    conditional Gaussian model no longer holds and we refuse rather than
    silently approximate.
    """
    if config.channel_profile.backscatter_taps != 1:
        raise ValueError("analytic OFSK curves require a single-tap backscatter link")
    d = alloc.device(device)
    read = d.bins1
    sources = [(k - d.shift_bit1) % alloc.n for k in read]
    powers = config.channel_profile.resolved_powers()["forward"]
    mu = covariance_eigenvalues(powers, sources, alloc.n)
    return OfskSlice(
        n_bins=len(read),
        sigma_w=config.sigma_w(snr_db),
        alpha_sq=abs(config.alpha[device - 1]) ** 2,
        eigenvalues=tuple(float(m) for m in mu),
        laguerre_nodes=laguerre_nodes,
        h1_model=h1_model,
    )


def ofsk_error_point(slice_: OfskSlice, gamma: float,
                     refine: int = 1) -> tuple[float, float]:
    """(PMD, PFA) at a threshold: PFA from the noise-only CDF, PMD from the
    Rayleigh-marginalized signal-plus-noise CDF."""
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if gamma == 0.0:
        return 0.0, 1.0
    pfa = 1.0 - cdf_gil_pelaez(slice_.h0_cf(), gamma)
    pmd = cdf_gil_pelaez(slice_.h1_cf(refine=refine), gamma)
    return pmd, pfa


def _search_cdf(cf, x_max: float):
    """Evaluator for the threshold search: shared-panel inversion normally,
    the elementary exponential-mixture CDF when every component is a single
    positive exponential (where the finite panel grid cannot work)."""
    comps = cf.components if isinstance(cf, MixtureCF) else (cf,)
    weights = cf.weights if isinstance(cf, MixtureCF) else (1.0,)
    simple = all(
        len(c.rates) == 1 and c.rates[0] > 0 and (not c.counts or c.counts[0] == 1)
        for c in comps
    )
    if simple:
        rates = np.array([c.rates[0] for c in comps])
        w = np.asarray(weights)

        def f(xs):
            xs = np.atleast_1d(np.asarray(xs, dtype=float))
            return np.clip((w[None, :] * (1.0 - np.exp(-np.outer(xs, rates)))).sum(axis=1),
                           0.0, 1.0)

        return f
    return GridCdf(cf, x_max)


def optimize_threshold(cf_h0, cf_h1, pfa_target: float | None = None,
                       coarse_points: int = 200) -> float:
    """Threshold minimizing (PMD+PFA)/2, or the smallest threshold meeting a
    false-alarm target when one is given.

    The unconstrained search walks a coarse grid over [0, 4 * mean_H1] with a
    shared-panel CDF evaluation, then refines by golden section to 1e-6
    relative tolerance.
    """
    if pfa_target is not None:
        hi = max(cf_h0.mean, cf_h1.mean) * 4.0
        while 1.0 - cdf_gil_pelaez(cf_h0, hi) > pfa_target:
            hi *= 2.0
        return float(optimize.brentq(
            lambda g: (1.0 - cdf_gil_pelaez(cf_h0, g)) - pfa_target,
            1e-12 * hi, hi, xtol=1e-12 * hi + 1e-300, rtol=1e-14,
        ))

    hi = cf_h1.mean * 4.0
    # Beyond the noise-only tail the false-alarm term is numerically zero and
    # the missed-detection CDF only grows, so the minimum cannot sit there;
    # clamping the evaluated range keeps the shared-panel quadrature small.
    h0_tail = cf_h0.mean + 80.0 * np.sqrt(max(cf_h0.var, 0.0))
    hi_eval = min(hi, 1.05 * h0_tail)
    f0 = _search_cdf(cf_h0, hi_eval)
    f1 = _search_cdf(cf_h1, hi_eval)
    grid = np.linspace(0.0, hi, coarse_points)
    grid = grid[grid <= hi_eval]
    if grid.size < 3:
        grid = np.linspace(0.0, hi_eval, coarse_points)
    pe = 0.5 * (f1(grid) + 1.0 - f0(grid))
    i = int(np.argmin(pe))
    lo = grid[max(i - 1, 0)]
    up = grid[min(i + 1, grid.size - 1)]

    def objective(g: float) -> float:
        x = np.array([g])
        return float(0.5 * (f1(x) + 1.0 - f0(x))[0])

    res = optimize.minimize_scalar(objective, bounds=(lo, up), method="bounded",
                                   options={"xatol": 1e-6 * max(hi, 1e-30)})
    return float(res.x)


def ofsk_operating_point(slice_: OfskSlice, pfa_target: float | None = None,
                         ) -> tuple[float, float, float, float]:
    """(gamma, pmd, pfa, pe) at the optimal or PFA-constrained threshold."""
    gamma = optimize_threshold(slice_.h0_cf(), slice_.h1_cf(), pfa_target=pfa_target)
    pmd, pfa = ofsk_error_point(slice_, gamma)
    return gamma, pmd, pfa, 0.5 * (pmd + pfa)


# ---------------------------------------------------------------------------
# MFSK pairwise comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MfskBitCase:
    """Structure of R0 - R1 for one true bit of one device.

    own_sources are the data subcarriers feeding the transmitted-image set,
    contam_sources those feeding bins of the opposite set reached by the same
    circular shift (the device's own wrap, usually empty). Signs are +1 for
    bins counted in R0 and -1 for bins counted in R1.
    """

    own_sources: tuple[int, ...]
    own_sign: int
    contam_sources: tuple[int, ...]
    noise_bins_own_sign: int
    noise_bins_other: int


@dataclass(frozen=True)
class MfskSlice:
    sigma_w: float
    alpha_sq: float
    n: int
    forward_powers: tuple[float, ...]
    cases: tuple[MfskBitCase, MfskBitCase]
    laguerre_nodes: int = 64

    def _signal_means(self, case: MfskBitCase, g: float) -> np.ndarray:
        srcs = list(case.own_sources) + list(case.contam_sources)
        signs = np.array([case.own_sign] * len(case.own_sources)
                         + [-case.own_sign] * len(case.contam_sources), dtype=float)
        cov = bin_covariance(self.forward_powers, srcs, self.n)
        sigma = self.alpha_sq * g * cov + self.sigma_w * np.eye(len(srcs))
        return signed_form_means(sigma, signs)

    def diff_cf_given_g(self, case: MfskBitCase, g: float) -> ExponentialMixtureCF:
        means = list(self._signal_means(case, g))
        means.extend([case.own_sign * self.sigma_w] * case.noise_bins_own_sign)
        means.extend([-case.own_sign * self.sigma_w] * case.noise_bins_other)
        return ExponentialMixtureCF.from_means_grouped(means)

    def diff_cf(self, case: MfskBitCase, refine: int = 1) -> MixtureCF:
        nodes, weights = rayleigh_gain_rule(self.sigma_w / max(self.alpha_sq, 1e-30),
                                            per_panel=24 * refine, tail_nodes=32 * refine)
        comps = tuple(self.diff_cf_given_g(case, float(g)) for g in nodes)
        return MixtureCF(weights=tuple(float(w) for w in weights), components=comps)


def mfsk_slice(config: ValidatedConfig, alloc: AllocationMap, snr_db: float,
               device: int = 1, laguerre_nodes: int = 64) -> MfskSlice:
    if config.channel_profile.backscatter_taps != 1:
        raise ValueError("analytic MFSK curves require a single-tap backscatter link")
    d = alloc.device(device)
    n = alloc.n
    data = set(alloc.data_bins)
    sets = {0: d.bins0, 1: d.bins1}
    shifts = {0: d.shift_bit0, 1: d.shift_bit1}
    cases = []
    for b in (0, 1):
        own = sets[b]
        other = sets[1 - b]
        own_sources = tuple(sorted((k - shifts[b]) % n for k in own))
        contam = tuple(sorted((k - shifts[b]) % n for k in other
                              if (k - shifts[b]) % n in data))
        sign = 1 if b == 0 else -1
        cases.append(MfskBitCase(
            own_sources=own_sources,
            own_sign=sign,
            contam_sources=contam,
            noise_bins_own_sign=0,
            noise_bins_other=len(other) - len(contam),
        ))
    powers = config.channel_profile.resolved_powers()["forward"]
    return MfskSlice(
        sigma_w=config.sigma_w(snr_db),
        alpha_sq=abs(config.alpha[device - 1]) ** 2,
        n=n,
        forward_powers=tuple(float(p) for p in powers),
        cases=(cases[0], cases[1]),
        laguerre_nodes=laguerre_nodes,
    )


def mfsk_error_point(slice_: MfskSlice, refine: int = 1) -> float:
    """Device error probability, averaged over the two transmitted bits.

    For true bit 0 the error is F_{R0-R1}(0); for true bit 1 it is the
    complementary tail of the corresponding signed difference.
    """
    case0, case1 = slice_.cases
    err0 = cdf_gil_pelaez(slice_.diff_cf(case0, refine=refine), 0.0)
    err1 = 1.0 - cdf_gil_pelaez(slice_.diff_cf(case1, refine=refine), 0.0)
    return 0.5 * (err0 + err1)


def mfsk_error_averaged(config: ValidatedConfig, alloc: AllocationMap,
                        snr_db: float, laguerre_nodes: int = 64) -> float:
    """Device average of the pairwise error probability."""
    errs = [
        mfsk_error_point(mfsk_slice(config, alloc, snr_db, device=p,
                                    laguerre_nodes=laguerre_nodes))
        for p in range(1, config.num_bds + 1)
    ]
    return float(np.mean(errs))


def error_curves(config: ValidatedConfig, alloc: AllocationMap,
                 snr_db_grid, pfa_target: float | None = None) -> list[dict]:
    """Analytic operating points across an SNR grid for the configured cell.

    OFSK rows carry (pmd, pfa, pe, gamma_opt); MFSK rows carry pe only
    (the pairwise test has no threshold).
    """
    out = []
    for snr in snr_db_grid:
        if config.modulation == OFSK:
            sl = ofsk_slice(config, alloc, snr)
            gamma, pmd, pfa, pe = ofsk_operating_point(sl, pfa_target=pfa_target)
            out.append(dict(snr_db=float(snr), pmd=pmd, pfa=pfa, pe=pe,
                            gamma_opt=gamma))
        else:
            pe = mfsk_error_averaged(config, alloc, snr)
            out.append(dict(snr_db=float(snr), pe=pe))
    return out
