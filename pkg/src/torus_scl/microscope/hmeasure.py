"""Windowed-Fourier estimates of H-measures with continuous indexes.

For distribution fields ``U_r(., p)`` and a window ``Phi_m`` centred at
``x0`` the estimate of ``mu^{pq}_{x0}`` on a direction bin ``A`` is

    sum over nonzero frequencies k with k/|k| in A of
        F(Phi_m U_r(., p))(k) * conj(F(Phi_m U_r(., q))(k)),

with the unit-normalised DFT, so the total diagonal mass is the windowed
L2 norm ``int K_m |U_r(., p)|^2``.  Frequencies are integer vectors in
lattice coordinates and are mapped to physical directions ``(tau, D k)``
before binning.  The double limit (r first, then m) is walked as a ladder
over ``m_list x r_list`` and reported level by level.
"""

from dataclasses import dataclass, field
import csv
import io
import itertools

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .._validation import ConfigError, check_field_list
from .sphere import SphereBins
from .window import WindowSpec
from .young import YoungMeasureEstimate, YoungMeasureEstimator

M_LIST = (4, 8, 16)
R_LIST = (8, 16, 32, 64)
PSD_RTOL = 1e-6
PSD_ATOL = 1e-14
VARIATION_SLACK = 0.1
CS_TOL = 1e-6
CONTINUITY_SLACK = 0.1


def frequency_directions(shape, lattice=None, time_axis=False):
    """Physical frequency vectors for every DFT index, shape ``shape + (d,)``.

    Spatial indices ``k`` map to ``D k``; a leading time axis keeps its
    integer frequency.
    """
    ints = [np.fft.fftfreq(N, 1.0 / N) for N in shape]
    grids = np.stack(np.meshgrid(*ints, indexing="ij"), axis=-1)
    n_space = len(shape) - (1 if time_axis else 0)
    if lattice is not None:
        if lattice.dimension != n_space:
            raise ConfigError(
                f"lattice dimension {lattice.dimension} does not match {n_space} space axes", "lattice"
            )
        D = lattice.dual_generators
        s = slice(1, None) if time_axis else slice(None)
        grids[..., s] = grids[..., s] @ D.T
    return grids


@dataclass
class HMeasureMatrix:
    """Binned estimate ``entries[b, i, j] ~ mu^{p_i p_j}_{x0}(bin b)``.

    ``ladder`` maps each ``(m, r)`` level to its entry array; ``entries`` is
    the top level.
    """

    p_grid: np.ndarray
    bins: SphereBins
    entries: np.ndarray
    window: WindowSpec
    r_list: tuple = ()
    m_list: tuple = ()
    time_axis: bool = False
    field_shape: tuple = ()
    ladder: dict = field(default_factory=dict)

    @property
    def n_levels(self):
        return len(self.p_grid)

    def level(self, m, r):
        """The ladder level ``(m, r)`` as a matrix of its own."""
        try:
            ent = self.ladder[(m, r)]
        except KeyError:
            raise ConfigError(f"no ladder level {(m, r)}", "ladder") from None
        return HMeasureMatrix(
            self.p_grid, self.bins, ent, WindowSpec(self.window.center, m, self.window.periodic),
            (r,), (m,), self.time_axis, self.field_shape, {(m, r): ent},
        )

    def diagonal(self):
        """``mu^{pp}(bin)`` as a real array ``(bins, levels)``."""
        return np.real(np.einsum("bii->bi", self.entries))

    def total_mass(self, levels=None):
        """Sum of diagonal entries over bins and the chosen levels."""
        d = self.diagonal()
        return float(d.sum() if levels is None else d[:, list(levels)].sum())

    def variation(self):
        """``sum_bins |mu^{pq}(bin)|`` for every level pair."""
        return np.abs(self.entries).sum(axis=0)

    def bin_mass(self, kind="variation"):
        """Per-bin mass: ``"variation"`` sums ``|mu^{pq}|`` over pairs, ``"trace"`` the diagonal."""
        if kind == "trace":
            return self.diagonal().sum(axis=1)
        return np.abs(self.entries).sum(axis=(1, 2))

    def concentration(self, directions, levels=None):
        """Fraction of diagonal mass in the bins containing ``directions``."""
        chosen = sorted({self.bins.nearest(d) for d in directions})
        d = self.diagonal()
        if levels is not None:
            d = d[:, list(levels)]
        total = d.sum()
        return 0.0 if total <= 0 else float(d[chosen].sum() / total)

    def swapped(self, i, j):
        """Entry ``mu^{p_j p_i}`` for every bin (the conjugate of ``mu^{p_i p_j}``)."""
        return self.entries[:, j, i]

    def to_json(self):
        return {
            "p_grid": [float(p) for p in self.p_grid],
            "bins": self.bins.centers.tolist(),
            "bin_kind": self.bins.kind,
            "window": {"center": [float(c) for c in self.window.center], "m": int(self.window.m)},
            "r_list": [int(r) for r in self.r_list],
            "m_list": [int(m) for m in self.m_list],
            "entries": {
                "re": np.round(self.entries.real, 15).tolist(),
                "im": np.round(self.entries.imag, 15).tolist(),
            },
        }

    def ladder_rows(self, directions=None):
        """One row per ladder level: mass, change from the previous r, and concentration."""
        rows = []
        for m in self.m_list:
            prev = None
            for r in self.r_list:
                ent = self.ladder[(m, r)]
                mass = float(np.real(np.einsum("bii->", ent)))
                delta = float("nan") if prev is None else float(np.abs(ent - prev).max())
                row = {"m": int(m), "r": int(r), "mass": mass, "max_change": delta}
                if directions is not None:
                    row["concentration"] = self.level(m, r).concentration(directions)
                rows.append(row)
                prev = ent
        return rows

    def ladder_csv(self, directions=None):
        rows = self.ladder_rows(directions)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()


def _binned_products(G, labels, n_bins):
    """``sum_{k in bin} G[:, k] G[:, k]^*`` per bin, symmetrised to exact Hermitian."""
    L = G.shape[0]
    out = np.zeros((n_bins, L, L), dtype=complex)
    order = np.argsort(labels, kind="stable")
    sorted_labels = labels[order]
    cuts = np.searchsorted(sorted_labels, np.arange(n_bins + 1))
    Gs = G[:, order]
    for b in range(n_bins):
        blk = Gs[:, cuts[b]:cuts[b + 1]]
        if blk.shape[1]:
            E = blk @ blk.conj().T
            out[b] = (E + E.conj().T) / 2
    return out


class HMeasureEstimator(BaseEstimator):
    """Ladder of windowed H-measure estimates for a sequence ``u_r``.

    Parameters
    ----------
    m_list : sequence of int
        Window scales, walked in increasing order.
    center : sequence of float, optional
        Window centre ``x0`` in the unit cell; default the cell midpoint.
    bins : SphereBins, optional
        Direction bins; default by frequency-space dimension.
    young_windows : int or tuple
        Window grid of the Young-measure estimate (ignored if ``young`` is
        passed to :meth:`fit`).
    n_levels : int
    p_grid : array-like, optional
    time_axis : bool
        Treat axis 0 as non-periodic time (space-time fields).
    lattice : LatticeSpec, optional
        Maps spatial frequencies to physical ones; default the unit lattice.

    Attributes
    ----------
    matrix_ : HMeasureMatrix
    young_ : YoungMeasureEstimate
    """

    def __init__(self, m_list=M_LIST, center=None, bins=None, young_windows=1, n_levels=17,
                 p_grid=None, time_axis=False, lattice=None):
        self.m_list = m_list
        self.center = center
        self.bins = bins
        self.young_windows = young_windows
        self.n_levels = n_levels
        self.p_grid = p_grid
        self.time_axis = time_axis
        self.lattice = lattice

    def fit(self, fields, r_list=None, young=None):
        """Estimate from ``fields[i] = u_{r_list[i]}``, ordered by increasing ``r``."""
        stack = check_field_list(fields, "fields")
        shape = stack.shape[1:]
        r_list = tuple(range(1, len(stack) + 1)) if r_list is None else tuple(int(r) for r in r_list)
        if len(r_list) != len(stack):
            raise ConfigError("r_list and fields differ in length", "r_list")
        if any(b <= a for a, b in zip(r_list, r_list[1:])):
            raise ConfigError("r_list must be strictly increasing", "r_list")
        m_list = tuple(sorted(int(m) for m in self.m_list))
        if young is None:
            young = YoungMeasureEstimator(self.p_grid, self.n_levels, self.young_windows).fit(stack).estimate_
        elif not isinstance(young, YoungMeasureEstimate):
            raise ConfigError("young must be a YoungMeasureEstimate", "young")
        if self.p_grid is not None and not np.allclose(young.p_grid, self.p_grid, rtol=0, atol=1e-12):
            raise ConfigError("p_grid differs from the Young estimate's grid", "p_grid")
        ndim = len(shape)
        center = tuple(float(c) for c in (self.center if self.center is not None else (0.5,) * ndim))
        periodic = ((False,) if self.time_axis else ()) + (True,) * (ndim - (1 if self.time_axis else 0))
        bins = self.bins if self.bins is not None else SphereBins.default(ndim)
        if bins.dimension != ndim:
            raise ConfigError(f"bins live on S^{bins.dimension - 1}, fields have {ndim} axes", "bins")

        freq = frequency_directions(shape, self.lattice, self.time_axis).reshape(-1, ndim)
        nonzero = np.any(freq != 0, axis=1)
        labels = bins.assign(freq[nonzero] / np.linalg.norm(freq[nonzero], axis=1, keepdims=True))

        theta_levels = young.p_grid.reshape((-1,) + (1,) * ndim)
        u0 = young.u0_field(shape)
        Ufields = [(stack[i][None] > theta_levels).astype(float) - u0 for i in range(len(stack))]
        if all(not np.any(Uf) for Uf in Ufields):
            raise ConfigError("degenerate all-zero U fields", "fields")

        ladder = {}
        axes = tuple(range(1, ndim + 1))
        n_cells = int(np.prod(shape))
        for m in m_list:
            phi = WindowSpec(center, m, periodic).root_weights(shape)
            for r, Uf in zip(r_list, Ufields):
                G = np.fft.fftn(phi[None] * Uf, axes=axes) / n_cells
                G = G.reshape(len(young.p_grid), -1)[:, nonzero]
                ladder[(m, r)] = _binned_products(G, labels, len(bins))
        top = (m_list[-1], r_list[-1])
        self.young_ = young
        self.matrix_ = HMeasureMatrix(
            young.p_grid.copy(), bins, ladder[top], WindowSpec(center, top[0], periodic),
            r_list, m_list, self.time_axis, tuple(shape), ladder,
        )
        return self

    def predict(self, X=None):
        check_is_fitted(self, "matrix_")
        return self.matrix_


def hmeasure_estimate(fields, young=None, p_grid=None, window=None, bins=None, r_list=None,
                      m_list=None, lattice=None, time_axis=False, young_windows=1):
    """Functional form of :class:`HMeasureEstimator`.

    ``window`` may be a :class:`WindowSpec` (its ``m`` is a one-level
    ladder unless ``m_list`` is given) or ``None`` for the default ladder
    centred at the cell midpoint.
    """
    center = None
    if window is not None:
        center = window.center
        m_list = m_list if m_list is not None else (window.m,)
    est = HMeasureEstimator(
        m_list if m_list is not None else M_LIST, center, bins, young_windows,
        p_grid=p_grid if young is None else None, time_axis=time_axis, lattice=lattice,
    )
    if young is not None and p_grid is not None and not np.allclose(young.p_grid, p_grid, rtol=0, atol=1e-12):
        raise ConfigError("p_grid differs from the Young estimate's grid", "p_grid")
    return est.fit(fields, r_list, young).matrix_


@dataclass
class PropertyReport:
    """Outcome of the structural checks on one :class:`HMeasureMatrix`."""

    psd_worst: float
    variation_max: float
    cs_excess: float
    continuity_excess: float
    hermitian_error: float
    diagonal_min: float
    variation_bound: float = 1.0 + VARIATION_SLACK

    @property
    def psd_ok(self):
        return self.psd_worst >= 0

    @property
    def variation_ok(self):
        return self.variation_max <= self.variation_bound

    @property
    def cs_ok(self):
        return self.cs_excess <= CS_TOL

    @property
    def continuity_ok(self):
        return self.continuity_excess <= 0

    @property
    def hermitian_ok(self):
        return self.hermitian_error <= 1e-10

    @property
    def passed(self):
        return self.psd_ok and self.variation_ok and self.cs_ok and self.continuity_ok and self.hermitian_ok

    def to_json(self):
        return {
            "psd": {"ok": self.psd_ok, "worst_margin": self.psd_worst},
            "variation": {"ok": self.variation_ok, "max": self.variation_max, "bound": self.variation_bound},
            "cauchy_schwarz": {"ok": self.cs_ok, "max_excess": self.cs_excess},
            "continuity": {"ok": self.continuity_ok, "max_excess": self.continuity_excess},
            "hermitian": {"ok": self.hermitian_ok, "max_error": self.hermitian_error},
            "diagonal_min": self.diagonal_min,
            "passed": self.passed,
        }


def _local_interval_mass(H, nu):
    """``nu_{x0}((p_l, p_{l+1}])``: Young intervals averaged against the window ``K_m``."""
    shape = H.field_shape if H.field_shape else nu.shape
    try:
        K = H.window.weights(shape)
    except ConfigError:
        return nu.interval_mass(nu.window_of(H.window.center))
    u0 = nu.u0_field(shape)
    local = (u0 * K[None]).reshape(len(nu.p_grid), -1).mean(axis=1)
    return np.clip(local[:-1] - local[1:], 0.0, None)


def check_hmeasure_properties(H, nu, max_subset=4, continuity_slack=CONTINUITY_SLACK,
                              variation_slack=VARIATION_SLACK):
    """Positivity, variation, Cauchy-Schwarz and level-continuity checks.

    (a) every principal submatrix on at most ``max_subset`` levels has
    smallest eigenvalue at least ``-1e-6 * trace`` in every bin;
    (b) ``sum_bins |mu^{pq}| <= 1 + variation_slack``;
    (c) ``|mu^{pq}| <= sqrt(mu^{pp} mu^{qq}) + 1e-6`` per bin;
    (d) ``sum_bins |mu^{p'q} - mu^{pq}| <= 2 sqrt(nu((p, p'))) + slack``
    for adjacent levels ``p < p'`` and every ``q``, with ``nu`` localised
    by the window.
    """
    if len(H.p_grid) != len(nu.p_grid) or not np.allclose(H.p_grid, nu.p_grid, rtol=0, atol=1e-12):
        raise ConfigError("grid mismatch between H-measure and Young estimate", "p_grid")
    E = H.entries
    L = E.shape[1]
    herm = float(np.abs(E - np.conj(np.swapaxes(E, 1, 2))).max()) if E.size else 0.0
    diag = np.real(np.einsum("bii->bi", E))

    worst = np.inf
    for k in range(1, min(max_subset, L) + 1):
        subsets = np.array(list(itertools.combinations(range(L), k)))
        sub = E[:, subsets[:, :, None], subsets[:, None, :]]
        sub = (sub + np.conj(np.swapaxes(sub, -1, -2))) / 2
        lam = np.linalg.eigvalsh(sub)[..., 0]
        tr = np.real(np.einsum("...ii->...", sub))
        worst = min(worst, float((lam + PSD_RTOL * np.abs(tr) + PSD_ATOL).min()))

    var = float(np.abs(E).sum(axis=0).max()) if E.size else 0.0
    bound = np.sqrt(np.clip(diag[:, :, None] * diag[:, None, :], 0.0, None))
    cs = float((np.abs(E) - bound).max()) if E.size else 0.0

    cont = -np.inf
    if L > 1:
        nu_int = _local_interval_mass(H, nu)
        diff = np.abs(E[:, 1:, :] - E[:, :-1, :]).sum(axis=0)
        allowed = 2 * np.sqrt(nu_int)[:, None] + continuity_slack
        cont = float((diff - allowed).max())
    return PropertyReport(worst, var, cs, cont, herm, float(diag.min()) if diag.size else 0.0,
                          1.0 + variation_slack)
