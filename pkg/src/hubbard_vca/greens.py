"""From measured correlation traces to retarded Nambu Green's functions.

Measured traces are the real anticommutator correlators
``C_{mu nu}(tau) = <{sigma_mu(tau), sigma_nu(0)}>`` of the Hermitian
observables ``X = c + c^dag`` and ``Y = -i (c - c^dag)``.  The transform uses
the causal sign ``exp(+i omega tau)``, so a mode of energy ``E`` produces a
peak at ``omega = E``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.signal import czt

from .operators import DomainError


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid ``tau_n = n dtau`` for ``n = 0..n_max``.

    The companion frequency grid has ``omega_max = 1/(2 dtau)`` and spacing
    ``d_omega = 1/(2 tau_max)``, giving ``2 n_max + 1`` points.
    """

    dtau: float = 0.05
    n_max: int = 2000
    eta: float = np.pi / 50

    def __post_init__(self):
        if not self.dtau > 0:
            raise DomainError("dtau must be positive")
        if self.n_max < 1:
            raise DomainError("n_max must be >= 1")
        if self.eta < 0:
            raise DomainError("eta must be non-negative")

    @property
    def tau(self) -> np.ndarray:
        return self.dtau * np.arange(self.n_max + 1)

    @property
    def tau_max(self) -> float:
        return self.n_max * self.dtau

    @property
    def omega_max(self) -> float:
        return 1.0 / (2.0 * self.dtau)

    @property
    def d_omega(self) -> float:
        return 1.0 / (2.0 * self.tau_max)

    @property
    def omega(self) -> np.ndarray:
        m = int(round(self.omega_max / self.d_omega))
        return self.d_omega * np.arange(-m, m + 1)

    def frequency_grid(self) -> "FrequencyGrid":
        return FrequencyGrid(self.omega, self.eta)


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform real-frequency grid with the broadening used on it."""

    omega: np.ndarray
    eta: float

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        if w.ndim != 1 or w.size < 2:
            raise DomainError("frequency grid must be a 1-D array with >= 2 points")
        if not np.allclose(np.diff(w), w[1] - w[0], rtol=1e-9, atol=1e-12):
            raise DomainError("frequency grid must be uniform")
        object.__setattr__(self, "omega", w)

    @property
    def d_omega(self) -> float:
        return float(self.omega[1] - self.omega[0])

    @classmethod
    def uniform(cls, omega_max: float, d_omega: float, eta: float) -> "FrequencyGrid":
        m = int(round(omega_max / d_omega))
        return cls(d_omega * np.arange(-m, m + 1), eta)


@dataclass(frozen=True)
class NambuGreensFunction:
    """Retarded Nambu Green's function on a real frequency grid.

    ``matrices[w]`` is the ``2L x 2L`` matrix at ``omega[w] + i eta``.
    """

    omega: np.ndarray
    matrices: np.ndarray
    eta: float

    def __post_init__(self):
        m = np.asarray(self.matrices)
        if m.ndim != 3 or m.shape[1] != m.shape[2] or m.shape[1] % 2:
            raise DomainError("matrices must have shape (n_omega, 2L, 2L)")
        if m.shape[0] != len(self.omega):
            raise DomainError("frequency grid and matrices disagree in length")
        if not np.all(np.isfinite(m)):
            raise DomainError("Green's function has non-finite entries")

    @property
    def L_c(self) -> int:
        return self.matrices.shape[1] // 2

    @property
    def d_omega(self) -> float:
        return float(self.omega[1] - self.omega[0])

    @property
    def normal(self) -> np.ndarray:
        L = self.L_c
        return self.matrices[:, :L, :L]

    @property
    def anomalous(self) -> np.ndarray:
        L = self.L_c
        return self.matrices[:, :L, L:]

    def spectral_diagonal(self) -> np.ndarray:
        """``-Im G_aa / pi`` for every Nambu component, shape ``(n_omega, 2L)``."""
        return -np.diagonal(self.matrices, axis1=1, axis2=2).imag / np.pi


@dataclass(frozen=True)
class CorrelationRecord:
    """Correlation traces for every ordered pair of Hermitian observables.

    ``values[a, b, n]`` is ``C_{ab}(tau_n)``; observable ``2p`` is ``X`` and
    ``2p + 1`` is ``Y`` of Nambu orbital ``p`` (spin-up sites then spin-down).
    """

    tau: np.ndarray
    values: np.ndarray

    @property
    def n_orbitals(self) -> int:
        return self.values.shape[0] // 2

    def trace(self, kind_a: str, p: int, kind_b: str, q: int) -> np.ndarray:
        a = 2 * p + (kind_a == "Y")
        b = 2 * q + (kind_b == "Y")
        return self.values[a, b]


_INVERSE_JW = 0.5 * np.array([[1, 1, 1j, -1j],
                              [1, 1, -1j, 1j],
                              [1, -1, 1j, 1j],
                              [1, -1, -1j, -1j]])


def invert_xy(xx, yy, yx, xy) -> dict[str, np.ndarray]:
    """Fermionic correlators from the four X/Y traces of an orbital pair.

    Parameters
    ----------
    xx, yy, yx, xy
        Either arrays ``C(tau)`` or trace objects with ``tau`` and
        ``correlation`` attributes, all on the same time grid.

    Returns
    -------
    dict
        ``cc_dag``, ``cdag_c``, ``cc``, ``cdag_cdag``: the anticommutator
        correlators ``<{c_p(tau), c_q^dag}>`` and friends.  The measured
        traces equal ``2 Re <sigma_mu(tau) sigma_nu>``, so the matrix acts on
        half of each trace.
    """
    traces = [xx, yy, yx, xy]
    grids = [getattr(tr, "tau", None) for tr in traces]
    arrays = [np.asarray(getattr(tr, "correlation", tr)) for tr in traces]
    shape = arrays[0].shape
    if any(a.shape != shape for a in arrays):
        raise DomainError("traces must share one time grid")
    known = [g for g in grids if g is not None]
    if known and any(len(g) != len(known[0]) or not np.allclose(g, known[0]) for g in known):
        raise DomainError("traces must share one time grid")
    stacked = 0.5 * np.stack(arrays)
    out = np.tensordot(_INVERSE_JW, stacked, axes=(1, 0))
    return {"cc_dag": out[0], "cdag_c": out[1], "cc": out[2], "cdag_cdag": out[3]}


def nambu_time_series(record: CorrelationRecord) -> np.ndarray:
    """Assemble ``<{Psi_a(tau), Psi_b^dag}>`` for the Nambu spinor.

    Returns an array of shape ``(n_tau, 2L, 2L)``.
    """
    n_orb = record.n_orbitals
    L = n_orb // 2
    out = np.zeros((len(record.tau), n_orb, n_orb), dtype=complex)
    for a in range(n_orb):
        for b in range(n_orb):
            corr = invert_xy(record.trace("X", a, "X", b), record.trace("Y", a, "Y", b),
                             record.trace("Y", a, "X", b), record.trace("X", a, "Y", b))
            a_up, b_up = a < L, b < L
            if a_up and b_up:
                key = "cc_dag"
            elif a_up:
                key = "cc"          # <{c_up(tau), c_down}>
            elif b_up:
                key = "cdag_cdag"   # <{c^dag_down(tau), c^dag_up}>
            else:
                key = "cdag_c"      # <{c^dag_down(tau), c_down}>
            out[:, a, b] = corr[key]
    return out


def _causal_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = 0.5
    return w


def fourier_retarded(correlators, grid: TimeGrid, omega: np.ndarray | None = None,
                     method: str = "czt") -> np.ndarray:
    """Discrete Fourier transform of ``G^R(tau) = -i theta(tau) C(tau)``.

    ``G^R(omega_m) = dtau * sum_n w_n exp(i omega_m tau_n - eta tau_n) G^R(tau_n)``
    with ``w_0 = 1/2`` and ``w_n = 1`` otherwise.

    Parameters
    ----------
    correlators : ndarray, shape (n_max + 1, ...)
        Anticommutator correlators on ``grid.tau``; trailing axes are kept.
    grid : TimeGrid
    omega : ndarray, optional
        Uniform output grid; defaults to ``grid.omega``.
    method : {"czt", "direct"}
        Chirp-z evaluation or the explicit double sum.
    """
    corr = np.asarray(correlators, dtype=complex)
    tau = grid.tau
    if corr.shape[0] != len(tau):
        raise DomainError("correlators do not match the time grid")
    omega = grid.omega if omega is None else np.asarray(omega, dtype=float)
    damp = _causal_weights(len(tau)) * np.exp(-grid.eta * tau)
    flat = (-1j * corr.reshape(len(tau), -1)) * damp[:, None]
    if method == "direct":
        out = np.exp(1j * np.outer(omega, tau)) @ flat
    elif method == "czt":
        d_om = omega[1] - omega[0] if len(omega) > 1 else 0.0
        a = np.exp(-1j * omega[0] * grid.dtau)
        w = np.exp(1j * d_om * grid.dtau)
        out = czt(flat, m=len(omega), w=w, a=a, axis=0)
    else:
        raise DomainError(f"unknown method {method!r}")
    return grid.dtau * out.reshape(len(omega), *corr.shape[1:])


def retarded_transform(correlators: np.ndarray, grid: TimeGrid, omega: np.ndarray | None = None,
                       method: str = "czt") -> NambuGreensFunction:
    """Nambu Green's function from ``(n_max + 1, 2L, 2L)`` correlators."""
    omega = grid.omega if omega is None else np.asarray(omega, dtype=float)
    return NambuGreensFunction(omega, fourier_retarded(correlators, grid, omega, method), grid.eta)


def spectral_function(green: NambuGreensFunction) -> np.ndarray:
    """``-Im G / pi`` entrywise."""
    return -green.matrices.imag / np.pi


def moments(trace, s_max: int, dtau: float) -> np.ndarray:
    """Forward-difference moments ``C^(s)`` of a trace for ``s = 0..s_max``.

    ``C^(s) ~ dtau^-s sum_r (-1)^r binom(s, r) C((s - r) dtau)``; the
    truncation error is first order in ``dtau``.
    """
    c = np.asarray(getattr(trace, "correlation", trace))
    if s_max < 0 or s_max >= len(c):
        raise DomainError("s_max too large for the time grid")
    out = np.zeros(s_max + 1, dtype=complex)
    for s in range(s_max + 1):
        acc = sum((-1) ** r * comb(s, r) * c[s - r] for r in range(s + 1))
        out[s] = acc / dtau ** s
    return out


def parseval_ratio(signal: np.ndarray, grid: TimeGrid) -> float:
    """Frequency-domain energy over time-domain energy for a damped trace."""
    sig = np.asarray(signal, dtype=complex) * np.exp(-grid.eta * grid.tau)
    time_energy = grid.dtau * np.sum(np.abs(sig) ** 2)
    n = len(sig)
    spectrum = grid.dtau * np.fft.fft(sig, n=n)
    freq_energy = np.sum(np.abs(spectrum) ** 2) * (2 * np.pi / (n * grid.dtau)) / (2 * np.pi)
    return float(freq_energy / time_energy)
