"""Cell-free network geometry and correlated Rayleigh channel generation.

The simulated region is a square with wrap-around (torus) distances, so no
UE sits at an artificial cell edge.  Large-scale fading follows a log-distance
pathloss with log-normal shadowing; small-scale fading is correlated Rayleigh
with a Gaussian local-scattering model for multi-antenna APs.

By default the sampled channel is expressed relative to the receiver noise
level (entries divided by sqrt(noise power)), which puts the optimization
problem on a well-scaled footing: ``ChannelMatrix.sigma2`` is then exactly 1.
Bit error rates are unaffected — the receiver scaling absorbs the constant.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig


@dataclass(frozen=True)
class GeometryRealization:
    """AP/UE drop with wrap-around distances and arrival angles."""

    ap_pos: np.ndarray       # (L, 2) planar AP coordinates [m]
    ue_pos: np.ndarray       # (K, 2) planar UE coordinates [m]
    dist: np.ndarray         # (K, L) 3-D AP-UE distances [m]
    azimuth: np.ndarray      # (K, L) azimuth AP->UE [rad]
    elevation: np.ndarray    # (K, L) elevation from the height offset [rad]


@dataclass(frozen=True)
class ChannelMatrix:
    """Complex downlink channel with its real-valued lift.

    ``h`` has shape (K, M); row k concatenates the channel vectors of UE k
    to every AP antenna.  ``h_r`` is the 2K x 2M real lift
    [[Re, -Im], [Im, Re]] so complex products become real products.
    """

    h: np.ndarray
    h_r: np.ndarray
    sigma2: float
    largest_singular_value_sq: float

    @classmethod
    def from_h(cls, h: np.ndarray, sigma2: float) -> "ChannelMatrix":
        h = np.asarray(h, dtype=complex)
        smax = np.linalg.norm(h, 2)  # largest singular value; shared with h_r
        return cls(h=h, h_r=lift_matrix(h), sigma2=float(sigma2),
                   largest_singular_value_sq=float(smax**2))

    @property
    def num_ues(self) -> int:
        return self.h.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.h.shape[1]


# ---------------------------------------------------------------------------
# real lift helpers
# ---------------------------------------------------------------------------

def lift_matrix(h: np.ndarray) -> np.ndarray:
    """Real lift of a complex matrix: [[Re, -Im], [Im, Re]]."""
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


def lift_vector(z: np.ndarray) -> np.ndarray:
    """Stack [Re; Im] along axis 0 (works for vectors and column batches)."""
    z = np.asarray(z)
    return np.concatenate([z.real, z.imag], axis=0)


def unlift_vector(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`lift_vector`."""
    n = v.shape[0] // 2
    return v[:n] + 1j * v[n:]


# ---------------------------------------------------------------------------
# geometry and propagation
# ---------------------------------------------------------------------------

def wrap_delta(delta: np.ndarray, side: float) -> np.ndarray:
    """Shortest signed per-axis offset on a ring of circumference ``side``."""
    return (delta + side / 2.0) % side - side / 2.0


def generate_geometry(cfg: NetworkConfig, rng: np.random.Generator) -> GeometryRealization:
    """Drop APs and UEs uniformly on the square; compute torus distances.

    The planar offset between a UE and an AP is taken along the shortest
    wrap-around direction per axis (equivalent to minimizing over the nine
    torus images); the 3-D distance adds the fixed height difference.
    """
    cfg.validate()
    side = cfg.area_side_m
    ap_pos = rng.uniform(0.0, side, size=(cfg.num_aps, 2))
    ue_pos = rng.uniform(0.0, side, size=(cfg.num_ues, 2))
    delta = wrap_delta(ue_pos[:, None, :] - ap_pos[None, :, :], side)
    planar = np.sqrt((delta**2).sum(axis=-1))
    dist = np.sqrt(planar**2 + cfg.height_diff_m**2)
    azimuth = np.arctan2(delta[..., 1], delta[..., 0])
    elevation = np.arctan2(cfg.height_diff_m, planar)
    return GeometryRealization(ap_pos=ap_pos, ue_pos=ue_pos, dist=dist,
                               azimuth=azimuth, elevation=elevation)


def large_scale_fading(d: np.ndarray, cfg: NetworkConfig,
                       rng: np.random.Generator) -> np.ndarray:
    """Linear power gain: log-distance pathloss plus log-normal shadowing.

    gain_dB = gain_at_1km - 10 * alpha * log10(d / 1 km) + N(0, shadow_std^2),
    drawn independently per AP-UE pair.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("degenerate geometry: nonpositive AP-UE distance")
    gain_db = (cfg.gain_at_1km_db
               - 10.0 * cfg.pathloss_exponent * np.log10(d / 1000.0))
    if cfg.shadow_std_db > 0:
        gain_db = gain_db + rng.normal(0.0, cfg.shadow_std_db, size=d.shape)
    return 10.0 ** (gain_db / 10.0)


def noise_variance(cfg: NetworkConfig) -> float:
    """Receiver noise power in watts (thermal floor + noise figure).

    sigma^2 = 10^((-174 + 10 log10 B + NF) / 10) mW.  An explicit
    ``noise_variance_w`` in the config overrides the formula.
    """
    if cfg.noise_variance_w is not None:
        return float(cfg.noise_variance_w)
    dbm = -174.0 + 10.0 * np.log10(cfg.bandwidth_hz) + cfg.noise_figure_db
    return float(10.0 ** (dbm / 10.0) * 1e-3)


def spatial_correlation(azimuth: np.ndarray, elevation: np.ndarray,
                        gain: np.ndarray, cfg: NetworkConfig) -> np.ndarray:
    """Per-pair N x N correlation matrices, scaled by the large-scale gain.

    Gaussian local scattering on a half-wavelength ULA: small angular
    perturbations around the nominal azimuth/elevation with standard
    deviation ``angular_std_deg`` give the familiar closed-form Hermitian
    Toeplitz correlation.  N = 1 degenerates to the scalar gain.
    """
    n = cfg.antennas_per_ap
    gain = np.asarray(gain, dtype=float)
    if n == 1:
        return gain[..., None, None].astype(complex)
    sigma_phi = np.deg2rad(cfg.angular_std_deg)
    sigma_theta = np.deg2rad(cfg.angular_std_deg)
    phi = np.asarray(azimuth)[..., None]
    theta = np.asarray(elevation)[..., None]
    delta = np.arange(n, dtype=float)  # antenna index offsets
    phase = np.pi * delta * np.sin(phi) * np.cos(theta)
    az_spread = np.exp(-0.5 * (sigma_phi * np.pi * delta * np.cos(phi) * np.cos(theta)) ** 2)
    el_spread = np.exp(-0.5 * (sigma_theta * np.pi * delta * np.sin(phi) * np.sin(theta)) ** 2)
    first_row = np.exp(1j * phase) * az_spread * el_spread  # (..., N)
    idx = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    sign = np.where(np.arange(n)[:, None] >= np.arange(n)[None, :], 1.0, -1.0)
    # Hermitian Toeplitz from the first column/row pair: R[a,b] = r(a-b),
    # r(-d) = conj(r(d)).
    r = first_row[..., idx]
    r = np.where(sign > 0, r, np.conj(r))
    return gain[..., None, None] * r


def draw_channel(correlations: np.ndarray, rng: np.random.Generator,
                 sigma2: float = 1.0) -> ChannelMatrix:
    """Draw correlated Rayleigh fading: h_kl = R_kl^(1/2) w, w ~ CN(0, I).

    ``correlations`` has shape (K, L, N, N).  Square roots come from an
    eigendecomposition; tiny negative eigenvalues (numerical) are clipped
    to zero with a warning.
    """
    corr = np.asarray(correlations)
    k_num, l_num, n, _ = corr.shape
    w = (rng.standard_normal((k_num, l_num, n))
         + 1j * rng.standard_normal((k_num, l_num, n))) / np.sqrt(2.0)
    if n == 1:
        h_kl = np.sqrt(corr[..., 0, 0].real) * w[..., 0]
        h = h_kl.reshape(k_num, l_num)
    else:
        evals, evecs = np.linalg.eigh(corr)
        if np.any(evals < -1e-9 * np.maximum(1.0, np.abs(evals).max())):
            warnings.warn("correlation matrix had negative eigenvalues; clipped to 0")
        root = evecs * np.sqrt(np.clip(evals, 0.0, None))[..., None, :]
        h_kl = np.einsum("klmn,kln->klm", root, w)
        h = h_kl.reshape(k_num, l_num * n)
    return ChannelMatrix.from_h(h, sigma2)


def sample_channel(cfg: NetworkConfig, rng: np.random.Generator | None = None,
                   normalize: bool = True) -> ChannelMatrix:
    """Full pipeline: geometry -> fading -> correlation -> Rayleigh draw.

    With ``normalize`` (default) the channel is divided by sqrt(noise power)
    and ``sigma2`` is reported as 1; the noiseless case (noise override 0)
    skips normalization and reports ``sigma2 = 0``.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    geo = generate_geometry(cfg, rng)
    gain = large_scale_fading(geo.dist, cfg, rng)
    s2 = noise_variance(cfg)
    if normalize and s2 > 0:
        gain = gain / s2
        s2 = 1.0
    corr = spatial_correlation(geo.azimuth, geo.elevation, gain, cfg)
    return draw_channel(corr, rng, sigma2=s2)


# ---------------------------------------------------------------------------
# debugging dump (text matrix format)
# ---------------------------------------------------------------------------

def dump_channel(ch: ChannelMatrix, path) -> None:
    """Write a channel to a text file: header 'K M sigma2', then K rows of
    interleaved 're im' pairs (row-major)."""
    k_num, m = ch.h.shape
    with open(path, "w") as f:
        f.write(f"{k_num} {m} {ch.sigma2!r}\n")
        for row in ch.h:
            flat = np.empty(2 * m)
            flat[0::2] = row.real
            flat[1::2] = row.imag
            f.write(" ".join(repr(float(v)) for v in flat) + "\n")


def load_channel(path) -> ChannelMatrix:
    with open(path) as f:
        k_num, m, sigma2 = f.readline().split()
        k_num, m, sigma2 = int(k_num), int(m), float(sigma2)
        h = np.empty((k_num, m), dtype=complex)
        for i in range(k_num):
            vals = np.array([float(v) for v in f.readline().split()])
            h[i] = vals[0::2] + 1j * vals[1::2]
    return ChannelMatrix.from_h(h, sigma2)
