"""Spectral-method sampler for real scalar fields on periodic lattices.

Lattice conventions
-------------------
Sites x = a*(n_1,...,n_D) with n_d in 0..N-1, volume V = (N a)^D, and the
discrete transform

    phi~_k = a^D sum_x phi_x exp(-i k.x),      k_j = 2 pi j / (N a),

with j in (-N/2, N/2] per axis and c(k) evaluated at the continuum |k| of
each mode (no sin-based lattice dispersion).  Under the density
exp[-(1/V) sum_k c(|k|) |phi~_k|^2] every mode then obeys the single
moment contract

    E[|phi~_k|^2] = V / (2 c(|k|))        (all modes, zero and Nyquist too),

which follows by Gaussian integration: a +/-k pair shares one complex
coefficient u+iv whose exponent is -(2 c/V)(u^2+v^2), so Var u = Var v =
V/(4c); a self-conjugate mode (j in {0, N/2} on every axis) is real with
exponent -(c/V)u^2, so Var u = V/(2c).  The generator draws exactly these
Gaussians in k-space and inverse-transforms.

Randomness is counter-based: sample ``i`` of seed ``s`` reads from a
Philox stream with key (s, tag) and counter block i, so streams are
reproducible and independent of how samples are scheduled over workers.
"""

from __future__ import annotations

import io
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateModeError, InvalidInputError
from .kernels import PhysicalConstants
from .spectra import Ensemble, SpectralDensity, spectral_coefficient

__all__ = [
    "LatticeSpec",
    "FieldConfiguration",
    "SpectrumAccumulator",
    "SpectrumEstimate",
    "sample_fields",
    "sample_array",
    "power_spectrum",
    "expected_power",
    "smear",
    "smear_variance",
    "hamiltonian_classical",
    "hamiltonian_quantum",
    "density_exponent",
    "write_samples_csv",
    "read_samples_csv",
    "write_samples_binary",
    "read_samples_binary",
    "spectrum_csv",
]

MAX_TOTAL_SITES = 2**24

#: Distinguishes field-sampling Philox streams from any other use of a seed.
_PHILOX_TAG = 0x4B474631  # "KGF1"

BINARY_MAGIC = b"KGF1"


@dataclass(frozen=True)
class LatticeSpec:
    """Periodic cubic lattice at fixed time."""

    dim: int = 1
    sites_per_axis: int = 64
    spacing: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise InvalidInputError(f"dim must be 1, 2 or 3, got {self.dim}")
        n = self.sites_per_axis
        if n < 8 or (n & (n - 1)) != 0:
            raise InvalidInputError(
                f"sites_per_axis must be a power of two >= 8, got {n}"
            )
        if not (math.isfinite(self.spacing) and self.spacing > 0):
            raise InvalidInputError(f"spacing must be > 0, got {self.spacing}")
        if n**self.dim > MAX_TOTAL_SITES:
            raise InvalidInputError(
                f"{n}^{self.dim} sites exceeds the {MAX_TOTAL_SITES} site guard"
            )

    @property
    def shape(self) -> tuple:
        return (self.sites_per_axis,) * self.dim

    @property
    def volume(self) -> float:
        return (self.sites_per_axis * self.spacing) ** self.dim

    @property
    def total_sites(self) -> int:
        return self.sites_per_axis**self.dim

    def axis_wavenumbers(self) -> np.ndarray:
        """Signed k_j = 2 pi j/(N a) in FFT layout, Nyquist mapped to +pi/a."""
        n, a = self.sites_per_axis, self.spacing
        k = 2.0 * math.pi * np.fft.fftfreq(n, d=a)
        k[n // 2] = abs(k[n // 2])
        return k

    def mode_magnitudes(self) -> np.ndarray:
        """|k| on the full mode grid, FFT layout, shape ``self.shape``."""
        axes = [self.axis_wavenumbers() for _ in range(self.dim)]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.sqrt(sum(g * g for g in grids))

    def mode_indices(self) -> np.ndarray:
        """Signed integer mode index j per axis, shape ``shape + (dim,)``."""
        n = self.sites_per_axis
        j = np.fft.fftfreq(n, d=1.0 / n).astype(int)
        j[n // 2] = abs(j[n // 2])
        grids = np.meshgrid(*[j for _ in range(self.dim)], indexing="ij")
        return np.stack(grids, axis=-1)


@dataclass(frozen=True)
class FieldConfiguration:
    """Real scalar field values on a lattice at fixed time."""

    lattice: LatticeSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.lattice.shape:
            raise InvalidInputError(
                f"values shape {values.shape} does not match lattice {self.lattice.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("field values must be finite")
        object.__setattr__(self, "values", values)

    def modes(self) -> np.ndarray:
        """phi~_k = a^D FFT(phi), FFT mode layout."""
        return self.lattice.spacing**self.lattice.dim * np.fft.fftn(self.values)


class _SpectrumPlan:
    """Precomputed per-mode scales and conjugation bookkeeping.

    Read-only after construction, so one plan can serve many samples and
    many threads.
    """

    def __init__(self, density: SpectralDensity, lattice: LatticeSpec,
                 pin_zero_mode: bool):
        self.lattice = lattice
        shape = lattice.shape
        n = lattice.sites_per_axis
        coeff = spectral_coefficient(density, lattice.mode_magnitudes())
        coeff = np.atleast_1d(np.asarray(coeff)).reshape(shape)

        pinned = np.zeros(shape, dtype=bool)
        bad = coeff <= 0.0
        if pin_zero_mode:
            zero = (0,) * lattice.dim
            if bad[zero]:
                pinned[zero] = True
                bad[zero] = False
        if np.any(bad):
            flat = int(np.argmax(bad))
            mode = np.unravel_index(flat, shape)
            signed = tuple(int(j) if j <= n // 2 else int(j - n) for j in mode)
            raise DegenerateModeError(signed, float(coeff[mode]))

        # conjugate-index map per axis: j -> (N - j) mod N
        rev = (n - np.arange(n)) % n
        conj_of = np.ix_(*[rev for _ in range(lattice.dim)])
        lin = np.arange(lattice.total_sites).reshape(shape)
        lin_conj = lin[conj_of]
        self.self_conjugate = lin == lin_conj
        self.canonical = lin <= lin_conj
        self.conj_of = conj_of

        volume = lattice.volume
        safe = np.where(coeff > 0.0, coeff, 1.0)
        self.scale_pair = np.sqrt(volume / (4.0 * safe))
        self.scale_self = np.sqrt(volume / (2.0 * safe))
        self.scale_pair[pinned] = 0.0
        self.scale_self[pinned] = 0.0
        self.coefficients = coeff
        self.pinned = pinned

    def draw(self, seed: int, sample_index: int) -> np.ndarray:
        """One field configuration's values, a pure function of (seed, index)."""
        key = np.array([np.uint64(seed), np.uint64(_PHILOX_TAG)], dtype=np.uint64)
        counter = np.array([0, np.uint64(sample_index), 0, 0], dtype=np.uint64)
        rng = np.random.Generator(np.random.Philox(key=key, counter=counter))
        z = rng.standard_normal(size=(2,) + self.lattice.shape)

        spectrum = (z[0] + 1j * z[1]) * self.scale_pair
        spectrum[self.self_conjugate] = (
            z[0][self.self_conjugate] * self.scale_self[self.self_conjugate]
        )
        spectrum = np.where(
            self.canonical, spectrum, np.conj(spectrum[self.conj_of])
        )

        a_pow = self.lattice.spacing**self.lattice.dim
        values = np.fft.ifftn(spectrum) / a_pow
        residue = float(np.max(np.abs(values.imag)))
        scale = max(float(np.max(np.abs(values.real))), 1e-300)
        if residue > 1e-12 * scale:
            raise InvalidInputError(
                f"inverse transform left imaginary residue {residue:.3e}"
            )
        return np.ascontiguousarray(values.real)


def sample_fields(density: SpectralDensity, lattice: LatticeSpec, seed: int,
                  n: int, pin_zero_mode: bool = False):
    """Yield ``n`` i.i.d. configurations drawn from the density.

    Deterministic given (seed, lattice, density, n); sample ``i`` never
    depends on how earlier samples were produced.
    """
    if n < 1:
        raise InvalidInputError(f"sample count must be >= 1, got {n}")
    plan = _SpectrumPlan(density, lattice, pin_zero_mode)
    for i in range(n):
        yield FieldConfiguration(lattice, plan.draw(seed, i))


def sample_array(density: SpectralDensity, lattice: LatticeSpec, seed: int,
                 n: int, pin_zero_mode: bool = False, workers: int = 1) -> np.ndarray:
    """All ``n`` samples stacked, shape (n,) + lattice.shape, ordered by index.

    ``workers > 1`` parallelizes generation over sample indices with
    threads; the output is byte-identical for every worker count.
    """
    if n < 1:
        raise InvalidInputError(f"sample count must be >= 1, got {n}")
    if workers < 1:
        raise InvalidInputError(f"worker count must be >= 1, got {workers}")
    plan = _SpectrumPlan(density, lattice, pin_zero_mode)
    out = np.empty((n,) + lattice.shape, dtype=float)
    if workers == 1:
        for i in range(n):
            out[i] = plan.draw(seed, i)
        return out

    def fill(block):
        for i in block:
            out[i] = plan.draw(seed, i)

    blocks = [range(w, n, workers) for w in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for future in [pool.submit(fill, b) for b in blocks]:
            future.result()
    return out


@dataclass(frozen=True)
class SpectrumEstimate:
    """Per-mode sample mean of |phi~_k|^2 with its standard error."""

    lattice: LatticeSpec
    mean: np.ndarray
    stderr: np.ndarray
    count: int


class SpectrumAccumulator:
    """Streaming per-mode moments of |phi~_k|^2.

    Accepts partitioned inputs: accumulators over disjoint sample sets
    merge associatively, so partial sums from parallel workers combine to
    the same estimate.
    """

    def __init__(self, lattice: LatticeSpec):
        self.lattice = lattice
        self.count = 0
        self._mean = np.zeros(lattice.shape)
        self._m2 = np.zeros(lattice.shape)

    def update(self, cfg: FieldConfiguration):
        if cfg.lattice != self.lattice:
            raise InvalidInputError("mixed lattice specs in one spectrum estimate")
        power = np.abs(cfg.modes()) ** 2
        self.count += 1
        delta = power - self._mean
        self._mean += delta / self.count
        self._m2 += delta * (power - self._mean)

    def merge(self, other: "SpectrumAccumulator") -> "SpectrumAccumulator":
        if other.lattice != self.lattice:
            raise InvalidInputError("mixed lattice specs in one spectrum estimate")
        merged = SpectrumAccumulator(self.lattice)
        total = self.count + other.count
        if total == 0:
            return merged
        delta = other._mean - self._mean
        merged.count = total
        merged._mean = self._mean + delta * (other.count / total)
        merged._m2 = (
            self._m2 + other._m2 + delta * delta * (self.count * other.count / total)
        )
        return merged

    def finalize(self) -> SpectrumEstimate:
        if self.count < 2:
            raise InvalidInputError("need at least 2 samples for a spectrum estimate")
        variance = self._m2 / (self.count - 1)
        stderr = np.sqrt(variance / self.count)
        return SpectrumEstimate(
            lattice=self.lattice,
            mean=self._mean.copy(),
            stderr=stderr,
            count=self.count,
        )


def power_spectrum(samples) -> SpectrumEstimate:
    """Per-mode mean of |phi~_k|^2 over a stream of configurations."""
    acc = None
    for cfg in samples:
        if acc is None:
            acc = SpectrumAccumulator(cfg.lattice)
        acc.update(cfg)
    if acc is None:
        raise InvalidInputError("need at least 2 samples for a spectrum estimate")
    return acc.finalize()


def expected_power(density: SpectralDensity, lattice: LatticeSpec,
                   pin_zero_mode: bool = False) -> np.ndarray:
    """The moment contract V/(2 c(k)) per mode (0 at a pinned zero mode)."""
    plan = _SpectrumPlan(density, lattice, pin_zero_mode)
    safe = np.where(plan.pinned, 1.0, plan.coefficients)
    out = lattice.volume / (2.0 * safe)
    out[plan.pinned] = 0.0
    return out


def smear(cfg: FieldConfiguration, test_values: np.ndarray) -> float:
    """a^D sum_x f(x) phi(x) for a test function sampled on the lattice."""
    f = np.asarray(test_values, dtype=float)
    if f.shape != cfg.lattice.shape:
        raise InvalidInputError(
            f"test function shape {f.shape} does not match lattice {cfg.lattice.shape}"
        )
    return float(cfg.lattice.spacing**cfg.lattice.dim * np.sum(f * cfg.values))


def smear_variance(density: SpectralDensity, lattice: LatticeSpec,
                   test_values: np.ndarray, pin_zero_mode: bool = False) -> float:
    """Ensemble variance of the smeared field:

        Var X[f] = (1/V^2) sum_k |f~_k|^2 * V/(2 c(k)),

    the lattice-Parseval consequence of the per-mode moment contract.
    """
    f = np.asarray(test_values, dtype=float)
    if f.shape != lattice.shape:
        raise InvalidInputError(
            f"test function shape {f.shape} does not match lattice {lattice.shape}"
        )
    f_modes = lattice.spacing**lattice.dim * np.fft.fftn(f)
    per_mode = expected_power(density, lattice, pin_zero_mode)
    return float(np.sum(np.abs(f_modes) ** 2 * per_mode) / lattice.volume**2)


def _mode_energies(cfg: FieldConfiguration, mass: float):
    power = np.abs(cfg.modes()) ** 2
    ksq = cfg.lattice.mode_magnitudes() ** 2
    return power, ksq + mass * mass


def hamiltonian_classical(cfg: FieldConfiguration,
                          constants: PhysicalConstants) -> float:
    """(1/V) sum_k (1/2)(|k|^2 + m^2) |phi~_k|^2."""
    power, omega_sq = _mode_energies(cfg, constants.mass)
    return float(np.sum(0.5 * omega_sq * power) / cfg.lattice.volume)


def hamiltonian_quantum(cfg: FieldConfiguration,
                        constants: PhysicalConstants) -> float:
    """(1/V) sum_k sqrt(|k|^2 + m^2) |phi~_k|^2."""
    power, omega_sq = _mode_energies(cfg, constants.mass)
    return float(np.sum(np.sqrt(omega_sq) * power) / cfg.lattice.volume)


def density_exponent(density: SpectralDensity, cfg: FieldConfiguration) -> float:
    """(1/V) sum_k c(|k|) |phi~_k|^2: the negative log-density up to a constant.

    Coincides with hamiltonian_classical/kT for the classical equilibrium
    ensemble and with hamiltonian_quantum/hbar for the quantum vacuum.
    """
    power = np.abs(cfg.modes()) ** 2
    coeff = spectral_coefficient(density, cfg.lattice.mode_magnitudes())
    return float(np.sum(coeff * power) / cfg.lattice.volume)


# --- file formats ----------------------------------------------------------


def write_samples_csv(stream, lattice: LatticeSpec, samples: np.ndarray):
    """One row per site: ``sample,site_index_0[,...],value``."""
    dim = lattice.dim
    index_cols = ",".join(f"site_index_{d}" for d in range(dim))
    stream.write(f"sample,{index_cols},value\n")
    site_indices = list(np.ndindex(lattice.shape))
    for s, values in enumerate(samples):
        flat = values.reshape(-1)
        for site, value in zip(site_indices, flat):
            idx = ",".join(str(i) for i in site)
            stream.write(f"{s},{idx},{value:.17g}\n")


def read_samples_csv(stream):
    """Inverse of :func:`write_samples_csv`; returns (dim, N, samples array)."""
    header = stream.readline().strip().split(",")
    if header[:1] != ["sample"] or header[-1:] != ["value"]:
        raise InvalidInputError(f"unexpected sample CSV header {header!r}")
    dim = len(header) - 2
    rows = []
    for line in stream:
        line = line.strip()
        if line:
            rows.append(line.split(","))
    if not rows:
        raise InvalidInputError("sample CSV has no data rows")
    n_samples = int(rows[-1][0]) + 1
    sites_per_axis = max(int(r[1]) for r in rows) + 1
    shape = (n_samples,) + (sites_per_axis,) * dim
    out = np.zeros(shape)
    for r in rows:
        s = int(r[0])
        site = tuple(int(v) for v in r[1:-1])
        out[(s,) + site] = float(r[-1])
    return dim, sites_per_axis, out


def write_samples_binary(stream, lattice: LatticeSpec, samples: np.ndarray):
    """Raw block: magic ``KGF1``, then D, N as int64 LE, a as float64 LE,
    then all values as float64 LE, row-major, samples concatenated in order."""
    stream.write(BINARY_MAGIC)
    stream.write(struct.pack("<q", lattice.dim))
    stream.write(struct.pack("<q", lattice.sites_per_axis))
    stream.write(struct.pack("<d", lattice.spacing))
    data = np.ascontiguousarray(samples, dtype="<f8")
    stream.write(data.tobytes())


def read_samples_binary(stream):
    """Inverse of :func:`write_samples_binary`; returns (lattice, samples)."""
    magic = stream.read(4)
    if magic != BINARY_MAGIC:
        raise InvalidInputError(f"bad magic {magic!r}, expected {BINARY_MAGIC!r}")
    dim = struct.unpack("<q", stream.read(8))[0]
    n = struct.unpack("<q", stream.read(8))[0]
    spacing = struct.unpack("<d", stream.read(8))[0]
    lattice = LatticeSpec(dim=dim, sites_per_axis=n, spacing=spacing)
    raw = np.frombuffer(stream.read(), dtype="<f8")
    per_sample = lattice.total_sites
    if raw.size % per_sample:
        raise InvalidInputError("binary payload is not a whole number of samples")
    samples = raw.reshape((-1,) + lattice.shape)
    return lattice, samples


def spectrum_csv(estimate: SpectrumEstimate, expected: np.ndarray) -> str:
    """CSV ``k_index_0[,...],mean,stderr,count,expected`` in signed-index order."""
    lattice = estimate.lattice
    dim = lattice.dim
    index_cols = ",".join(f"k_index_{d}" for d in range(dim))
    buf = io.StringIO()
    buf.write(f"{index_cols},mean,stderr,count,expected\n")
    signed = lattice.mode_indices().reshape(-1, dim)
    mean = estimate.mean.reshape(-1)
    stderr = estimate.stderr.reshape(-1)
    expect = np.asarray(expected).reshape(-1)
    for row in range(signed.shape[0]):
        idx = ",".join(str(int(v)) for v in signed[row])
        buf.write(
            f"{idx},{mean[row]:.17g},{stderr[row]:.17g},{estimate.count},"
            f"{expect[row]:.17g}\n"
        )
    return buf.getvalue()
