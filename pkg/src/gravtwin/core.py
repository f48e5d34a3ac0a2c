"""Units, species, grids, and the two-coordinate state container.

Everything downstream works in one of two unit modes.  SI mode keeps
values in SI and carries the CODATA constants.  Dimensionless mode
rescales so that hbar = 1 and the reference species has unit mass; the
single surviving knob is the coupling g = G m^3 l / hbar^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

HBAR_SI = 1.054571817e-34  # J s
NEWTON_G_SI = 6.67430e-11  # m^3 kg^-1 s^-2

# Quantity kinds the converters understand.  Everything in this code is
# expressible in these seven.
QUANTITY_KINDS = ("length", "mass", "time", "velocity", "momentum", "energy", "action")


class ValidationError(ValueError):
    """Bad physical or numerical input, rejected at construction."""


def _readonly(a: NDArray) -> NDArray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class UnitSystem:
    """Unit mode plus the scale factors tying code numbers to SI.

    length_unit / mass_unit / time_unit are the SI sizes of one code
    unit.  In SI mode all three are 1 (code numbers are SI numbers).  In
    dimensionless mode they record the rescaling, so conversions round
    trip exactly.
    """

    hbar: float
    G: float
    length_unit: float = 1.0
    mass_unit: float = 1.0
    time_unit: float = 1.0
    mode: str = "SI"

    def __post_init__(self) -> None:
        if self.mode not in ("SI", "dimensionless"):
            raise ValidationError(f"unknown unit mode {self.mode!r}")
        for name in ("hbar", "length_unit", "mass_unit", "time_unit"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be finite and > 0, got {v!r}")
        if not (math.isfinite(self.G) and self.G >= 0):
            raise ValidationError(f"G must be finite and >= 0, got {self.G!r}")
        if self.mode == "dimensionless" and self.hbar != 1.0:
            raise ValidationError("dimensionless mode requires hbar = 1")

    @classmethod
    def si(cls, G: float = NEWTON_G_SI) -> "UnitSystem":
        return cls(hbar=HBAR_SI, G=G, mode="SI")

    @classmethod
    def dimensionless(cls, g: float) -> "UnitSystem":
        """Bare dimensionless system with coupling g and unit scales."""
        return cls(hbar=1.0, G=g, mode="dimensionless")

    def scale(self, kind: str) -> float:
        """SI size of one code unit of the given quantity kind."""
        l, m, t = self.length_unit, self.mass_unit, self.time_unit
        try:
            return {
                "length": l,
                "mass": m,
                "time": t,
                "velocity": l / t,
                "momentum": m * l / t,
                "energy": m * l * l / (t * t),
                "action": m * l * l / t,
            }[kind]
        except KeyError:
            raise ValidationError(f"unknown quantity kind {kind!r}") from None

    def to_code(self, value: float, kind: str) -> float:
        return value / self.scale(kind)

    def from_code(self, value: float, kind: str) -> float:
        return value * self.scale(kind)

    def species_code(self, species: "ParticleSpecies") -> "ParticleSpecies":
        """The species expressed in this system's code units."""
        return ParticleSpecies(
            mass=species.mass / self.mass_unit,
            radius=species.radius / self.length_unit,
        )


@dataclass(frozen=True)
class ParticleSpecies:
    """Homogeneous sphere: all matter content there is."""

    mass: float  # kg in SI mode, code units otherwise
    radius: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mass) and self.mass > 0):
            raise ValidationError(f"mass must be finite and > 0, got {self.mass!r}")
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValidationError(f"radius must be finite and > 0, got {self.radius!r}")


def to_dimensionless(
    species: ParticleSpecies,
    units: UnitSystem,
    length_unit: float | None = None,
) -> UnitSystem:
    """Rescale an SI system to hbar = 1 and unit species mass.

    The length unit defaults to the species radius; the time unit
    follows as m l^2 / hbar.  The gravitational constant collapses to
    the dimensionless coupling g = G m^3 l / hbar^2.
    """
    if units.mode != "SI":
        raise ValidationError("to_dimensionless expects an SI unit system")
    l = species.radius if length_unit is None else length_unit
    if not (math.isfinite(l) and l > 0):
        raise ValidationError(f"length unit must be finite and > 0, got {l!r}")
    m = species.mass
    tau = m * l * l / units.hbar
    g = units.G * m**3 * l / units.hbar**2
    return UnitSystem(
        hbar=1.0, G=g, length_unit=l, mass_unit=m, time_unit=tau, mode="dimensionless"
    )


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid for one copy's coordinate."""

    x_min: float
    x_max: float
    n: int
    dx: float
    x: NDArray[np.float64] = field(repr=False)
    momentum_grid: NDArray[np.float64] = field(repr=False)  # wavenumbers, 1/m

    @property
    def span(self) -> float:
        return self.x_max - self.x_min


def make_grid(x_min: float, x_max: float, n: int) -> Grid1D:
    if not (math.isfinite(x_min) and math.isfinite(x_max) and x_max > x_min):
        raise ValidationError(f"need x_max > x_min, got [{x_min!r}, {x_max!r}]")
    if n < 8 or (n & (n - 1)) != 0:
        raise ValidationError(f"n must be a power of two >= 8, got {n!r}")
    dx = (x_max - x_min) / n
    x = x_min + dx * np.arange(n)
    # Standard transform ordering: frequencies 0, 1, ..., n/2-1, -n/2, ..., -1.
    k = 2.0 * math.pi * np.fft.fftfreq(n, d=dx)
    return Grid1D(
        x_min=x_min, x_max=x_max, n=n, dx=dx,
        x=_readonly(x), momentum_grid=_readonly(k),
    )


@dataclass(frozen=True)
class MetaState:
    """Complex amplitude field over the pair configuration (x, x~).

    amplitudes[i, j] is the value at (x[i], x~[j]).  The squared norm is
    the Riemann sum with weight dx^2.  Instances are immutable; the
    array is marked read only.
    """

    grid: Grid1D
    amplitudes: NDArray[np.complex128] = field(repr=False)
    time: float = 0.0

    def __post_init__(self) -> None:
        a = np.array(self.amplitudes, dtype=np.complex128, copy=True, order="C")
        if a.shape != (self.grid.n, self.grid.n):
            raise ValidationError(
                f"amplitudes shape {a.shape} does not match grid n={self.grid.n}"
            )
        if not np.all(np.isfinite(a.view(np.float64))):
            raise ValidationError("amplitudes contain non-finite entries")
        object.__setattr__(self, "amplitudes", _readonly(a))

    def norm(self) -> float:
        """l2 norm with the dx^2 Riemann weight."""
        return math.sqrt(float(np.vdot(self.amplitudes, self.amplitudes).real)) * self.grid.dx

    def exchange_asymmetry(self) -> float:
        """max |Psi(x, x~) - Psi(x~, x)|; zero for symmetric states."""
        return float(np.max(np.abs(self.amplitudes - self.amplitudes.T)))


@dataclass(frozen=True)
class ExternalPotential:
    """One-body potential applied identically to both copies.

    Kinds: none, uniform-field (slope a, V = a x), harmonic
    (V = m omega^2 x^2 / 2), tabulated (explicit samples on the grid).
    """

    kind: str = "none"
    slope: float = 0.0
    omega: float = 0.0
    samples: NDArray[np.float64] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in ("none", "uniform-field", "harmonic", "tabulated"):
            raise ValidationError(f"unknown potential kind {self.kind!r}")
        if self.kind == "tabulated":
            if self.samples is None:
                raise ValidationError("tabulated potential needs samples")
            s = np.array(self.samples, dtype=np.float64, copy=True)
            if s.ndim != 1 or not np.all(np.isfinite(s)):
                raise ValidationError("tabulated samples must be a finite 1D array")
            object.__setattr__(self, "samples", _readonly(s))
        elif not (math.isfinite(self.slope) and math.isfinite(self.omega)):
            raise ValidationError("potential parameters must be finite")

    @classmethod
    def null(cls) -> "ExternalPotential":
        return cls(kind="none")

    @classmethod
    def uniform_field(cls, slope: float) -> "ExternalPotential":
        return cls(kind="uniform-field", slope=slope)

    @classmethod
    def harmonic(cls, omega: float) -> "ExternalPotential":
        return cls(kind="harmonic", omega=omega)

    @classmethod
    def tabulated(cls, values: NDArray) -> "ExternalPotential":
        return cls(kind="tabulated", samples=np.asarray(values, dtype=np.float64))

    def sample(self, grid: Grid1D, species: ParticleSpecies, units: UnitSystem) -> NDArray[np.float64]:
        """V(x) on the grid, in the active unit system's energy unit."""
        if self.kind == "none":
            return np.zeros(grid.n)
        if self.kind == "uniform-field":
            return self.slope * grid.x
        if self.kind == "harmonic":
            return 0.5 * species.mass * self.omega**2 * grid.x**2
        assert self.samples is not None
        if self.samples.shape != (grid.n,):
            raise ValidationError(
                f"tabulated samples length {self.samples.shape} does not match grid n={grid.n}"
            )
        return self.samples.copy()


def gaussian_wavepacket(
    grid: Grid1D, center: float, width: float, momentum: float, hbar: float = 1.0
) -> NDArray[np.complex128]:
    """Normalized single-copy packet psi(x) ~ exp(-(x-c)^2/(4 s^2) + i p x / hbar).

    Convention: width s is the position standard deviation at t = 0, so
    the initial position variance is exactly s^2.
    """
    if not (math.isfinite(width) and width > 2.0 * grid.dx):
        raise ValidationError(
            f"width {width!r} under-resolved: need width > 2 dx = {2.0 * grid.dx}"
        )
    psi = np.exp(-((grid.x - center) ** 2) / (4.0 * width**2) + 1j * momentum * grid.x / hbar)
    nrm = math.sqrt(float(np.vdot(psi, psi).real) * grid.dx)
    if nrm == 0.0:
        raise ValidationError("packet has zero mass on the grid")
    psi /= nrm
    # Keep the packet away from the periodic seam: at most 1e-10 of the
    # probability may sit outside the central 80% of the domain.
    lo = grid.x_min + 0.1 * grid.span
    hi = grid.x_max - 0.1 * grid.span
    edge = (grid.x < lo) | (grid.x > hi)
    tail = float(np.sum(np.abs(psi[edge]) ** 2) * grid.dx)
    if tail >= 1e-10:
        raise ValidationError(
            f"packet touches the grid edge: tail mass {tail:.3e} outside the central 80%"
        )
    return psi


def product_metastate(grid: Grid1D, psi: NDArray, time: float = 0.0) -> MetaState:
    """Meta-state psi(x) psi(x~) from one single-copy wavefunction.

    The input is l2-normalized (weight dx) before the outer product, so
    the result has unit norm and exact exchange symmetry.
    """
    p = np.asarray(psi, dtype=np.complex128)
    if p.shape != (grid.n,):
        raise ValidationError(f"psi shape {p.shape} does not match grid n={grid.n}")
    nrm = math.sqrt(float(np.vdot(p, p).real) * grid.dx)
    if not (math.isfinite(nrm) and nrm > 0):
        raise ValidationError("psi is not normalizable")
    p = p / nrm
    amps = np.outer(p, p)
    # Fused multiply-adds in the outer product can leave a one-ulp skew
    # between (i, j) and (j, i); symmetrize so the invariant is exact.
    amps = 0.5 * (amps + amps.T)
    return MetaState(grid=grid, amplitudes=amps, time=time)


def gaussian_product_metastate(
    grid: Grid1D, center: float, width: float, momentum: float, hbar: float = 1.0
) -> MetaState:
    """Both copies in the same Gaussian packet; the only supported start.

    Asymmetric starts are not constructible here on purpose: the pair
    dynamics assumes the two copies begin identical.
    """
    psi = gaussian_wavepacket(grid, center, width, momentum, hbar)
    return product_metastate(grid, psi)
