"""Planar Euler-Bernoulli beam models and transient response simulation.

A single-span prismatic beam is meshed with two-node Hermite elements
(translation + rotation per node, cubic interpolation, consistent mass).
Supported end conditions are the four classical ones: clamped-free (CF),
simply supported (SS), clamped-simply supported (CS) and clamped-clamped
(CC).  Pinned ends constrain the translation only.

Measurement channels are the free vertical translation DOFs, ordered by node
number; transient analysis returns accelerations at those channels computed
by modal superposition with the exact piecewise-linear-excitation recurrence,
so the integrator adds no algorithmic damping or period distortion at any
step size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dsp import MultiChannelRecord

__all__ = [
    "Material",
    "BeamSection",
    "BeamModel",
    "GlobalSystem",
    "ModalSolution",
    "SUPPORTS",
    "element_matrices",
    "assemble_model",
    "modal_analysis",
    "characteristic_roots",
    "analytical_frequencies",
    "recording_duration",
    "transient_response",
]

SUPPORTS = ("CF", "SS", "CS", "CC")


@dataclass(frozen=True)
class Material:
    """Linear elastic material: Young's modulus [Pa], density [kg/m^3]."""

    elastic_modulus: float
    density: float
    poisson_ratio: float = 0.3

    def __post_init__(self):
        if self.elastic_modulus <= 0 or self.density <= 0:
            raise ValueError("elastic modulus and density must be positive")


@dataclass(frozen=True)
class BeamSection:
    """Rectangular cross-section (width x height, in meters)."""

    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("section dimensions must be positive")

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def second_moment(self) -> float:
        """Second moment of area about the bending axis, w*h^3/12."""
        return self.width * self.height ** 3 / 12.0


@dataclass(frozen=True)
class BeamModel:
    """Discretized single-span beam.

    Parameters
    ----------
    material, section
        Physical properties, uniform along the span.
    span : float
        Total length in meters.
    n_elements : int
        Number of equal-length Hermite elements.
    support : str
        One of ``CF``, ``SS``, ``CS``, ``CC``.
    damping_ratio : float
        Uniform modal damping ratio applied to every mode.
    """

    material: Material
    section: BeamSection
    span: float
    n_elements: int
    support: str
    damping_ratio: float = 0.025

    def __post_init__(self):
        if self.span <= 0:
            raise ValueError("span must be positive")
        if self.n_elements < 1:
            raise ValueError("n_elements must be >= 1")
        if self.support not in SUPPORTS:
            raise ValueError(f"support must be one of {SUPPORTS}")
        if not (0.0 <= self.damping_ratio < 1.0):
            raise ValueError("damping_ratio must lie in [0, 1)")

    @property
    def flexural_rigidity(self) -> float:
        return self.material.elastic_modulus * self.section.second_moment

    @property
    def mass_per_length(self) -> float:
        return self.material.density * self.section.area


@dataclass(frozen=True)
class GlobalSystem:
    """Assembled free-DOF system plus measurement channel bookkeeping.

    Attributes
    ----------
    stiffness, mass : ndarray
        Symmetric matrices on the free DOFs.
    free_dofs : tuple of int
        Global DOF ids (node * 2 for translation, node * 2 + 1 for rotation)
        retained after applying supports, ascending.
    channel_indices : tuple of int
        Positions of the free vertical translations within the free-DOF
        ordering; these are the measurement channels, ordered by node.
    channel_nodes : tuple of int
        One-based node number of each channel.
    node_coords : ndarray
        Axial coordinate of every node in meters.
    """

    stiffness: np.ndarray
    mass: np.ndarray
    free_dofs: tuple[int, ...]
    channel_indices: tuple[int, ...]
    channel_nodes: tuple[int, ...]
    node_coords: np.ndarray

    @property
    def n_free(self) -> int:
        return len(self.free_dofs)

    @property
    def n_channels(self) -> int:
        return len(self.channel_indices)

    @property
    def channel_labels(self) -> tuple[str, ...]:
        return tuple(f"node{n}" for n in self.channel_nodes)

    @property
    def channel_coords(self) -> np.ndarray:
        return self.node_coords[[n - 1 for n in self.channel_nodes]]


@dataclass(frozen=True)
class ModalSolution:
    """Mass-normalized modes of a :class:`GlobalSystem`.

    ``shapes`` has shape ``(n_free, n_modes)`` with ``shapes.T @ M @ shapes``
    equal to the identity; ``frequencies`` are in Hz, ascending.
    """

    frequencies: np.ndarray
    shapes: np.ndarray
    damping_ratio: float

    @property
    def n_modes(self) -> int:
        return self.frequencies.size

    def channel_shapes(self, system: GlobalSystem) -> np.ndarray:
        """Mode shapes restricted to the measurement channels (channels x modes)."""
        return self.shapes[list(system.channel_indices), :]


def element_matrices(beam: BeamModel) -> tuple[np.ndarray, np.ndarray]:
    """Return the 4x4 element stiffness and consistent mass matrices.

    DOF order is ``(v1, theta1, v2, theta2)``.  The stiffness block is the
    Hermite cubic bending stiffness; the mass block is the consistent mass of
    a uniform element.  Both are symmetric and the stiffness is singular with
    respect to rigid translation and rotation.
    """
    le = beam.span / beam.n_elements
    ei = beam.flexural_rigidity
    mu = beam.mass_per_length
    k = ei / le ** 3 * np.array([
        [12.0, 6.0 * le, -12.0, 6.0 * le],
        [6.0 * le, 4.0 * le ** 2, -6.0 * le, 2.0 * le ** 2],
        [-12.0, -6.0 * le, 12.0, -6.0 * le],
        [6.0 * le, 2.0 * le ** 2, -6.0 * le, 4.0 * le ** 2],
    ])
    m = mu * le / 420.0 * np.array([
        [156.0, 22.0 * le, 54.0, -13.0 * le],
        [22.0 * le, 4.0 * le ** 2, 13.0 * le, -3.0 * le ** 2],
        [54.0, 13.0 * le, 156.0, -22.0 * le],
        [-13.0 * le, -3.0 * le ** 2, -22.0 * le, 4.0 * le ** 2],
    ])
    return k, m


def _constrained_dofs(support: str, n_elements: int) -> set[int]:
    last = n_elements  # node index of the far end
    if support == "CF":
        return {0, 1}
    if support == "SS":
        return {0, 2 * last}
    if support == "CS":
        return {0, 1, 2 * last}
    return {0, 1, 2 * last, 2 * last + 1}  # CC


def assemble_model(beam: BeamModel) -> GlobalSystem:
    """Assemble global matrices and apply the support conditions.

    Clamped ends constrain translation and rotation; pinned ends constrain
    translation only.  The returned system may legitimately have zero
    channels (e.g. a one-element CC beam), which callers must handle.
    """
    ke, me = element_matrices(beam)
    n_nodes = beam.n_elements + 1
    ndof = 2 * n_nodes
    k = np.zeros((ndof, ndof))
    m = np.zeros((ndof, ndof))
    for e in range(beam.n_elements):
        idx = np.array([2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3])
        k[np.ix_(idx, idx)] += ke
        m[np.ix_(idx, idx)] += me
    fixed = _constrained_dofs(beam.support, beam.n_elements)
    free = tuple(d for d in range(ndof) if d not in fixed)
    kf = k[np.ix_(free, free)]
    mf = m[np.ix_(free, free)]
    channel_pos = tuple(i for i, d in enumerate(free) if d % 2 == 0)
    channel_nodes = tuple(free[i] // 2 + 1 for i in channel_pos)
    coords = np.linspace(0.0, beam.span, n_nodes)
    coords.setflags(write=False)
    kf.setflags(write=False)
    mf.setflags(write=False)
    return GlobalSystem(kf, mf, free, channel_pos, channel_nodes, coords)


def modal_analysis(beam: BeamModel, system: GlobalSystem,
                   n_modes: int | None = None) -> ModalSolution:
    """Solve the generalized eigenproblem and mass-normalize the modes.

    Parameters
    ----------
    beam, system
        Model and its assembled free-DOF system.
    n_modes : int, optional
        Number of lowest modes to keep; all free-DOF modes by default.

    Returns
    -------
    ModalSolution
        Frequencies in Hz ascending; shapes mass-normalized with the
        largest-magnitude channel entry of each mode positive.
    """
    if system.n_free == 0:
        raise ValueError("system has no free DOFs")
    if n_modes is None:
        n_modes = system.n_free
    if not (1 <= n_modes <= system.n_free):
        raise ValueError("n_modes must lie in [1, n_free]")
    w2, vec = scipy.linalg.eigh(system.stiffness, system.mass)
    w2 = w2[:n_modes]
    vec = vec[:, :n_modes]
    if np.any(w2 <= 0):
        raise ValueError("model has non-positive eigenvalues; check supports")
    # eigh(a, b) already returns B-orthonormal vectors; enforce exactly.
    norms = np.sqrt(np.einsum("ij,ij->j", vec, system.mass @ vec))
    vec = vec / norms
    rows = list(system.channel_indices) if system.n_channels else list(range(system.n_free))
    for j in range(vec.shape[1]):
        col = vec[rows, j]
        if col[np.argmax(np.abs(col))] < 0:
            vec[:, j] = -vec[:, j]
    freqs = np.sqrt(w2) / (2.0 * np.pi)
    freqs.setflags(write=False)
    vec.setflags(write=False)
    return ModalSolution(freqs, vec, beam.damping_ratio)


def _characteristic(support: str, lam: float) -> float:
    """Overflow-safe characteristic functions (divided through by cosh)."""
    if support == "CF":
        return np.cos(lam) + 1.0 / np.cosh(lam)
    if support == "CC":
        return np.cos(lam) - 1.0 / np.cosh(lam)
    # CS: sin(l)cosh(l) - cos(l)sinh(l) = 0, divided by cosh
    return np.sin(lam) - np.cos(lam) * np.tanh(lam)


def _bracket(support: str, k: int) -> tuple[float, float]:
    """Standard bracketing interval containing the k-th root (1-based)."""
    pi = np.pi
    if support == "CF":
        return ((k - 1) * pi, k * pi)
    return (k * pi, (k + 1) * pi)  # CC and CS


def characteristic_roots(support: str, n_modes: int) -> np.ndarray:
    """Roots of the continuous-beam characteristic equation.

    SS roots are ``k * pi`` exactly; the other supports are solved by
    bracketed bisection to an absolute tolerance of 1e-10.  If a bracket
    fails to straddle a sign change it is widened once by half an interval
    on each side before reporting an error.
    """
    if support not in SUPPORTS:
        raise ValueError(f"support must be one of {SUPPORTS}")
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    if support == "SS":
        return np.arange(1, n_modes + 1) * np.pi
    roots = np.empty(n_modes)
    for k in range(1, n_modes + 1):
        lo, hi = _bracket(support, k)
        flo, fhi = _characteristic(support, lo), _characteristic(support, hi)
        if flo * fhi > 0:
            lo, hi = max(lo - np.pi / 2, 1e-9), hi + np.pi / 2
            flo, fhi = _characteristic(support, lo), _characteristic(support, hi)
            if flo * fhi > 0:
                raise ValueError(f"no sign change bracketing root {k} for {support}")
        while hi - lo > 1e-10:
            mid = 0.5 * (lo + hi)
            fmid = _characteristic(support, mid)
            if flo * fmid <= 0:
                hi, fhi = mid, fmid
            else:
                lo, flo = mid, fmid
        roots[k - 1] = 0.5 * (lo + hi)
    return roots


def analytical_frequencies(beam: BeamModel, n_modes: int) -> np.ndarray:
    """Closed-form continuous-beam natural frequencies in Hz.

    ``f_k = lambda_k^2 * sqrt(EI / (rho A)) / (2 pi L^2)`` with the
    characteristic roots of the requested support condition.
    """
    lam = characteristic_roots(beam.support, n_modes)
    coef = np.sqrt(beam.flexural_rigidity / beam.mass_per_length) / (2.0 * np.pi * beam.span ** 2)
    return lam ** 2 * coef


def recording_duration(frequency: float, damping_ratio: float) -> float:
    """Guideline record length ``1 / (f * zeta)`` in seconds."""
    if frequency <= 0 or damping_ratio <= 0:
        raise ValueError("frequency and damping_ratio must be positive")
    return 1.0 / (frequency * damping_ratio)


def _recurrence_coefficients(omega: np.ndarray, zeta: float, dt: float):
    """Exact SDOF propagation coefficients for linearly interpolated forcing.

    For each modal equation ``q'' + 2 zeta w q' + w^2 q = p(t)`` with p linear
    over a step, state ``(q, q')`` advances as
    ``q+ = A q + B q' + C p0 + D p1`` and ``q'+ = A1 q + B1 q' + C1 p0 + D1 p1``.
    The recurrence is exact for the interpolated load, hence unconditionally
    stable and free of algorithmic damping.
    """
    w = np.asarray(omega, dtype=float)
    z = zeta
    sq = np.sqrt(1.0 - z * z)
    wd = w * sq
    e = np.exp(-z * w * dt)
    s = np.sin(wd * dt)
    c = np.cos(wd * dt)
    beta = z / sq
    k = w * w
    a = e * (beta * s + c)
    b = e * s / wd
    cc = (1.0 / k) * (2.0 * z / (w * dt)
                      + e * (((1.0 - 2.0 * z * z) / (wd * dt) - beta) * s
                             - (1.0 + 2.0 * z / (w * dt)) * c))
    dd = (1.0 / k) * (1.0 - 2.0 * z / (w * dt)
                      + e * ((2.0 * z * z - 1.0) / (wd * dt) * s
                             + 2.0 * z / (w * dt) * c))
    a1 = -e * (w / sq) * s
    b1 = e * (c - beta * s)
    c1 = (1.0 / k) * (-1.0 / dt + e * ((w / sq + beta / dt) * s + c / dt))
    d1 = (1.0 / (k * dt)) * (1.0 - e * (beta * s + c))
    return a, b, cc, dd, a1, b1, c1, d1


def _modal_superposition(omega: np.ndarray, zeta: float, modal_forces: np.ndarray,
                         dt: float, n_out: int):
    """Integrate every modal SDOF and return (q, qdot, qddot) histories.

    ``modal_forces`` has shape ``(n_modes, n_samples)`` with
    ``n_samples >= n_out``; the system starts from rest.
    """
    a, b, cc, dd, a1, b1, c1, d1 = _recurrence_coefficients(omega, zeta, dt)
    nm = omega.size
    q = np.zeros((nm, n_out))
    qd = np.zeros((nm, n_out))
    p = modal_forces
    for i in range(n_out - 1):
        q[:, i + 1] = a * q[:, i] + b * qd[:, i] + cc * p[:, i] + dd * p[:, i + 1]
        qd[:, i + 1] = a1 * q[:, i] + b1 * qd[:, i] + c1 * p[:, i] + d1 * p[:, i + 1]
    qdd = p[:, :n_out] - 2.0 * zeta * omega[:, None] * qd - (omega ** 2)[:, None] * q
    return q, qd, qdd


def transient_response(system: GlobalSystem, modal: ModalSolution,
                       forces: MultiChannelRecord, dt: float,
                       duration: float) -> MultiChannelRecord:
    """Simulate channel accelerations under nodal force histories.

    All modes contained in ``modal`` participate.  Forces are applied at the
    measurement channels (one force channel per free vertical DOF, sampled at
    ``1 / dt``); the returned record holds absolute accelerations at those
    channels with ``round(duration / dt) + 1`` samples.
    """
    if dt <= 0 or duration <= 0:
        raise ValueError("dt and duration must be positive")
    if abs(forces.sample_rate * dt - 1.0) > 1e-9:
        raise ValueError("forces sample rate must equal 1/dt")
    if forces.n_channels != system.n_channels:
        raise ValueError("forces must supply one channel per free vertical DOF")
    n_out = int(round(duration / dt)) + 1
    if forces.n_samples < n_out:
        raise ValueError("force record shorter than requested duration")
    phi_ch = modal.channel_shapes(system)           # channels x modes
    omega = 2.0 * np.pi * modal.frequencies
    p = phi_ch.T @ forces.data                      # modal forces
    _, _, qdd = _modal_superposition(omega, modal.damping_ratio, p, dt, n_out)
    acc = phi_ch @ qdd
    return MultiChannelRecord(1.0 / dt, acc, system.channel_labels)
