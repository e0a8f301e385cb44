"""Lagrange-Euler dynamics of a serial revolute chain via 4x4 trace algebra.

Models one platform leg as a two-link chain (servo horn + coupling rod),
but every routine is written for an arbitrary number of revolute links.
The generalized inertia matrix, velocity coupling vector and gravity vector
come from trace expressions over partials of the cumulative link transforms,
with all partials realized as Q-matrix insertions.

Units are kg, mm, s; torques are therefore kg*mm^2/s^2 (divide by 1e3 for
N*mm, by 1e6 for N*m).  The link frame of each link sits at its distal
joint, standard Denavit-Hartenberg style, so a uniform rod of length L has
its centre of mass at (-L/2, 0, 0) in its own frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DHLink",
    "LegChainState",
    "dh_transform",
    "q_matrix",
    "u_matrix",
    "pseudo_inertia",
    "kinetic_matrix",
    "coriolis_vector",
    "gravity_vector",
    "joint_torque",
    "kinetic_energy",
    "potential_energy",
    "free_acceleration",
    "uniform_rod_link",
    "gravity_row",
    "KG_MM2_PER_NMM",
]

# 1 N*mm = 1000 kg*mm^2/s^2
KG_MM2_PER_NMM = 1000.0

_Q = np.array(
    [
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
    ]
)
_Q.setflags(write=False)


@dataclass(frozen=True)
class DHLink:
    """One revolute link: joint variable theta plus fixed DH constants.

    ``inertia`` is (Ixx, Iyy, Izz, Ixy, Ixz, Iyz) about the link-frame
    origin with products defined as integrals, Ixy = int(x*y dm).
    """

    theta: float
    length: float
    offset: float
    twist: float
    mass: float
    com: tuple[float, float, float]
    inertia: tuple[float, float, float, float, float, float]

    def __post_init__(self):
        vals = [self.theta, self.length, self.offset, self.twist, self.mass, *self.com, *self.inertia]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("link parameters must be finite")
        if self.mass < 0.0:
            raise ValueError("mass must be non-negative")
        ixx, iyy, izz = self.inertia[:3]
        if min(ixx, iyy, izz) < 0.0:
            raise ValueError("principal moments must be non-negative")
        # Each planar second moment int(x^2 dm) etc. must be non-negative,
        # which is the triangle inequality on the principal moments.
        slack = 1e-9 * max(ixx, iyy, izz, 1.0)
        if ixx + iyy - izz < -slack or iyy + izz - ixx < -slack or izz + ixx - iyy < -slack:
            raise ValueError("principal moments violate the triangle inequalities")
        object.__setattr__(self, "com", tuple(float(c) for c in self.com))
        object.__setattr__(self, "inertia", tuple(float(v) for v in self.inertia))


@dataclass(frozen=True)
class LegChainState:
    """Instantaneous joint angles, velocities and accelerations."""

    theta: tuple[float, ...]
    dtheta: tuple[float, ...]
    ddtheta: tuple[float, ...]

    def __post_init__(self):
        theta = tuple(float(v) for v in self.theta)
        dtheta = tuple(float(v) for v in self.dtheta)
        ddtheta = tuple(float(v) for v in self.ddtheta)
        if not (len(theta) == len(dtheta) == len(ddtheta)):
            raise ValueError("theta, dtheta, ddtheta must have equal length")
        if not all(math.isfinite(v) for v in theta + dtheta + ddtheta):
            raise ValueError("state values must be finite")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "dtheta", dtheta)
        object.__setattr__(self, "ddtheta", ddtheta)


def q_matrix() -> np.ndarray:
    """Derivative operator for revolute joints: d(A)/d(theta) = Q @ A."""
    return _Q


def gravity_row(gx: float, gy: float, gz: float) -> np.ndarray:
    """Homogeneous gravity row vector (gx, gy, gz, 0) in mm/s^2."""
    if not all(math.isfinite(v) for v in (gx, gy, gz)):
        raise ValueError("gravity components must be finite")
    return np.array([gx, gy, gz, 0.0])


def dh_transform(link: DHLink, theta: float | None = None) -> np.ndarray:
    """Homogeneous transform of one link at joint angle ``theta``."""
    th = link.theta if theta is None else theta
    if not math.isfinite(th):
        raise ValueError("theta must be finite")
    ct, st = math.cos(th), math.sin(th)
    ca, sa = math.cos(link.twist), math.sin(link.twist)
    a, d = link.length, link.offset
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def _check_chain(chain) -> tuple[DHLink, ...]:
    chain = tuple(chain)
    if not chain:
        raise ValueError("chain must contain at least one link")
    if not all(isinstance(link, DHLink) for link in chain):
        raise ValueError("chain entries must be DHLink instances")
    return chain


def _thetas(chain, state: LegChainState | None, thetas) -> tuple[float, ...]:
    if thetas is not None:
        vals = tuple(float(v) for v in thetas)
    elif state is not None:
        vals = state.theta
    else:
        vals = tuple(link.theta for link in chain)
    if len(vals) != len(chain):
        raise ValueError("need one joint angle per link")
    return vals


class _ChainProducts:
    """Cached partial products A_lo @ ... @ A_hi of the link transforms."""

    def __init__(self, chain, thetas):
        self.n = len(chain)
        self.a = [dh_transform(link, th) for link, th in zip(chain, thetas)]
        self._cache: dict[tuple[int, int], np.ndarray] = {}
        self._u: dict[tuple[int, int], np.ndarray] = {}
        self._u2: dict[tuple[int, int, int], np.ndarray] = {}

    def prod(self, lo: int, hi: int) -> np.ndarray:
        """Product of link transforms lo..hi inclusive (identity if lo > hi)."""
        if lo > hi:
            return np.eye(4)
        key = (lo, hi)
        if key not in self._cache:
            t = self.a[lo]
            for k in range(lo + 1, hi + 1):
                t = t @ self.a[k]
            self._cache[key] = t
        return self._cache[key]

    def world(self, i: int) -> np.ndarray:
        return self.prod(0, i)

    def u(self, i: int, j: int) -> np.ndarray:
        """First partial of the cumulative transform of link i wrt joint j."""
        if j > i:
            return np.zeros((4, 4))
        key = (i, j)
        if key not in self._u:
            self._u[key] = self.prod(0, j - 1) @ _Q @ self.prod(j, i)
        return self._u[key]

    def u2(self, i: int, j: int, k: int) -> np.ndarray:
        """Second partial wrt joints j and k (both at or below link i)."""
        if j > i or k > i:
            return np.zeros((4, 4))
        lo, hi = min(j, k), max(j, k)
        key = (i, lo, hi)
        if key not in self._u2:
            self._u2[key] = (
                self.prod(0, lo - 1) @ _Q @ self.prod(lo, hi - 1) @ _Q @ self.prod(hi, i)
            )
        return self._u2[key]


def u_matrix(chain, i: int, j: int, thetas=None) -> np.ndarray:
    """Partial of the world transform of link ``i`` wrt joint ``j`` (0-based).

    Zero whenever ``j > i`` since distal joints cannot move proximal links.
    """
    chain = _check_chain(chain)
    n = len(chain)
    for name, idx in (("i", i), ("j", j)):
        if not isinstance(idx, (int, np.integer)) or isinstance(idx, bool):
            raise ValueError(f"{name} must be an integer")
        if not 0 <= idx < n:
            raise ValueError(f"{name} must be in 0..{n - 1}, got {idx}")
    return _ChainProducts(chain, _thetas(chain, None, thetas)).u(int(i), int(j))


def pseudo_inertia(link: DHLink) -> np.ndarray:
    """4x4 pseudo-inertia: second mass moments, first moments and mass.

    Diagonal second moments come from the principal moments via
    int(x^2 dm) = (-Ixx + Iyy + Izz) / 2 and cyclic permutations.
    """
    ixx, iyy, izz, ixy, ixz, iyz = link.inertia
    sx = 0.5 * (-ixx + iyy + izz)
    sy = 0.5 * (ixx - iyy + izz)
    sz = 0.5 * (ixx + iyy - izz)
    m = link.mass
    cx, cy, cz = link.com
    return np.array(
        [
            [sx, ixy, ixz, m * cx],
            [ixy, sy, iyz, m * cy],
            [ixz, iyz, sz, m * cz],
            [m * cx, m * cy, m * cz, m],
        ]
    )


_PSEUDO_CACHE: dict[DHLink, np.ndarray] = {}


def _pseudo_inertias(chain) -> list[np.ndarray]:
    out = []
    for link in chain:
        j = _PSEUDO_CACHE.get(link)
        if j is None:
            j = pseudo_inertia(link)
            j.setflags(write=False)
            if len(_PSEUDO_CACHE) < 256:
                _PSEUDO_CACHE[link] = j
        out.append(j)
    return out


def _com_h(link: DHLink) -> np.ndarray:
    return np.array([link.com[0], link.com[1], link.com[2], 1.0])


def _kinetic_core(chain, prods, js) -> np.ndarray:
    n = len(chain)
    d = np.zeros((n, n))
    for j in range(n):
        for k in range(j, n):
            acc = 0.0
            for i in range(max(j, k), n):
                uij = prods.u(i, j)
                uik = prods.u(i, k)
                # Tr(A @ B^T) == sum(A * B)
                acc += float(np.sum((uij @ js[i]) * uik))
            d[j, k] = acc
            d[k, j] = acc
    return d


def _coriolis_core(chain, prods, js, qd) -> np.ndarray:
    n = len(chain)
    h = np.zeros(n)
    for k in range(n):
        acc = 0.0
        for i in range(n):
            if qd[i] == 0.0:
                continue
            for m in range(n):
                if qd[m] == 0.0:
                    continue
                coeff = 0.0
                for p in range(max(k, i, m), n):
                    coeff += float(np.sum((prods.u2(p, i, m) @ js[p]) * prods.u(p, k)))
                acc += coeff * qd[i] * qd[m]
        h[k] = acc
    return h


def _gravity_core(chain, prods, g) -> np.ndarray:
    n = len(chain)
    c = np.zeros(n)
    for k in range(n):
        acc = 0.0
        for i in range(k, n):
            acc -= chain[i].mass * float(g @ prods.u(i, k) @ _com_h(chain[i]))
        c[k] = acc
    return c


def _check_gravity(gravity) -> np.ndarray:
    g = np.asarray(gravity, dtype=float)
    if g.shape != (4,) or g[3] != 0.0:
        raise ValueError("gravity must be a homogeneous row (gx, gy, gz, 0)")
    return g


def kinetic_matrix(chain, state: LegChainState) -> np.ndarray:
    """Generalized inertia matrix D(theta), symmetric positive semidefinite.

    D[j, k] = sum over links i >= max(j, k) of Tr(U_ij J_i U_ik^T).
    """
    chain = _check_chain(chain)
    prods = _ChainProducts(chain, _thetas(chain, state, None))
    return _kinetic_core(chain, prods, _pseudo_inertias(chain))


def coriolis_vector(chain, state: LegChainState) -> np.ndarray:
    """Velocity coupling torques h(theta, dtheta), quadratic in dtheta.

    h[k] = sum_{i,m} Tr(U_pim J_p U_pk^T) summed over links p covering all
    three indices, times dtheta_i * dtheta_m.
    """
    chain = _check_chain(chain)
    prods = _ChainProducts(chain, _thetas(chain, state, None))
    return _coriolis_core(chain, prods, _pseudo_inertias(chain), state.dtheta)


def gravity_vector(chain, state: LegChainState, gravity: np.ndarray) -> np.ndarray:
    """Gravity loading C(theta): C[k] = -sum_i m_i * g_row @ U_ik @ com_i."""
    chain = _check_chain(chain)
    g = _check_gravity(gravity)
    prods = _ChainProducts(chain, _thetas(chain, state, None))
    return _gravity_core(chain, prods, g)


def joint_torque(chain, state: LegChainState, gravity: np.ndarray) -> np.ndarray:
    """Inverse dynamics: tau = D(q) qdd + h(q, qd) + C(q)."""
    chain = _check_chain(chain)
    g = _check_gravity(gravity)
    prods = _ChainProducts(chain, _thetas(chain, state, None))
    js = _pseudo_inertias(chain)
    d = _kinetic_core(chain, prods, js)
    h = _coriolis_core(chain, prods, js, state.dtheta)
    c = _gravity_core(chain, prods, g)
    return d @ np.asarray(state.ddtheta, dtype=float) + h + c


def kinetic_energy(chain, state: LegChainState) -> float:
    """Total kinetic energy 0.5 * dtheta^T D dtheta."""
    qd = np.asarray(state.dtheta, dtype=float)
    return 0.5 * float(qd @ kinetic_matrix(chain, state) @ qd)


def potential_energy(chain, state: LegChainState, gravity: np.ndarray) -> float:
    """Total potential energy -sum_i m_i * g_row @ (worldT_i @ com_i)."""
    chain = _check_chain(chain)
    g = _check_gravity(gravity)
    prods = _ChainProducts(chain, _thetas(chain, state, None))
    return -sum(
        link.mass * float(g @ prods.world(i) @ _com_h(link)) for i, link in enumerate(chain)
    )


def free_acceleration(chain, theta, dtheta, gravity: np.ndarray) -> np.ndarray:
    """Joint accelerations of the unforced chain (tau = 0)."""
    chain = _check_chain(chain)
    g = _check_gravity(gravity)
    theta = tuple(float(v) for v in theta)
    dtheta = tuple(float(v) for v in dtheta)
    if len(theta) != len(chain) or len(dtheta) != len(chain):
        raise ValueError("need one angle and one velocity per link")
    prods = _ChainProducts(chain, theta)
    js = _pseudo_inertias(chain)
    d = _kinetic_core(chain, prods, js)
    h = _coriolis_core(chain, prods, js, dtheta)
    c = _gravity_core(chain, prods, g)
    return np.linalg.solve(d, -(h + c))


def uniform_rod_link(
    mass: float,
    length: float,
    theta: float = 0.0,
    offset: float = 0.0,
    twist: float = 0.0,
) -> DHLink:
    """Thin uniform rod spanning the link, COM at mid-length.

    In the distal link frame the rod occupies x in [-length, 0], so the
    second moment about the frame origin is m*L^2/3 on the y and z axes.
    """
    if length <= 0.0:
        raise ValueError("length must be positive")
    i_perp = mass * length * length / 3.0
    return DHLink(
        theta=theta,
        length=length,
        offset=offset,
        twist=twist,
        mass=mass,
        com=(-0.5 * length, 0.0, 0.0),
        inertia=(0.0, i_perp, i_perp, 0.0, 0.0, 0.0),
    )
