"""Model maps on the (rho, z) half plane and their tension diagnostics.

The map is assembled from two ingredients.  A diagonal field
``diag(e^U, e^V, 1, ..., 1)`` built from the harmonic rod potentials, with
the rods split between the two slots so that adjacent rods use different
slots, pins the degeneracy pattern: e^U vanishes exactly on the slot-0
rods and e^V on the slot-1 rods.  A piecewise matrix curve M(z) of frames
then rotates the diagonal kernel directions onto the actual rod
structures,

    F(rho, z) = M(z)^-T  diag(e^U, e^V, 1, ..., 1)  M(z)^-1 ,

holding the active rod's structure column of M exactly constant through
every transition, which is what keeps the tension bounded near the axis.
Wherever M is constant and omega is constant the map is exactly harmonic;
the leftover tension lives in the frame transitions and in the angular
twist-potential interpolation at infinity, which decays like r^(-5/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelMapError
from .intlin import IntMatrix, hermite_normal_form
from .roddiagram import HALF_PLANE, RodDiagram, det2

NEG_INF = float("-inf")
POS_INF = float("inf")


# ----------------------------------------------------------------------
# harmonic potentials


def potentials(a, rho, z):
    """The two harmonic functions u_a = log(r_a - (z - a)) and
    v_a = log(r_a + (z - a)) attached to the axis point z = a.

    On the axis above a the first is -inf (e^u = 0); below, the second.
    Evaluation at the point (0, a) itself is undefined.
    """
    rho = float(rho)
    z = float(z)
    if rho == 0.0 and z == a:
        raise ValueError("potentials are singular at the axis point itself")
    return _u_pot(a, np.asarray(rho), np.asarray(z)).item(), _v_pot(
        a, np.asarray(rho), np.asarray(z)
    ).item()


def _u_pot(a, rho, z):
    """log(r_a - (z - a)), cancellation-free for z > a."""
    dz = z - a
    r = np.hypot(rho, dz)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.log(r - dz)
        safe = 2.0 * np.log(rho) - np.log(r + dz)
    return np.where(dz >= 0, safe, direct)


def _v_pot(a, rho, z):
    """log(r_a + (z - a)), cancellation-free for z < a."""
    dz = z - a
    r = np.hypot(rho, dz)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.log(r + dz)
        safe = 2.0 * np.log(rho) - np.log(r - dz)
    return np.where(dz <= 0, safe, direct)


def _smoothstep(t):
    """C^2 quintic smoothstep on [0, 1]."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


# ----------------------------------------------------------------------
# frames


def _complete_to_basis(columns, n):
    """Greedily append standard basis vectors until the columns span Q^n."""
    cols = [tuple(c) for c in columns]
    for i in range(n):
        if len(cols) == n:
            break
        e = tuple(1 if j == i else 0 for j in range(n))
        trial = IntMatrix.from_columns(cols + [e])
        if hermite_normal_form(trial).rank == len(cols) + 1:
            cols.append(e)
    if len(cols) != n:
        raise ModelMapError("could not complete the frame to a basis")
    return cols


def _frame(slot_cols, n):
    """Frame matrix with prescribed integer columns in given slots.

    slot_cols maps column index -> vector; remaining columns are filled by
    standard basis completion, placed left to right.
    """
    fixed = sorted(slot_cols)
    completion = _complete_to_basis([slot_cols[c] for c in fixed], n)[len(fixed):]
    cols = {}
    cols.update(slot_cols)
    free = [c for c in range(n) if c not in slot_cols]
    for c, vec in zip(free, completion):
        cols[c] = vec
    M = np.array([[cols[c][row] for c in range(n)] for row in range(n)], dtype=float)
    if abs(np.linalg.det(M)) < 1e-9:
        raise ModelMapError("degenerate frame")
    return M


@dataclass
class FrameSegment:
    z_lo: float
    z_hi: float
    M0: np.ndarray
    M1: np.ndarray  # equal to M0 on plateaus
    held_col: int | None = None

    @property
    def constant(self):
        return self.M0 is self.M1 or np.array_equal(self.M0, self.M1)

    def eval(self, z):
        """Frame matrices at the given z values (array), shape (N, n, n)."""
        z = np.asarray(z, dtype=float)
        if self.constant:
            return np.broadcast_to(self.M0, z.shape + self.M0.shape).copy()
        t = (z - self.z_lo) / (self.z_hi - self.z_lo)
        s = _smoothstep(t)
        return self.M0 + s[..., None, None] * (self.M1 - self.M0)


# ----------------------------------------------------------------------
# the model map


@dataclass
class ModelMap:
    n: int
    diagram: RodDiagram
    slots: dict  # rod index -> 0 or 1
    u_terms: list  # ("u", a) | ("v", a) | ("ud", a, b)
    v_terms: list
    segments: list  # FrameSegment partition of the z axis
    breaks: np.ndarray  # segment upper endpoints for searchsorted
    far_frame: np.ndarray  # frame of the asymptotic region
    z0: float  # far-field center
    omega_profile: list  # (z_lo, z_hi, c0, c1): constants + horizon blends
    omega_far: tuple  # (c_north, c_south)
    epsilon: float
    blend_radii: tuple  # (R1, R2)
    axis_segments: list  # (z_lo, z_hi) per axis rod, for distance queries

    # ------------------------------------------------------------------

    def _UV(self, rho, z):
        U = np.zeros_like(rho)
        V = np.zeros_like(rho)
        for acc, terms in ((U, self.u_terms), (V, self.v_terms)):
            for term in terms:
                if term[0] == "u":
                    acc += _u_pot(term[1], rho, z)
                elif term[0] == "v":
                    acc += _v_pot(term[1], rho, z)
                else:
                    acc += _u_pot(term[1], rho, z) - _u_pot(term[2], rho, z)
        return U, V

    def axis_frames(self, z):
        """Frame curve M(z) used near the axis, before the radial blend."""
        z = np.asarray(z, dtype=float)
        idx = np.searchsorted(self.breaks, z, side="right")
        idx = np.minimum(idx, len(self.segments) - 1)
        out = np.empty(z.shape + (self.n, self.n))
        for seg_id in np.unique(idx):
            mask = idx == seg_id
            out[mask] = self.segments[seg_id].eval(z[mask])
        return out

    def frames(self, rho, z):
        """Full frame field: the z-curve blended radially into the far
        frame, so every transition stays inside a bounded region.  Both
        frames carry the semi-infinite rod structures in their columns, so
        the blend respects the kernel directions along the end rods."""
        M = self.axis_frames(z)
        R1, R2 = self.blend_radii
        chi = _smoothstep((np.hypot(rho, np.asarray(z) - self.z0) - R1) / (R2 - R1))
        return M + chi[..., None, None] * (self.far_frame - M)

    def F(self, points):
        """Matrix field at an (N, 2) array of (rho, z) points; (N, n, n)."""
        pts = np.asarray(points, dtype=float)
        rho, z = pts[..., 0], pts[..., 1]
        U, V = self._UV(rho, z)
        M = self.frames(rho, z)
        Minv = np.linalg.inv(M)
        diag = np.ones(rho.shape + (self.n,))
        diag[..., 0] = np.exp(U)
        diag[..., 1] = np.exp(V)
        return np.einsum("...ji,...j,...jk->...ik", Minv, diag, Minv)

    def omega(self, points):
        """Twist-potential field at an (N, 2) array of points; (N, n)."""
        pts = np.asarray(points, dtype=float)
        rho, z = pts[..., 0], pts[..., 1]
        near = np.empty(rho.shape + (self.n,))
        zones_lo = np.array([seg[0] for seg in self.omega_profile])
        idx = np.searchsorted(zones_lo, z, side="right") - 1
        idx = np.clip(idx, 0, len(self.omega_profile) - 1)
        for zone_id in np.unique(idx):
            mask = idx == zone_id
            z_lo, z_hi, c0, c1 = self.omega_profile[zone_id]
            c0 = np.asarray(c0)
            c1 = np.asarray(c1)
            if np.array_equal(c0, c1):
                near[mask] = c0
            else:
                s = _smoothstep((z[mask] - z_lo) / (z_hi - z_lo))
                near[mask] = c0 + s[:, None] * (c1 - c0)
        c_north, c_south = map(np.asarray, self.omega_far)
        r = np.hypot(rho, z - self.z0)
        theta = np.arctan2(rho, z - self.z0)  # 0 at the north axis
        span = math.pi - 2.0 * self.epsilon
        s_theta = _smoothstep((theta - self.epsilon) / span)
        far = c_north + s_theta[..., None] * (c_south - c_north)
        R1, R2 = self.blend_radii
        chi = _smoothstep((r - R1) / (R2 - R1))
        return (1.0 - chi[..., None]) * near + chi[..., None] * far

    def det_f(self, points):
        return np.linalg.det(self.F(points))

    def distance_to_axis(self, points):
        pts = np.asarray(points, dtype=float)
        rho, z = pts[..., 0], pts[..., 1]
        best = np.full(rho.shape, np.inf)
        for z_lo, z_hi in self.axis_segments:
            dz = np.maximum(np.maximum(z_lo - z, z - z_hi), 0.0)
            np.minimum(best, np.hypot(rho, dz), out=best)
        return best

    def to_json_dict(self):
        return {
            "n": self.n,
            "slots": {str(k): v for k, v in sorted(self.slots.items())},
            "far_center": self.z0,
            "blend_radii": list(self.blend_radii),
            "epsilon": self.epsilon,
            "transitions": [
                {
                    "z": [seg.z_lo, seg.z_hi],
                    "held_column": seg.held_col,
                }
                for seg in self.segments
                if not seg.constant
            ],
        }


# ----------------------------------------------------------------------
# construction


def build_model_map(
    diagram: RodDiagram,
    epsilon: float = 0.2,
    corrupt_transition: bool = False,
) -> ModelMap:
    """Model map for an admissible rod data set with nondegenerate horizons.

    The diagram must be a half-plane diagram carrying z-intervals on every
    rod and potential constants on every axis rod.  ``corrupt_transition``
    deliberately violates the constant-column constraint of the southern
    frame curve (a negative control for the tension verifier: the tension
    then blows up near the axis inside that transition).
    """
    _check_model_input(diagram)
    n = diagram.n

    comps = diagram.axis_components()
    rods = diagram.rods
    last = len(rods) - 1
    south_v = rods[0].structure.v
    north_v = rods[-1].structure.v
    ends_parallel = south_v == north_v

    slots = _assign_slots(diagram, comps, ends_parallel)

    u_terms, v_terms = [], []
    for i in diagram.axis_indices():
        z_lo, z_hi = rods[i].z
        if z_lo == NEG_INF:
            term = ("v", z_hi)
        elif z_hi == POS_INF:
            term = ("u", z_lo)
        else:
            term = ("ud", z_lo, z_hi)
        (u_terms if slots[i] == 0 else v_terms).append(term)

    finite = [z for r in rods for z in r.z if math.isfinite(z)]
    z_min, z_max = min(finite), max(finite)
    z0 = 0.5 * (z_min + z_max)
    width = max(z_max - z_min, 1.0)

    # far frame: the end structures occupy their slots
    if ends_parallel:
        far_frame = _frame({slots[last]: north_v}, n)
    else:
        far_frame = _frame({slots[last]: north_v, slots[0]: south_v}, n)

    segments = _build_schedule(diagram, comps, slots, far_frame, width)
    if corrupt_transition:
        _corrupt_first_transition(segments, n)

    omega_profile, c_north, c_south = _omega_zones(diagram, comps)

    z_half = 0.5 * (z_max - z_min)
    R1 = z_half + 2.5 * width
    R2 = z_half + 4.5 * width

    axis_segments = [rods[i].z for i in diagram.axis_indices()]

    breaks = np.array([seg.z_hi for seg in segments])
    m = ModelMap(
        n=n,
        diagram=diagram,
        slots=slots,
        u_terms=u_terms,
        v_terms=v_terms,
        segments=segments,
        breaks=breaks,
        far_frame=far_frame,
        z0=z0,
        omega_profile=omega_profile,
        omega_far=(c_north, c_south),
        epsilon=epsilon,
        blend_radii=(R1, R2),
        axis_segments=axis_segments,
    )
    if not corrupt_transition:
        _check_radial_blend(m, z_min - 2.0 * width, z_max + 2.0 * width)
    return m


def _check_radial_blend(m, z_lo, z_hi, z_samples=240, t_samples=33):
    """The straight path from each axis frame to the far frame must stay
    invertible; the radial blend walks exactly that path."""
    z = np.linspace(z_lo, z_hi, z_samples)
    M = m.axis_frames(z)
    t = np.linspace(0.0, 1.0, t_samples)
    path = M[None] + t[:, None, None, None] * (m.far_frame - M)[None]
    dets = np.linalg.det(path)
    scale = np.abs(np.linalg.det(m.far_frame))
    if np.min(np.abs(dets)) < 1e-6 * scale:
        raise ModelMapError(
            "radial frame blend passes through a degenerate matrix; "
            "the diagram needs a different frame completion"
        )


def _check_model_input(diagram):
    if diagram.shape != HALF_PLANE:
        raise ModelMapError("model maps are built over half-plane diagrams")
    if not diagram.has_geometry():
        raise ModelMapError("missing geometry: every rod needs a z-interval")
    for i in diagram.axis_indices():
        if diagram.rods[i].potential is None:
            raise ModelMapError(f"rod {i}: missing potential constant")
    for i, j in diagram.corners():
        d = det2(diagram.rods[i].structure, diagram.rods[j].structure)
        if d != 1:
            raise ModelMapError(
                f"corner between rods {i} and {j} is inadmissible (Det_2 = {d})"
            )
    for i in diagram.horizon_indices():
        z_lo, z_hi = diagram.rods[i].z
        if not 0 < z_hi - z_lo < POS_INF:
            raise ModelMapError(f"horizon rod {i} is degenerate")


def _assign_slots(diagram, comps, ends_parallel):
    last = len(diagram.rods) - 1
    slots = {}
    for comp in comps:
        if comp[-1] == last:
            # the north component is pinned by the far region (slot 0);
            # walk southwards alternating
            for pos, i in enumerate(reversed(comp)):
                slots[i] = pos % 2
        elif comp[0] == 0:
            first_slot = 0 if ends_parallel else 1
            for pos, i in enumerate(comp):
                slots[i] = (first_slot + pos) % 2
        else:
            for pos, i in enumerate(comp):
                slots[i] = pos % 2
    south_needed = 0 if ends_parallel else 1
    if slots[0] != south_needed:
        raise ModelMapError(
            "slot parity of the component joining both semi-infinite rods "
            "conflicts with the asymptotic region; apply a coordinate change "
            "or insert a horizon to decouple the ends"
        )
    return slots


def _comp_frames(diagram, comp, slots):
    """Anchor frames of one axis component, south to north."""
    n = diagram.n
    rods = diagram.rods
    if len(comp) == 1:
        i = comp[0]
        return [_frame({slots[i]: rods[i].structure.v}, n)]
    frames = []
    for a, b in zip(comp, comp[1:]):
        frames.append(
            _frame(
                {slots[a]: rods[a].structure.v, slots[b]: rods[b].structure.v}, n
            )
        )
    return frames


def _build_schedule(diagram, comps, slots, far_frame, width):
    """Piecewise frame curve: plateaus joined by smoothstep transitions."""
    rods = diagram.rods
    n = diagram.n
    last = len(rods) - 1

    # (frame, transition window to the NEXT frame, held column) chain
    chain = [[far_frame, None, None]]

    south_rod = rods[0]
    b0 = south_rod.z[1]
    chain[0][1] = (b0 - 1.6 * width, b0 - 0.6 * width)
    chain[0][2] = slots[0]

    for ci, comp in enumerate(comps):
        frames = _comp_frames(diagram, comp, slots)
        for k, frame in enumerate(frames):
            chain.append([frame, None, None])
            if k + 1 < len(frames):
                rod = rods[comp[k + 1]]  # transition runs along this rod
                z_lo, z_hi = rod.z
                span = z_hi - z_lo
                chain[-1][1] = (z_lo + 0.3 * span, z_hi - 0.3 * span)
                chain[-1][2] = slots[comp[k + 1]]
        if ci + 1 < len(comps):
            gap_lo = rods[comp[-1]].z[1]
            gap_hi = rods[comps[ci + 1][0]].z[0]
            # locate the horizon between the components
            hz = None
            for h in diagram.horizon_indices():
                if rods[h].z[0] >= gap_lo - 1e-12 and rods[h].z[1] <= gap_hi + 1e-12:
                    hz = rods[h].z
            assert hz is not None
            span = hz[1] - hz[0]
            chain[-1][1] = (hz[0] + 0.2 * span, hz[1] - 0.2 * span)
            chain[-1][2] = None

    a_last = rods[last].z[0]
    chain[-1][1] = (a_last + 0.6 * width, a_last + 1.6 * width)
    chain[-1][2] = slots[last]
    chain.append([far_frame.copy(), None, None])

    _normalize_chain(chain, n)
    return _chain_to_segments(chain)


def _normalize_chain(chain, n):
    """Fix held-column signs and determinant signs along the chain.

    Walking north, each frame may be adjusted by column negations: the
    held column must match the previous frame exactly, and determinants
    must keep one sign so the interpolated frames stay invertible.  The
    final frame is the far frame again and cannot be adjusted; an
    unresolvable sign at that point is reported.
    """
    target = math.copysign(1.0, np.linalg.det(chain[0][0]))
    for k in range(1, len(chain)):
        prev_frame, window, held = chain[k - 1]
        cur = chain[k][0]
        is_last = k == len(chain) - 1
        if held is not None:
            a, b = prev_frame[:, held], cur[:, held]
            if np.allclose(a, -b):
                if is_last:
                    raise ModelMapError(
                        "frame sign obstruction at the asymptotic end; "
                        "apply a unimodular change of coordinates first"
                    )
                cur[:, held] = -cur[:, held]
            elif not np.allclose(a, b):
                raise ModelMapError("held column mismatch between frames")
        if math.copysign(1.0, np.linalg.det(cur)) != target:
            if is_last:
                raise ModelMapError(
                    "frame determinant sign obstruction at the asymptotic end; "
                    "apply a unimodular change of coordinates first"
                )
            # prefer a column held by neither adjacent transition; flipping
            # a column held by the next one just propagates northwards
            next_held = chain[k][2]
            candidates = [c for c in range(n - 1, -1, -1) if c != held]
            flip = next((c for c in candidates if c != next_held), candidates[0])
            cur[:, flip] = -cur[:, flip]
        _check_transition_path(prev_frame, cur, n)


def _check_transition_path(M0, M1, n, samples=101):
    """The straight column path between two frames must stay invertible."""
    if np.array_equal(M0, M1):
        return
    s = np.linspace(0.0, 1.0, samples)
    path = M0 + s[:, None, None] * (M1 - M0)
    dets = np.linalg.det(path)
    scale = max(abs(dets[0]), abs(dets[-1]))
    if np.min(np.abs(dets)) < 1e-6 * scale:
        raise ModelMapError(
            "frame transition passes through a degenerate matrix; "
            "the diagram needs a different frame completion"
        )


def _chain_to_segments(chain):
    segments = []
    cursor = NEG_INF
    for k, (frame, window, held) in enumerate(chain):
        if window is None:  # last plateau
            segments.append(FrameSegment(cursor, POS_INF, frame, frame))
            break
        z_lo, z_hi = window
        if z_lo < cursor - 1e-12:
            raise ModelMapError(
                "frame transition windows overlap; rod intervals are too "
                "short for the transition layout"
            )
        segments.append(FrameSegment(cursor, z_lo, frame, frame))
        segments.append(FrameSegment(z_lo, z_hi, frame, chain[k + 1][0], held))
        cursor = z_hi
    return segments


def _corrupt_first_transition(segments, n):
    for seg in segments:
        if not seg.constant and seg.held_col is not None:
            bad = seg.M1.copy()
            bump = np.zeros(n)
            bump[(seg.held_col + 1) % n] = 1.0
            bad[:, seg.held_col] = bad[:, seg.held_col] + bump
            if abs(np.linalg.det(bad)) < 1e-9:
                bad[:, seg.held_col] += bump
            seg.M1 = bad
            return
    raise ModelMapError("no held-column transition available to corrupt")


def _omega_zones(diagram, comps):
    """Piecewise z-profile of the near-field twist potentials: constant on
    each axis component, smoothstep blends across the horizon gaps.

    Returns ([(z_lo, z_hi, c0, c1)], c_north, c_south); each zone is
    active on [z_lo, next zone's z_lo), constants have c0 = c1, blends
    interpolate over their own (z_lo, z_hi).
    """
    rods = diagram.rods
    consts = []
    for comp in comps:
        c = rods[comp[0]].potential
        for i in comp:
            if rods[i].potential != c:
                raise ModelMapError(
                    f"potential constants vary inside the axis component at rod {i}"
                )
        consts.append(np.array(c, dtype=float))
    zones = []
    cursor = NEG_INF
    for ci, comp in enumerate(comps):
        if ci + 1 == len(comps):
            zones.append((cursor, POS_INF, consts[ci], consts[ci]))
            break
        gap_lo = rods[comp[-1]].z[1]
        gap_hi = rods[comps[ci + 1][0]].z[0]
        span = gap_hi - gap_lo
        b_lo, b_hi = gap_lo + 0.25 * span, gap_hi - 0.25 * span
        zones.append((cursor, b_lo, consts[ci], consts[ci]))
        zones.append((b_lo, b_hi, consts[ci], consts[ci + 1]))
        cursor = b_hi
    return zones, consts[-1], consts[0]


# ----------------------------------------------------------------------
# tension


def _axis_divergence(v_rho_minus, v_rho_plus, v_rho_center, v_z_minus, v_z_plus, rho, h):
    """div V = d/drho V_rho + V_rho / rho + d/dz V_z, centered differences."""
    return (
        (v_rho_plus - v_rho_minus) / (2.0 * h)
        + v_rho_center / rho
        + (v_z_plus - v_z_minus) / (2.0 * h)
    )


def tension_parts(m, rho, z, h):
    """(|tau|, |tau_F part|, |tau_omega part|) at one point by centered
    finite differences with spacing h.

    The stencil reaches 2h; the point must keep distance > 2h from the
    axis set and the half-plane boundary.
    """
    rho = float(rho)
    z = float(z)
    # the axis set lies on rho = 0, so clearing the half-plane boundary by
    # the stencil reach 2h also clears the axis set by at least 2h
    if rho - 2.0 * h <= 0.0:
        raise ValueError("stencil leaves the half plane; reduce h or move the point")

    offs = {
        (0, 0),
        (1, 0),
        (-1, 0),
        (0, 1),
        (0, -1),
        (2, 0),
        (-2, 0),
        (0, 2),
        (0, -2),
    }
    offs = sorted(offs)
    pts = np.array([[rho + i * h, z + j * h] for i, j in offs])
    F = m.F(pts)
    w = m.omega(pts)
    at = {o: k for k, o in enumerate(offs)}

    def FA(i, j):
        return F[at[(i, j)]]

    def WA(i, j):
        return w[at[(i, j)]]

    Finv = {o: np.linalg.inv(F[at[o]]) for o in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]}

    def H_rho(i, j):
        return Finv[(i, j)] @ (FA(i + 1, j) - FA(i - 1, j)) / (2.0 * h)

    def H_z(i, j):
        return Finv[(i, j)] @ (FA(i, j + 1) - FA(i, j - 1)) / (2.0 * h)

    divH = _axis_divergence(
        H_rho(-1, 0), H_rho(1, 0), H_rho(0, 0), H_z(0, -1), H_z(0, 1), rho, h
    )

    f0 = np.linalg.det(FA(0, 0))
    dw_rho = (WA(1, 0) - WA(-1, 0)) / (2.0 * h)
    dw_z = (WA(0, 1) - WA(0, -1)) / (2.0 * h)
    grad2 = np.outer(dw_rho, dw_rho) + np.outer(dw_z, dw_z)
    G = Finv[(0, 0)] @ grad2 / f0

    def K_rho(i, j):
        fij = np.linalg.det(FA(i, j))
        return Finv[(i, j)] @ (WA(i + 1, j) - WA(i - 1, j)) / (2.0 * h) / fij

    def K_z(i, j):
        fij = np.linalg.det(FA(i, j))
        return Finv[(i, j)] @ (WA(i, j + 1) - WA(i, j - 1)) / (2.0 * h) / fij

    divK = _axis_divergence(
        K_rho(-1, 0), K_rho(1, 0), K_rho(0, 0), K_z(0, -1), K_z(0, 1), rho, h
    )

    A = divH + G
    term_trace = 0.25 * np.trace(A) ** 2
    term_sq = 0.25 * max(np.trace(A @ A), 0.0)
    term_omega = 0.5 * f0 * float(divK @ (FA(0, 0) @ divK))
    tau_f = math.sqrt(max(term_trace + term_sq, 0.0))
    tau_w = math.sqrt(max(term_omega, 0.0))
    return math.sqrt(max(term_trace + term_sq + term_omega, 0.0)), tau_f, tau_w


def tension_norm(m, rho, z, h):
    """|tau| at one point; see tension_parts."""
    return tension_parts(m, rho, z, h)[0]


def tension_field(m, h, rho_max, z_lo, z_hi, excision_factor=3.0, excision=None):
    """|tau| on a uniform grid, with points near the axis set excised.

    Returns (rho_grid, z_grid, tau, tau_f, tau_omega, mask); tau is NaN
    outside the mask.  The grid starts at rho = h, and tau lives on the
    interior points rho >= 3h.
    """
    if excision is None:
        excision = excision_factor * h
    n = m.n
    n_rho = int(round(rho_max / h))
    n_z = int(round((z_hi - z_lo) / h)) + 1
    rho = (np.arange(n_rho) + 1.0) * h
    z = z_lo + np.arange(n_z) * h
    R, Z = np.meshgrid(rho, z, indexing="ij")
    pts = np.stack([R, Z], axis=-1)

    F = m.F(pts)
    w = m.omega(pts)
    Finv = np.linalg.inv(F)
    f = np.linalg.det(F)

    dF_rho = (F[2:, 1:-1] - F[:-2, 1:-1]) / (2.0 * h)
    dF_z = (F[1:-1, 2:] - F[1:-1, :-2]) / (2.0 * h)
    Fi = Finv[1:-1, 1:-1]
    H_rho = Fi @ dF_rho
    H_z = Fi @ dF_z

    dw_rho = (w[2:, 1:-1] - w[:-2, 1:-1]) / (2.0 * h)
    dw_z = (w[1:-1, 2:] - w[1:-1, :-2]) / (2.0 * h)
    K_rho = np.einsum("...ij,...j->...i", Fi, dw_rho) / f[1:-1, 1:-1, None]
    K_z = np.einsum("...ij,...j->...i", Fi, dw_z) / f[1:-1, 1:-1, None]

    Rin = R[1:-1, 1:-1]
    divH = (
        (H_rho[2:, 1:-1] - H_rho[:-2, 1:-1]) / (2.0 * h)
        + H_rho[1:-1, 1:-1] / Rin[1:-1, 1:-1, None, None]
        + (H_z[1:-1, 2:] - H_z[1:-1, :-2]) / (2.0 * h)
    )
    divK = (
        (K_rho[2:, 1:-1] - K_rho[:-2, 1:-1]) / (2.0 * h)
        + K_rho[1:-1, 1:-1] / Rin[1:-1, 1:-1, None]
        + (K_z[1:-1, 2:] - K_z[1:-1, :-2]) / (2.0 * h)
    )

    grad2 = np.einsum("...i,...j->...ij", dw_rho, dw_rho) + np.einsum(
        "...i,...j->...ij", dw_z, dw_z
    )
    G = (Fi @ grad2)[1:-1, 1:-1] / f[2:-2, 2:-2, None, None]

    A = divH + G
    trA = np.trace(A, axis1=-2, axis2=-1)
    trA2 = np.clip(np.trace(A @ A, axis1=-2, axis2=-1), 0.0, None)
    f_in = f[2:-2, 2:-2]
    F_in = F[2:-2, 2:-2]
    omega_term = 0.5 * f_in * np.einsum("...i,...ij,...j->...", divK, F_in, divK)
    tau_f = np.sqrt(np.clip(0.25 * trA**2 + 0.25 * trA2, 0.0, None))
    tau_w = np.sqrt(np.clip(omega_term, 0.0, None))
    tau = np.sqrt(np.clip(0.25 * trA**2 + 0.25 * trA2 + omega_term, 0.0, None))

    R_t = R[2:-2, 2:-2]
    Z_t = Z[2:-2, 2:-2]
    dist = m.distance_to_axis(np.stack([R_t, Z_t], axis=-1))
    mask = dist > excision
    tau = np.where(mask, tau, np.nan)
    tau_f = np.where(mask, tau_f, np.nan)
    tau_w = np.where(mask, tau_w, np.nan)
    return R_t, Z_t, tau, tau_f, tau_w, mask


# ----------------------------------------------------------------------
# the verifier


@dataclass
class GridSpec:
    h: float = 0.05
    rays: int = 7
    decade_points: int = 24
    ray_margin: float = 0.25  # radians kept inside the omega wedge
    refine: bool = True
    excision_factor: float = 3.0
    sup_clearance: float = 0.75  # axis clearance of the sup-stability compacts
    slope_limit: float = -2.3
    sup_ratio_limit: float = 1.1
    noise_floor: float = 1e-11


@dataclass
class TensionReport:
    h: float
    excision_radius: float
    domain: dict
    annuli: list
    decay: dict
    convergence: dict
    sup_bounded_pass: bool
    decay_pass: bool
    passed: bool
    field: tuple = field(repr=False, default=())  # (rho, z, tau, tau_f, tau_w)

    def to_json_dict(self):
        return {
            "h": self.h,
            "excision_radius": self.excision_radius,
            "domain": self.domain,
            "annuli": self.annuli,
            "decay": self.decay,
            "convergence": self.convergence,
            "sup_bounded_pass": self.sup_bounded_pass,
            "decay_pass": self.decay_pass,
            "passed": self.passed,
        }

    def dump_csv(self, path):
        rho, z, tau, tau_f, tau_w = self.field
        with open(path, "w") as fh:
            fh.write("rho,z,tau,tau_f,tau_omega\n")
            it = np.nditer([rho, z, tau, tau_f, tau_w])
            for r, zz, t, tf, tw in it:
                if np.isnan(t):
                    continue
                fh.write(f"{float(r):.9g},{float(zz):.9g},{float(t):.12g},{float(tf):.12g},{float(tw):.12g}\n")


def _finite_extent(m):
    finite = [z for seg in m.axis_segments for z in seg if math.isfinite(z)]
    for i in m.diagram.horizon_indices():
        finite.extend(m.diagram.rods[i].z)
    lo, hi = min(finite), max(finite)
    return lo, hi


def verify_tension(m: ModelMap, spec: GridSpec | None = None, **kwargs) -> TensionReport:
    """Numerical verification of boundedness and decay of the tension.

    Reports the sup of |tau| on compact annuli at spacing h and h/2 (the
    ratio must stay below the stability limit), a log-log decay fit along
    far-field rays over one decade (slope at most the limit, unless the
    far tension sits below the noise floor), and the residual convergence
    order at fixed probe points.
    """
    if spec is None:
        spec = GridSpec(**kwargs)
    elif kwargs:
        raise TypeError("pass either a GridSpec or keyword options, not both")
    h = spec.h
    lo, hi = _finite_extent(m)
    width = max(hi - lo, 1.0)
    z0 = m.z0

    # cover all frame transitions (they reach 1.6 widths past the poles)
    rho_max = width + 2.0
    z_lo = lo - 1.8 * width
    z_hi = hi + 1.8 * width
    excision = spec.excision_factor * h

    def field_at(step):
        return tension_field(
            m, step, rho_max, z_lo, z_hi, excision=excision
        )

    R1, Z1, T1, TF1, TW1, M1 = field_at(h)
    if spec.refine:
        R2, Z2, T2, _, _, M2 = field_at(h / 2.0)

    # sup stability is judged on compact sets: fixed axis clearance, so
    # the finite-difference noise of the log-singular entries (which grows
    # near the excision edge as h shrinks) stays out of the comparison
    clearance = max(spec.sup_clearance, excision)
    center_r1 = np.hypot(R1, Z1 - z0)
    dist1 = m.distance_to_axis(np.stack([R1, Z1], axis=-1))
    annuli_bounds = [
        (0.0, 0.75 * width),
        (0.75 * width, 1.5 * width),
        (1.5 * width, 1.8 * width + rho_max),
    ]
    annuli = []
    sup_ok = True
    for r_lo, r_hi in annuli_bounds:
        ring1 = M1 & (center_r1 >= r_lo) & (center_r1 < r_hi)
        sup_ex = float(np.nanmax(np.where(ring1, T1, np.nan))) if ring1.any() else 0.0
        sel1 = ring1 & (dist1 > clearance)
        sup1 = float(np.nanmax(np.where(sel1, T1, np.nan))) if sel1.any() else 0.0
        entry = {
            "r_lo": r_lo,
            "r_hi": r_hi,
            "sup_excision": sup_ex,
            "sup_coarse": sup1,
        }
        if spec.refine:
            center_r2 = np.hypot(R2, Z2 - z0)
            dist2 = m.distance_to_axis(np.stack([R2, Z2], axis=-1))
            sel2 = M2 & (center_r2 >= r_lo) & (center_r2 < r_hi) & (dist2 > clearance)
            sup2 = float(np.nanmax(np.where(sel2, T2, np.nan))) if sel2.any() else 0.0
            floor = spec.noise_floor
            if sup1 < floor and sup2 < floor:
                ratio = 1.0
            else:
                ratio = max(sup1, sup2) / max(min(sup1, sup2), floor)
            entry.update({"sup_fine": sup2, "ratio": ratio})
            ok = ratio < spec.sup_ratio_limit or max(sup1, sup2) < floor
            entry["pass"] = ok
            sup_ok = sup_ok and ok
        annuli.append(entry)

    decay = _decay_fit(m, spec, width)
    convergence = _convergence_probe(m, spec, lo, hi, width)

    decay_pass = bool(decay["pass"])
    passed = sup_ok and decay_pass
    return TensionReport(
        h=h,
        excision_radius=excision,
        domain={"rho_max": rho_max, "z_lo": z_lo, "z_hi": z_hi},
        annuli=annuli,
        decay=decay,
        convergence=convergence,
        sup_bounded_pass=sup_ok,
        decay_pass=decay_pass,
        passed=passed,
        field=(R1, Z1, T1, TF1, TW1),
    )


def _decay_fit(m, spec, width):
    R2_blend = m.blend_radii[1]
    r_start = 1.5 * R2_blend
    radii = r_start * np.power(10.0, np.linspace(0.0, 1.0, spec.decade_points))
    theta_lo = m.epsilon + spec.ray_margin
    theta_hi = math.pi - m.epsilon - spec.ray_margin
    angles = np.linspace(theta_lo, theta_hi, spec.rays)
    slopes = []
    max_tau = 0.0
    per_ray = []
    for theta in angles:
        taus = []
        for r in radii:
            rho = r * math.sin(theta)
            z = m.z0 + r * math.cos(theta)
            taus.append(tension_norm(m, rho, z, spec.h))
        taus = np.array(taus)
        max_tau = max(max_tau, float(taus.max()))
        if np.all(taus > 0):
            slope = float(np.polyfit(np.log(radii), np.log(taus), 1)[0])
            slopes.append(slope)
            per_ray.append({"theta": float(theta), "slope": slope})
        else:
            per_ray.append({"theta": float(theta), "slope": None})
    below_noise = max_tau < spec.noise_floor
    if below_noise:
        ok = True
        mean = None
        band = None
    elif slopes:
        mean = float(np.mean(slopes))
        band = float(np.std(slopes))
        ok = mean <= spec.slope_limit
    else:
        mean, band, ok = None, None, False
    return {
        "r_range": [float(radii[0]), float(radii[-1])],
        "rays": per_ray,
        "mean_slope": mean,
        "slope_band": band,
        "max_tau": max_tau,
        "below_noise_floor": below_noise,
        "slope_limit": spec.slope_limit,
        "pass": ok,
    }


def _convergence_probe(m, spec, lo, hi, width):
    probes = []
    for i in m.diagram.horizon_indices():
        z_lo, z_hi = m.diagram.rods[i].z
        probes.append((0.7 * (z_hi - z_lo) + 0.3, 0.5 * (z_lo + z_hi)))
    probes.append((0.5 * width + 0.5, 0.5 * (lo + hi)))
    vals_h, vals_h2 = [], []
    used = []
    for rho, z in probes:
        try:
            vals_h.append(tension_norm(m, rho, z, spec.h))
            vals_h2.append(tension_norm(m, rho, z, spec.h / 2.0))
            used.append([rho, z])
        except ValueError:
            continue
    if not vals_h:
        return {"points": [], "order": None}
    sup_h = max(vals_h)
    sup_h2 = max(vals_h2)
    order = None
    if sup_h2 > 0 and sup_h > 0:
        order = float(math.log2(sup_h / sup_h2))
    return {
        "points": used,
        "sup_coarse": sup_h,
        "sup_fine": sup_h2,
        "order": order,
    }


class TransformedMap:
    """Push a model map through F -> h F h^T, omega -> h omega.

    For |det h| = 1 the tension norm is pointwise invariant; the wrapper
    exposes the same evaluation surface the tension routines use.
    """

    def __init__(self, base, h_matrix):
        self.base = base
        self.n = base.n
        self.h_matrix = np.asarray(h_matrix, dtype=float)

    def F(self, points):
        F = self.base.F(points)
        return np.einsum("ij,...jk,lk->...il", self.h_matrix, F, self.h_matrix)

    def omega(self, points):
        return np.einsum("ij,...j->...i", self.h_matrix, self.base.omega(points))

    def distance_to_axis(self, points):
        return self.base.distance_to_axis(points)
