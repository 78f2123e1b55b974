"""Transformations of sampled isothermic surfaces.

The Christoffel dual integrates f_x^-1 dx - f_y^-1 dy; Goursat conjugates it
by an essential Moebius map; the Darboux transforms solve a Riccati equation
or the associated linear system; the spectral (T) transform integrates the
parameter family of flat connections.

A FrameConnection packages an adapted frame field together with its affine
lambda-family of connection forms.  Chaining transforms through connections
keeps the initial-condition correspondences of the permutability theorems
exact, which pointwise comparisons rely on; surfaces compared across
different representatives always go through the cross-ratio certificate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateQuadruple,
    NotAdapted,
    NotClosed,
    SingularityHit,
)
from .grid import (
    FrameField,
    GridSpec,
    QField,
    QForm1,
    d_field,
    d_field_hi,
    integrate_form,
    integrate_frame,
    integrate_left_vector,
    integrate_riccati,
    wedge,
)
from .quaternion import (
    Quaternion,
    cross_ratio_class_array,
    qinv_masked,
    qm2_identity,
    qm2_inv,
    qm2_matvec,
    qm2_mul,
    qmul,
    qnorm,
)
from .surfaces import (
    TAU_ISOTHERMIC,
    PolarizedSurface,
    isothermic_certificate,
    normal_field,
)

EPS_ESCAPE = 1e-9


# ---------------------------------------------------------------------------
# Christoffel and Goursat
# ---------------------------------------------------------------------------

def christoffel_form(surface: PolarizedSurface, df: QForm1 | None = None) -> QForm1:
    """The dual 1-form f_x^-1 dx - f_y^-1 dy (before integration)."""
    df = df or d_field_hi(surface.f)
    inv_x, ok_x = qinv_masked(df.px)
    inv_y, ok_y = qinv_masked(df.py)
    grid = df.grid.merge_mask(ok_x & ok_y)
    return QForm1(grid, inv_x, -inv_y)


def christoffel(
    surface: PolarizedSurface,
    p0=None,
    c0=np.zeros(4),
    tau_iso=TAU_ISOTHERMIC,
    tolerance_scale=1.0,
) -> PolarizedSurface:
    """Christoffel transform pinned by Cf(p0) = c0.

    The dual is scaled so that df * dCf is the grid polarization dz^2; the
    transform flips the stored conjugation flag.
    """
    _, res = isothermic_certificate(surface)
    if res > tau_iso:
        raise NotClosed(f"isothermic certificate residual {res:.3e} exceeds {tau_iso:.1e}")
    p0 = p0 or surface.grid.center_node()
    omega = christoffel_form(surface)
    cf = integrate_form(omega, p0, np.asarray(c0, dtype=float), tolerance_scale=tolerance_scale)
    return surface.derived(cf.values, grid=cf.grid, flip=True, step="christoffel")


def goursat(
    surface: PolarizedSurface,
    m,
    p0=None,
    g0=np.zeros(4),
    c0=np.zeros(4),
    tolerance_scale=1.0,
) -> PolarizedSurface:
    """Goursat transform for the essential map x -> (x - m)^-1.

    Integrates -(Cf - m) df (Cf - m); equivalent to Christoffel, Moebius
    map, Christoffel but in a single integration.
    """
    p0 = p0 or surface.grid.center_node()
    cf = christoffel(surface, p0, c0, tolerance_scale=tolerance_scale)
    df = d_field_hi(surface.f)
    marr = m.as_array() if hasattr(m, "as_array") else np.asarray(m, dtype=float)
    factor = cf.f.values - marr
    px = -qmul(factor, qmul(df.px, factor))
    py = -qmul(factor, qmul(df.py, factor))
    grid = df.grid.merge_mask(cf.grid.valid())
    gf = integrate_form(QForm1(grid, px, py), p0, np.asarray(g0, dtype=float),
                        tolerance_scale=tolerance_scale)
    return surface.derived(gf.values, grid=gf.grid, step="goursat")


# ---------------------------------------------------------------------------
# frame connections
# ---------------------------------------------------------------------------

@dataclass
class FrameConnection:
    """Adapted frame field with its affine family of connection forms.

    phi(lam) = const + lam * slope entrywise; frame0 projects to the
    underlying surface in the chart v1 v2^-1.
    """

    grid: GridSpec
    frame0: np.ndarray  # (ny, nx, 2, 2, 4)
    const_x: np.ndarray
    const_y: np.ndarray
    slope_x: np.ndarray
    slope_y: np.ndarray
    p0: tuple

    def phi(self, lam):
        return self.const_x + lam * self.slope_x, self.const_y + lam * self.slope_y

    def frame0_at_p0(self):
        return self.frame0[self.p0[0], self.p0[1]]


def _upper(entry_x, entry_y, shape):
    """Embed 1-form coefficients into the upper-right matrix slot."""
    out_x = np.zeros(shape)
    out_y = np.zeros(shape)
    out_x[..., 0, 1, :] = entry_x
    out_y[..., 0, 1, :] = entry_y
    return out_x, out_y


def canonical_connection(
    surface: PolarizedSurface,
    cform: QForm1 | None = None,
    p0=None,
    tau_iso=TAU_ISOTHERMIC,
) -> FrameConnection:
    """Connection family of the canonical Euclidean frame [[f, 1], [1, 0]].

    phi(lam) = [[0, lam dCf], [df, 0]]; supplying cform (e.g. an analytic
    dual form) skips the internal Christoffel certificate and gains accuracy.
    """
    grid = surface.grid
    p0 = p0 or grid.center_node()
    df = d_field_hi(surface.f)
    if cform is None:
        _, res = isothermic_certificate(surface)
        if res > tau_iso:
            raise NotClosed(
                f"isothermic certificate residual {res:.3e} exceeds {tau_iso:.1e}"
            )
        cform = christoffel_form(surface, df)
    grid = grid.merge_mask(df.grid.valid() & cform.grid.valid())
    shape = (grid.ny, grid.nx, 2, 2, 4)
    const_x = np.zeros(shape)
    const_y = np.zeros(shape)
    const_x[..., 1, 0, :] = df.px
    const_y[..., 1, 0, :] = df.py
    slope_x, slope_y = _upper(cform.px, cform.py, shape)
    frame0 = np.zeros(shape)
    frame0[..., 0, 0, :] = surface.f.values
    frame0[..., 0, 1, 0] = 1.0
    frame0[..., 1, 0, 0] = 1.0
    return FrameConnection(grid, frame0, const_x, const_y, slope_x, slope_y, p0)


def affine_chart(vec, eps=EPS_ESCAPE):
    """Affine point v1 v2^-1 of homogeneous columns (..., 2, 4) plus mask."""
    inv, ok = qinv_masked(vec[..., 1, :], eps)
    return qmul(vec[..., 0, :], inv), ok


# ---------------------------------------------------------------------------
# spectral (T) transforms
# ---------------------------------------------------------------------------

@dataclass
class TTransformResult:
    """Spectral transform output: surface, pinned frame, second point."""

    surface: PolarizedSurface
    frame: FrameField
    second_point: QField
    connection: FrameConnection  # chainable family of the output frame


def t_transform_via_connection(
    conn: FrameConnection,
    lam: float,
    polarization="dz2",
    provenance=(),
    tolerance_scale=1.0,
) -> TTransformResult:
    phi_x, phi_y = conn.phi(lam)
    frame_id = integrate_frame(
        phi_x, phi_y, conn.grid, qm2_identity(), conn.p0, tolerance_scale=tolerance_scale
    )
    composed = qm2_mul(conn.frame0_at_p0(), frame_id.values)
    surf_vals, ok1 = affine_chart(composed[..., :, 0, :])
    second_vals, ok2 = affine_chart(composed[..., :, 1, :])
    grid1 = conn.grid.merge_mask(ok1)
    surface = PolarizedSurface(QField(grid1, surf_vals), polarization, provenance)
    second = QField(conn.grid.merge_mask(ok2), second_vals)
    out_conn = FrameConnection(
        conn.grid, composed, phi_x, phi_y, conn.slope_x, conn.slope_y, conn.p0
    )
    return TTransformResult(surface, frame_id, second, out_conn)


def t_transform(
    surface: PolarizedSurface,
    lam: float,
    p0=None,
    cform: QForm1 | None = None,
    tolerance_scale=1.0,
) -> TTransformResult:
    """Spectral transform from the canonical Euclidean frame, F(p0) = Id.

    The returned frame is the identity-pinned solution of dF = F Phi_lam;
    the surface representative is the affine projection of the canonical
    frame translate (so lam = 0 returns the surface itself).
    """
    conn = canonical_connection(surface, cform, p0)
    prov = surface.provenance + (f"t_transform({lam})",)
    return t_transform_via_connection(
        conn, lam, surface.polarization, prov, tolerance_scale
    )


def t_transform_gauged(
    surface: PolarizedSurface,
    lam: float,
    frame: FrameField | FrameConnection,
    p0=None,
    adapted_tol=1e-5,
    tolerance_scale=1.0,
) -> TTransformResult:
    """Spectral transform from an arbitrary adapted frame.

    For a FrameField input the base connection form is read off numerically
    and the lam-correction is built from the lower-left entry psi via the
    dual coefficients psi_x^-1, -psi_y^-1 (so that psi psi* is the grid
    polarization).
    """
    if isinstance(frame, FrameConnection):
        conn = frame
    else:
        conn = frame_connection_from_field(surface, frame, p0, adapted_tol)
    prov = surface.provenance + (f"t_transform_gauged({lam})",)
    return t_transform_via_connection(
        conn, lam, surface.polarization, prov, tolerance_scale
    )


def _dframe(frame: FrameField):
    """d of a frame field, entrywise (fourth-order, as for coefficient forms)."""
    from .grid import diff_axis4

    h = frame.grid.h
    return diff_axis4(frame.values, h, axis=1), diff_axis4(frame.values, h, axis=0)


def frame_connection_from_field(
    surface: PolarizedSurface, frame: FrameField, p0=None, adapted_tol=1e-5
) -> FrameConnection:
    """Numeric connection family of an adapted frame field.

    Reads phi0 = F^-1 dF entrywise and completes the family with the
    lam-slope built from the lower-left form psi: slope = upper(psi_x^-1,
    -psi_y^-1).
    """
    grid = frame.grid
    p0 = p0 or grid.center_node()
    proj, ok = affine_chart(frame.values[..., :, 0, :])
    sel = grid.valid() & ok & surface.grid.valid()
    if not sel.any():
        raise NotAdapted("frame projects nowhere")
    dev = float(qnorm(proj - surface.f.values)[sel].max())
    scale = max(1.0, float(qnorm(surface.f.values)[sel].max()))
    if dev > adapted_tol * scale:
        raise NotAdapted(f"frame does not project onto the surface (max dev {dev:.3e})")
    dfx, dfy = _dframe(frame)
    inv = qm2_inv(frame.values)
    const_x = qm2_mul(inv, dfx)
    const_y = qm2_mul(inv, dfy)
    psi_x = const_x[..., 1, 0, :]
    psi_y = const_y[..., 1, 0, :]
    star_x, ok_x = qinv_masked(psi_x)
    star_y, ok_y = qinv_masked(psi_y)
    slope_x, slope_y = _upper(star_x, -star_y, const_x.shape)
    out_grid = grid.merge_mask(ok & ok_x & ok_y)
    return FrameConnection(out_grid, frame.values, const_x, const_y, slope_x, slope_y, p0)


# ---------------------------------------------------------------------------
# Darboux transforms
# ---------------------------------------------------------------------------

@dataclass
class DarbouxResult:
    surface: PolarizedSurface
    connection: FrameConnection | None  # chainable frame family of the output


def darboux_via_connection(
    conn: FrameConnection,
    lam: float,
    w0,
    polarization="dz2",
    provenance=(),
    chain=False,
    tolerance_scale=1.0,
) -> DarbouxResult:
    """Darboux transform through an adapted frame family.

    Solves 0 = dw + phi(lam) w and projects frame0 * w.  With chain=True the
    output carries its own frame family (the transform parameter of the
    output family is offset so that its own Darboux/T transforms compose
    with exact initial-condition correspondence).
    """
    phi_x, phi_y = conn.phi(lam)
    w0 = np.asarray(w0, dtype=float)
    if w0.shape != (2, 4):
        raise ValueError("w0 must be a homogeneous column (2, 4)")
    if not chain:
        w = integrate_left_vector(
            phi_x, phi_y, conn.grid, w0, conn.p0, tolerance_scale=tolerance_scale
        )
        homog = qm2_matvec(conn.frame0, w)
        out_conn = None
    else:
        y = integrate_frame(
            phi_x, phi_y, conn.grid, qm2_identity(), conn.p0,
            tolerance_scale=tolerance_scale,
        )
        y_inv = qm2_inv(y.values)
        w = qm2_matvec(y_inv, w0)
        homog = qm2_matvec(conn.frame0, w)
        # completion [w0 | w0'] with an independent constant second column
        v = np.zeros((2, 2, 4))
        v[:, 0, :] = w0
        if qnorm(w0[0]) >= qnorm(w0[1]):
            v[1, 1, 0] = 1.0
        else:
            v[0, 1, 0] = 1.0
        g_frame = qm2_mul(qm2_mul(conn.frame0, y_inv), v)
        # family: phi_out(mu) = mu * V^-1 Y upper(slope) Y^-1 V (affine, const = 0 at mu=0
        # relative to this Darboux parameter; the group offset is already absorbed)
        v_inv = qm2_inv(v)
        sx = qm2_mul(qm2_mul(y.values, conn.slope_x), y_inv)
        sy = qm2_mul(qm2_mul(y.values, conn.slope_y), y_inv)
        sx = qm2_mul(qm2_mul(v_inv, sx), v)
        sy = qm2_mul(qm2_mul(v_inv, sy), v)
        out_conn = FrameConnection(
            conn.grid, g_frame, -lam * sx, -lam * sy, sx, sy, conn.p0
        )
    vals, ok = affine_chart(homog)
    grid = conn.grid.merge_mask(ok)
    surface = PolarizedSurface(QField(grid, vals), polarization, provenance)
    return DarbouxResult(surface, out_conn)


def darboux_linear(
    surface: PolarizedSurface,
    lam: float,
    p0=None,
    v0=((1.0, 0.0, 0.0, 0.0), (0.0, -1.0, 0.0, 0.0)),
    cform: QForm1 | None = None,
    chain=False,
    tolerance_scale=1.0,
) -> PolarizedSurface:
    """Darboux transform via the linear system 0 = dv + Phi_lam v.

    The transform is f + v2 v1^-1; the default v0 = (1, -i) matches the
    seeded closed-form family.
    """
    conn = canonical_connection(surface, cform, p0)
    prov = surface.provenance + (f"darboux_linear({lam})",)
    res = darboux_via_connection(
        conn, lam, np.asarray(v0, dtype=float), surface.polarization, prov,
        chain=chain, tolerance_scale=tolerance_scale,
    )
    return res if chain else res.surface


def darboux_riccati(
    surface: PolarizedSurface,
    lam: float,
    p0=None,
    d0=None,
    cform: QForm1 | None = None,
    eps_singular=1e-8,
    tolerance_scale=1.0,
) -> PolarizedSurface:
    """Darboux transform via the Riccati equation for delta = Df - f.

    d(delta) = delta (lam dCf) delta - df, delta(p0) = d0 - f(p0).
    """
    grid = surface.grid
    p0 = p0 or grid.center_node()
    df = d_field_hi(surface.f)
    if cform is None:
        cform = christoffel_form(surface, df)
    if d0 is None:
        raise ValueError("darboux_riccati needs an initial value d0 off the surface")
    d0 = np.asarray(d0.as_array() if hasattr(d0, "as_array") else d0, dtype=float)
    delta0 = d0 - surface.f.value_at(p0)
    if qnorm(delta0) < eps_singular:
        raise SingularityHit("initial point lies on the surface", node=p0)
    delta = integrate_riccati(
        lam * cform.px, lam * cform.py, df.px, df.py, grid, delta0, p0
    )
    ok = qnorm(delta) > eps_singular
    out_grid = grid.merge_mask(ok & df.grid.valid() & cform.grid.valid())
    prov = surface.provenance + (f"darboux_riccati({lam})",)
    return PolarizedSurface(
        QField(out_grid, surface.f.values + delta), surface.polarization, prov
    )


# ---------------------------------------------------------------------------
# Moebius equivalence testing
# ---------------------------------------------------------------------------

def sample_quadruples(grid: GridSpec, n_quads, seed=0, min_sep=None, extra_valid=None):
    """Seeded node quadruples, pairwise separated, inside the valid set."""
    valid = grid.valid() if extra_valid is None else (grid.valid() & extra_valid)
    nodes = np.argwhere(valid)
    if len(nodes) < 16:
        raise DegenerateQuadruple("not enough valid nodes to sample")
    if min_sep is None:
        min_sep = max(2, min(grid.nx, grid.ny) // 5)
    rng = np.random.default_rng(seed)
    quads = []
    attempts = 0
    while len(quads) < n_quads and attempts < 200 * n_quads:
        attempts += 1
        pick = nodes[rng.integers(0, len(nodes), size=4)]
        ok = all(
            np.abs(pick[a] - pick[b]).max() >= min_sep
            for a in range(4)
            for b in range(a + 1, 4)
        )
        if ok:
            quads.append([tuple(p) for p in pick])
    if len(quads) < n_quads:
        raise DegenerateQuadruple("could not sample separated quadruples")
    return quads


def moebius_equivalent(
    a: PolarizedSurface | QField,
    b: PolarizedSurface | QField,
    n_quads=20,
    seed=0,
    tau=1e-5,
    retries=40,
):
    """Compare cross-ratio classes of seeded node quadruples.

    Returns (equivalent, residual): residual is the largest absolute
    discrepancy in (Re r, |r|) over the sampled quadruples.
    """
    fa = a.f if isinstance(a, PolarizedSurface) else a
    fb = b.f if isinstance(b, PolarizedSurface) else b
    if not fa.grid.same_geometry(fb.grid):
        raise DegenerateQuadruple("surfaces live on different grids")
    common = fa.grid.valid() & fb.grid.valid()
    residual = 0.0
    done = 0
    seed_k = seed
    while done < n_quads and retries > 0:
        quads = sample_quadruples(fa.grid, n_quads - done, seed_k, extra_valid=common)
        for quad in quads:
            pts_a = np.stack([fa.values[iy, ix] for iy, ix in quad])
            pts_b = np.stack([fb.values[iy, ix] for iy, ix in quad])
            try:
                ra, na = cross_ratio_class_array(pts_a[0], pts_a[1], pts_a[2], pts_a[3])
                rb, nb = cross_ratio_class_array(pts_b[0], pts_b[1], pts_b[2], pts_b[3])
            except DegenerateQuadruple:
                retries -= 1
                continue
            residual = max(residual, float(abs(ra - rb)), float(abs(na - nb)))
            done += 1
        seed_k += 101
    if done < n_quads:
        raise DegenerateQuadruple("quadruple sampling exhausted retries")
    return residual <= tau, residual


# ---------------------------------------------------------------------------
# permutability checks
# ---------------------------------------------------------------------------

@dataclass
class PermutabilityReport:
    p1_residual: float
    p2_pointwise: float
    p2_translation: float
    p3_residual: float
    tau: float

    def all_pass(self):
        return (
            self.p1_residual <= self.tau
            and self.p3_residual <= self.tau
            and self.p2_translation <= 100 * self.tau
        )


def permutability_suite(
    surface: PolarizedSurface,
    lam: float,
    mu: float | None = None,
    p0=None,
    d0=None,
    tau=1e-5,
    seed=7,
) -> PermutabilityReport:
    """Run the three permutability checks on a surface.

    P1: the second point of the spectral transform is Moebius-equivalent to
        the spectral transform of the Christoffel dual.
    P2: Christoffel of a Darboux transform equals (up to translation) the
        Darboux transform of the Christoffel dual, with the reciprocal
        positioning identity checked pointwise.
    P3: spectral transforms and Darboux transforms interleave with a
        parameter shift; checked through chained frame families so the
        initial conditions correspond exactly.
    """
    grid = surface.grid
    p0 = p0 or grid.center_node()
    mu = 0.4 * lam if mu is None else mu
    f0 = surface.f.value_at(p0)

    # P1
    tt = t_transform(surface, lam, p0)
    cs = christoffel(surface, p0)
    tc = t_transform(cs, lam, p0)
    _, p1 = moebius_equivalent(tt.second_point, tc.surface, seed=seed, tau=tau)

    # P2  (positioning lam (CDf - Cf) = (Df - f)^-1)
    if d0 is None:
        nrm = normal_field(surface)
        d0 = f0 + nrm.values[p0[0], p0[1]]
    dar = darboux_riccati(surface, lam, p0, d0)
    diff = dar.f.values - surface.f.values
    inv_diff, ok = qinv_masked(diff)
    c0 = inv_diff[p0[0], p0[1]] / lam
    cd = christoffel(dar, p0, c0)
    dc = darboux_riccati(cs, lam, p0, Quaternion.from_array(c0))
    sel = (
        grid.interior()
        & cd.grid.valid()
        & dc.grid.valid()
        & cs.grid.valid()
        & ok
    )
    point_res = qnorm(lam * (cd.f.values - cs.f.values) - inv_diff)[sel].max()
    trans = cd.f.values - dc.f.values
    trans_res = qnorm(trans - trans[p0[0], p0[1]])[sel].max()

    # P3 via chained connections: T_mu(D_lam f) vs D_(lam-mu)(T_mu f)
    v0 = np.zeros((2, 4))
    v0[0, 0] = 1.0
    v0[1] = diff[p0[0], p0[1]]
    conn = canonical_connection(surface, p0=p0)
    dar_chain = darboux_via_connection(conn, lam, v0, chain=True)
    lhs = t_transform_via_connection(dar_chain.connection, mu).surface
    tt_chain = t_transform_via_connection(conn, mu)
    rhs = darboux_via_connection(tt_chain.connection, lam - mu, v0).surface
    _, p3 = moebius_equivalent(lhs, rhs, seed=seed + 1, tau=tau)

    return PermutabilityReport(p1, float(point_res), float(trans_res), p3, tau)


def wedge_residual(surface: PolarizedSurface, other: PolarizedSurface) -> float:
    """Max norm of wedge(df, d other) over the common interior."""
    w = wedge(d_field(surface.f), d_field(other.f))
    sel = w.grid.valid() & surface.grid.interior()
    return float(qnorm(w.values)[sel].max())
