"""Constant-mean-curvature-1-type surfaces in hyperbolic space.

Minimal surfaces come from meromorphic data (g, omega) through the
quaternionic representation df = (i - jg) omega j (i - jg) / 2; the
spectral family deforms them into cmc surfaces of hyperbolic space (the
half-space sits inside Im H with boundary plane Cj and height along i);
a second representation produces the cmc surface directly as a Darboux
transform of its boundary map -jg.  Certification is cross-route: an
independent Euclidean half-space oracle measures the hyperbolic mean
curvature, and the central-sphere congruence metric is checked against
the Liouville equation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BoundaryContact,
    DegenerateTangent,
    FrameUnavailable,
    InitialOnBoundary,
    NotClosed,
    PatternMismatch,
    UmbilicRegion,
)
from .grid import (
    FrameField,
    GridSpec,
    QField,
    QForm1,
    diff_axis4,
    dilate_invalid,
    grid_tolerance,
    integrate_form,
    integrate_frame,
    integrate_right_rowvec,
    laplacian,
)
from .quaternion import (
    INFINITY,
    HermitianForm,
    MoebiusMap,
    Quaternion,
    cj,
    lorentz,
    qconj,
    qinv_masked,
    qm2_inv,
    qm2_mul,
    qmul,
    qnorm,
    qnormsq,
)
from .surfaces import (
    PolarizedSurface,
    SurfaceJets,
    fundamental_forms,
    surface_jets,
)
from .transforms import (
    FrameConnection,
    canonical_connection,
    darboux_via_connection,
    t_transform_via_connection,
)

EPS_HEIGHT = 1e-6


# ---------------------------------------------------------------------------
# Weierstrass data
# ---------------------------------------------------------------------------

@dataclass
class WeierstrassData:
    """Meromorphic data (g, omega = w dz) sampled on a grid.

    dg may be supplied analytically; otherwise it is differentiated from the
    g samples.  cr_residual reports the discrete Cauchy-Riemann defect of
    both g and w (the holomorphy certificate).
    """

    grid: GridSpec
    g: np.ndarray  # complex (ny, nx)
    w: np.ndarray  # complex (ny, nx)
    dg: np.ndarray = None  # complex (ny, nx), dg/dz

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=complex)
        self.w = np.asarray(self.w, dtype=complex)
        if self.dg is None:
            self.dg = 0.5 * (
                diff_axis4(self.g.real, self.grid.h, 1)
                + 1j * diff_axis4(self.g.imag, self.grid.h, 1)
                - 1j * diff_axis4(self.g.real, self.grid.h, 0)
                + diff_axis4(self.g.imag, self.grid.h, 0)
            )
        else:
            self.dg = np.asarray(self.dg, dtype=complex)

    @classmethod
    def sample(cls, grid, g_fn, w_fn, dg_fn=None):
        zs = grid.zgrid()
        g = np.vectorize(g_fn)(zs)
        w = np.vectorize(w_fn)(zs)
        dg = np.vectorize(dg_fn)(zs) if dg_fn else None
        return cls(grid, g, w, dg)

    def cr_residual(self):
        """Max discrete dbar defect of g and w, relative to field scale."""
        out = 0.0
        sel = dilate_invalid(self.grid.valid(), rings=2)
        for arr in (self.g, self.w):
            dx = diff_axis4(arr.real, self.grid.h, 1) + 1j * diff_axis4(
                arr.imag, self.grid.h, 1
            )
            dy = diff_axis4(arr.real, self.grid.h, 0) + 1j * diff_axis4(
                arr.imag, self.grid.h, 0
            )
            dbar = 0.5 * (dx + 1j * dy)
            scale = max(
                1e-300,
                float(np.abs(dx[sel]).max()),
                float(np.abs(dy[sel]).max()),
                float(np.abs(arr[sel]).max()),
            )
            out = max(out, float(np.abs(dbar[sel]).max() / scale))
        return out

    def check_holomorphic(self, tau=None, tolerance_scale=1.0):
        tau = tau if tau is not None else grid_tolerance(self.grid, scale=tolerance_scale)
        res = self.cr_residual()
        if res > tau:
            raise NotClosed(f"Cauchy-Riemann residual {res:.3e} exceeds {tau:.3e}")


def _q1_field(g):
    """The field i - jg with components (0, 1, -Re g, Im g)."""
    g = np.asarray(g)
    out = np.zeros(g.shape + (4,))
    out[..., 1] = 1.0
    out[..., 2] = -g.real
    out[..., 3] = g.imag
    return out


def weierstrass_form(data: WeierstrassData) -> QForm1:
    """The minimal-surface integrand (i - jg) omega j (i - jg) / 2."""
    q1 = _q1_field(data.g)
    px = 0.5 * qmul(q1, qmul(cj(data.w), q1))
    py = 0.5 * qmul(q1, qmul(cj(1j * data.w), q1))
    return QForm1(data.grid, px, py)


def weierstrass_minimal(
    data: WeierstrassData,
    p0=None,
    f0=np.zeros(4),
    eps_immersion=1e-8,
    tolerance_scale=1.0,
) -> PolarizedSurface:
    """Minimal surface with the given meromorphic data, pinned at f(p0) = f0."""
    data.check_holomorphic(tolerance_scale=tolerance_scale)
    p0 = p0 or data.grid.center_node()
    form = weierstrass_form(data)
    if float(qnorm(form.px)[data.grid.valid()].max()) < eps_immersion:
        raise DegenerateTangent("omega vanishes: the data does not immerse")
    f = integrate_form(form, p0, np.asarray(f0, dtype=float),
                       tolerance_scale=tolerance_scale)
    return PolarizedSurface(f, "dz2", ("weierstrass_minimal",))


def stereographic(x: Quaternion) -> Quaternion:
    """Stereographic projection of the boundary plane Cj onto the unit sphere.

    x -> -i - 2 (i + x)^-1; never singular since |i + x|^2 = 1 + |x|^2.
    """
    return Quaternion(0, -1, 0, 0) - 2.0 * (Quaternion(0, 1, 0, 0) + x).inverse()


def stereographic_field(values):
    """Vectorized stereographic projection of (..., 4) Cj-valued arrays."""
    i_plus = np.array(values, dtype=float, copy=True)
    i_plus[..., 1] += 1.0
    inv = qconj(i_plus) / qnormsq(i_plus)[..., None]
    out = -2.0 * inv
    out[..., 1] -= 1.0
    return out


def gauss_sphere_map(data: WeierstrassData):
    """Unit-sphere Gauss map (i - jg) i (i - jg)^-1 of the minimal surface."""
    q1 = _q1_field(data.g)
    i_arr = np.zeros_like(q1)
    i_arr[..., 1] = 1.0
    inv = qconj(q1) / qnormsq(q1)[..., None]
    return qmul(q1, qmul(i_arr, inv))


# ---------------------------------------------------------------------------
# cmc surfaces
# ---------------------------------------------------------------------------

@dataclass
class CmcSurface:
    """Surface in the half-space model (boundary plane Cj, height along i).

    lam is the construction parameter: the ambient sectional curvature is
    -4 lam^2 and |mean curvature| = 2 |lam|.
    """

    f: QField
    lam: float
    gauss_hyperbolic: QField
    route: str
    cousin: PolarizedSurface | None = None
    connection: FrameConnection | None = None

    @property
    def grid(self):
        return self.f.grid


def darboux_weierstrass(
    data: WeierstrassData,
    lam: float,
    p0=None,
    v0=((1.0, 0.0, 0.0, 0.0), (0.0, -1.0, 0.0, 0.0)),
    eps_boundary=1e-6,
    chain=False,
    tolerance_scale=1.0,
) -> CmcSurface:
    """cmc surface as a Darboux transform of its boundary map -jg.

    Integrates the linear system dv1 = -lam omega j v2, dv2 = j dg v1 and
    returns f = -jg + v2 v1^-1; requires the initial point off the boundary
    plane.
    """
    data.check_holomorphic(tolerance_scale=tolerance_scale)
    grid = data.grid
    p0 = p0 or grid.center_node()
    v0 = np.asarray(v0, dtype=float)
    off0, ok0 = _off_boundary(v0[None, None])
    if not ok0[0, 0] or abs(off0[0, 0, 1]) < eps_boundary:
        raise InitialOnBoundary("v2 v1^-1 must start off the plane Cj")
    conn = boundary_connection(data, p0)
    prov = (f"darboux_weierstrass({lam})",)
    result = darboux_via_connection(conn, lam, v0, "dz2", prov, chain=chain,
                                    tolerance_scale=tolerance_scale)
    base = boundary_surface(data)
    return CmcSurface(
        result.surface.f,
        lam,
        base.f,
        "darboux-weierstrass",
        connection=result.connection,
    )


def _off_boundary(v):
    inv, ok = qinv_masked(v[..., 0, :])
    return qmul(v[..., 1, :], inv), ok


def boundary_surface(data: WeierstrassData) -> PolarizedSurface:
    """The boundary map -jg as a polarized surface (the hyperbolic Gauss map)."""
    vals = cj(-np.conj(data.g))
    return PolarizedSurface(QField(data.grid, vals), "dzbar2", ("boundary(-jg)",))


def boundary_connection(data: WeierstrassData, p0=None) -> FrameConnection:
    """Canonical connection of -jg with the analytic dual form omega j.

    The pair (-jg, integral of omega j) is a Christoffel pair for the
    polarization omega dg, so the dual form is available without numerical
    integration.
    """
    grid = data.grid
    p0 = p0 or grid.center_node()
    cform = QForm1(grid, cj(data.w), cj(1j * data.w))
    surf = boundary_surface(data)
    return canonical_connection(surf, cform, p0)


def bryant_system(
    data: WeierstrassData,
    lam: float,
    p0=None,
    f0=np.zeros(4),
    fh0=(1.0, 0.0, 0.0, 0.0),
    tolerance_scale=1.0,
):
    """Integrate the coupled first-order system of the perturbed representation.

    d f = fh * [(i - jg) omega j (i - jg) / 2]
    d fh = f * [-2 lam (i - jg)^-1 j dg (i - jg)^-1]

    Both components are quaternion-valued scalars (a row of a spectral
    frame), not points of Im H; see bryant_candidates for the projections
    compared against the unambiguous routes.
    """
    data.check_holomorphic(tolerance_scale=tolerance_scale)
    grid = data.grid
    p0 = p0 or grid.center_node()
    alpha = weierstrass_form(data)
    q1 = _q1_field(data.g)
    q1_inv = -q1 / (1.0 + np.abs(data.g) ** 2)[..., None]
    jdg_x = cj(np.conj(data.dg))
    jdg_y = cj(np.conj(1j * data.dg))
    beta_x = -2.0 * lam * qmul(q1_inv, qmul(jdg_x, q1_inv))
    beta_y = -2.0 * lam * qmul(q1_inv, qmul(jdg_y, q1_inv))
    shape = (grid.ny, grid.nx, 2, 2, 4)
    phi_x = np.zeros(shape)
    phi_y = np.zeros(shape)
    phi_x[..., 1, 0, :] = alpha.px
    phi_y[..., 1, 0, :] = alpha.py
    phi_x[..., 0, 1, :] = beta_x
    phi_y[..., 0, 1, :] = beta_y
    w0 = np.stack([np.asarray(f0, dtype=float), np.asarray(fh0, dtype=float)])
    w = integrate_right_rowvec(phi_x, phi_y, grid, w0, p0,
                               tolerance_scale=tolerance_scale)
    return QField(grid, w[..., 0, :]), QField(grid, w[..., 1, :])


def bryant_candidates(f_lam: QField, fh_lam: QField):
    """Candidate readings of the coupled-system output as a surface.

    "component": the first component taken verbatim; "ratio": the
    homogeneous reading f * fh^-1 of the row (f, fh).
    """
    inv, ok = qinv_masked(fh_lam.values)
    ratio = qmul(f_lam.values, inv)
    grid = f_lam.grid.merge_mask(ok)
    return {
        "component": f_lam,
        "ratio": QField(grid, ratio),
    }


# ---------------------------------------------------------------------------
# half-space mean curvature oracle
# ---------------------------------------------------------------------------

def mean_curvature_hyperbolic(f: QField, lam: float, eps_height=EPS_HEIGHT):
    """Hyperbolic mean curvature via the independent half-space oracle.

    Treats f as a Euclidean surface, measures its Euclidean mean curvature
    and unit normal by fourth-order differences, and converts through the
    conformal factor 1/(2|lam| t): H = 2|lam| (t H_e + n_i), with the
    global orientation sign of the normal field left as reported.

    Returns (field, mean, std) over the valid interior.
    """
    if lam == 0:
        raise ValueError("hyperbolic oracle needs lam != 0")
    grid = f.grid
    heights = f.values[..., 1]
    sel0 = grid.valid()
    sign = 1.0 if np.median(heights[sel0]) >= 0 else -1.0
    vals = f.values if sign > 0 else _reflect_i(f.values)
    surf = PolarizedSurface(QField(grid, vals), "dz2")
    ff = fundamental_forms(surf)
    t = vals[..., 1]
    sel = sel0 & ff.valid & grid.interior()
    if (t[sel] < eps_height).any():
        raise BoundaryContact("surface touches the boundary plane")
    h_e = ff.mean_curvature()
    n_i = ff.normal[..., 1]
    field = 2.0 * abs(lam) * (t * h_e + n_i)
    return field, float(field[sel].mean()), float(field[sel].std()), sel


def _reflect_i(values):
    out = np.array(values, copy=True)
    out[..., 1] = -out[..., 1]
    return out


# ---------------------------------------------------------------------------
# spherical type (Liouville) certificate
# ---------------------------------------------------------------------------

def central_sphere_congruence(surface: PolarizedSurface, jets: SurfaceJets | None = None):
    """Unit R^6_1 components of the mean-curvature sphere congruence.

    s = H_e * (point form of f) - (tangent plane form); <s, s> = 1 without
    further normalization, for any mean curvature including H_e = 0.
    Returns six real fields (s11, s22, s12_w, s12_x, s12_y, s12_z).
    """
    jets = jets or surface_jets(surface)
    ff = fundamental_forms(surface, jets)
    h_e = ff.mean_curvature()
    fvals = surface.f.values
    n = jets.normal
    s11 = h_e
    s22 = h_e * qnormsq(fvals) + 2.0 * np.sum(fvals[..., 1:] * n[..., 1:], axis=-1)
    s12 = -(h_e[..., None] * fvals + n)
    comps = np.concatenate([s11[..., None], s22[..., None], s12], axis=-1)
    return comps, ff


def lorentz_pair_fields(a, b):
    """Lorentz product of six-component form fields (s11, s22, s12[4])."""
    dot12 = np.sum(a[..., 2:] * b[..., 2:], axis=-1)
    return dot12 - 0.5 * (a[..., 0] * b[..., 1] + a[..., 1] * b[..., 0])


def spherical_type_certificate(
    surface: PolarizedSurface, umbilic_gap=1e-6, return_fields=False
):
    """Liouville-equation residual of the central-sphere-congruence metric.

    The congruence metric is <ds, ds> = e^{-2u}(dx^2 + dy^2) exactly when
    the surface is isothermic of spherical type; the certificate reads u
    from the x-direction coefficient and returns max |Delta u - e^{-2u}|
    over the interior (fourth-order stencils throughout).
    """
    jets = surface_jets(surface)
    ff = fundamental_forms(surface, jets)
    gap = ff.principal_gap()
    scale = np.maximum(np.abs(ff.mean_curvature()), 1.0)
    not_umbilic = gap > umbilic_gap * scale
    if not not_umbilic.any():
        raise UmbilicRegion("surface is umbilic everywhere on the patch")
    comps, _ = central_sphere_congruence(surface, jets)
    h = surface.grid.h
    sx = diff_axis4(comps, h, axis=1)
    sy = diff_axis4(comps, h, axis=0)
    e_s = lorentz_pair_fields(sx, sx)
    ok = e_s > 1e-300
    u = -0.5 * np.log(np.where(ok, e_s, 1.0))
    lap = _laplacian4(u, h)
    residual_field = np.abs(lap - np.exp(-2.0 * u))
    # three chained stencil levels (jets, ds, laplacian): an 8-ring margin
    # keeps the reported maximum on centered stencils only
    valid = (
        surface.grid.valid()
        & jets.valid
        & not_umbilic
        & ok
        & _interior(surface.grid, 8)
    )
    if not valid.any():
        raise UmbilicRegion("no valid non-umbilic interior nodes")
    residual = float(residual_field[valid].max())
    if return_fields:
        return u, residual, residual_field, valid
    return u, residual


def _interior(grid, rings):
    out = np.ones((grid.ny, grid.nx), dtype=bool)
    out[:rings, :] = out[-rings:, :] = False
    out[:, :rings] = out[:, -rings:] = False
    return out


def _laplacian4(u, h):
    """Fourth-order 9-point Laplacian (certificate-internal, not the 5-point op)."""
    lap = np.zeros_like(u)
    c = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h * h)
    lap[2:-2, :] += sum(c[k] * u[k : u.shape[0] - 4 + k, :] for k in range(5))
    lap[:, 2:-2] += sum(c[k] * u[:, k : u.shape[1] - 4 + k] for k in range(5))
    lap[:2, :] = lap[-2:, :] = 0.0
    lap[:, :2] = lap[:, -2:] = 0.0
    return lap


# ---------------------------------------------------------------------------
# Ribaucour frames
# ---------------------------------------------------------------------------

def quat_from_rotation(r3):
    """Unit quaternions of (..., 3, 3) rotation matrices (sign per node)."""
    m = np.asarray(r3, dtype=float)
    m00, m11, m22 = m[..., 0, 0], m[..., 1, 1], m[..., 2, 2]
    tr = m00 + m11 + m22

    def safe_sqrt(x):
        return np.sqrt(np.maximum(x, 0.0))

    w_a = 0.5 * safe_sqrt(1.0 + tr)
    den_a = np.where(w_a > 1e-12, 4.0 * w_a, 1.0)
    cand_a = np.stack(
        [
            w_a,
            (m[..., 2, 1] - m[..., 1, 2]) / den_a,
            (m[..., 0, 2] - m[..., 2, 0]) / den_a,
            (m[..., 1, 0] - m[..., 0, 1]) / den_a,
        ],
        axis=-1,
    )
    x_b = 0.5 * safe_sqrt(1.0 + m00 - m11 - m22)
    den_b = np.where(x_b > 1e-12, 4.0 * x_b, 1.0)
    cand_b = np.stack(
        [
            (m[..., 2, 1] - m[..., 1, 2]) / den_b,
            x_b,
            (m[..., 0, 1] + m[..., 1, 0]) / den_b,
            (m[..., 0, 2] + m[..., 2, 0]) / den_b,
        ],
        axis=-1,
    )
    y_c = 0.5 * safe_sqrt(1.0 - m00 + m11 - m22)
    den_c = np.where(y_c > 1e-12, 4.0 * y_c, 1.0)
    cand_c = np.stack(
        [
            (m[..., 0, 2] - m[..., 2, 0]) / den_c,
            (m[..., 0, 1] + m[..., 1, 0]) / den_c,
            y_c,
            (m[..., 1, 2] + m[..., 2, 1]) / den_c,
        ],
        axis=-1,
    )
    z_d = 0.5 * safe_sqrt(1.0 - m00 - m11 + m22)
    den_d = np.where(z_d > 1e-12, 4.0 * z_d, 1.0)
    cand_d = np.stack(
        [
            (m[..., 1, 0] - m[..., 0, 1]) / den_d,
            (m[..., 0, 2] + m[..., 2, 0]) / den_d,
            (m[..., 1, 2] + m[..., 2, 1]) / den_d,
            z_d,
        ],
        axis=-1,
    )
    choice = np.argmax(np.stack([tr, m00, m11, m22], axis=-1), axis=-1)
    out = np.where(
        (choice == 0)[..., None],
        cand_a,
        np.where(
            (choice == 1)[..., None],
            cand_b,
            np.where((choice == 2)[..., None], cand_c, cand_d),
        ),
    )
    norm = np.sqrt(np.sum(out * out, axis=-1))
    return out / np.where(norm > 1e-300, norm, 1.0)[..., None]


def _sign_continuity(r, p0):
    """Flip quaternion signs so the field is continuous along the path scheme."""
    out = np.array(r, copy=True)
    iy0, ix0 = p0
    for iy in range(iy0 + 1, out.shape[0]):
        if np.sum(out[iy, ix0] * out[iy - 1, ix0]) < 0:
            out[iy, ix0] = -out[iy, ix0]
    for iy in range(iy0 - 1, -1, -1):
        if np.sum(out[iy, ix0] * out[iy + 1, ix0]) < 0:
            out[iy, ix0] = -out[iy, ix0]
    for ix in range(ix0 + 1, out.shape[1]):
        flip = np.sum(out[:, ix] * out[:, ix - 1], axis=-1) < 0
        out[flip, ix] = -out[flip, ix]
    for ix in range(ix0 - 1, -1, -1):
        flip = np.sum(out[:, ix] * out[:, ix + 1], axis=-1) < 0
        out[flip, ix] = -out[flip, ix]
    return out


def _ribaucour_from_parts(grid, fvals, spin, u, ux, uy, p0):
    """Assemble the frame [[f r, r], [r, 0]] and its connection family.

    Diagonal: ( -u_y i - e^-u k )/2 dx + ( u_x i - e^-u j )/2 dy;
    lower-left psi = e^u (j dx + k dy); slope psi* = e^-u (-j dx + k dy).
    """
    e_u = np.exp(u)
    e_mu = np.exp(-u)
    shape = (grid.ny, grid.nx, 2, 2, 4)
    const_x = np.zeros(shape)
    const_y = np.zeros(shape)
    diag_x = np.zeros((grid.ny, grid.nx, 4))
    diag_x[..., 1] = -0.5 * uy
    diag_x[..., 3] = -0.5 * e_mu
    diag_y = np.zeros((grid.ny, grid.nx, 4))
    diag_y[..., 1] = 0.5 * ux
    diag_y[..., 2] = -0.5 * e_mu
    const_x[..., 0, 0, :] = diag_x
    const_x[..., 1, 1, :] = diag_x
    const_y[..., 0, 0, :] = diag_y
    const_y[..., 1, 1, :] = diag_y
    const_x[..., 1, 0, 2] = e_u
    const_y[..., 1, 0, 3] = e_u
    slope_x = np.zeros(shape)
    slope_y = np.zeros(shape)
    slope_x[..., 0, 1, 2] = -e_mu
    slope_y[..., 0, 1, 3] = e_mu
    frame0 = np.zeros(shape)
    frame0[..., 0, 0, :] = qmul(fvals, spin)
    frame0[..., 0, 1, :] = spin
    frame0[..., 1, 0, :] = spin
    return FrameConnection(grid, frame0, const_x, const_y, slope_x, slope_y, p0)


def ribaucour_connection(
    surface: PolarizedSurface, p0=None, pattern_tol=1e-2
) -> FrameConnection:
    """Ribaucour frame family of a minimal surface normalized to II = dx^2 - dy^2.

    Straightens the orthonormal frame (f_x/e^u, f_y/e^u, n) to (j, k, i) by a
    unit quaternion spin field and rescales homogeneous coordinates so the
    connection form takes the structured shape (curvature data readable from
    the entries).  Requires <f_xx, n> = +1 to tolerance: the surface must be
    minimal and sampled in conformal curvature-line coordinates with the
    standard polarization.
    """
    grid = surface.grid
    p0 = p0 or grid.center_node()
    jets = surface_jets(surface)
    ff = fundamental_forms(surface, jets)
    sel = grid.valid() & jets.valid
    e2u = ff.E
    if (e2u[sel] <= 0).any():
        raise DegenerateTangent("metric degenerate inside the patch")
    u = 0.5 * np.log(np.where(sel, e2u, 1.0))
    dev_minimal = float(np.abs(ff.e + ff.g)[sel].max())
    dev_norm = float(np.abs(ff.e - 1.0)[sel].max())
    if dev_norm > pattern_tol:
        if float(np.abs(ff.e + 1.0)[sel].max()) < pattern_tol:
            raise PatternMismatch(
                "surface normalized to the conjugate chart (II_xx = -1); "
                "resample with x and y exchanged"
            )
        raise PatternMismatch(
            f"second fundamental form is not dx^2 - dy^2 (|e - 1| up to {dev_norm:.2e})"
        )
    if dev_minimal > pattern_tol:
        raise PatternMismatch(f"surface is not minimal (|e + g| up to {dev_minimal:.2e})")
    e_u = np.exp(u)
    t1 = jets.fx[..., 1:] / e_u[..., None]
    t2 = jets.fy[..., 1:] / e_u[..., None]
    nrm = jets.normal[..., 1:]
    rot = np.stack([nrm, t1, t2], axis=-1)  # columns: images of (i, j, k)
    spin = _sign_continuity(quat_from_rotation(rot), p0)
    ux = diff_axis4(u, grid.h, axis=1)
    uy = diff_axis4(u, grid.h, axis=0)
    conn = _ribaucour_from_parts(grid, surface.f.values, spin, u, ux, uy, p0)
    return conn


def family_ribaucour_connection(grid: GridSpec, lam: float, p0=None) -> FrameConnection:
    """Closed-form Ribaucour connection of the reference minimal family."""
    from . import oracles

    p0 = p0 or grid.center_node()
    zs = grid.zgrid()
    fvals = np.empty((grid.ny, grid.nx, 4))
    spin = np.empty((grid.ny, grid.nx, 4))
    u = np.empty((grid.ny, grid.nx))
    ux = np.empty_like(u)
    uy = np.empty_like(u)
    for iy in range(grid.ny):
        for ix in range(grid.nx):
            z = zs[iy, ix]
            fvals[iy, ix] = oracles.minimal_family(z, lam).as_array()
            spin[iy, ix] = oracles.family_spin(z, lam).as_array()
            uval, dzu = oracles.family_log_metric(z, lam)
            u[iy, ix] = uval
            ux[iy, ix] = 2.0 * dzu.real
            uy[iy, ix] = -2.0 * dzu.imag
    spin = _sign_continuity(spin, p0)
    return _ribaucour_from_parts(grid, fvals, spin, u, ux, uy, p0)


@dataclass
class RibaucourData:
    """Curvature data read off a structured connection form."""

    u: np.ndarray
    H: np.ndarray
    Hhat: np.ndarray
    lam: np.ndarray
    lamhat: np.ndarray
    valid: np.ndarray
    pattern_residual: float
    gauss_residual: float
    codazzi_residual: float


def ribaucour_data_extract(frame: FrameField) -> RibaucourData:
    """Read (u, H, Hhat, lam, lamhat) from Phi = F^-1 dF by pattern matching.

    Expects Phi = [[D, (lamhat e^u dz - lam e^-u dzbar) j], [e^u dz j, D]]
    with D = (i/2)(*du - (H e^u dz + Hhat e^-u dzbar) j).  Derivatives are
    fourth-order; the off-pattern residual is reported and gates nothing
    except a gross mismatch (e^u must be positive).
    """
    grid = frame.grid
    h = grid.h
    inv = qm2_inv(frame.values)
    phi_x = qm2_mul(inv, diff_axis4(frame.values, h, axis=1))
    phi_y = qm2_mul(inv, diff_axis4(frame.values, h, axis=0))
    sel = dilate_invalid(grid.valid(), rings=2)

    eu_x = phi_x[..., 1, 0, 2]
    if (eu_x[sel] <= 0).any():
        raise PatternMismatch("lower-left entry is not e^u dz j (e^u must be > 0)")
    u = np.log(np.where(eu_x > 0, eu_x, 1.0))
    e_u = np.where(eu_x > 0, eu_x, 1.0)
    e_mu = 1.0 / e_u

    x_j = phi_x[..., 0, 1, 2]
    y_k = phi_y[..., 0, 1, 3]
    lamhat = 0.5 * (x_j + y_k) * e_mu
    lam = 0.5 * (y_k - x_j) * e_u

    p_k = phi_x[..., 0, 0, 3]
    q_j = phi_y[..., 0, 0, 2]
    big_h = (q_j - p_k) * e_mu
    big_hhat = -(q_j + p_k) * e_u

    # off-pattern pieces: everything the structured form says must vanish
    scale = 1.0 + max(
        float(np.abs(phi_x[sel]).max()), float(np.abs(phi_y[sel]).max())
    )
    ux = diff_axis4(u, h, axis=1)
    uy = diff_axis4(u, h, axis=0)
    pieces = [
        np.abs(phi_x[..., 1, 0, 0]), np.abs(phi_x[..., 1, 0, 1]),
        np.abs(phi_x[..., 1, 0, 3]),
        np.abs(phi_y[..., 1, 0, 0]), np.abs(phi_y[..., 1, 0, 1]),
        np.abs(phi_y[..., 1, 0, 2] - 0.0), np.abs(phi_y[..., 1, 0, 3] - e_u),
        np.abs(phi_x[..., 0, 1, 0]), np.abs(phi_x[..., 0, 1, 1]),
        np.abs(phi_x[..., 0, 1, 3]),
        np.abs(phi_y[..., 0, 1, 0]), np.abs(phi_y[..., 0, 1, 1]),
        np.abs(phi_y[..., 0, 1, 2]),
        np.abs(phi_x[..., 0, 0, 0]), np.abs(phi_y[..., 0, 0, 0]),
        np.abs(phi_x[..., 0, 0, 1] + 0.5 * uy),
        np.abs(phi_y[..., 0, 0, 1] - 0.5 * ux),
        np.abs(phi_x[..., 0, 0, 2]), np.abs(phi_y[..., 0, 0, 3]),
    ]
    for c_ in range(4):
        pieces.append(np.abs(phi_x[..., 0, 0, c_] - phi_x[..., 1, 1, c_]))
        pieces.append(np.abs(phi_y[..., 0, 0, c_] - phi_y[..., 1, 1, c_]))
    pattern = float(np.maximum.reduce(pieces)[sel].max() / scale)

    lap, lap_valid = laplacian(u, grid)
    gauss_field = np.abs(
        lap + big_h**2 * np.exp(2 * u) - big_hhat**2 * np.exp(-2 * u)
        - 4.0 * np.exp(2 * u) * lamhat
    )
    # residual maxima over nodes whose extraction used centered stencils only
    valid = sel & lap_valid & _interior(grid, 3)
    gauss = float(gauss_field[valid].max())

    def wirtinger_bar(fld):
        return 0.5 * (
            diff_axis4(fld, h, axis=1) + 1j * diff_axis4(fld, h, axis=0)
        )

    def wirtinger(fld):
        return 0.5 * (
            diff_axis4(fld, h, axis=1) - 1j * diff_axis4(fld, h, axis=0)
        )

    cod1 = np.abs(wirtinger_bar(lamhat) * e_u + wirtinger(lam) * e_mu)
    cod2 = np.abs(wirtinger_bar(big_h) * e_u - wirtinger(big_hhat) * e_mu)
    codazzi = float(np.maximum(cod1, cod2)[valid].max())
    return RibaucourData(u, big_h, big_hhat, lam, lamhat, valid, pattern, gauss, codazzi)


# ---------------------------------------------------------------------------
# fundamental forms from frames, isometry check, duality
# ---------------------------------------------------------------------------

def push_form_field(frame_inv, s11, s22, s12):
    """Pointwise push of a constant hermitian form along a frame field.

    frame_inv: (ny, nx, 2, 2, 4) inverses N = F^-1; the pushed form is
    s(N ., N .).  Returns six-component fields (s11, s22, s12[4]).
    """
    n = frame_inv
    col1 = n[..., :, 0, :]
    col2 = n[..., :, 1, :]
    s12q = np.zeros(col1.shape[:-2] + (4,))
    s12q[...] = np.asarray(s12, dtype=float)

    def herm(u, v):
        u1c = qconj(u[..., 0, :])
        u2c = qconj(u[..., 1, :])
        out = s11 * qmul(u1c, v[..., 0, :]) + s22 * qmul(u2c, v[..., 1, :])
        out = out + qmul(u1c, qmul(s12q, v[..., 1, :]))
        out = out + qmul(u2c, qmul(qconj(s12q), v[..., 0, :]))
        return out

    out11 = herm(col1, col1)[..., 0]
    out22 = herm(col2, col2)[..., 0]
    out12 = herm(col1, col2)
    return np.concatenate([out11[..., None], out22[..., None], out12], axis=-1)


def frame_point_forms(frame_values):
    """Surface and central-sphere forms carried by a structured frame.

    Returns (s_f, s_center): s_f is the lightlike form of the first column
    in the frame-fixed scaling, s_center the enveloped unit sphere form.
    """
    inv = qm2_inv(frame_values)
    s_f = push_form_field(inv, 0.0, 1.0, np.zeros(4))
    s_center = push_form_field(inv, 0.0, 0.0, np.array([0.0, 1.0, 0.0, 0.0]))
    return s_f, s_center


@dataclass
class IsometryReport:
    """Fundamental-form identities of the spectral deformation family."""

    first_deviation: float  # max |I_lam - I_0|
    second_deviation: float  # max |II_lam - (II_0 - 2 lam I_0)|
    mean_curvature: float
    mean_curvature_std: float
    metric_scale: float

    def passes(self, tol):
        return self.first_deviation <= tol and self.second_deviation <= tol


def _form_metric(comp_fields, h):
    """(E, F, G) coefficient fields of <d s, d s> for a form field."""
    sx = diff_axis4(comp_fields, h, axis=1)
    sy = diff_axis4(comp_fields, h, axis=0)
    return (
        lorentz_pair_fields(sx, sx),
        lorentz_pair_fields(sx, sy),
        lorentz_pair_fields(sy, sy),
        sx,
        sy,
    )


def umehara_yamada_check(
    minimal: PolarizedSurface,
    lam: float,
    p0=None,
    connection: FrameConnection | None = None,
) -> IsometryReport:
    """Verify the isometric deformation identities of the spectral family.

    Extracts I and II from the structured frames at parameters 0 and lam
    (I = <d s_f, d s_f>, II = -<d s_f, d t> with t = s + 2 lam s_f the
    tangent-plane congruence in hyperbolic space) and checks I_lam = I_0
    and II_lam = II_0 - 2 lam I_0 nodewise.
    """
    p0 = p0 or minimal.grid.center_node()
    if connection is None:
        try:
            connection = ribaucour_connection(minimal, p0)
        except PatternMismatch as exc:
            raise FrameUnavailable(f"no structured frame for this surface: {exc}") from None
    conn = connection
    grid = conn.grid
    h = grid.h
    if lam == 0:
        frame_lam = conn.frame0
    else:
        phx, phy = conn.phi(lam)
        frame_lam = integrate_frame(phx, phy, grid, conn.frame0_at_p0(), conn.p0).values

    def forms(frame_values, lam_t):
        s_f, s_c = frame_point_forms(frame_values)
        t = s_c + 2.0 * lam_t * s_f
        e1, f1, g1, sfx, sfy = _form_metric(s_f, h)
        tx = diff_axis4(t, h, axis=1)
        ty = diff_axis4(t, h, axis=0)
        ii_e = -lorentz_pair_fields(sfx, tx)
        ii_f = -0.5 * (lorentz_pair_fields(sfx, ty) + lorentz_pair_fields(sfy, tx))
        ii_g = -lorentz_pair_fields(sfy, ty)
        return (e1, f1, g1), (ii_e, ii_f, ii_g)

    i0, ii0 = forms(conn.frame0, 0.0)
    il, iil = forms(frame_lam, lam)
    sel = _interior(grid, 4) & grid.valid()
    scale = float(np.mean(i0[0][sel]))
    first_dev = max(float(np.abs(il[k] - i0[k])[sel].max()) for k in range(3))
    second_dev = max(
        float(np.abs(iil[k] - (ii0[k] - 2.0 * lam * i0[k]))[sel].max()) for k in range(3)
    )
    trace_h = (iil[0] + iil[2]) / np.maximum(il[0] + il[2], 1e-300)
    return IsometryReport(
        first_dev,
        second_dev,
        float(trace_h[sel].mean()),
        float(trace_h[sel].std()),
        scale,
    )


def bryant_surface(
    data: WeierstrassData,
    lam: float,
    p0=None,
    f0=None,
    tolerance_scale=1.0,
) -> CmcSurface:
    """Surface and Gauss map assembled from the coupled first-order system.

    The quaternion pair of bryant_system is one component row of rescaled
    homogeneous coordinates; integrating the companion row with initial
    (1, 0) completes them, and the surface is the ratio of the first
    components (Gauss map: ratio of the second).
    """
    grid = data.grid
    p0 = p0 or grid.center_node()
    if f0 is None:
        f0 = np.zeros(4)
    top_f, top_h = bryant_system(data, lam, p0, f0=f0, fh0=(1, 0, 0, 0),
                                 tolerance_scale=tolerance_scale)
    bot_f, bot_h = bryant_system(data, lam, p0, f0=(1, 0, 0, 0), fh0=(0, 0, 0, 0),
                                 tolerance_scale=tolerance_scale)
    inv_f, ok_f = qinv_masked(bot_f.values)
    inv_h, ok_h = qinv_masked(bot_h.values)
    surf = QField(grid.merge_mask(ok_f), qmul(top_f.values, inv_f))
    gauss = QField(grid.merge_mask(ok_h), qmul(top_h.values, inv_h))
    return CmcSurface(surf, lam, gauss, "bryant")


@dataclass
class DualPair:
    """A cmc surface, one of its duals, and their minimal cousins."""

    surface: CmcSurface
    dual: CmcSurface
    cousin: PolarizedSurface
    dual_cousin: PolarizedSurface
    secondary_gauss: PolarizedSurface
    chain: dict


def dual_cmc(
    data: WeierstrassData,
    lam: float,
    p0=None,
    v0=((1.0, 0.0, 0.0, 0.0), (0.0, -1.0, 0.0, 0.0)),
    v0_dual=None,
    tolerance_scale=1.0,
) -> DualPair:
    """Construct a cmc surface and a dual by exchanging its two Gauss maps.

    The dual is realized through the permutability chain: the secondary
    Gauss map is the spectral transform of the boundary map, and the dual
    is a Darboux transform of it at the opposite parameter (initial data
    v0_dual picks the member of the three-parameter dual family).
    """
    grid = data.grid
    p0 = p0 or grid.center_node()
    v0 = np.asarray(v0, dtype=float)
    v0_dual = v0 if v0_dual is None else np.asarray(v0_dual, dtype=float)
    conn = boundary_connection(data, p0)

    fres = darboux_via_connection(conn, lam, v0, "dz2", ("dual_cmc.f",), chain=True,
                                  tolerance_scale=tolerance_scale)
    base = boundary_surface(data)
    f = CmcSurface(fres.surface.f, lam, base.f, "darboux-weierstrass",
                   connection=fres.connection)

    ns_res = t_transform_via_connection(conn, lam, "dz2", ("dual_cmc.ns",),
                                        tolerance_scale=tolerance_scale)
    n_s = ns_res.surface

    dual_res = darboux_via_connection(ns_res.connection, -lam, v0_dual, "dz2",
                                      ("dual_cmc.dual",), chain=True,
                                      tolerance_scale=tolerance_scale)
    dual = CmcSurface(dual_res.surface.f, lam, n_s.f, "dual",
                      connection=dual_res.connection)

    # minimal cousins from scratch: the chained families carry the exact
    # initial-condition correspondences but a rescaled spectral parameter,
    # so the cousins use the canonical (grid-polarization) transform of the
    # sampled surfaces
    from .transforms import t_transform

    cousin = t_transform(fres.surface, lam, p0,
                         tolerance_scale=tolerance_scale).surface
    dual_cousin = t_transform(dual_res.surface, -lam, p0,
                              tolerance_scale=tolerance_scale).surface
    f.cousin = cousin
    dual.cousin = dual_cousin
    chain = {
        "f_connection": fres.connection,
        "ns_connection": ns_res.connection,
        "dual_connection": dual_res.connection,
    }
    return DualPair(f, dual, cousin, dual_cousin, n_s, chain)


def double_dual(pair: DualPair, data: WeierstrassData, lam: float, v0=None,
                tolerance_scale=1.0) -> PolarizedSurface:
    """The dual of the dual: exchange the Gauss-map roles once more.

    Mirrors the dual construction with (n_h, lam) replaced by (n_s, -lam):
    the secondary Gauss map of the dual is the spectral transform of n_s at
    -lam, and the double dual is a Darboux transform of it at +lam.  With
    matching initial data the chain correspondences make it Moebius
    equivalent to the original surface.
    """
    v0 = np.asarray(
        v0 if v0 is not None else ((1.0, 0.0, 0.0, 0.0), (0.0, -1.0, 0.0, 0.0)),
        dtype=float,
    )
    nsh_res = t_transform_via_connection(pair.chain["ns_connection"], -lam,
                                         "dz2", ("double_dual.nsh",),
                                         tolerance_scale=tolerance_scale)
    back = darboux_via_connection(nsh_res.connection, lam, v0, "dz2",
                                  ("double_dual",),
                                  tolerance_scale=tolerance_scale)
    return back.surface


# ---------------------------------------------------------------------------
# minimal repositioning (for cousin comparisons)
# ---------------------------------------------------------------------------

LORENTZ_METRIC = np.array(
    [
        [0.0, -0.5, 0.0, 0.0, 0.0, 0.0],
        [-0.5, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ]
)


def common_sphere_point(surface: PolarizedSurface):
    """Least-squares common point of the central sphere congruence.

    For a surface Moebius-equivalent to a minimal one, all central spheres
    pass through one point (the image of infinity).  Returns (point or
    INFINITY, lightlike deviation, incidence residual).
    """
    comps, ff = central_sphere_congruence(surface)
    sel = surface.grid.valid() & ff.valid & _interior(surface.grid, 4)
    rows = comps[sel] @ LORENTZ_METRIC
    # the Re(s12) pairing column vanishes identically (every sphere in the
    # conformal 3-sphere is orthogonal to its form); drop it or the solver
    # returns that trivial kernel
    keep = [0, 1, 3, 4, 5]
    _, svals, vt = np.linalg.svd(rows[:, keep], full_matrices=False)
    s5 = vt[-1]
    s0 = np.zeros(6)
    s0[keep] = s5
    incidence = float(svals[-1] / max(svals[0], 1e-300))
    form = HermitianForm(s0[0], s0[1], Quaternion.from_array(s0[2:]))
    light = abs(lorentz(form, form)) / float(np.dot(s0, s0))
    # normalize to the point shape (s11 = 1) unless the point is infinity
    if abs(form.s11) < 1e-8 * np.linalg.norm(s0):
        return INFINITY, light, incidence
    p = form.s12 * (-1.0 / form.s11)
    return p, light, incidence


def minimal_position(surface: PolarizedSurface, eps=1e-4):
    """Moebius representative of a minimal-class surface with flat duals.

    Moves the common point of the central sphere congruence to infinity by
    an inversion (plus nothing if it is already there).  Raises
    PatternMismatch when the congruence has no common point (the class is
    not minimal).
    """
    p, light, incidence = common_sphere_point(surface)
    if incidence > eps:
        raise PatternMismatch(
            f"central spheres share no common point (residual {incidence:.2e})"
        )
    if p is INFINITY:
        return surface, None
    mm = MoebiusMap.inversion_about(p)
    vals, ok = mm.apply_array(surface.f.values)
    grid = surface.grid.merge_mask(ok)
    moved = PolarizedSurface(
        QField(grid, vals), surface.polarization,
        surface.provenance + ("minimal_position",),
    )
    return moved, mm
