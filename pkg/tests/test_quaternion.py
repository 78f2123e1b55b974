import numpy as np
import pytest

from isothermic import (
    INFINITY,
    DegenerateQuadruple,
    HermitianForm,
    MoebiusMap,
    NearZeroQuaternion,
    PNotImaginary,
    QMatrix2,
    Quaternion,
    cross_ratio_class,
    herm_apply,
    lorentz,
    moebius_act,
    point_form,
    quat_inv,
    quat_mul,
    study_det,
)
from isothermic.quaternion import ONE, QI, QJ, QK, study_det_array

RNG = np.random.default_rng(20260809)


def random_quat(scale=1.0):
    return Quaternion.from_array(RNG.normal(scale=scale, size=4))


def random_imag():
    v = RNG.normal(size=3)
    return Quaternion.from_imag(v)


# ---------------------------------------------------------------------------
# multiplication and inversion
# ---------------------------------------------------------------------------

def test_defining_relations():
    assert QI * QJ == QK
    assert QJ * QK == QI
    assert QK * QI == QJ
    for u in (QI, QJ, QK):
        assert u * u == Quaternion(-1)


def test_identity_and_bilinearity():
    q = random_quat()
    assert (quat_mul(q, ONE) - q).norm() < 1e-15
    # (1+i)(1+j) expands to 1 + j + i + ij = 1 + i + j + k
    assert (ONE + QI) * (ONE + QJ) == Quaternion(1, 1, 1, 1)


def test_conjugation_antihomomorphism():
    for _ in range(50):
        p, q = random_quat(), random_quat()
        assert ((p * q).conj() - q.conj() * p.conj()).norm() < 1e-13


def test_inverse_basic():
    assert quat_inv(ONE) == ONE
    assert quat_inv(QJ) == -QJ
    # (2i)^-1 = conj(2i)/|2i|^2 = -2i/4 = -i/2
    assert (quat_inv(2 * QI) - (-0.5) * QI).norm() < 1e-15
    for _ in range(100):
        q = random_quat()
        assert (q * quat_inv(q) - ONE).norm() < 4 * np.finfo(float).eps * 8


def test_inverse_near_zero_raises():
    with pytest.raises(NearZeroQuaternion):
        quat_inv(Quaternion(1e-13, 0, 0, 0))


# ---------------------------------------------------------------------------
# Study determinant
# ---------------------------------------------------------------------------

def _complex_rep_oracle(m: QMatrix2):
    """Independent 4x4 complex embedding (entrywise 2x2 blocks)."""
    out = np.zeros((4, 4), dtype=complex)
    for (r, c), q in (((0, 0), m.a), ((0, 1), m.b), ((1, 0), m.c), ((1, 1), m.d)):
        alpha = complex(q.w, q.x)
        beta = complex(q.y, q.z)
        block = np.array([[alpha, beta], [-beta.conjugate(), alpha.conjugate()]])
        out[2 * r : 2 * r + 2, 2 * c : 2 * c + 2] = block
    return out


def _reorder_oracle(m):
    """Block layout used by the package groups rows/cols by half; permute."""
    perm = [0, 2, 1, 3]
    return m[np.ix_(perm, perm)]


def test_study_det_examples():
    assert abs(study_det(QMatrix2.identity()) - 1.0) < 1e-14
    q = random_quat()
    m = QMatrix2.diag(q, ONE)
    expected = np.linalg.det(_reorder_oracle(_complex_rep_oracle(m))).real
    assert abs(expected - q.normsq()) < 1e-10 * max(1, q.normsq())
    assert abs(study_det(m) - expected) < 1e-10 * max(1.0, abs(expected))
    swap = QMatrix2(Quaternion(), ONE, ONE, Quaternion())
    assert abs(study_det(swap) - 1.0) < 1e-14


def test_study_det_multiplicative():
    worst = 0.0
    for _ in range(1000):
        a = QMatrix2.from_array(RNG.normal(size=(2, 2, 4)))
        b = QMatrix2.from_array(RNG.normal(size=(2, 2, 4)))
        lhs = study_det(a @ b)
        rhs = study_det(a) * study_det(b)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
    assert worst < 1e-10


def test_matrix_right_module_compatibility():
    m = QMatrix2.from_array(RNG.normal(size=(2, 2, 4)))
    n = QMatrix2.from_array(RNG.normal(size=(2, 2, 4)))
    v = (random_quat(), random_quat())
    lam = random_quat()
    mn_v = (m @ n).matvec(v)
    m_nv = m.matvec(n.matvec(v))
    assert (mn_v[0] - m_nv[0]).norm() + (mn_v[1] - m_nv[1]).norm() < 1e-12
    lhs = m.matvec((v[0] * lam, v[1] * lam))
    rhs = tuple(x * lam for x in m.matvec(v))
    assert (lhs[0] - rhs[0]).norm() + (lhs[1] - rhs[1]).norm() < 1e-12


def test_matrix_inverse():
    m = QMatrix2.from_array(RNG.normal(size=(2, 2, 4)))
    prod = m @ m.inverse()
    assert np.abs(prod.as_array() - QMatrix2.identity().as_array()).max() < 1e-12


# ---------------------------------------------------------------------------
# hermitian forms and the Lorentz product
# ---------------------------------------------------------------------------

def test_herm_apply_imaginary_points_on_sphere():
    s3 = HermitianForm(0.0, 0.0, ONE)
    for _ in range(20):
        h = random_imag()
        val = herm_apply(s3, (h, ONE), (h, ONE))
        assert val.norm() < 1e-13  # conj(h) + h = 0


def test_herm_apply_incidence_and_unit():
    p = random_imag()
    s = point_form(p)
    assert herm_apply(s, (p, ONE), (p, ONE)).norm() < 1e-13
    s_id = HermitianForm(1.0, 1.0, Quaternion())
    assert (herm_apply(s_id, (ONE, Quaternion()), (ONE, Quaternion())) - ONE).norm() < 1e-15


def test_herm_apply_hermiticity_random():
    for _ in range(100):
        s = HermitianForm(RNG.normal(), RNG.normal(), random_quat())
        u = (random_quat(), random_quat())
        v = (random_quat(), random_quat())
        a = herm_apply(s, u, v)
        b = herm_apply(s, v, u)
        assert (a - b.conj()).norm() < 1e-12


def test_lorentz_signature_values():
    s3 = HermitianForm(0.0, 0.0, ONE)
    assert abs(lorentz(s3, s3) - 1.0) < 1e-15
    s_id = HermitianForm(1.0, 1.0, Quaternion())
    assert abs(lorentz(s_id, s_id) + 1.0) < 1e-15
    p = random_imag()
    assert abs(lorentz(point_form(p), point_form(p))) < 1e-13


def test_point_form_examples():
    s = point_form(Quaternion())
    assert (s.s11, s.s22) == (1.0, 0.0) and s.s12.norm() == 0.0
    s = point_form(QI)
    assert s.s11 == 1.0 and s.s22 == 1.0 and s.s12 == -QI
    assert abs(lorentz(s, s)) < 1e-15
    s = point_form(INFINITY)
    assert (s.s11, s.s22) == (0.0, 1.0)
    with pytest.raises(PNotImaginary):
        point_form(Quaternion(0.5, 1, 0, 0))


def test_point_form_random_lightlike():
    for _ in range(1000):
        p = random_imag()
        s = point_form(p)
        assert abs(lorentz(s, s)) < 1e-11 * max(1.0, p.normsq()) ** 2
        assert herm_apply(s, (p, ONE), (p, ONE)).norm() < 1e-11 * max(1.0, p.normsq())


# ---------------------------------------------------------------------------
# Moebius action
# ---------------------------------------------------------------------------

def test_moebius_act_identity_and_translation():
    s = HermitianForm(RNG.normal(), RNG.normal(), random_quat())
    out = moebius_act(QMatrix2.identity(), s)
    assert np.abs(out.components() - s.components()).max() < 1e-14
    m = random_imag()
    out = moebius_act(MoebiusMap.translation(m).matrix, point_form(Quaternion()))
    target = point_form(m)
    scale = out.s11 / target.s11
    assert np.abs(out.components() - scale * target.components()).max() < 1e-12


def _unit_det_matrix():
    a = RNG.normal(size=(2, 2, 4))
    return QMatrix2.from_array(a / study_det_array(a) ** 0.25)


def test_moebius_act_isometry():
    for _ in range(100):
        m = _unit_det_matrix()
        s = HermitianForm(RNG.normal(), RNG.normal(), random_quat())
        t = HermitianForm(RNG.normal(), RNG.normal(), random_quat())
        assert abs(lorentz(moebius_act(m, s), moebius_act(m, t)) - lorentz(s, t)) < 1e-9


def test_moebius_act_preserves_cone():
    for _ in range(50):
        m = _unit_det_matrix()
        s = point_form(random_imag())
        out = moebius_act(m, s)
        assert abs(lorentz(out, out)) < 1e-9


# ---------------------------------------------------------------------------
# cross-ratio classes
# ---------------------------------------------------------------------------

def test_cross_ratio_square():
    # unit square in span{1, i}: (a-b)(b-c)^-1 (c-d)(d-a)^-1 = -1,
    # matching the complex cross-ratio of the harmonic quadruple
    re, nm = cross_ratio_class(Quaternion(), ONE, Quaternion(1, 1, 0, 0), QI)
    assert abs(re + 1.0) < 1e-14
    assert abs(nm - 1.0) < 1e-14


def test_cross_ratio_translation_invariance():
    pts = [random_imag() for _ in range(4)]
    m = random_imag()
    a = cross_ratio_class(*pts)
    b = cross_ratio_class(*[p + m for p in pts])
    assert abs(a[0] - b[0]) < 1e-12 and abs(a[1] - b[1]) < 1e-12


def test_cross_ratio_inversion_invariance():
    for _ in range(20):
        pts = [random_imag() for _ in range(4)]
        m = random_imag()
        inv = MoebiusMap.inversion_about(m)
        try:
            a = cross_ratio_class(*pts)
            b = cross_ratio_class(*[inv(p) for p in pts])
        except DegenerateQuadruple:
            continue
        assert abs(a[0] - b[0]) < 1e-10 * max(1, abs(a[0]))
        assert abs(a[1] - b[1]) < 1e-10 * max(1, a[1])


def test_cross_ratio_unit_det_moebius_invariance():
    stable = 0
    for _ in range(100):
        pts = [random_imag() for _ in range(4)]
        m = _unit_det_matrix()
        mm = MoebiusMap(m)
        try:
            a = cross_ratio_class(*pts)
            images = [mm(p) for p in pts]
            if any(p is INFINITY for p in images):
                continue
            b = cross_ratio_class(*images)
        except DegenerateQuadruple:
            continue
        assert abs(a[0] - b[0]) < 1e-8 * max(1, abs(a[0]))
        assert abs(a[1] - b[1]) < 1e-8 * max(1, a[1])
        stable += 1
    assert stable > 50


def test_cross_ratio_degenerate():
    p = random_imag()
    with pytest.raises(DegenerateQuadruple):
        cross_ratio_class(p, p, random_imag(), random_imag())
