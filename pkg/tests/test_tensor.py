import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp, mpf, sqrt as msqrt

from fiberseg.errors import InvalidDirectionError, InvalidTensorError, OutOfBoundsError
from fiberseg.tensor import (DiffusionTensor, TensorVolume, angle_between_principal,
                             eigendecompose, fractional_anisotropy, jacobi_eigh, matrix_to_six,
                             principal_direction, sample_tensor, six_to_matrix, trilinear)


def fa_oracle(l1, l2, l3):
    mp.dps = 50
    l1, l2, l3 = mpf(l1), mpf(l2), mpf(l3)
    num = (l1 - l2) ** 2 + (l2 - l3) ** 2 + (l1 - l3) ** 2
    return float(msqrt(num / (2 * (l1 ** 2 + l2 ** 2 + l3 ** 2))))


def random_symmetric(rng, count, scale=1.0):
    m = rng.normal(scale=scale, size=(count, 3, 3))
    return 0.5 * (m + np.swapaxes(m, 1, 2))


class TestEigendecompose:
    def test_diagonal(self):
        es = eigendecompose(DiffusionTensor(3e-3, 2e-3, 1e-3, 0, 0, 0))
        assert es.eigenvalues == pytest.approx([3e-3, 2e-3, 1e-3], abs=1e-18)
        np.testing.assert_allclose(es.eigenvectors, np.eye(3), atol=1e-12)

    def test_isotropic_gives_orthonormal_basis(self):
        es = eigendecompose(DiffusionTensor(1e-3, 1e-3, 1e-3, 0, 0, 0))
        assert es.eigenvalues == pytest.approx([1e-3] * 3)
        V = es.eigenvectors
        np.testing.assert_allclose(V.T @ V, np.eye(3), atol=1e-9)

    def test_known_block(self):
        es = eigendecompose(DiffusionTensor(2e-3, 2e-3, 1e-3, 1e-3, 0, 0))
        assert es.eigenvalues == pytest.approx([3e-3, 1e-3, 1e-3], rel=1e-12)
        np.testing.assert_allclose(es.e1, np.array([1, 1, 0]) / np.sqrt(2), atol=1e-12)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidTensorError):
            DiffusionTensor(np.nan, 0, 0, 0, 0, 0)
        with pytest.raises(InvalidTensorError):
            jacobi_eigh([np.inf, 0, 0, 0, 0, 0])

    def test_random_residual_orthonormality_reconstruction(self):
        rng = np.random.default_rng(1)
        mats = random_symmetric(rng, 1000)
        evals, evecs = jacobi_eigh(matrix_to_six(mats))
        fro = np.linalg.norm(mats, axis=(1, 2))
        tol = 1e-9 * np.maximum(1.0, fro)
        resid = np.linalg.norm(mats @ evecs - evecs * evals[:, None, :], axis=1)
        assert np.all(resid <= tol[:, None])
        gram = np.swapaxes(evecs, 1, 2) @ evecs
        assert np.all(np.abs(np.diagonal(gram, axis1=1, axis2=2) - 1) <= 1e-9)
        off = gram - np.eye(3) * np.diagonal(gram, axis1=1, axis2=2)[:, None, :]
        assert np.abs(off).max() <= 1e-8
        assert np.all(np.diff(evals, axis=1) <= 0)
        rec = np.einsum("nik,nk,njk->nij", evecs, evals, evecs)
        assert np.all(np.linalg.norm(rec - mats, axis=(1, 2)) <= 1e-9 * np.maximum(fro, 1e-300))

    def test_sign_canonical(self):
        rng = np.random.default_rng(2)
        _, evecs = jacobi_eigh(matrix_to_six(random_symmetric(rng, 200)))
        idx = np.argmax(np.abs(evecs), axis=1)
        lead = np.take_along_axis(evecs, idx[:, None, :], axis=1)
        assert np.all(lead > 0)

    def test_batch_independent(self):
        rng = np.random.default_rng(3)
        six = matrix_to_six(random_symmetric(rng, 50))
        ev_all, V_all = jacobi_eigh(six)
        for i in (0, 17, 49):
            ev, V = jacobi_eigh(six[i])
            assert np.array_equal(ev, ev_all[i]) and np.array_equal(V, V_all[i])

    def test_matches_numpy(self):
        rng = np.random.default_rng(4)
        mats = random_symmetric(rng, 100)
        ev, _ = jacobi_eigh(matrix_to_six(mats))
        np.testing.assert_allclose(ev, np.linalg.eigvalsh(mats)[:, ::-1], atol=1e-12)


class TestFA:
    def test_isotropic(self):
        for c in (1e-6, 1.0, 3.5e3):
            assert fractional_anisotropy(c, c, c) == 0.0

    def test_maximal(self):
        assert fractional_anisotropy(1, 0, 0) == pytest.approx(1.0, abs=1e-15)

    def test_oracle_value(self):
        expected = fa_oracle(1.0, 0.2, 0.2)
        assert expected == pytest.approx(0.7698, abs=1e-4)
        assert fractional_anisotropy(1.0, 0.2, 0.2) == pytest.approx(expected, abs=1e-14)

    def test_zero_tensor(self):
        assert fractional_anisotropy(0, 0, 0) == 0.0

    @given(st.lists(st.floats(0.0, 10.0), min_size=3, max_size=3).filter(lambda v: max(v) > 1e-3),
           st.floats(1e-3, 1e3))
    def test_scale_invariant(self, ev, c):
        a = fractional_anisotropy(*ev)
        b = fractional_anisotropy(*(c * x for x in ev))
        assert abs(a - b) <= 1e-12
        assert 0.0 <= a <= 1.0

    @settings(max_examples=50)
    @given(st.lists(st.floats(0.0, 5.0), min_size=3, max_size=3).filter(lambda v: max(v) > 0.1))
    def test_against_oracle(self, ev):
        assert fractional_anisotropy(*ev) == pytest.approx(fa_oracle(*ev), abs=1e-12)


class TestDirections:
    def test_principal(self):
        np.testing.assert_allclose(principal_direction(DiffusionTensor(3e-3, 1e-3, 1e-3, 0, 0, 0)),
                                   [1, 0, 0], atol=1e-15)
        np.testing.assert_allclose(principal_direction(DiffusionTensor(2e-3, 2e-3, 1e-3, 1e-3, 0, 0)),
                                   np.array([1, 1, 0]) / np.sqrt(2), atol=1e-12)

    def test_isotropic_direction_is_unit(self):
        e = principal_direction(DiffusionTensor(1e-3, 1e-3, 1e-3, 0, 0, 0))
        assert np.linalg.norm(e) == pytest.approx(1.0)

    def test_angles(self):
        u = np.array([0.3, -0.2, 0.9])
        assert angle_between_principal(u, u) == pytest.approx(0.0, abs=1e-6)
        assert angle_between_principal(u, -u) == pytest.approx(0.0, abs=1e-6)
        assert angle_between_principal([1, 0, 0], [0, 2, 0]) == pytest.approx(90.0)

    def test_zero_vector(self):
        with pytest.raises(InvalidDirectionError):
            angle_between_principal([0, 0, 0], [1, 0, 0])

    @given(st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3),
           st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3))
    def test_symmetric_and_sign_invariant(self, u, v):
        u, v = np.array(u), np.array(v)
        a = angle_between_principal(u, v)
        assert 0.0 <= a <= 90.0
        for x, y in ((v, u), (-u, v), (u, -v), (-v, -u)):
            assert angle_between_principal(x, y) == pytest.approx(a, abs=1e-9)


def trilinear_oracle(data, origin, spacing, p):
    """Explicit 8-corner weighted sum, written independently of the library."""
    f = [(p[i] - origin[i]) / spacing[i] for i in range(3)]
    i0 = [min(int(np.floor(f[i])), data.shape[i] - 2) for i in range(3)]
    t = [f[i] - i0[i] for i in range(3)]
    total = np.zeros(data.shape[-1])
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                w = ((t[0] if dx else 1 - t[0]) * (t[1] if dy else 1 - t[1])
                     * (t[2] if dz else 1 - t[2]))
                total = total + w * data[i0[0] + dx, i0[1] + dy, i0[2] + dz]
    return total


class TestSampling:
    @pytest.fixture
    def vol(self):
        rng = np.random.default_rng(5)
        return TensorVolume((4, 5, 6), (1.0, 0.5, 2.0), (-1.0, 2.0, 0.5),
                            rng.uniform(-1, 1, size=(4, 5, 6, 6)))

    def test_voxel_center_exact(self, vol):
        p = np.asarray(vol.origin) + np.array([2, 3, 4]) * np.asarray(vol.spacing)
        assert np.array_equal(sample_tensor(vol, p).as_array(), vol.data[2, 3, 4])

    def test_midpoint_mean(self, vol):
        p = np.asarray(vol.origin) + np.array([1.5, 2, 3]) * np.asarray(vol.spacing)
        np.testing.assert_allclose(sample_tensor(vol, p).as_array(),
                                   0.5 * (vol.data[1, 2, 3] + vol.data[2, 2, 3]), rtol=1e-14)

    def test_against_oracle(self, vol):
        rng = np.random.default_rng(6)
        lo, hi = np.asarray(vol.origin), vol.upper
        pts = rng.uniform(lo, hi, size=(200, 3))
        got, inside = trilinear(vol, pts)
        assert inside.all()
        for p, g in zip(pts, got):
            want = trilinear_oracle(vol.data, vol.origin, vol.spacing, p)
            np.testing.assert_allclose(g, want, rtol=1e-12, atol=1e-14)

    def test_exact_on_affine_fields(self):
        rng = np.random.default_rng(7)
        A = rng.normal(size=(6, 3))
        b = rng.normal(size=6)
        vol0 = TensorVolume((5, 4, 3), (1.0, 1.0, 1.0), (0, 0, 0), np.zeros((5, 4, 3, 6)))
        data = vol0.voxel_centers() @ A.T + b
        vol = TensorVolume(vol0.dims, vol0.spacing, vol0.origin, data)
        pts = rng.uniform([0, 0, 0], [4, 3, 2], size=(100, 3))
        got, _ = trilinear(vol, pts)
        np.testing.assert_allclose(got, pts @ A.T + b, atol=1e-12)

    def test_out_of_bounds(self, vol):
        with pytest.raises(OutOfBoundsError):
            sample_tensor(vol, np.asarray(vol.origin) - 0.1)
        with pytest.raises(OutOfBoundsError):
            sample_tensor(vol, vol.upper + [0, 0, 0.01])

    def test_box_edges_inside(self, vol):
        sample_tensor(vol, vol.origin)
        assert np.array_equal(sample_tensor(vol, vol.upper).as_array(), vol.data[-1, -1, -1])


def test_matrix_roundtrip():
    six = np.array([1.0, 2.0, 3.0, 0.4, 0.5, 0.6])
    assert np.array_equal(matrix_to_six(six_to_matrix(six)), six)
    d = DiffusionTensor.from_array(six)
    assert np.array_equal(DiffusionTensor.from_matrix(d.matrix()).as_array(), six)
