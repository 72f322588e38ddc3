import math

import numpy as np
import pytest

from splatnav.errors import ContractViolation
from splatnav.sh import eval_sh, eval_sh_batch


def independent_degree1_basis(d):
    """Real SH basis values for l<=1 written out from the standard tables,
    with the sign convention the splat format uses."""
    x, y, z = d
    return np.array([
        0.28209479177387814,
        -0.4886025119029199 * y,
        0.4886025119029199 * z,
        -0.4886025119029199 * x,
    ])


def test_dc_only_gray():
    np.testing.assert_allclose(eval_sh(np.zeros((1, 3)), np.array([0.0, 0.0, 1.0])), [0.5, 0.5, 0.5])


def test_dc_coefficient_scaling():
    c = np.array([[0.3, -0.2, 0.9]])
    expected = np.clip(0.5 + 0.2820948 * c[0], 0.0, 1.0)
    np.testing.assert_allclose(eval_sh(c, np.array([1.0, 0.0, 0.0])), expected, atol=1e-6)


def test_degree1_matches_direct_basis_sum():
    rng = np.random.default_rng(7)
    coeffs = rng.normal(0.0, 0.4, size=(4, 3))
    for _ in range(100):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        basis = independent_degree1_basis(d)
        expected = np.clip(0.5 + basis @ coeffs, 0.0, 1.0)
        np.testing.assert_allclose(eval_sh(coeffs, d), expected, atol=1e-6)


def test_clamped_to_unit_interval():
    coeffs = np.array([[10.0, -10.0, 0.0]])
    out = eval_sh(coeffs, np.array([0.0, 0.0, 1.0]))
    assert out[0] == 1.0 and out[1] == 0.0


def test_non_unit_direction_rejected():
    with pytest.raises(ContractViolation, match="unit"):
        eval_sh(np.zeros((1, 3)), np.array([1.0, 1.0, 0.0]))


def test_bad_coeff_shape_rejected():
    with pytest.raises(ContractViolation):
        eval_sh(np.zeros((5, 3)), np.array([0.0, 0.0, 1.0]))


@pytest.mark.parametrize("k", [1, 4, 9, 16])
def test_batch_handles_all_degrees(k):
    rng = np.random.default_rng(k)
    coeffs = rng.normal(0.0, 0.2, size=(6, k, 3))
    dirs = rng.normal(size=(6, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    out = eval_sh_batch(coeffs, dirs)
    assert out.shape == (6, 3)
    assert out.min() >= 0.0 and out.max() <= 1.0
    for i in range(6):
        np.testing.assert_allclose(out[i], eval_sh(coeffs[i], dirs[i]), atol=1e-12)


def test_rotating_direction_changes_color_only_beyond_dc():
    rng = np.random.default_rng(1)
    coeffs = np.zeros((9, 3))
    coeffs[0] = 0.4
    d1 = np.array([1.0, 0.0, 0.0])
    d2 = np.array([0.0, 1.0, 0.0])
    np.testing.assert_allclose(eval_sh(coeffs, d1), eval_sh(coeffs, d2))
    coeffs[4] = 0.3  # a degree-2 band coefficient
    assert not np.allclose(
        eval_sh(coeffs, np.array([1.0, 1.0, 0.0]) / math.sqrt(2)), eval_sh(coeffs, d1)
    )
