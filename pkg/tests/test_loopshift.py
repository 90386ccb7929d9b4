import numpy as np
import pytest

from gcsynth.augment import build_augmented, combine_multipliers, lift_iqcs
from gcsynth.errors import D11TooLarge
from gcsynth.linalg import is_pos_def, sym_power
from gcsynth.loopshift import check_d11, d11_margin, shift
from gcsynth.model import MONOTONE_N, sector_N
from gcsynth.sfactor import BarSystem, build_congruence, transform_system
from conftest import compressor_model


def bar_with_d11(D11):
    aug = build_augmented(compressor_model())
    bar = transform_system(aug, [build_congruence(np.diag([-1.0, -1, 1, 1]))])
    rng = np.random.default_rng(0)
    return BarSystem(aug, bar.Abar, (rng.standard_normal((3, 2)),), bar.B2ubar,
                     (rng.standard_normal((2, 3)),), (rng.standard_normal((2, 3)),), (np.asarray(D11, float),))


def reference_bar(N):
    aug = build_augmented(compressor_model(N=N))
    Ml, Sl = lift_iqcs(np.array(N), np.eye(3))
    M = combine_multipliers(Ml, Sl, (1.0, 0.1, 0.12))[0]
    return transform_system(aug, [build_congruence(M)])


def test_check_d11_examples():
    assert check_d11(bar_with_d11(np.zeros((2, 2)))) == [True]
    assert check_d11(bar_with_d11(np.eye(2))) == [False]
    Q, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((2, 2)))
    assert check_d11(bar_with_d11(0.5 * Q)) == [True]
    assert np.isclose(d11_margin(0.5 * Q), 0.75)


def test_shift_zero_d11_is_identity():
    bar = bar_with_d11(np.zeros((2, 2)))
    chk = shift(bar)
    assert np.array_equal(chk.Acheck, bar.Abar)
    assert np.array_equal(chk.B2ucheck, bar.B2ubar)
    assert np.array_equal(chk.B2check[0], bar.B2bar[0])
    assert np.array_equal(chk.C2check[0], bar.C2bar[0])
    assert np.array_equal(chk.D2check[0], bar.D2bar[0])


def test_shift_scalar_block():
    d = 0.6
    bar = bar_with_d11(d * np.eye(2))
    chk = shift(bar)
    assert np.allclose(chk.PhiHalfInv[0], np.eye(2) / np.sqrt(1 - d * d), atol=1e-14)
    assert np.allclose(chk.B2check[0], bar.B2bar[0] / np.sqrt(1 - d * d), atol=1e-14)
    assert np.isclose(chk.d11_margins[0], 1 - d * d)


def test_shift_rejects_large_d11():
    with pytest.raises(D11TooLarge):
        shift(bar_with_d11(np.diag([1.0, 0.2])))


def test_phi_identity():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        D = rng.standard_normal((2, 2))
        D *= rng.uniform(0.01, 0.99) / np.linalg.norm(D, 2)
        Phi = np.eye(2) - D.T @ D
        Phibar = np.eye(2) - D @ D.T
        lhs = np.linalg.solve(Phi, D.T)
        rhs = D.T @ np.linalg.inv(Phibar)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(lhs)))


def test_square_roots():
    rng = np.random.default_rng(3)
    for _ in range(100):
        D = rng.standard_normal((2, 2))
        D *= 0.9 / np.linalg.norm(D, 2)
        Phi = np.eye(2) - D.T @ D
        h = sym_power(Phi, 0.5)
        assert np.linalg.norm(h @ h - Phi) <= 1e-10


def test_iqc_preserved_by_shift():
    rng = np.random.default_rng(4)
    bar = reference_bar(sector_N(6.0))
    chk = shift(bar)
    D11 = bar.D11bar[0]
    Phi = np.eye(2) - D11.T @ D11
    for _ in range(100):
        x, u, xi_chk = rng.standard_normal(3), rng.standard_normal(3), rng.standard_normal(2)
        w = bar.C2bar[0] @ x + bar.D2bar[0] @ u
        xi_bar = sym_power(Phi, -0.5) @ xi_chk + np.linalg.solve(Phi, D11.T @ w)
        zeta_bar = w + D11 @ xi_bar
        zeta_chk = chk.C2check[0] @ x + chk.D2check[0] @ u
        assert np.isclose(xi_chk @ xi_chk - zeta_chk @ zeta_chk, xi_bar @ xi_bar - zeta_bar @ zeta_bar,
                          rtol=1e-9, atol=1e-9)
        d_bar = bar.Abar @ x + bar.B2ubar @ u + bar.B2bar[0] @ xi_bar
        d_chk = chk.Acheck @ x + chk.B2ucheck @ u + chk.B2check[0] @ xi_chk
        assert np.allclose(d_bar, d_chk, atol=1e-10)


def test_compressor_phi_positive_with_slope_sector():
    bar = reference_bar(sector_N(6.0))
    D11 = bar.D11bar[0]
    assert is_pos_def(np.eye(2) - D11.T @ D11, 1e-9)
    assert check_d11(bar) == [True]


def test_monotone_sector_gives_isometric_d11():
    # a plain monotone multiplier has no xi-xi block, which makes D11 orthogonal
    bar = reference_bar(MONOTONE_N)
    s = np.linalg.svd(bar.D11bar[0], compute_uv=False)
    assert np.allclose(s, 1.0, atol=1e-12)
    assert check_d11(bar) == [False]
