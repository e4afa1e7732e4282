import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfcz.dyadic import Arc
from mfcz.experiments import corpus_operator, fit_exponent
from mfcz.grid import (
    ConfigurationError,
    GridMismatchError,
    SampledFunction,
    Spectrum,
    forward_transform,
    indicator,
    inverse_transform,
    lp_norm,
    make_grid,
)
from mfcz.mfczo import (
    DiniModulus,
    FrequencySet,
    apply,
    apply_truncated,
    build_multiplier_operator,
    bump_profile,
    dini_norm,
    dini_regularity_probe,
    dirichlet_function,
    kernel_slice,
    operator_from_descriptor,
    random_multiplier_operator,
    random_sign_operator,
)
from mfcz.mfczo import sample_probe_triples, torus_distance

from conftest import random_function

seeds = st.integers(0, 2**32 - 1)


def band_limited(grid, rng, band):
    coeffs = np.zeros(grid.size, complex)
    idx = grid.size // 2 + np.arange(-band, band + 1)
    coeffs[idx] = rng.standard_normal(idx.size) + 1j * rng.standard_normal(idx.size)
    return inverse_transform(Spectrum(grid, coeffs))


def identity_band(grid):
    return build_multiplier_operator(grid, [0], grid.size // 2 - 1, "flat")


def test_frequency_set_validation():
    assert FrequencySet((3, -1, 2)).frequencies == (-1, 2, 3)
    with pytest.raises(ConfigurationError):
        FrequencySet((1, 1))
    with pytest.raises(ConfigurationError):
        FrequencySet(())
    with pytest.raises(ConfigurationError):
        FrequencySet((32,)).check(make_grid(6))


@pytest.mark.parametrize("shape", ["cosine-squared", "gaussian-truncated"])
@pytest.mark.parametrize("h", [1, 2, 5, 17])
def test_bump_profile_shape(shape, h):
    b = bump_profile(shape, h)
    assert b.size == 2 * h + 1
    assert b[h] == pytest.approx(1.0)
    assert b[0] == pytest.approx(0.0, abs=1e-15) and b[-1] == pytest.approx(0.0, abs=1e-15)
    assert np.all(b >= 0) and np.all(b <= 1)
    assert np.allclose(b, b[::-1])


def test_bump_profile_rejects_unknown_shape():
    with pytest.raises(ConfigurationError):
        bump_profile("square", 3)


def test_identity_band_reproduces_band_limited(rng):
    g = make_grid(8)
    f = band_limited(g, rng, g.size // 2 - 1)
    out = apply(identity_band(g), f)
    assert np.max(np.abs(out.samples - f.samples)) <= 1e-12 * f.sup_norm()


def test_two_bands_annihilate_dc():
    g = make_grid(7)
    T = build_multiplier_operator(g, [-8, 8], 3)
    assert np.max(np.abs(apply(T, g.ones()).samples)) < 1e-14
    support = np.flatnonzero(np.abs(T.multiplier.coefficients) > 0) - g.size // 2
    assert set(support) <= set(range(-11, -4)) | set(range(5, 12))


def test_build_rejects_overlap_and_out_of_band():
    g = make_grid(6)
    with pytest.raises(ConfigurationError):
        build_multiplier_operator(g, [0, 4], 2)
    with pytest.raises(ConfigurationError):
        build_multiplier_operator(g, [30], 3)
    with pytest.raises(ConfigurationError):
        build_multiplier_operator(g, [0], 1, amplitudes=[2.0])


def test_center_tone_passes_unchanged():
    g = make_grid(8)
    T = build_multiplier_operator(g, [-20, 9, 40], 4, "gaussian-truncated")
    tone = g.sample(lambda x: np.exp(2j * np.pi * 9 * x))
    assert np.max(np.abs(apply(T, tone).samples - tone.samples)) < 1e-12


def test_apply_matches_direct_convolution(rng):
    g = make_grid(6)
    T = random_multiplier_operator(g, 3, 2, rng)
    f = random_function(g, rng)
    m = g.size
    phi = T.kernel
    direct = np.array([g.spacing * sum(phi[(i - j) % m] * f.samples[j] for j in range(m)) for i in range(m)])
    assert np.allclose(apply(T, f).samples, direct, atol=1e-12)


def test_l2_norm_independent_of_n(rng):
    """Plancherel: no input is amplified, whatever the number of cubes."""
    g = make_grid(10)
    for n in (1, 4, 16, 64):
        T = random_multiplier_operator(g, n, 2, rng, profile_shape="gaussian-truncated")
        assert T.l2_norm == pytest.approx(1.0)
        worst = 0.0
        for _ in range(200 // 4):
            f = random_function(g, rng)
            worst = max(worst, lp_norm(apply(T, f), 2) / lp_norm(f, 2))
        assert worst <= 1 + 1e-10


@settings(max_examples=25, deadline=None)
@given(seed=seeds, shift=st.integers(0, 255), a=st.complex_numbers(max_magnitude=5))
def test_apply_linear_and_translation_invariant(seed, shift, a):
    g = make_grid(8)
    r = np.random.default_rng(seed)
    T = random_multiplier_operator(g, 5, 3, r)
    f, h = random_function(g, r), random_function(g, r)
    lhs = apply(T, a * f + h).samples
    rhs = a * apply(T, f).samples + apply(T, h).samples
    assert np.allclose(lhs, rhs, atol=1e-10 * (1 + abs(a)) * 10)
    moved = SampledFunction(g, np.roll(f.samples, shift))
    assert np.allclose(apply(T, moved).samples, np.roll(apply(T, f).samples, shift), atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_output_spectrum_inside_cubes(seed):
    g = make_grid(9)
    r = np.random.default_rng(seed)
    T = random_multiplier_operator(g, 6, 4, r)
    f = random_function(g, r)
    coeffs = forward_transform(apply(T, f)).coefficients
    inside = np.zeros(g.size, bool)
    for lo, hi in T.frequency_cubes():
        inside[g.size // 2 + np.arange(lo, hi + 1)] = True
    assert np.max(np.abs(coeffs[~inside])) <= 1e-13 * f.sup_norm()


def test_apply_grid_mismatch():
    T = build_multiplier_operator(make_grid(6), [0], 2)
    with pytest.raises(GridMismatchError):
        apply(T, make_grid(7).ones())


def test_apply_truncated_cases(rng):
    g = make_grid(8)
    T = random_multiplier_operator(g, 4, 2, rng)
    f = random_function(g, rng)
    assert np.array_equal(apply_truncated(T, f).samples, apply(T, f).samples)
    assert np.max(np.abs(apply_truncated(T, f, Arc(0.0, 1.0)).samples)) == 0.0
    half = apply_truncated(T, f, Arc(0.0, 0.5)).samples
    assert np.allclose(half, apply(T, f * indicator(g, 0.5, 1.0)).samples, atol=1e-14)


def test_kernel_slice_identity_band_concentrates():
    g = make_grid(8)
    row = np.abs(kernel_slice(identity_band(g), 40).samples)
    assert int(np.argmax(row)) == 40


def test_kernel_slice_translation_and_mass(rng):
    g = make_grid(8)
    T = random_multiplier_operator(g, 3, 2, rng, profile_shape="gaussian-truncated")
    base = kernel_slice(T, 0).samples
    for x in (1, 17, 200):
        assert np.allclose(kernel_slice(T, x).samples, np.roll(base, x), atol=1e-13)
    m0 = T.multiplier.at(0)
    assert kernel_slice(T, 0.25).integral() == pytest.approx(m0, abs=1e-12)


def test_kernel_slice_rejects_off_grid_point():
    with pytest.raises(ConfigurationError):
        kernel_slice(build_multiplier_operator(make_grid(4), [0], 1), 0.01)


def test_descriptor_round_trip(rng):
    T = random_multiplier_operator(make_grid(8), 5, 2, rng, seed=9)
    back = operator_from_descriptor(T.descriptor())
    assert np.array_equal(back.multiplier_fft, T.multiplier_fft)
    assert back.seed == 9


def test_dini_norm_examples():
    assert dini_norm(DiniModulus.linear(1.0)) == pytest.approx(1.0, abs=1e-10)
    assert dini_norm(DiniModulus.power(1.0, 0.5)) == pytest.approx(2.0, abs=1e-10)
    assert abs(dini_norm(DiniModulus.power(1.0, 2.0)) - 0.5) <= 1e-8


def test_dini_norm_rejects_divergent():
    with pytest.raises(ConfigurationError):
        dini_norm(DiniModulus.power(1.0, 0.0))


@given(a=st.floats(0.05, 1.0), c=st.floats(0.1, 10.0))
def test_power_modulus_subadditive_and_norm(a, c):
    mod = DiniModulus.power(c, a)
    assert mod.is_subadditive()
    assert mod.dini_norm == pytest.approx(c / a, rel=1e-8)


def test_convex_modulus_not_subadditive():
    assert not DiniModulus.power(1.0, 2.0).is_subadditive()


def test_probe_passes_single_bump_and_is_not_vacuous():
    g = make_grid(10)
    T = build_multiplier_operator(g, [0], 8)
    report = dini_regularity_probe(T, 4096, seed=1)
    assert report.passed and report.max_ratio > 0
    halved = dini_regularity_probe(T, 4096, seed=1, modulus=T.modulus.scaled(0.5))
    assert not halved.passed


def test_probe_sampler_contract():
    g = make_grid(10)
    x, xp, y = sample_probe_triples(g, 5000, np.random.default_rng(0))
    assert np.all(torus_distance(g, x, y) > 2 * torus_distance(g, x, xp))


def test_probe_passes_for_corpus_operators():
    g = make_grid(12)
    rng = np.random.default_rng(5)
    for n in (1, 2, 4, 16, 64):
        for index in range(4):
            T = corpus_operator(g, n, rng, index)
            assert dini_regularity_probe(T, 2048, seed=index).passed


def test_dirichlet_examples():
    g = make_grid(8)
    assert np.allclose(dirichlet_function(g, 0).samples, 1.0)
    for n in (1, 7, 40):
        assert lp_norm(dirichlet_function(g, n), 2) == pytest.approx(np.sqrt(n + 1), rel=1e-12)
    with pytest.raises(ConfigurationError):
        dirichlet_function(g, 128)


def test_dirichlet_four_thirds_norm_slope():
    g = make_grid(12)
    ns = [8, 16, 32, 64, 128, 256]
    norms = [lp_norm(dirichlet_function(g, n), 4 / 3) for n in ns]
    slope, _, _ = fit_exponent(ns, norms)
    assert abs(slope - 0.25) <= 0.05


def test_sign_operator_examples():
    g = make_grid(8)
    n = 10
    T = random_sign_operator(g, n, np.ones(n))
    out = forward_transform(apply(T, dirichlet_function(g, n))).coefficients
    expected = np.zeros(g.size)
    expected[g.size // 2 + np.arange(n)] = 1
    assert np.allclose(out, expected, atol=1e-12)
    T2 = random_sign_operator(g, 2, [1, -1])
    coeffs = forward_transform(apply(T2, dirichlet_function(g, 1)))
    assert np.allclose(coeffs.at(np.array([0, 1])), [1, -1], atol=1e-12)


def test_sign_operator_validation():
    g = make_grid(6)
    with pytest.raises(ConfigurationError):
        random_sign_operator(g, 3, [1, 1])
    with pytest.raises(ConfigurationError):
        random_sign_operator(g, 2, [1, 0.5])
