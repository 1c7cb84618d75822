import numpy as np
import pytest

from panelseg.errors import DomainError
from panelseg.simgen import ChangeSpec, NoiseModelSpec, SignalSpec, gen_noise, gen_signal, rand_index


class TestNoise:
    def test_shape_and_seed(self):
        spec = NoiseModelSpec("n1", 0.2, 7, 30)
        a = gen_noise(spec, 3).values
        assert a.shape == (7, 30)
        np.testing.assert_array_equal(a, gen_noise(spec, 3).values)
        assert not np.array_equal(a, gen_noise(spec, 4).values)

    @pytest.mark.parametrize("model", ["n1", "n2"])
    def test_zero_innovations(self, model):
        spec = NoiseModelSpec(model, 0.5, 4, 20, sigma_v=0.0, sigma_h=0.0)
        assert np.all(gen_noise(spec, 0).values == 0)

    @pytest.mark.parametrize("kw", [dict(model="n3"), dict(rho=0.0), dict(model="n2", rho=1.0), dict(burn_in=-1)])
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            NoiseModelSpec(**kw)

    def test_innovation_scale(self):
        assert NoiseModelSpec("n1", 0.2).innovation_sd == pytest.approx(0.5)
        assert NoiseModelSpec("n2", 0.6).innovation_sd == pytest.approx(0.4)

    def test_spatial_correlation_decays(self):
        near = far = 0.0
        spec = NoiseModelSpec("n1", 0.2, 60, 500)
        for s in range(50):
            c = np.corrcoef(gen_noise(spec, s).values)
            near += c[0, 1]
            far += c[0, 49]
        assert near > far

    def test_factor_raises_leading_eigenvalue_share(self):
        def share(v):
            lam = np.linalg.eigvalsh(np.cov(v))
            return lam[-1] / lam.sum()

        wins = 0
        for s in range(50):
            a = share(gen_noise(NoiseModelSpec("n2", 0.9, 60, 500), s).values)
            b = share(gen_noise(NoiseModelSpec("n1", 0.2, 60, 500), s).values)
            wins += a > b
        assert wins > 25


class TestSignal:
    def test_empty(self):
        f, truth = gen_signal(SignalSpec(), 3, 10)
        assert np.all(f == 0) and truth.etas == ()

    def test_exact_step(self):
        spec = SignalSpec((ChangeSpec(5, 4, 0.3, width=0.0),))
        f, truth = gen_signal(spec, 4, 10, 1)
        np.testing.assert_array_equal(f[:, :5], 0.0)
        np.testing.assert_allclose(np.abs(f[:, 5:]), 0.3)
        assert truth.sets == ((0, 1, 2, 3),)

    def test_magnitude_support(self):
        spec = SignalSpec((ChangeSpec(20, 50, 0.1), ChangeSpec(60, 30, 0.2)))
        _, truth = gen_signal(spec, 80, 100, 5)
        for d, lo, hi in zip(truth.jumps, (0.075, 0.15), (0.125, 0.25)):
            assert np.all((np.abs(d) >= lo) & (np.abs(d) <= hi))
        assert len(truth.sets[0]) == 50

    def test_cumulative(self):
        spec = SignalSpec((ChangeSpec(3, 1, 1.0, pi=(0,), width=0.0), ChangeSpec(6, 1, 1.0, pi=(0,), width=0.0)))
        f, _ = gen_signal(spec, 1, 10, 0)
        assert set(np.abs(f[0, 6:])) <= {0.0, 2.0}

    def test_fractions_floor(self):
        spec = SignalSpec.fractions(250, 100, [(0.3, 0.75, 0.05), (0.6, 0.25, 0.087), (0.8, 0.1, 0.14)])
        assert [(c.eta, c.m) for c in spec.change_points] == [(75, 75), (150, 25), (200, 10)]

    @pytest.mark.parametrize("cps", [
        (ChangeSpec(5, 9, 1.0),), (ChangeSpec(8, 1, 1.0), ChangeSpec(4, 1, 1.0)), (ChangeSpec(10, 1, 1.0),),
        (ChangeSpec(5, 2, 1.0, pi=(0, 0)),),
    ])
    def test_invalid(self, cps):
        with pytest.raises(DomainError):
            gen_signal(SignalSpec(cps), 4, 10)


class TestRandIndex:
    def test_identical(self):
        assert rand_index({1, 2}, {1, 2}, 5) == 1.0

    def test_complement(self):
        assert rand_index(range(5), range(5, 10), 10) == 0.0

    def test_hand_count(self):
        # series 1..4 against 3..6 (0-based 0..3 against 2..5)
        assert rand_index(range(0, 4), range(2, 6), 10) == pytest.approx(0.6)

    def test_symmetric(self, rng):
        a = rng.choice(20, 7, replace=False)
        b = rng.choice(20, 11, replace=False)
        assert rand_index(a, b, 20) == rand_index(b, a, 20)
