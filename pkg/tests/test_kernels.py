import numpy as np
import pytest

import gpmean._backend as backend
import gpmean._core_np as core_np
from gpmean import (
    BrownianBridge,
    CustomKernel,
    FractionalBrownian,
    MarkovFactorable,
    OrnsteinUhlenbeck,
    Wiener,
    chol_factor,
    discretization_error_sup,
    gram,
    uniform_grid,
)
from gpmean.timegrid import TimeGrid

ALL_VARIANTS = [
    Wiener(),
    BrownianBridge(),
    OrnsteinUhlenbeck(0.5, 1.0),
    OrnsteinUhlenbeck(2.0, 0.7),
    FractionalBrownian(0.3),
    FractionalBrownian(0.5),
    FractionalBrownian(0.7),
]
LIPSCHITZ_VARIANTS = [
    Wiener(),
    BrownianBridge(),
    OrnsteinUhlenbeck(0.5, 1.0),
    FractionalBrownian(0.5),
    FractionalBrownian(0.7),
]


class TestKernelEval:
    def test_wiener_min(self):
        assert Wiener()(0.3, 0.7) == pytest.approx(0.3)

    def test_ou_variance_at_one(self):
        assert OrnsteinUhlenbeck(0.5, 1.0)(1.0, 1.0) == pytest.approx(1 - np.exp(-1))

    def test_fbm_half_is_twice_min(self):
        k = FractionalBrownian(0.5)
        rng = np.random.default_rng(0)
        s, t = rng.uniform(0, 1, (2, 100))
        np.testing.assert_allclose(k(s, t), 2 * np.minimum(s, t), atol=1e-14)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            OrnsteinUhlenbeck(eta=0.0)
        with pytest.raises(ValueError):
            OrnsteinUhlenbeck(eta=1.0, sigma=-1.0)
        with pytest.raises(ValueError):
            FractionalBrownian(hurst=1.0)
        with pytest.raises(ValueError):
            FractionalBrownian(hurst=-0.2)

    @pytest.mark.parametrize("kernel", ALL_VARIANTS, ids=lambda k: k.name())
    def test_symmetry_exact(self, kernel):
        rng = np.random.default_rng(42)
        s, t = rng.uniform(0, 1, (2, 1000))
        np.testing.assert_array_equal(kernel(s, t), kernel(t, s))


class TestGram:
    def test_wiener_two_cells(self):
        g = gram(Wiener(), uniform_grid(2, 0.0, 1.0))
        np.testing.assert_allclose(g.values, [[0.5, 0.5], [0.5, 1.0]])

    def test_bridge_vanishes_at_right_end(self):
        g = gram(BrownianBridge(), TimeGrid(np.array([0.0, 0.5, 1.0])))
        np.testing.assert_allclose(g.values, [[0.25, 0.0], [0.0, 0.0]], atol=1e-15)

    def test_wiener_uniform_is_min_over_n(self):
        n = 16  # dyadic so i/n is exactly representable
        g = gram(Wiener(), uniform_grid(n, 0.0, 1.0))
        i = np.arange(1, n + 1)
        np.testing.assert_array_equal(g.values, np.minimum(i[:, None], i[None, :]) / n)
        # for any n the entries are exactly min of the stored nodes
        g17 = gram(Wiener(), uniform_grid(17, 0.0, 1.0))
        nodes = uniform_grid(17, 0.0, 1.0).nodes
        np.testing.assert_array_equal(
            g17.values, np.minimum(nodes[:, None], nodes[None, :])
        )

    def test_ou_gram_factorizes_with_jitter(self):
        g = gram(OrnsteinUhlenbeck(0.5, 1.0), uniform_grid(100))
        L = chol_factor(g, jitter_rel=1e-12)
        np.testing.assert_allclose(L @ L.T, g.values, atol=1e-10)

    @pytest.mark.parametrize("kernel", ALL_VARIANTS, ids=lambda k: k.name())
    def test_psd_up_to_roundoff(self, kernel):
        g = gram(kernel, uniform_grid(40)).values
        rng = np.random.default_rng(7)
        bound = 1e-10 * np.abs(g).max()
        for _ in range(50):
            a = rng.standard_normal(40)
            assert a @ g @ a >= -bound * (a @ a)

    def test_markov_factorable_matches_wiener(self):
        k = MarkovFactorable(u=lambda s: np.ones(np.shape(s)), v=lambda s: np.asarray(s))
        grid = uniform_grid(9)
        np.testing.assert_allclose(
            gram(k, grid).values, gram(Wiener(), grid).values, atol=1e-15
        )

    def test_custom_kernel_path(self):
        k = CustomKernel(lambda s, t: np.minimum(s, t), label="min")
        np.testing.assert_allclose(
            gram(k, uniform_grid(5)).values, gram(Wiener(), uniform_grid(5)).values
        )


class TestDiscretizationError:
    def test_wiener_is_mesh_width(self):
        for n in (16, 100):
            est = discretization_error_sup(Wiener(), uniform_grid(n), refinement=8)
            # true sup is 1/n; midpoint sampling resolves it to 1 part in 2*8
            assert est == pytest.approx(1.0 / n, rel=1.0 / 8)

    def test_single_cell_definition(self):
        grid = uniform_grid(1, 0.0, 1.0)
        kernel = OrnsteinUhlenbeck(0.5, 1.0)
        est = discretization_error_sup(kernel, grid, refinement=16)
        # brute force over the same midpoint lattice
        pts = (np.arange(16) + 0.5) / 16
        brute = np.abs(
            kernel(1.0, 1.0) - kernel(pts[:, None], pts[None, :])
        ).max()
        assert est == pytest.approx(brute, rel=1e-12)

    def test_ou_rate_one_over_n(self):
        e100 = discretization_error_sup(OrnsteinUhlenbeck(0.5, 1.0), uniform_grid(100), 8)
        e1000 = discretization_error_sup(OrnsteinUhlenbeck(0.5, 1.0), uniform_grid(1000), 8)
        assert e100 / e1000 == pytest.approx(10.0, rel=0.1)

    @pytest.mark.parametrize("kernel", LIPSCHITZ_VARIANTS, ids=lambda k: k.name())
    def test_halving_for_lipschitz_variants(self, kernel):
        errs = [
            discretization_error_sup(kernel, uniform_grid(n), 8) for n in (50, 100, 200)
        ]
        for coarse, fine in zip(errs, errs[1:]):
            assert coarse / fine == pytest.approx(2.0, rel=0.2)

    def test_fbm_rough_rate_is_hoelder(self):
        # H < 1/2: error scales like n^{-2H}, not 1/n
        k = FractionalBrownian(0.3)
        errs = [discretization_error_sup(k, uniform_grid(n), 8) for n in (100, 200, 400)]
        for coarse, fine in zip(errs, errs[1:]):
            assert coarse / fine == pytest.approx(2.0**0.6, rel=0.15)

    def test_refinement_validation(self):
        with pytest.raises(ValueError):
            discretization_error_sup(Wiener(), uniform_grid(4), refinement=1)


@pytest.mark.skipif(not backend.HAVE_EXTENSION, reason="extension not built")
class TestBackendEquivalence:
    @pytest.mark.parametrize(
        "kernel",
        [Wiener(), BrownianBridge(), OrnsteinUhlenbeck(0.7, 1.3), FractionalBrownian(0.4)],
        ids=lambda k: k.name(),
    )
    def test_gram_matches_fallback(self, kernel):
        grid = uniform_grid(37, 0.0, 1.0)
        kind, a, b = kernel.closed_form
        compiled = backend.compiled().gram_closed(kind, a, b, np.ascontiguousarray(grid.nodes))
        fallback = core_np.gram_from_callable(kernel, grid.nodes)
        np.testing.assert_allclose(compiled, fallback, rtol=1e-14, atol=1e-15)

    @pytest.mark.parametrize(
        "kernel",
        [Wiener(), BrownianBridge(), OrnsteinUhlenbeck(0.7, 1.3), FractionalBrownian(0.4)],
        ids=lambda k: k.name(),
    )
    def test_sup_error_matches_fallback(self, kernel):
        grid = uniform_grid(23, 0.0, 1.0)
        kind, a, b = kernel.closed_form
        compiled = backend.compiled().sup_error_closed(
            kind, a, b, np.ascontiguousarray(grid.t), 6
        )
        fallback = core_np.sup_error_from_callable(kernel, grid.t, 6, block=64)
        assert compiled == pytest.approx(fallback, rel=1e-13)
