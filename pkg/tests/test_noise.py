import json
import math

import numpy as np
import pytest
from scipy import integrate

from levy_elliptic._rng import keyed_normals, replicate_seed, stream
from levy_elliptic.diagnostics import _pairing_batch, run_replicates
from levy_elliptic.domain import HyperBox, enumerate_eigen
from levy_elliptic.functions import (
    CallableFunction,
    Constant,
    Eigenfunction,
    Indicator,
    UncertifiedFunctionError,
)
from levy_elliptic.measures import (
    AlphaStable,
    LevyTriplet,
    NullMeasure,
    SymmetricTwoPoint,
    VarianceGamma,
    truncated_variance,
)
from levy_elliptic.noise import (
    JumpAtomSet,
    NoiseRealization,
    pair_eigen,
    pair_with_function,
    sample_noise,
    sample_prm_large,
)

UNIT = HyperBox.unit(1)


def atom_realization(locations, sizes, triplet=None, eps=0.5, policy="drop", seed=0):
    """Hand-built realization with prescribed atoms, for closed-form oracles."""
    triplet = triplet or LevyTriplet(0.0, 0.0, SymmetricTwoPoint(1.0, 2.0))
    atoms = JumpAtomSet(UNIT, eps, np.atleast_2d(locations), np.atleast_1d(sizes))
    return NoiseRealization(UNIT, triplet, eps, policy, seed, atoms)


class TestPrmSampling:
    def test_null_measure_empty(self):
        rng = stream(0, 1)
        atoms = sample_prm_large(UNIT, NullMeasure(), 0.5, rng)
        assert atoms.count == 0

    def test_stable_mean_count(self):
        # tail mass at eps=1 is exactly 1, so counts are Poisson(1).
        rng = stream(1, 1)
        counts = [sample_prm_large(UNIT, AlphaStable(1.0), 1.0, rng).count for _ in range(10_000)]
        assert abs(np.mean(counts) - 1.0) <= 0.03

    def test_two_point_poisson_rate(self):
        rng = stream(2, 1)
        counts = np.array(
            [sample_prm_large(UNIT, SymmetricTwoPoint(2.0, 1.0), 0.5, rng).count for _ in range(6000)]
        )
        assert abs(np.mean(counts) - 2.0) <= 3.0 * math.sqrt(2.0 / 6000)
        assert abs(np.var(counts) / 2.0 - 1.0) <= 0.1

    def test_atoms_respect_threshold_and_box(self):
        rng = stream(3, 1)
        atoms = sample_prm_large(UNIT, AlphaStable(1.2), 0.3, rng)
        assert np.all(np.abs(atoms.sizes) > 0.3)
        assert np.all((atoms.locations >= 0.0) & (atoms.locations <= 1.0))

    def test_infinite_intensity_rejected(self):
        rng = stream(4, 1)
        with pytest.raises(ValueError, match="infinite"):
            sample_prm_large(UNIT, AlphaStable(1.0), 0.0, rng)

    def test_atom_csv_round_trip(self, tmp_path):
        atoms = JumpAtomSet(UNIT, 0.5, np.array([[0.25], [0.75]]), np.array([1.5, -2.0]))
        path = tmp_path / "atoms.csv"
        atoms.to_csv(path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "y_1,z"
        back = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
        assert np.array_equal(back[:, 0], atoms.locations[:, 0])
        assert np.array_equal(back[:, 1], atoms.sizes)


class TestPairEigen:
    def test_zero_triplet_all_zero(self):
        real = sample_noise(UNIT, LevyTriplet(0.0, 0.0, NullMeasure()), master_seed=5)
        system = enumerate_eigen(UNIT, count=12)
        assert np.all(pair_eigen(real, system) == 0.0)

    def test_single_atom_closed_form(self):
        real = atom_realization([[0.5]], [2.0])
        system = enumerate_eigen(UNIT, count=8)
        coeffs = pair_eigen(real, system)
        assert coeffs[0] == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-14)
        assert coeffs[1] == pytest.approx(0.0, abs=1e-13)

    def test_drift_term_closed_form(self):
        real = sample_noise(UNIT, LevyTriplet(1.0, 0.0, NullMeasure()), master_seed=6)
        system = enumerate_eigen(UNIT, count=4)
        coeffs = pair_eigen(real, system)
        oracle, _ = integrate.quad(lambda x: math.sqrt(2.0) * math.sin(math.pi * x), 0, 1)
        assert coeffs[0] == pytest.approx(oracle, rel=1e-12)
        assert coeffs[0] == pytest.approx(2.0 * math.sqrt(2.0) / math.pi, rel=1e-12)
        assert coeffs[1] == 0.0

    def test_box_mismatch_rejected(self):
        real = sample_noise(UNIT, LevyTriplet(0.0, 0.0, NullMeasure()), master_seed=7)
        other = enumerate_eigen(HyperBox(((0.0, 2.0),)), count=3)
        with pytest.raises(ValueError, match="different boxes"):
            pair_eigen(real, other)

    def test_sigma_zero_gaussian_map_identically_zero(self):
        real = sample_noise(UNIT, LevyTriplet(0.0, 0.0, SymmetricTwoPoint(1.0, 1.0)), master_seed=8)
        system = enumerate_eigen(UNIT, count=50)
        assert np.all(real.gaussian_coefficients(system.indices) == 0.0)

    def test_small_jump_surrogate_variance(self):
        # gaussianize draws per-index N(0, truncated variance at eps).
        measure = AlphaStable(1.0)
        eps = 0.5
        real = sample_noise(UNIT, LevyTriplet(0.0, 0.0, measure), eps=eps, master_seed=9)
        idx = np.arange(1, 200_001)[:, None]
        draws = real.small_jump_coefficients(idx)
        assert np.var(draws) == pytest.approx(truncated_variance(measure, eps), rel=0.02)

    def test_drop_policy_adds_nothing(self):
        real = sample_noise(
            UNIT, LevyTriplet(0.0, 0.0, AlphaStable(1.0)), eps=0.5, policy="drop", master_seed=10
        )
        assert np.all(real.small_jump_coefficients(np.arange(1, 50)[:, None]) == 0.0)


class TestPairWithFunction:
    def test_zero_function(self):
        real = atom_realization([[0.5]], [2.0])
        system = enumerate_eigen(UNIT, count=6)
        assert pair_with_function(real, Constant(0.0), system) == 0.0

    def test_eigenfunction_bit_for_bit(self):
        triplet = LevyTriplet(0.7, 1.3, SymmetricTwoPoint(2.0, 1.0))
        real = sample_noise(UNIT, triplet, eps=0.4, master_seed=11)
        system = enumerate_eigen(UNIT, count=9)
        coeffs = pair_eigen(real, system)
        for pos, k in [(0, 1), (4, 5), (8, 9)]:
            val = pair_with_function(real, Eigenfunction(UNIT, (k,)), system)
            assert val == coeffs[pos]

    def test_uncertified_callable_refused(self):
        real = atom_realization([[0.5]], [2.0])
        system = enumerate_eigen(UNIT, count=4)
        with pytest.raises(UncertifiedFunctionError):
            pair_with_function(real, CallableFunction(lambda p: p[:, 0]), system)

    def test_additivity_exact_over_disjoint_boxes(self):
        triplet = LevyTriplet(0.5, 0.7, SymmetricTwoPoint(3.0, 1.0))
        real = sample_noise(UNIT, triplet, eps=0.4, master_seed=12)
        system = enumerate_eigen(UNIT, count=40)
        left = Indicator((HyperBox(((0.0, 0.5),)),))
        right = Indicator((HyperBox(((0.5, 1.0),)),))
        union = Indicator((HyperBox(((0.0, 0.5),)), HyperBox(((0.5, 1.0),))))
        lhs = pair_with_function(real, left, system) + pair_with_function(real, right, system)
        rhs = pair_with_function(real, union, system)
        assert lhs == rhs

    def test_batch_sampler_matches_direct_pairing_law(self):
        # The vectorized batch is a law-equivalent shortcut for repeated
        # pair_with_function calls; compare moments at modest sample sizes.
        box, system = UNIT, enumerate_eigen(UNIT, count=64)
        triplet = LevyTriplet(0.0, 0.0, SymmetricTwoPoint(2.0, 1.0))
        f = Constant(1.0)
        direct = []
        for i in range(400):
            real = sample_noise(box, triplet, eps=0.5, master_seed=replicate_seed(13, i))
            direct.append(pair_with_function(real, f, system))
        batch = _pairing_batch(box, triplet, f, system, 0.5, "gaussianize", 20_000, 14)
        # Var of a compound Poisson sum with rate 2 and unit magnitudes is 2.
        assert np.var(batch) == pytest.approx(2.0, rel=0.05)
        assert np.var(direct) == pytest.approx(2.0, rel=0.35)

    def test_gaussian_pairing_variance_window(self):
        # Unit-variance white noise paired with the unit constant: variance 1
        # up to the truncation deficit of the expansion (< 1% at 1000 modes).
        box, system = UNIT, enumerate_eigen(UNIT, count=1000)
        x = _pairing_batch(
            box, LevyTriplet(0.0, 1.0, NullMeasure()), Constant(1.0), system, 0.01, "gaussianize", 100_000, 15
        )
        assert 0.98 <= np.var(x) <= 1.02

    @pytest.mark.parametrize(
        "measure", [SymmetricTwoPoint(1.0, 1.0), VarianceGamma(1.0, 1.0)]
    )
    def test_symmetry_odd_moments(self, measure):
        box, system = UNIT, enumerate_eigen(UNIT, count=128)
        x = _pairing_batch(
            box, LevyTriplet(0.0, 0.0, measure), Constant(1.0), system, 0.05, "gaussianize", 100_000, 16
        )
        m = len(x)
        assert abs(np.mean(x)) <= 3.0 * np.std(x) / math.sqrt(m)
        x3 = x**3
        assert abs(np.mean(x3)) <= 3.0 * np.std(x3) / math.sqrt(m)

    def test_compensator_drop_zero_mean(self):
        # Raw band atoms have exactly zero mean for symmetric measures.
        box, system = UNIT, enumerate_eigen(UNIT, count=16)
        x = _pairing_batch(
            box,
            LevyTriplet(0.0, 0.0, SymmetricTwoPoint(1.0, 0.8)),
            Constant(1.0),
            system,
            0.5,
            "drop",
            100_000,
            17,
        )
        assert abs(np.mean(x)) <= 3.0 * np.std(x) / math.sqrt(len(x))


class TestReproducibility:
    def test_same_seed_same_realization(self):
        triplet = LevyTriplet(0.2, 0.9, AlphaStable(1.4))
        a = sample_noise(UNIT, triplet, eps=0.2, master_seed=99)
        b = sample_noise(UNIT, triplet, eps=0.2, master_seed=99)
        assert np.array_equal(a.atoms.locations, b.atoms.locations)
        assert np.array_equal(a.atoms.sizes, b.atoms.sizes)
        system = enumerate_eigen(UNIT, count=30)
        assert np.array_equal(pair_eigen(a, system), pair_eigen(b, system))

    def test_keyed_normals_order_independent(self):
        idx = np.arange(1, 101)[:, None]
        full = keyed_normals(42, 7, idx)
        shuffled = np.random.default_rng(0).permutation(100)
        again = keyed_normals(42, 7, idx[shuffled])
        assert np.array_equal(full[shuffled], again)
        single = keyed_normals(42, 7, idx[17:18])
        assert single[0] == full[17]

    def test_keyed_normals_distribution(self):
        draws = keyed_normals(3, 1, np.arange(1, 200_001)[:, None])
        assert abs(np.mean(draws)) < 0.01
        assert np.var(draws) == pytest.approx(1.0, rel=0.02)

    def test_thread_count_does_not_change_results(self):
        triplet = LevyTriplet(0.0, 1.0, SymmetricTwoPoint(1.0, 1.0))
        system = enumerate_eigen(UNIT, count=20)

        def one(i):
            real = sample_noise(UNIT, triplet, eps=0.5, master_seed=replicate_seed(5, i))
            return pair_eigen(real, system)

        serial = run_replicates(one, 12, workers=1)
        threaded = run_replicates(one, 12, workers=4)
        for a, b in zip(serial, threaded):
            assert np.array_equal(a, b)

    def test_manifest_round_trip(self, tmp_path):
        triplet = LevyTriplet(0.1, 0.2, VarianceGamma(1.0, 2.0))
        real = sample_noise(UNIT, triplet, eps=0.3, policy="drop", master_seed=77)
        path = tmp_path / "manifest.json"
        real.write_manifest(path)
        data = json.loads(path.read_text())
        assert data == {
            "triplet": {"b": 0.1, "sigma": 0.2, "measure": {"kind": "variance_gamma", "c": 1.0, "m": 2.0}},
            "eps": 0.3,
            "small_jump_policy": "drop",
            "seed": 77,
        }

    def test_policy_validation(self):
        with pytest.raises(ValueError, match="policy"):
            sample_noise(UNIT, LevyTriplet(0.0, 0.0, NullMeasure()), policy="other")
