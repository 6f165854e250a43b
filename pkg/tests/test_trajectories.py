import numpy as np
import pytest

from stratsig.errors import InvalidInput, SqueezeHypothesisError
from stratsig.integrals import SamplePath
from stratsig.trajectories import (
    PLT,
    Parametrization,
    build_squeeze_parametrization,
    drop_last,
    evaluate,
    is_sub_plt,
    sup_distance,
    trajectory_distance,
    verify_squeeze,
)


def path_from_fn(fx, fy, n=2001):
    t = np.linspace(0, 1, n)
    return SamplePath(t, np.column_stack([fx(t), fy(t)]))


class TestEvaluate:
    def test_midpoint_of_segment(self):
        traj = PLT([[0.0, 0.0], [1.0, 0.0]])
        sigma = Parametrization([0.0, 1.0])
        assert np.allclose(evaluate(traj, sigma, 0.5), [0.5, 0.0])

    def test_partition_points_hit_vertices(self):
        traj = PLT([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
        sigma = Parametrization([0.0, 0.25, 1.0])
        assert np.array_equal(evaluate(traj, sigma, 0.25), [1.0, 0.0])
        assert np.array_equal(evaluate(traj, sigma, 1.0), [1.0, 1.0])

    def test_interior_of_second_segment(self):
        traj = PLT([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
        sigma = Parametrization([0.0, 0.25, 1.0])
        assert np.allclose(evaluate(traj, sigma, 0.625), [1.0, 0.5])

    def test_order_mismatch_rejected(self):
        with pytest.raises(InvalidInput):
            evaluate(PLT([[0.0], [1.0], [2.0]]), Parametrization([0.0, 1.0]), 0.5)


class TestDropLast:
    def test_basic(self):
        traj = PLT([[0.0], [1.0], [2.0]])
        assert drop_last(traj).points.tolist() == [[0.0], [1.0]]

    def test_repeated_tail(self):
        traj = PLT([[0.0], [1.0], [1.0]])
        assert drop_last(traj).points.tolist() == [[0.0], [1.0]]

    def test_two_points_rejected(self):
        with pytest.raises(InvalidInput):
            drop_last(PLT([[0.0], [1.0]]))


class TestSubPlt:
    def test_examples(self):
        a = PLT([[0.0], [2.0]])
        abc = PLT([[0.0], [1.0], [2.0]])
        assert is_sub_plt(a, abc)
        assert not is_sub_plt(PLT([[2.0], [0.0]]), abc)
        assert is_sub_plt(abc, abc)

    def test_singleton_promotion(self):
        single = PLT([[1.0]])
        assert len(single) == 2
        assert is_sub_plt(single, PLT([[0.0], [1.0], [1.0], [2.0]]))

    def test_reflexive_transitive_random(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            full = rng.integers(0, 3, size=(8, 2)).astype(float)
            keep2 = np.sort(rng.choice(8, size=5, replace=False))
            mid = full[keep2]
            keep3 = np.sort(rng.choice(5, size=3, replace=False))
            small = mid[keep3]
            t_full, t_mid, t_small = PLT(full), PLT(mid), PLT(small)
            assert is_sub_plt(t_full, t_full)
            assert is_sub_plt(t_mid, t_full)
            assert is_sub_plt(t_small, t_mid)
            assert is_sub_plt(t_small, t_full)


class TestTrajectoryDistance:
    def test_exact_match_is_near_zero(self):
        traj = PLT([[0.0, 0.0], [1.0, 0.0]])
        path = path_from_fn(lambda t: t, lambda t: 0 * t)
        assert trajectory_distance(traj, path) <= 1e-3

    def test_parabola_bulge(self):
        traj = PLT([[0.0, 0.0], [1.0, 0.0]])
        path = path_from_fn(lambda t: t, lambda t: t * (1 - t), n=4001)
        d = trajectory_distance(traj, path, mesh=5e-4)
        assert d == pytest.approx(0.25, abs=1e-3)
        # dense grid-search oracle: best sup over a family of one-knot
        # piecewise linear reparametrizations cannot beat the bulge height
        best = np.inf
        t = path.times
        for knot in np.linspace(0.05, 0.95, 19):
            for val in np.linspace(0.05, 0.95, 19):
                f = np.interp(t, [0, knot, 1], [0, val, 1])
                sup = np.max(np.hypot(t - f, t * (1 - t)))
                best = min(best, sup)
        assert best >= 0.25 - 1e-9

    def test_constant_trajectory_vs_moving_path(self):
        traj = PLT([[0.0, 0.0], [0.0, 0.0]])
        path = path_from_fn(lambda t: t, lambda t: 0 * t)
        assert trajectory_distance(traj, path) == pytest.approx(1.0, abs=1e-9)

    def test_translation_invariance_exact(self):
        # dyadic data keeps the arithmetic exact under the dyadic shift
        t = np.linspace(0, 1, 257)
        pts = np.column_stack([np.round(t * 64) / 64.0, np.round(np.sin(3 * t) * 64) / 64.0])
        path = SamplePath(t, pts)
        traj = PLT([[0.0, 0.0], [0.5, 0.25], [1.0, 0.0]])
        shift = np.array([2.0, -4.0])
        shifted_path = SamplePath(t, pts + shift)
        shifted_traj = PLT(traj.points + shift)
        assert trajectory_distance(traj, path) == trajectory_distance(shifted_traj, shifted_path)

    def test_distance_bounds_sup_distance(self):
        # the infimum over parametrizations improves on any particular one,
        # up to the documented subdivision slack
        rng = np.random.default_rng(3)
        verts = np.cumsum(rng.standard_normal((5, 2)), axis=0) * 0.2
        traj = PLT(verts)
        sigma = Parametrization(np.concatenate([[0.0], np.sort(rng.random(3)), [1.0]]))
        t = np.linspace(0, 1, 501)
        vals = evaluate(traj, sigma, t)
        path = SamplePath(t, vals)
        mesh = 1e-3
        slack = mesh + float(np.max(np.linalg.norm(np.diff(vals, axis=0), axis=1)))
        assert trajectory_distance(traj, path, mesh=mesh) <= sup_distance(traj, sigma, path) + slack


def make_upper(rng, n_points=9):
    """An upper trajectory with repeated tail plus its parametrization."""
    pts = np.round(np.cumsum(rng.integers(-2, 3, size=(n_points - 1, 2)), axis=0) * 0.5)
    pts = np.vstack([[[0.0, 0.0]], pts])
    pts[-1] = pts[-2]
    times = np.concatenate([[0.0], np.sort(rng.random(n_points - 2)), [1.0]])
    return PLT(pts), Parametrization(times)


def thin_out(rng, t2, sigma2, keep_mask):
    """A lower trajectory built by keeping a subset of the upper's interior
    points (always the first), plus its induced parametrization."""
    idx = [0] + [i for i in range(1, len(t2) - 1) if keep_mask[i]]
    pts = t2.points[idx]
    pts = np.vstack([pts, pts[-1]])  # repeat tail
    times = np.concatenate([sigma2.times[idx], [1.0]])
    if times[-2] == 1.0:
        times[-2] = 0.5 * (times[-3] + 1.0)
    return PLT(pts), Parametrization(times)


class TestSqueeze:
    def test_middle_equals_upper_minus_tail(self):
        rng = np.random.default_rng(11)
        t2, sigma2 = make_upper(rng)
        t1, sigma1 = thin_out(rng, t2, sigma2, np.zeros(len(t2), dtype=bool))
        traj = PLT(t2.points[:-1].copy())
        sigma = build_squeeze_parametrization(t1, sigma1, traj, t2, sigma2)
        for t in sigma1.times[:-1]:
            assert np.allclose(evaluate(t1, sigma1, t), evaluate(traj, sigma, t))
        for t in sigma.times[:-1]:
            assert np.allclose(evaluate(traj, sigma, t), evaluate(t2, sigma2, t))

    def test_middle_equals_lower_minus_tail(self):
        # The final interior anchor cannot be carried (the middle trajectory's
        # last point must take time 1), so agreement is promised at all
        # earlier shared times only; the lower trajectory is constant there.
        rng = np.random.default_rng(13)
        t2, sigma2 = make_upper(rng)
        keep = rng.random(len(t2)) < 0.5
        t1, sigma1 = thin_out(rng, t2, sigma2, keep)
        traj = PLT(t1.points[:-1].copy())
        sigma = build_squeeze_parametrization(t1, sigma1, traj, t2, sigma2)
        required, _ = verify_squeeze(t1, sigma1, traj, sigma, t2, sigma2)
        assert required
        for t in sigma1.times[:-2]:
            assert np.allclose(evaluate(t1, sigma1, t), evaluate(traj, sigma, t))

    def test_randomized_nested_triples(self):
        rng = np.random.default_rng(17)
        done = 0
        while done < 25:
            t2, sigma2 = make_upper(rng, n_points=10)
            keep_low = rng.random(len(t2)) < 0.3
            t1, sigma1 = thin_out(rng, t2, sigma2, keep_low)
            # middle: keep everything the lower kept plus extras
            keep_mid = keep_low | (rng.random(len(t2)) < 0.5)
            idx = [0] + [i for i in range(1, len(t2) - 1) if keep_mid[i]]
            traj = PLT(t2.points[idx])
            sigma = build_squeeze_parametrization(t1, sigma1, traj, t2, sigma2)
            required, final_ok = verify_squeeze(t1, sigma1, traj, sigma, t2, sigma2)
            assert required
            # clause 1 in full (final interior time included) whenever the
            # middle trajectory has room for the final anchor
            if final_ok:
                for t in sigma1.times[:-1]:
                    assert t in sigma.times
                    assert np.allclose(evaluate(t1, sigma1, t), evaluate(traj, sigma, t))
            # clause 2: sigma's times are sigma2 times with equal values
            for t in sigma.times[:-1]:
                assert t in sigma2.times
                assert np.allclose(evaluate(traj, sigma, t), evaluate(t2, sigma2, t))
            done += 1

    def test_sup_distance_squeeze_bound(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            t2, sigma2 = make_upper(rng, n_points=8)
            keep_low = rng.random(len(t2)) < 0.3
            t1, sigma1 = thin_out(rng, t2, sigma2, keep_low)
            keep_mid = keep_low | (rng.random(len(t2)) < 0.5)
            idx = [0] + [i for i in range(1, len(t2) - 1) if keep_mid[i]]
            traj = PLT(t2.points[idx])
            sigma = build_squeeze_parametrization(t1, sigma1, traj, t2, sigma2)
            t = np.linspace(0, 1, 801)
            gamma = SamplePath(t, evaluate(t2, sigma2, t))
            d1 = sup_distance(t1, sigma1, gamma)
            d2 = sup_distance(t2, sigma2, gamma)
            dm = sup_distance(traj, sigma, gamma)
            assert dm <= 2 * max(d1, d2) + 1e-9

    def test_violations_identified(self):
        t2 = PLT([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [1.0, 1.0]])
        sigma2 = Parametrization([0.0, 0.4, 0.8, 1.0])
        t1 = PLT([[0.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
        sigma1 = Parametrization([0.0, 0.4, 1.0])
        good_mid = PLT([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
        build_squeeze_parametrization(t1, sigma1, good_mid, t2, sigma2)

        with pytest.raises(SqueezeHypothesisError) as err:
            bad_first = PLT([[9.0, 9.0], [1.0, 0.0]])
            build_squeeze_parametrization(t1, sigma1, bad_first, t2, sigma2)
        assert err.value.clause == "first points"

        with pytest.raises(SqueezeHypothesisError) as err:
            bad_tail = PLT([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
            build_squeeze_parametrization(bad_tail, sigma1, good_mid, t2, sigma2)
        assert err.value.clause == "repeated tail"

        with pytest.raises(SqueezeHypothesisError) as err:
            sigma1_bad = Parametrization([0.0, 0.5, 1.0])  # 0.5 not in sigma2
            build_squeeze_parametrization(t1, sigma1_bad, good_mid, t2, sigma2)
        assert err.value.clause == "time embedding"

        with pytest.raises(SqueezeHypothesisError) as err:
            stray = PLT([[0.0, 0.0], [7.0, 7.0], [1.0, 1.0]])
            build_squeeze_parametrization(t1, sigma1, stray, t2, sigma2)
        assert err.value.clause == "nesting"
