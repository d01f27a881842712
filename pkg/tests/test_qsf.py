import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atfnb import indexes, nb, qsf
from atfnb.dataset import DataError
from atfnb.qsf import BetaInterval, InstanceCoeffs
from atfnb.weighting import fusion_weights

from conftest import random_dataset


def index_pair(data, ca="info_gain", aa="pearson"):
    return indexes.class_attribute_index(data, ca), indexes.attribute_attribute_index(data, aa)


def brute_optimal(intervals):
    """Enumerate every gap between sorted endpoints and count containing intervals."""
    live = [iv for iv in intervals if not iv.empty]
    points = sorted({0.0, 1.0, *(iv.lo for iv in live), *(iv.hi for iv in live)})
    gaps = list(zip(points, points[1:]))
    counts = [sum(iv.lo <= a and b <= iv.hi for iv in live) for a, b in gaps]
    return gaps, counts


class TestInstanceCoeffs:
    def test_zero_indexes_reduce_to_priors(self, toy):
        model = nb.fit_counts(toy)
        c = qsf.instance_coeffs(model, np.zeros(2), np.zeros(2), toy.X[0], toy.labels[0])
        np.testing.assert_array_equal(c.K, 0)
        np.testing.assert_allclose(c.M, model.log_prior())

    def test_single_attribute_substitution(self):
        data = random_dataset(2, max_n=1)
        model = nb.fit_counts(data)
        c = qsf.instance_coeffs(model, [1.0], [0.0], data.X[0], data.labels[0])
        np.testing.assert_allclose(c.K, model.log_conditionals(data.X[:1])[0, 0])
        np.testing.assert_allclose(c.M, model.log_prior())

    def test_arity(self, toy):
        with pytest.raises(DataError):
            qsf.instance_coeffs(nb.fit_counts(toy), np.zeros(2), np.zeros(2), [0, 0, 0], 0)

    def test_affine_consistency(self):
        rng = np.random.default_rng(7)
        for trial in range(20):
            data = random_dataset(1000 + trial)
            model = nb.fit_counts(data)
            ca, aa = index_pair(data)
            i = int(rng.integers(data.m))
            beta = float(rng.random())
            c = qsf.instance_coeffs(model, ca, aa, data.X[i], data.labels[i])
            direct = nb.class_scores(model, fusion_weights(ca, aa, beta), data.X[i])
            np.testing.assert_allclose(c.scores(beta), direct, atol=1e-9)

    def test_toy_model_at_037(self, toy):
        model = nb.fit_counts(toy)
        ca, aa = index_pair(toy)
        c = qsf.instance_coeffs(model, ca, aa, toy.X[2], toy.labels[2])
        direct = nb.class_scores(model, fusion_weights(ca, aa, 0.37), toy.X[2])
        np.testing.assert_allclose(c.scores(0.37), direct, atol=1e-9)


class TestFeasibleInterval:
    def test_one_inequality(self):
        iv = qsf.feasible_interval(InstanceCoeffs(np.array([2.0, 1.0]), np.array([0.0, 0.3]), 0))
        assert (iv.lo, iv.hi, iv.empty) == pytest.approx((0.3, 1.0, False))

    def test_equal_slopes(self):
        assert qsf.feasible_interval(InstanceCoeffs(np.array([1.0, 1.0]), np.array([0.5, 0.2]), 0)) == BetaInterval(0.0, 1.0)
        assert qsf.feasible_interval(InstanceCoeffs(np.array([1.0, 1.0]), np.array([0.2, 0.5]), 0)).empty

    def test_exact_tie_is_infeasible(self):
        assert qsf.feasible_interval(InstanceCoeffs(np.array([1.0, 1.0]), np.array([0.2, 0.2]), 0)).empty

    def test_decreasing_constraint(self):
        # -beta > -0.4  ->  beta < 0.4
        iv = qsf.feasible_interval(InstanceCoeffs(np.array([0.0, 1.0]), np.array([0.0, -0.4]), 0))
        assert (iv.lo, iv.hi) == pytest.approx((0.0, 0.4))

    def test_point_collapse_is_empty(self):
        coeffs = InstanceCoeffs(np.array([0.0, 1.0, -1.0]), np.array([0.0, -0.5, 0.5]), 0)
        assert qsf.feasible_interval(coeffs).empty

    @settings(max_examples=100)
    @given(st.integers(0, 10**6))
    def test_vectorised_matches_scalar(self, seed):
        rng = np.random.default_rng(seed)
        K = int(rng.integers(2, 5))
        slope, intercept = rng.normal(size=(20, K)), rng.normal(size=(20, K))
        labels = rng.integers(0, K, 20)
        lo, hi = qsf.interval_bounds(slope, intercept, labels)
        for i in range(20):
            iv = qsf.feasible_interval(InstanceCoeffs(slope[i], intercept[i], int(labels[i])))
            if iv.empty:
                assert lo[i] >= hi[i]
            else:
                assert (lo[i], hi[i]) == pytest.approx((iv.lo, iv.hi), abs=1e-15)


class TestOptimalInterval:
    def test_three_intervals(self):
        G = [BetaInterval(0.1, 0.5), BetaInterval(0.3, 0.8), BetaInterval(0.6, 0.9)]
        res = qsf.optimal_interval(G)
        gaps, counts = brute_optimal(G)
        assert len(gaps) == 7
        best = max(counts)
        assert [g for g, c in zip(gaps, counts) if c == best] == [(0.3, 0.5), (0.6, 0.8)]
        assert (res.optimal.lo, res.optimal.hi) == (0.3, 0.5)
        assert res.representative == pytest.approx(0.4)
        assert res.coverage == 2 == best
        assert [c for _, c in res.candidates] == counts

    def test_single(self):
        res = qsf.optimal_interval([BetaInterval(0.2, 0.6)])
        assert (res.optimal.lo, res.optimal.hi, res.representative) == pytest.approx((0.2, 0.6, 0.4))

    def test_all_empty(self):
        res = qsf.optimal_interval([BetaInterval.nothing()] * 3)
        assert res.degenerate and res.coverage == 0
        assert (res.optimal.lo, res.optimal.hi, res.representative) == (0.0, 1.0, 0.5)

    def test_no_intervals(self):
        assert qsf.optimal_interval([]).degenerate

    def test_empties_ignored(self):
        res = qsf.optimal_interval([BetaInterval.nothing(), BetaInterval(0.2, 0.6)])
        assert res.coverage == 1 and res.n_instances == 2

    @settings(max_examples=200)
    @given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), max_size=12))
    def test_against_enumeration(self, raw):
        G = [BetaInterval(min(a, b), max(a, b)) if abs(a - b) > 1e-9 else BetaInterval.nothing() for a, b in raw]
        res = qsf.optimal_interval(G)
        if not any(not g.empty for g in G):
            assert res.degenerate
            return
        gaps, counts = brute_optimal(G)
        # coverage at the representative equals the brute-force maximum
        assert res.coverage == max(counts)
        assert sum(g.lo < res.representative < g.hi for g in G if not g.empty) == max(counts)
        assert res.optimal.lo <= res.representative <= res.optimal.hi
        # leftmost maximal gap starts the optimum
        assert res.optimal.lo == pytest.approx(gaps[counts.index(max(counts))][0], abs=1e-12)


def interior_points(iv, k=5, margin=1e-6):
    return np.linspace(iv.lo + margin, iv.hi - margin, k)


def exterior_points(iv, k=5, margin=1e-6):
    if iv.empty:
        return np.linspace(0, 1, k)
    pool = np.concatenate([np.linspace(0, iv.lo - margin, k) if iv.lo > margin else [],
                           np.linspace(iv.hi + margin, 1, k) if iv.hi < 1 - margin else []])
    return pool[:: max(1, len(pool) // k)][:k]


@pytest.mark.parametrize("seed", range(8))
def test_interval_soundness(seed):
    data = random_dataset(500 + seed, max_m=60)
    model = nb.fit_counts(data)
    ca, aa = index_pair(data)
    for i, iv in enumerate(qsf.instance_intervals(model, ca, aa, data)):
        label = int(data.labels[i])
        if not iv.empty and iv.hi - iv.lo > 3e-6:
            for beta in interior_points(iv):
                assert nb.predict(model, fusion_weights(ca, aa, float(beta)), data.X[i]) == label
        for beta in exterior_points(iv):
            scores = nb.class_scores(model, fusion_weights(ca, aa, float(beta)), data.X[i])
            rivals = np.delete(scores, label)
            # the true label is never strictly ahead outside its interval
            assert scores[label] <= rivals.max() + 1e-9


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("pair", [("info_gain", "pearson"), ("mutual_info", "mutual_info")])
def test_matches_fine_grid(seed, pair):
    data = random_dataset(seed)
    model = nb.fit_counts(data)
    ca, aa = index_pair(data, *pair)
    res = qsf.qsf(data, ca, aa, model)
    at_rep = nb.accuracy(model, fusion_weights(ca, aa, res.representative), data)
    assert at_rep == qsf.sls(data, ca, aa, 0.001, model).best_accuracy
    # plateau: accuracy is flat strictly inside the optimum
    inner = np.linspace(res.optimal.lo, res.optimal.hi, 12)[1:-1]
    assert {nb.accuracy(model, fusion_weights(ca, aa, float(b)), data) for b in inner} == {at_rep}


def test_full_coverage_when_separable():
    from atfnb.dataset import Dataset
    data = Dataset.from_symbols([["a", "u"], ["a", "v"], ["b", "u"], ["b", "v"]], ["p", "p", "q", "q"])
    res = qsf.qsf(data, *index_pair(data))
    assert res.coverage == data.m


def test_deterministic():
    data = random_dataset(42)
    ca, aa = index_pair(data)
    assert qsf.qsf(data, ca, aa).to_dict() == qsf.qsf(data, ca, aa).to_dict()


class TestSls:
    def test_grid(self):
        assert qsf.beta_grid(0.5).tolist() == [0.0, 0.5, 1.0]
        assert len(qsf.beta_grid(0.01)) == 101
        assert qsf.beta_grid(0.3).tolist()[-1] == 1.0
        with pytest.raises(ValueError):
            qsf.beta_grid(0)

    def test_flat_landscape(self):
        data = random_dataset(9)
        res = qsf.sls(data, np.zeros(data.n), np.zeros(data.n), 0.1)
        assert res.best_betas == qsf.beta_grid(0.1).tolist()

    def test_step_half(self):
        data = random_dataset(9)
        res = qsf.sls(data, *index_pair(data), step=0.5)
        assert [b for b, _ in res.per_beta] == [0.0, 0.5, 1.0]


def test_compare_keys_and_dominance():
    data = random_dataset(13)
    out = qsf.compare_qsf_sls(data, *index_pair(data), step=0.01)
    assert {"qsf_interval", "sls_best_points", "qsf_ms", "sls_ms", "speedup"} <= set(out)
    assert out["qsf_accuracy"] >= out["sls_accuracy"]
