import numpy as np
import pytest

from cobosim.collab import (
    CollaborationMatrix,
    Mode,
    SamplingKind,
    SamplingStrategy,
    calibrate_gamma,
    client_selection_pass,
    midpoint_alignment,
    sample_pairs,
    update_row_simplex,
    update_weight_box,
)
from cobosim.config import TrainConfig
from cobosim.errors import ConfigError, UsageError
from cobosim.operations.rounds import model_step
from cobosim.tasks import QuadraticTask, make_clustered_quadratics
from cobosim.tools.rng import substream


def _two_quadratics():
    return [QuadraticTask(1.0, [0.0, 0.0]), QuadraticTask(1.0, [2.0, 0.0])]


def test_alignment_far_from_both_centers_is_positive():
    X = np.array([[10.0, 0.0], [10.0, 0.0]])
    assert midpoint_alignment(0, 1, X, _two_quadratics(), 1, np.random.default_rng(0)) == 80.0


def test_alignment_between_centers_is_negative():
    X = np.array([[1.0, 0.0], [1.0, 0.0]])
    assert midpoint_alignment(0, 1, X, _two_quadratics(), 1, np.random.default_rng(0)) == -1.0


def test_alignment_of_identical_tasks_is_nonnegative():
    tasks = [QuadraticTask(1.3, [1.0, -1.0]), QuadraticTask(1.3, [1.0, -1.0])]
    rng = np.random.default_rng(3)
    for _ in range(20):
        X = rng.normal(scale=5.0, size=(2, 2))
        assert midpoint_alignment(0, 1, X, tasks, 1, rng) >= 0.0


def test_alignment_rejects_same_client():
    X = np.zeros((2, 2))
    with pytest.raises(UsageError):
        midpoint_alignment(1, 1, X, _two_quadratics(), 1, np.random.default_rng(0))


@pytest.mark.parametrize("w, alignment, gamma, expected", [
    (1.0, 80.0, 0.01, 1.0),
    (0.5, -100.0, 0.01, 0.0),
    (0.5, 10.0, 0.01, 0.6),
])
def test_update_weight_box(w, alignment, gamma, expected):
    assert update_weight_box(w, alignment, gamma) == pytest.approx(expected)


def test_update_row_simplex():
    row = np.array([0.2, 0.5, 0.3])
    np.testing.assert_allclose(update_row_simplex(row, np.full(3, 7.0), 0.1), row, atol=1e-12)
    np.testing.assert_allclose(update_row_simplex(row, np.array([1.0, 3.0, 2.0]), 1e6), [0.0, 1.0, 0.0])
    np.testing.assert_allclose(update_row_simplex(np.array([0.5, 0.5]), np.array([1.0, 0.0]), 0.2), [0.6, 0.4])


def test_update_row_simplex_shape_mismatch():
    with pytest.raises(UsageError):
        update_row_simplex(np.array([0.5, 0.5]), np.array([1.0, 0.0, 0.0]), 0.1)


def test_initial_matrices():
    box = CollaborationMatrix.initial(3, Mode.BOX)
    assert np.array_equal(box.entries, np.ones((3, 3)))
    simplex = CollaborationMatrix.initial(4, "simplex")
    assert simplex.mode is Mode.SIMPLEX
    np.testing.assert_allclose(simplex.entries.sum(axis=1), 1.0)
    box.check()
    simplex.check()


def test_matrix_check_rejects_violations():
    with pytest.raises(UsageError):
        CollaborationMatrix(np.array([[1.0, 0.2], [0.3, 1.0]]), Mode.BOX).check()
    with pytest.raises(UsageError):
        CollaborationMatrix(np.array([[1.0, 1.5], [1.5, 1.0]]), Mode.BOX).check()
    with pytest.raises(UsageError):
        CollaborationMatrix(np.array([[0.5, 0.6], [0.5, 0.5]]), Mode.SIMPLEX).check()


def test_matrix_json_layout():
    W = CollaborationMatrix(np.array([[1.0, 0.25], [0.25, 1.0]]), Mode.BOX)
    payload = W.to_json(7)
    assert payload == {"round": 7, "mode": "box", "n": 2, "entries": [1.0, 0.25, 0.25, 1.0]}
    assert np.array_equal(CollaborationMatrix.from_json(payload).entries, W.entries)


def test_every_pair_returns_all_pairs():
    strategy = SamplingStrategy(SamplingKind.EVERY_PAIR)
    for t in range(3):
        pairs = sample_pairs(strategy, t, 4, 10, substream(0, "pairs", t))
        assert pairs == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def test_constant_sampling_rate():
    strategy = SamplingStrategy(SamplingKind.CONSTANT, p=1 / 8)
    counts = np.array([len(sample_pairs(strategy, t, 8, 10_000, substream(0, "pairs", t))) for t in range(10_000)])
    stderr = np.sqrt(28 * (1 / 8) * (7 / 8)) / np.sqrt(len(counts))
    assert abs(counts.mean() - 3.5) < 3 * stderr


def test_constant_sampling_defaults_to_one_over_n():
    assert SamplingStrategy(SamplingKind.CONSTANT).probability(5, 8, 100) == 1 / 8


def test_mixed_switches_at_fraction_of_rounds():
    strategy = SamplingStrategy(SamplingKind.MIXED, switch_fraction=0.002)
    T, n = 10_000, 8
    c0 = T * (1 / n) * 0.002 * np.e
    assert strategy.probability(0, n, T) == 1 / n
    assert strategy.probability(19, n, T) == 1 / n
    assert strategy.probability(20, n, T) == pytest.approx(min(1.0, c0 / 21))
    assert strategy.probability(500, n, T) == pytest.approx(c0 / 501)


def test_time_dependent_probability_is_capped():
    strategy = SamplingStrategy(SamplingKind.TIME_DEPENDENT, c0=5.0)
    assert strategy.probability(0, 4, 100) == 1.0
    assert strategy.probability(9, 4, 100) == 0.5


def test_sampling_is_keyed_by_round():
    strategy = SamplingStrategy(SamplingKind.CONSTANT, p=0.3)
    first = sample_pairs(strategy, 42, 10, 100, substream(9, "pairs", 42))
    for t in range(5):
        sample_pairs(strategy, t, 10, 100, substream(9, "pairs", t))
    assert sample_pairs(strategy, 42, 10, 100, substream(9, "pairs", 42)) == first


def test_strategy_validation():
    with pytest.raises(ConfigError) as excinfo:
        SamplingStrategy(SamplingKind.CONSTANT, p=1.5)
    assert excinfo.value.key == "train.strategy.p"
    with pytest.raises(ConfigError):
        SamplingStrategy(SamplingKind.TIME_DEPENDENT, c0=0.0)
    with pytest.raises(ConfigError):
        SamplingStrategy(SamplingKind.MIXED, switch_fraction=1.0)


def test_selection_without_sampled_pairs_keeps_w():
    tasks = _two_quadratics()
    X = np.array([[1.0, 0.0], [1.0, 0.0]])
    W = CollaborationMatrix.initial(2, Mode.BOX)
    strategy = SamplingStrategy(SamplingKind.CONSTANT, p=0.0)
    updated = client_selection_pass(X, W, tasks, 0, strategy=strategy, gamma=1.0, b=1, T=10, seed=0)
    assert np.array_equal(updated.entries, W.entries)
    assert updated is not W


def test_selection_box_mode_is_symmetric_and_clamped():
    tasks, _ = make_clustered_quadratics(2, 2, 4, (0.9, 1.1), 10.0, 0.1, seed=1)
    X = np.random.default_rng(0).normal(scale=3.0, size=(4, 4))
    W = CollaborationMatrix.initial(4, Mode.BOX)
    updated = client_selection_pass(X, W, tasks, 0, strategy=SamplingStrategy(), gamma=0.05, b=1, T=10, seed=0)
    updated.check()
    assert np.array_equal(updated.entries, updated.entries.T)


def test_selection_point_b_disconnects():
    tasks = _two_quadratics()
    X = np.array([[1.0, 0.0], [1.0, 0.0]])
    W = CollaborationMatrix.initial(2, Mode.BOX)
    updated = client_selection_pass(X, W, tasks, 0, strategy=SamplingStrategy(), gamma=2.0, b=1, T=10, seed=0)
    assert updated.entries[0, 1] == updated.entries[1, 0] == 0.0


def test_same_center_weights_stay_one():
    tasks = [QuadraticTask(0.8, [1.0, 2.0]), QuadraticTask(1.2, [1.0, 2.0])]
    W = CollaborationMatrix.initial(2, Mode.BOX)
    rng = np.random.default_rng(4)
    for t in range(50):
        X = rng.normal(scale=4.0, size=(2, 2))
        W = client_selection_pass(X, W, tasks, t, strategy=SamplingStrategy(), gamma=0.3, b=1, T=50, seed=0)
        assert W.entries[0, 1] == 1.0


def test_selection_simplex_rows_stay_on_simplex():
    tasks, _ = make_clustered_quadratics(2, 2, 4, (0.9, 1.1), 10.0, 0.1, seed=2)
    X = np.random.default_rng(1).normal(scale=3.0, size=(4, 4))
    W = CollaborationMatrix.initial(4, Mode.SIMPLEX)
    for t in range(5):
        W = client_selection_pass(X, W, tasks, t, strategy=SamplingStrategy(), gamma=0.01, b=1, T=5, seed=0)
        W.check()


def test_selection_simplex_leaves_untouched_rows():
    tasks = [QuadraticTask(1.0, [float(k), 0.0]) for k in range(3)]
    X = np.zeros((3, 2))
    W = CollaborationMatrix.initial(3, Mode.SIMPLEX)
    strategy = SamplingStrategy(SamplingKind.CONSTANT, p=0.5)
    # find a round where some client has no sampled pair
    for t in range(50):
        pairs = sample_pairs(strategy, t, 3, 50, substream(0, "pairs", t))
        touched = {i for pair in pairs for i in pair}
        if len(touched) == 2:
            break
    else:
        pytest.skip("no round with exactly one sampled pair")
    updated = client_selection_pass(X, W, tasks, t, strategy=strategy, gamma=0.1, b=1, T=50, seed=0)
    (untouched,) = set(range(3)) - touched
    assert np.array_equal(updated.entries[untouched], W.entries[untouched])


def test_single_client_selection_is_noop():
    W = CollaborationMatrix.initial(1, Mode.BOX)
    updated = client_selection_pass(np.zeros((1, 2)), W, [QuadraticTask(1.0, [0.0, 0.0])], 0,
                                    strategy=SamplingStrategy(), gamma=1.0, b=1, T=1, seed=0)
    assert np.array_equal(updated.entries, W.entries)


def test_calibrate_gamma():
    tasks = _two_quadratics()
    X = np.array([[10.0, 0.0], [10.0, 0.0]])
    assert calibrate_gamma(X, tasks, 1, seed=0, fallback=1e-3) == pytest.approx(1 / 160)


def test_calibrate_gamma_falls_back_on_zero_alignment():
    tasks = [QuadraticTask(1.0, [0.0]), QuadraticTask(1.0, [0.0])]
    assert calibrate_gamma(np.zeros((2, 1)), tasks, 1, seed=0, fallback=0.123) == 0.123


def test_cross_cluster_weights_reach_zero_after_models_converge():
    centers = [[0.0, 0.0], [0.0, 0.0], [4.0, 0.0], [4.0, 0.0]]
    tasks = [QuadraticTask(a, mu) for a, mu in zip((1.0, 1.2, 0.9, 1.1), centers)]
    cfg = TrainConfig(eta=0.1, rho=0.5, gamma=0.05, T=600, b=1)
    X = np.tile([0.0, 40.0], (4, 1))
    W = CollaborationMatrix.initial(4, Mode.BOX)
    cross = [(0, 2), (0, 3), (1, 2), (1, 3)]

    zero_since = None
    for t in range(cfg.T):
        W = client_selection_pass(X, W, tasks, t, strategy=cfg.strategy, gamma=cfg.gamma, b=cfg.b, T=cfg.T, seed=0)
        X = model_step(X, W, tasks, cfg, t)
        if t == 0:
            # far from both centers the gradients still agree
            assert all(W.entries[i, j] == 1.0 for i, j in cross)
        at_zero = all(W.entries[i, j] == 0.0 for i, j in cross)
        if at_zero and zero_since is None:
            zero_since = t
        elif not at_zero:
            zero_since = None

    assert zero_since is not None and zero_since < cfg.T // 2
    assert W.entries[0, 1] == W.entries[2, 3] == 1.0
    np.testing.assert_allclose(X[:2], np.zeros((2, 2)), atol=1e-8)
    np.testing.assert_allclose(X[2:], np.tile([4.0, 0.0], (2, 1)), atol=1e-8)
