import numpy as np
import pytest

from airsum.bounds import convergence_rhs, quantization_variance
from airsum.codec import quantized_average
from airsum.config import ExperimentConfig
from airsum.datasets import partition
from airsum.federated import (
    LearnerState,
    aggregate,
    build_dataset,
    evaluate,
    frame_slices,
    local_gradient,
    train,
    train_with_state,
)
from airsum.learners import build_learner
from airsum.power import select_beta
from airsum.schemas import ConvergenceInput, LearnerSpec, PowerScaling, QuantizerSpec, SystemConfig
from airsum.streams import derive_stream


def _setup(K=4, N=10, q=16, sigma_z2=0.0, Nr=1, delta_g=2.0, sizes=None):
    cfg = SystemConfig(K=K, N=N, Nr=Nr, q=q, sigma_z2=sigma_z2)
    spec = QuantizerSpec(q=q, delta_g=delta_g)
    scaling = select_beta(sizes or [5] * K, cfg)
    return cfg, spec, scaling


@pytest.mark.parametrize(
    "n, frame_size, expected",
    [(10, None, [(0, 10)]), (10, 4, [(0, 4), (4, 8), (8, 10)]), (3, 5, [(0, 3)]), (4, 1, [(0, 1), (1, 2), (2, 3), (3, 4)])],
)
def test_frame_slices(n, frame_size, expected):
    assert [(s.start, s.stop) for s in frame_slices(n, frame_size)] == expected


def test_frame_slices_invalid():
    with pytest.raises(ValueError):
        frame_slices(10, 0)


def test_aggregate_ideal(rng: np.random.Generator):
    cfg, spec, scaling = _setup()
    gradients = rng.normal(size=(4, 10))
    result = aggregate(gradients, "ideal", cfg, spec, scaling, rng)
    assert np.array_equal(result.g_hat, gradients.mean(axis=0))
    assert result.grad_mse == 0.0


def test_noiseless_digital_path_is_the_quantized_average(rng: np.random.Generator):
    cfg, spec, scaling = _setup(K=20, N=100, q=64)
    for _ in range(1000):
        gradients = rng.uniform(-2, 2, size=(20, 100))
        result = aggregate(gradients, "awgn", cfg, spec, scaling, rng)
        assert np.array_equal(result.g_hat, quantized_average(gradients, spec))


def test_noiseless_digital_path_is_independent_of_framing(rng: np.random.Generator):
    cfg, spec, scaling = _setup(K=3, N=4, q=64)
    gradients = rng.uniform(-3, 3, size=(3, 10))
    whole = aggregate(gradients, "awgn", cfg, spec, scaling, rng)
    framed = aggregate(gradients, "awgn", cfg, spec, scaling, lambda i: derive_stream(0, "frames", 0, 0, i), 4)
    assert np.array_equal(whole.g_hat, framed.g_hat)
    assert whole.clipped_fraction == framed.clipped_fraction > 0


def test_digital_error_shrinks_with_level_count(rng: np.random.Generator):
    gradients = rng.uniform(-1, 1, size=(5, 200))
    errors = []
    for q in (4, 16, 64, 256):
        cfg, spec, scaling = _setup(K=5, N=200, q=q, delta_g=1.0)
        result = aggregate(gradients, "awgn", cfg, spec, scaling, rng)
        errors.append(np.max(np.abs(result.g_hat - result.g_ideal)))
        assert errors[-1] <= 1.0 / q + 1e-12
    assert all(a > b for a, b in zip(errors, errors[1:]))


def test_grad_mse_is_the_recomputed_squared_error(rng: np.random.Generator):
    cfg, spec, scaling = _setup(K=6, N=30, q=64, sigma_z2=1.0, Nr=4)
    gradients = rng.uniform(-2, 2, size=(6, 30))
    for mode in ("awgn", "fading", "analog-awgn", "analog-fading"):
        result = aggregate(gradients, mode, cfg, spec, scaling, rng)
        assert result.grad_mse == pytest.approx(float(np.sum((gradients.mean(axis=0) - result.g_hat) ** 2)))


@pytest.mark.slow
def test_fading_pipeline_stays_under_the_fading_bound(rng: np.random.Generator):
    import math

    from airsum.bounds import mse_fading_bound
    from airsum.power import lattice_noise_gain
    from airsum.schemas import FadingBoundInput

    cfg, spec, scaling = _setup(K=20, N=100, q=256, sigma_z2=1.0, Nr=800, sizes=[1] * 20)
    bound = mse_fading_bound(
        FadingBoundInput(
            gamma=20 * math.sqrt(2) * 7.5, sigma_h=1.0, sigma_z=1.0, K=20, N=100, q=256, Nr=800,
            noise_gain=lattice_noise_gain(scaling),
        ),
        spec.delta_g,
    ).total
    for _ in range(5):
        gradients = rng.uniform(-2, 2, size=(20, 100))
        assert aggregate(gradients, "fading", cfg, spec, scaling, rng).grad_mse <= bound


def test_analog_noiseless_paths(rng: np.random.Generator):
    cfg, spec, _ = _setup(K=2, N=3, delta_g=1.0)
    gradients = np.array([[0.5, -3.0, 0.2], [0.1, 0.4, 2.0]])
    scaling = select_beta([1, 3], cfg, peak_energy=1.0)
    result = aggregate(gradients, "analog-awgn", cfg, spec, scaling, rng)
    clipped = np.clip(gradients, -1.0, 1.0)
    assert np.allclose(result.g_hat, (clipped[0] + 3 * clipped[1]) / 4, rtol=0, atol=1e-12)
    assert result.clipped_fraction == pytest.approx(2 / 6)


def test_aggregate_errors(rng: np.random.Generator):
    cfg, spec, scaling = _setup(K=2, N=3)
    with pytest.raises(ValueError):
        aggregate(np.zeros((3, 3)), "awgn", cfg, spec, scaling, rng)
    with pytest.raises(ValueError):
        aggregate(np.zeros((2, 3)), "awgn", cfg, spec, PowerScaling(beta=1.0, dataset_sizes=(1, 1, 1)), rng)
    with pytest.raises(ValueError):
        aggregate(np.zeros((2, 3)), "awgn", cfg, spec, PowerScaling(beta=1.0, dataset_sizes=(1, 2)), rng)
    with pytest.raises(ValueError):
        aggregate(np.zeros((2, 3)), "carrier-pigeon", cfg, spec, scaling, rng)


def test_local_gradient_quadratic_full_batch(rng: np.random.Generator):
    learner = build_learner(LearnerSpec(family="quadratic", input_dim=3))
    x = rng.normal(size=(8, 3))
    state = LearnerState(w=np.array([1.0, 2.0, 3.0]))
    g = local_gradient(learner, state, x, np.zeros(8), None, 0, 0.1, rng)
    assert np.allclose(g, state.w - x.mean(axis=0), rtol=0, atol=1e-12)


def test_one_full_batch_epoch_is_the_plain_gradient(rng: np.random.Generator):
    learner = build_learner(LearnerSpec(family="softmax-regression", input_dim=4, class_count=3))
    x = rng.normal(size=(12, 4))
    y = rng.integers(0, 3, size=12)
    state = LearnerState(w=rng.normal(size=learner.n_params))
    plain = local_gradient(learner, state, x, y, None, 0, 0.3, rng)
    one_epoch = local_gradient(learner, state, x, y, None, 1, 0.3, rng)
    assert np.allclose(plain, one_epoch, rtol=0, atol=1e-12)


def test_local_gradient_minibatch_and_epochs_are_seeded(rng: np.random.Generator):
    learner = build_learner(LearnerSpec(family="softmax-regression", input_dim=4, class_count=3))
    x = rng.normal(size=(20, 4))
    y = rng.integers(0, 3, size=20)
    state = LearnerState(w=np.zeros(learner.n_params))
    for epochs in (0, 3):
        a = local_gradient(learner, state, x, y, 5, epochs, 0.1, np.random.default_rng(9))
        b = local_gradient(learner, state, x, y, 5, epochs, 0.1, np.random.default_rng(9))
        assert np.array_equal(a, b)
        assert a.shape == (learner.n_params,)


def test_local_gradient_errors(rng: np.random.Generator):
    learner = build_learner(LearnerSpec(family="quadratic", input_dim=2))
    state = LearnerState(w=np.zeros(2))
    with pytest.raises(ValueError):
        local_gradient(learner, state, np.zeros((0, 2)), np.zeros(0), None, 0, 0.1, rng)
    with pytest.raises(ValueError):
        local_gradient(learner, state, np.zeros((3, 2)), np.zeros(3), None, -1, 0.1, rng)


def test_device_gradients_average_to_the_global_gradient(rng: np.random.Generator):
    exp = ExperimentConfig(K=10, classes=3, feature_dim=6, samples_per_class=250)
    dataset = build_dataset(exp)
    learner = build_learner(LearnerSpec(family="softmax-regression", input_dim=6, class_count=3))
    split = partition(dataset, 10, "iid", rng)
    w = rng.normal(size=learner.n_params)
    device = [learner.loss_and_grad(w, dataset.x_train[i], dataset.y_train[i])[1] for i in split.indices]
    full = learner.loss_and_grad(w, dataset.x_train, dataset.y_train)[1]
    assert np.allclose(np.mean(device, axis=0), full, rtol=0, atol=1e-12)


def test_evaluate_splits():
    exp = ExperimentConfig(classes=2, feature_dim=2, samples_per_class=10)
    dataset = build_dataset(exp)
    learner = build_learner(LearnerSpec(family="softmax-regression", input_dim=2, class_count=2))
    state = LearnerState(w=np.zeros(learner.n_params))
    loss, accuracy = evaluate(learner, state, dataset)
    assert loss == pytest.approx(np.log(2))
    assert 0 <= accuracy <= 1
    assert evaluate(learner, state, dataset, split="train")[0] == pytest.approx(np.log(2))
    with pytest.raises(ValueError):
        evaluate(learner, state, dataset, split="validation")


def test_build_dataset_idx_needs_directory():
    with pytest.raises(ValueError):
        build_dataset(ExperimentConfig(dataset="idx"))


def test_zero_rounds_is_empty():
    exp = ExperimentConfig(rounds=0, aggregator="ideal")
    metrics, state = train_with_state(exp)
    assert metrics == []
    assert state.round == 0
    assert np.all(state.w == 0)


def test_ideal_training_learns_separable_data():
    exp = ExperimentConfig(aggregator="ideal", classes=2, separation=10.0, rounds=100, K=20)
    metrics = train(exp)
    assert len(metrics) == 100
    assert all(m.grad_mse == 0.0 for m in metrics)
    assert metrics[-1].test_accuracy >= 0.99
    early = np.mean([m.test_accuracy for m in metrics[:10]])
    late = np.mean([m.test_accuracy for m in metrics[-10:]])
    assert late >= early


def test_training_is_deterministic():
    exp = ExperimentConfig(aggregator="fading", rounds=5, K=10, Nr=20, q=64, delta_g=1.0, frame_size=25)
    first = train(exp, trial=2)
    second = train(exp, trial=2)
    assert [m.model_dump() for m in first] == [m.model_dump() for m in second]
    other = train(exp, trial=3)
    assert [m.train_loss for m in other] != [m.train_loss for m in first]


def test_training_rejects_unequal_shards_for_digital_aggregation():
    exp = ExperimentConfig(aggregator="awgn", rounds=1, K=7, samples_per_class=100)
    with pytest.raises(ValueError):
        train(exp)
    analog = ExperimentConfig(aggregator="analog-awgn", rounds=1, K=7, samples_per_class=100)
    assert len(train(analog)) == 1


def test_training_rejects_divergence():
    exp = ExperimentConfig(aggregator="ideal", model="quadratic", eta=100.0, rounds=400, feature_dim=3)
    with pytest.raises(ValueError):
        train(exp)


@pytest.mark.parametrize("eta", [0.1, 0.5])
def test_quadratic_training_respects_the_convergence_bound(eta: float):
    exp = ExperimentConfig(
        model="quadratic", aggregator="fading", K=20, Nr=800, q=256, p_max=10.0, delta_g=2.0,
        classes=3, feature_dim=5, samples_per_class=1000, eta=eta, rounds=100,
    )
    metrics = train(exp)

    dataset = build_dataset(exp)
    split = partition(dataset, exp.K, "iid", derive_stream(exp.seed, "train/partition", 0))
    mean = dataset.x_train.mean(axis=0)
    theta_bar = float(np.mean([np.sum((dataset.x_train[i].mean(axis=0) - mean) ** 2) for i in split.indices]))
    rhs = convergence_rhs(
        ConvergenceInput(
            eta=eta,
            L=1.0,
            T=exp.rounds,
            loss_gap=0.5 * float(np.sum(mean ** 2)),
            sigma_ch2=float(np.mean([m.grad_mse for m in metrics])),
            sigma_q2=quantization_variance(exp.feature_dim, exp.K, exp.q, exp.delta_g),
            theta_bar=theta_bar,
        )
    )
    measured = float(np.mean([m.grad_norm2 for m in metrics]))
    assert measured <= rhs
    assert metrics[0].grad_norm2 == pytest.approx(float(np.sum(mean ** 2)))


def test_label_skew_training_with_digital_aggregation():
    exp = ExperimentConfig(
        aggregator="awgn", data_mode="label-skew", shards=2, rounds=2, K=10, classes=5, samples_per_class=100,
    )
    dataset = build_dataset(exp)
    split = partition(dataset, exp.K, "label-skew", derive_stream(exp.seed, "train/partition", 0))
    assert split.sizes == [40] * 10
    assert max(len(np.unique(dataset.y_train[idx])) for idx in split.indices) <= 2
    assert len(train(exp)) == 2
