import math

import numpy as np
import pytest

from src.autodiff import Tape, Tensor, grad_check
from src.constants import FUTURE_STEPS, LOG_2PI
from src.errors import ConfigurationError, NumericFaultError, ShapeError
from src.model import GaussianTrajectory, TrajectoryModel, combined_loss, loss_terms, nll
from src.schemas import LossWeights, ModelConfig


def bc_dist(mu, log_sigma):
    return GaussianTrajectory("bc", Tensor(mu), log_sigma=Tensor(log_sigma))


def micro_cfg(**overrides):
    values = dict(
        backbone="nf18", attention=True, head="bc", hidden_width=6, raster_size=8, channels=2,
        base_width=2, stage_depths=[1, 1, 1, 1], attention_window=1, attention_heads=2,
    )
    values.update(overrides)
    return ModelConfig(**values)


# --- ModelConfig -----------------------------------------------------------------

def test_model_config_resolves_aliases_and_labels():
    cfg = ModelConfig(backbone="NFNet18", raster_size=64)
    assert cfg.backbone == "nf18"
    assert cfg.label == "BC + NF micro-18 + Attention + ADE Loss"
    assert ModelConfig(backbone="nf50").depths == [3, 4, 6, 3]


def test_model_config_rejects_all_zero_weights_and_bad_window():
    with pytest.raises(ValueError):
        ModelConfig(lambda_nll=0, lambda_ade=0, lambda_fde=0)
    with pytest.raises(ValueError):
        ModelConfig(raster_size=64, attention_window=3)


# --- encode ----------------------------------------------------------------------

def test_encode_shapes_and_identical_rows(tiny_model_cfg, rng):
    model = TrajectoryModel(tiny_model_cfg, seed=0)
    raster = rng.random((1, tiny_model_cfg.channels, 16, 16))
    z = model.encode(np.concatenate([raster, raster]))
    assert z.shape == (2, tiny_model_cfg.hidden_width)
    np.testing.assert_allclose(z.data[0], z.data[1], atol=1e-12)


def test_encode_identical_rows_single_precision(tiny_model_cfg, rng):
    model = TrajectoryModel(tiny_model_cfg, seed=0, dtype=np.float32)
    raster = rng.random((1, tiny_model_cfg.channels, 16, 16)).astype(np.float32)
    z = model.encode(np.concatenate([raster, raster]))
    assert z.dtype == np.float32
    np.testing.assert_allclose(z.data[0], z.data[1], atol=1e-7)


@pytest.mark.parametrize("backbone", ["nf18", "dws-baseline"])
def test_zero_raster_with_zero_biases_encodes_to_zero(backbone):
    model = TrajectoryModel(micro_cfg(backbone=backbone), seed=1)
    z = model.encode(np.zeros((1, 2, 8, 8)))
    np.testing.assert_allclose(z.data, 0.0, atol=1e-12)


def test_encode_rejects_wrong_raster_shape(tiny_model_cfg):
    model = TrajectoryModel(tiny_model_cfg)
    with pytest.raises(ShapeError):
        model.encode(np.zeros((1, 3, 16, 16)))


# --- decode ----------------------------------------------------------------------

def test_mean_decode_is_deterministic(tiny_model_cfg, rng):
    model = TrajectoryModel(tiny_model_cfg, seed=2)
    x = rng.random((2, tiny_model_cfg.channels, 16, 16))
    _, a = model.predict(x, mode="mean")
    _, b = model.predict(x, mode="mean")
    assert a.shape == (2, FUTURE_STEPS, 2)
    assert np.array_equal(a.data, b.data)


def test_sample_decode_is_seeded(tiny_model_cfg, rng):
    model = TrajectoryModel(tiny_model_cfg, seed=2)
    x = rng.random((1, tiny_model_cfg.channels, 16, 16))
    _, a = model.predict(x, mode="sample", seed=5)
    _, b = model.predict(x, mode="sample", seed=5)
    _, c = model.predict(x, mode="sample", seed=6)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)


def test_zero_head_weights_give_constant_mean(tiny_model_cfg, rng):
    model = TrajectoryModel(tiny_model_cfg, seed=3)
    model.head.weight.data[:] = 0.0
    model.head.bias.data[:] = [1.5, -0.5, 0.0, 0.0]
    dist, path = model.predict(rng.random((2, tiny_model_cfg.channels, 16, 16)))
    np.testing.assert_array_equal(dist.mu.data[..., 0], 1.5)
    np.testing.assert_array_equal(dist.mu.data[..., 1], -0.5)
    np.testing.assert_array_equal(path.data, dist.mu.data)


def test_teacher_forcing_needs_ground_truth(tiny_model_cfg):
    model = TrajectoryModel(tiny_model_cfg)
    z0 = Tensor(np.zeros((1, tiny_model_cfg.hidden_width)))
    with pytest.raises(ConfigurationError):
        model.decode(z0, mode="teacher_forced")
    with pytest.raises(ConfigurationError):
        model.decode(z0, mode="beam")


def test_teacher_forcing_reads_ground_truth_only_through_previous_step(tiny_model_cfg, rng):
    model = TrajectoryModel(tiny_model_cfg, seed=4)
    z0 = Tensor(rng.standard_normal((1, tiny_model_cfg.hidden_width)))
    gt = rng.standard_normal((1, FUTURE_STEPS, 2))
    cut = gt.copy()
    k = 10
    cut[:, k:] = 0.0
    full, _ = model.decode(z0, mode="teacher_forced", ground_truth=gt)
    partial, _ = model.decode(z0, mode="teacher_forced", ground_truth=cut)
    # step t consumes y_{t-1}, so steps 0..k are unaffected by zeroing from k on
    np.testing.assert_array_equal(full.mu.data[:, :k + 1], partial.mu.data[:, :k + 1])
    assert not np.array_equal(full.mu.data[:, k + 1:], partial.mu.data[:, k + 1:])


def test_log_scales_are_clamped(tiny_model_cfg, rng):
    model = TrajectoryModel(tiny_model_cfg, seed=3)
    model.head.bias.data[2:] = 50.0
    dist, _ = model.predict(rng.random((1, tiny_model_cfg.channels, 16, 16)))
    assert dist.log_sigma.data.max() == 5.0


def test_dim_marginal_std_and_sampling(tiny_model_cfg, rng):
    cfg = tiny_model_cfg.model_copy(update={"head": "dim"})
    model = TrajectoryModel(cfg, seed=0)
    dist, path = model.predict(rng.random((1, cfg.channels, 16, 16)), mode="sample", seed=1)
    std = dist.marginal_std()
    assert std.shape == (1, FUTURE_STEPS, 2) and np.all(std > 0)
    assert np.all(np.isfinite(path.data))


def test_state_dict_round_trip_and_snapshot(tiny_model_cfg):
    a = TrajectoryModel(tiny_model_cfg, seed=1)
    b = TrajectoryModel(tiny_model_cfg, seed=2)
    b.load_state(a.state_dict())
    for (name, pa), (_, pb) in zip(a.named_parameters(), b.named_parameters()):
        assert np.array_equal(pa.data, pb.data), name
    twin = a.snapshot()
    twin.head.bias.data[:] = 9.0
    assert not np.array_equal(a.head.bias.data, twin.head.bias.data)


# --- nll / combined_loss ---------------------------------------------------------

def test_bc_nll_unit_sigma_single_step():
    dist = bc_dist(np.zeros((1, 1, 2)), np.zeros((1, 1, 2)))
    assert nll(dist, np.zeros((1, 1, 2))).data[0] == pytest.approx(LOG_2PI, abs=1e-12)
    assert LOG_2PI == pytest.approx(1.837877, abs=1e-6)


def test_bc_nll_entropy_floor(rng):
    mu = rng.standard_normal((2, 4, 2))
    log_sigma = rng.uniform(-1, 1, (2, 4, 2))
    expected = np.sum(0.5 * LOG_2PI + log_sigma, axis=(1, 2))
    np.testing.assert_allclose(nll(bc_dist(mu, log_sigma), mu).data, expected, atol=1e-12)


def test_nll_rejects_non_finite_scales(rng):
    mu = rng.standard_normal((1, 3, 2))
    log_sigma = np.zeros((1, 3, 2))
    log_sigma[0, 1, 0] = np.nan
    with pytest.raises(NumericFaultError):
        nll(bc_dist(mu, log_sigma), mu)
    off = np.zeros((1, 3, 1))
    off[0, 2, 0] = np.inf
    dim = GaussianTrajectory("dim", Tensor(mu), log_diag=Tensor(np.zeros((1, 3, 2))), offdiag=Tensor(off))
    with pytest.raises(NumericFaultError):
        nll(dim, mu)


def test_dim_identity_factor_matches_bc(rng):
    mu = rng.standard_normal((2, 5, 2))
    y = rng.standard_normal((2, 5, 2))
    dim = GaussianTrajectory("dim", Tensor(mu), log_diag=Tensor(np.zeros((2, 5, 2))), offdiag=Tensor(np.zeros((2, 5, 1))))
    bc = bc_dist(mu, np.zeros((2, 5, 2)))
    np.testing.assert_allclose(nll(dim, y).data, nll(bc, y).data, atol=1e-10)


def test_dim_nll_matches_dense_gaussian(rng):
    mu = rng.standard_normal((1, 3, 2))
    y = rng.standard_normal((1, 3, 2))
    log_diag = rng.uniform(-0.5, 0.5, (1, 3, 2))
    off = rng.standard_normal((1, 3, 1))
    dist = GaussianTrajectory("dim", Tensor(mu), log_diag=Tensor(log_diag), offdiag=Tensor(off))
    expected = 0.0
    for t in range(3):
        L = np.array([[math.exp(log_diag[0, t, 0]), 0.0], [off[0, t, 0], math.exp(log_diag[0, t, 1])]])
        cov = L @ L.T
        r = y[0, t] - mu[0, t]
        expected += LOG_2PI + 0.5 * (math.log(np.linalg.det(cov)) + r @ np.linalg.solve(cov, r))
    assert nll(dist, y).data[0] == pytest.approx(expected, abs=1e-10)


def test_perfect_prediction_loss_is_t_log_2pi():
    y = np.random.default_rng(0).standard_normal((3, FUTURE_STEPS, 2))
    dist = bc_dist(y, np.zeros_like(y))
    loss = combined_loss(dist, y, y, LossWeights(nll=1, ade=1, fde=1))
    assert loss.item() == pytest.approx(FUTURE_STEPS * LOG_2PI, abs=1e-6)
    assert loss.item() == pytest.approx(45.947, abs=1e-3)


def test_nll_only_weights_equal_nll(rng):
    y = rng.standard_normal((2, FUTURE_STEPS, 2))
    dist = bc_dist(rng.standard_normal(y.shape), rng.uniform(-1, 1, y.shape))
    realized = rng.standard_normal(y.shape)
    loss = combined_loss(dist, realized, y, LossWeights(nll=1, ade=0, fde=0))
    assert loss.item() == pytest.approx(float(np.mean(nll(dist, y).data)), abs=1e-12)


def test_unit_offset_loss_is_26():
    y = np.zeros((1, FUTURE_STEPS, 2))
    realized = y + np.array([1.0, 0.0])
    dist = bc_dist(y, np.zeros_like(y))
    assert combined_loss(dist, realized, y, LossWeights(nll=0, ade=1, fde=1)).item() == 26.0


def test_distance_terms_are_translation_invariant(rng):
    y = rng.standard_normal((2, FUTURE_STEPS, 2))
    realized = rng.standard_normal(y.shape)
    dist = bc_dist(y, np.zeros_like(y))
    shift = np.array([3.0, -7.0])
    a = loss_terms(dist, realized, y, LossWeights())
    b = loss_terms(dist, realized + shift, y + shift, LossWeights())
    assert a.ade_term.item() == pytest.approx(b.ade_term.item(), abs=1e-10)
    assert a.fde_term.item() == pytest.approx(b.fde_term.item(), abs=1e-10)
    assert a.ade_term.item() >= 0 and a.fde_term.item() >= 0


def test_all_zero_weights_are_a_configuration_error():
    y = np.zeros((1, 2, 2))
    with pytest.raises(ConfigurationError):
        loss_terms(bc_dist(y, y), y, y, LossWeights(nll=0, ade=0, fde=0))


def test_loss_gradient_on_toy_trajectory(rng):
    y = rng.standard_normal((1, 2, 2))
    log_sigma = Tensor(rng.uniform(-0.5, 0.5, (1, 2, 2)))

    def f(mu):
        dist = GaussianTrajectory("bc", mu, log_sigma=log_sigma)
        return combined_loss(dist, mu, y, LossWeights())

    report = grad_check(f, rng.standard_normal((1, 2, 2)), tol=1e-4)
    assert report.passed, report.failures


@pytest.mark.parametrize("head", ["bc", "dim"])
def test_full_micro_model_gradient(head, rng):
    cfg = micro_cfg(head=head)
    model = TrajectoryModel(cfg, seed=11)
    model.head.weight.data *= 0.3
    y = rng.standard_normal((1, FUTURE_STEPS, 2)) * 0.5

    def f(x):
        dist, _ = model.decode(model.encode(x), mode="teacher_forced", ground_truth=y)
        return combined_loss(dist, dist.mu, y, cfg.loss_weights)

    report = grad_check(f, rng.random((1, 2, 8, 8)), tol=1e-3, atol=1e-8, max_coords=24, seed=3)
    assert report.passed, report.failures


def test_parameter_gradients_flow_to_every_tensor(tiny_model_cfg, rng):
    model = TrajectoryModel(tiny_model_cfg, seed=0)
    x = rng.random((2, tiny_model_cfg.channels, 16, 16))
    y = rng.standard_normal((2, FUTURE_STEPS, 2))
    with Tape() as tape:
        dist, _ = model.decode(model.encode(x), mode="teacher_forced", ground_truth=y)
        tape.backward(combined_loss(dist, dist.mu, y, tiny_model_cfg.loss_weights))
    missing = [name for name, p in model.named_parameters() if p.grad is None]
    assert missing == []
