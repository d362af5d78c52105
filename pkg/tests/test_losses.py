import numpy as np
import pytest

from motionattn.errors import ShapeError
from motionattn.losses import (
    DiscriminatorWeights,
    LossWeights,
    adversarial_losses,
    discriminator_scores,
    loss_supervised,
)
from motionattn.tensor import Tensor, backward, grad_check


def tensors(seed, t=4, j=3):
    rng = np.random.default_rng(seed)
    theta = Tensor(rng.uniform(-1, 1, (t, 85)))
    j3d = Tensor(rng.uniform(-1, 1, (t, 3 * j)))
    j2d = Tensor(rng.uniform(-1, 1, (t, 2 * j)))
    return theta, j3d, j2d


def zero_disc(input_dim, score=0.0):
    disc = DiscriminatorWeights.init(input_dim, seed=0, hidden=(8, 4))
    for p in disc.parameters().values():
        p.data[:] = 0.0
    disc.b3.data[:] = score
    return disc


class TestSupervised:
    def test_zero_on_exact_match(self):
        pred = tensors(0)
        gt = tuple(Tensor(p.data.copy()) for p in pred)
        total, breakdown = loss_supervised(*pred, *gt, LossWeights())
        assert total.item() == 0.0
        assert all(v == 0.0 for v in breakdown.values())

    def test_single_joint_offset_reduction_convention(self):
        t, j = 5, 4
        gt_theta, gt_j3d, gt_j2d = tensors(1, t, j)
        pred_j3d = Tensor(gt_j3d.data.copy())
        pred_j3d.data[2, 3:6] += [3.0, 4.0, 0.0]
        lw = LossWeights(w_params=0.0, w_3d=1.0, w_2d=0.0)
        total, breakdown = loss_supervised(
            Tensor(gt_theta.data.copy()), pred_j3d, Tensor(gt_j2d.data.copy()),
            gt_theta, gt_j3d, gt_j2d, lw,
        )
        assert abs(total.item() - 25.0 / (3 * j * t)) < 1e-12
        assert breakdown["params"] == 0.0

    def test_disabled_term_has_no_effect(self):
        pred = tensors(2)
        gt = tuple(Tensor(p.data.copy()) for p in pred)
        lw = LossWeights(w_2d=0.0)
        base, _ = loss_supervised(*pred, *gt, lw)
        perturbed = (pred[0], pred[1], Tensor(pred[2].data + 10.0))
        bumped, _ = loss_supervised(*perturbed, *gt, lw)
        assert base.item() == bumped.item() == 0.0

    def test_shape_mismatch(self):
        pred = tensors(3)
        gt = tensors(4, t=5)
        with pytest.raises(ShapeError):
            loss_supervised(*pred, *gt, LossWeights())

    def test_nonnegative_and_zero_iff_equal(self):
        pred = tensors(5)
        gt = tensors(6)
        total, _ = loss_supervised(*pred, *gt, LossWeights())
        assert total.item() > 0.0

    def test_rejects_negative_weight(self):
        with pytest.raises(ShapeError):
            LossWeights(w_3d=-0.1)

    def test_grad_check(self):
        for seed in range(5):
            pred = tensors(seed + 10, t=3, j=2)
            gt = tensors(seed + 20, t=3, j=2)
            lw = LossWeights(w_params=0.7, w_3d=1.3, w_2d=0.4)
            report = grad_check(
                lambda: loss_supervised(*pred, *gt, lw)[0], list(pred)
            )
            assert report.passed, (seed, report.max_rel_err)


def pose_batch(seed, n, t=4):
    rng = np.random.default_rng(seed)
    return [Tensor(rng.uniform(-1, 1, (t, 72))) for _ in range(n)]


class TestAdversarial:
    def test_fake_scored_one_zeroes_generator_loss(self):
        disc = zero_disc(4 * 72, score=1.0)
        gen, _ = adversarial_losses(disc, pose_batch(0, 2), pose_batch(1, 3))
        assert gen.item() == 0.0

    def test_perfect_discriminator_zeroes_disc_loss(self):
        t = 2
        disc = DiscriminatorWeights.init(t * 72, seed=0, hidden=(4, 4))
        for p in disc.parameters().values():
            p.data[:] = 0.0
        # wire score = first input entry, so crafted batches hit exactly 1 / 0
        disc.w1.data[0, 0] = 1.0
        disc.w2.data[0, 0] = 1.0
        disc.w3.data[0, 0] = 1.0
        real = [Tensor(np.zeros((t, 72)))]
        real[0].data[0, 0] = 1.0
        fake = [Tensor(np.zeros((t, 72)))]
        scores_real = discriminator_scores(disc, real)
        scores_fake = discriminator_scores(disc, fake)
        assert scores_real.item() == 1.0 and scores_fake.item() == 0.0
        _, disc_loss = adversarial_losses(disc, real, fake)
        assert disc_loss.item() == 0.0

    def test_constant_zero_discriminator(self):
        disc = zero_disc(3 * 72, score=0.0)
        gen, disc_loss = adversarial_losses(disc, pose_batch(2, 2, t=3), pose_batch(3, 2, t=3))
        assert gen.item() == 1.0
        assert disc_loss.item() == 1.0

    def test_empty_batch_rejected(self):
        disc = zero_disc(4 * 72)
        with pytest.raises(ShapeError):
            adversarial_losses(disc, [], pose_batch(4, 1))

    def test_generator_gradient_flows_only_through_gen_loss(self):
        disc = DiscriminatorWeights.init(4 * 72, seed=5, hidden=(8, 4))
        fake = pose_batch(6, 2)
        real = pose_batch(7, 2)
        gen, disc_loss = adversarial_losses(disc, real, fake)
        backward(gen, leaves=fake)
        gen_grads = [f.grad.copy() for f in fake]
        assert any(np.abs(g).max() > 0 for g in gen_grads)
        backward(disc_loss, leaves=fake)
        for f in fake:
            np.testing.assert_array_equal(f.grad, np.zeros_like(f.grad))

    def test_grad_check_discriminator_path(self):
        for seed in range(5):
            disc = DiscriminatorWeights.init(2 * 72, seed=seed, hidden=(8, 4))
            real = pose_batch(seed + 30, 2, t=2)
            fake = pose_batch(seed + 40, 2, t=2)
            params = list(disc.parameters().values())
            report = grad_check(
                lambda: adversarial_losses(disc, real, fake)[1], params
            )
            assert report.passed, (seed, report.max_rel_err)

    def test_grad_check_generator_path_through_fakes(self):
        for seed in range(5):
            disc = DiscriminatorWeights.init(2 * 72, seed=seed + 50, hidden=(8, 4))
            real = pose_batch(seed + 60, 1, t=2)
            fake = pose_batch(seed + 70, 2, t=2)
            report = grad_check(
                lambda: adversarial_losses(disc, real, fake)[0], fake
            )
            assert report.passed, (seed, report.max_rel_err)
