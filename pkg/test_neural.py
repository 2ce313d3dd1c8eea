"""
역투영 네트워크 테스트
- 인코더 / 어텐션 블록 수식
- 순전파 성질 (퇴화 네트워크, 순서 불변)
- 역전파 (유한 차분 비교), Adam, STXW 입출력
"""
import math
import tempfile
import unittest
from pathlib import Path

import numpy as np

from core.gather import NeighborRecord, NeighborSet, gather_neighborhoods
from geometry.mesh import build_texel_map, compute_normals
from geometry.primitives import quad
from geometry.raster import Camera
from neural.autodiff import Tape
from neural.network import (
    GeomFeatures, NetArch, NetWeights, attention_block, backward, batch_from_sets, encode_appearance,
    encode_position, forward, init_weights, loss_and_grads, predict_gather, texel_feature_vector,
    zero_weights,
)
from neural.optim import Adam
from neural.weights_io import load_weights, save_weights, weights_from_bytes, weights_to_bytes
from test_gather import make_view
from utils.errors import EmptyNeighborhoodError, FormatError, UsageError

TOY = NetArch(dim=1, hidden=1, blocks=1)


def random_set(rng, n_records: int, texel=(0, 0)) -> NeighborSet:
    records = [
        NeighborRecord(rng.uniform(0, 1, 3), rng.normal(scale=0.05, size=3), rng.normal(size=3),
                       float(rng.uniform(-1, 1)), float(rng.uniform(0, 0.15)), int(k % 3), (k, k))
        for k in range(n_records)
    ]
    return NeighborSet(texel, records, rng.normal(scale=0.05, size=3), np.array([0.0, 0.0, 1.0]))


def randomized(seed: int, arch: NetArch = NetArch()) -> NetWeights:
    """편향까지 난수로 채운 가중치"""
    w = init_weights(arch, seed)
    rng = np.random.default_rng(seed + 100)
    return NetWeights(arch, {n: (v if v.ndim > 1 else rng.normal(scale=0.3, size=v.shape)) for n, v in w})


def softplus(x):
    return math.log1p(math.exp(x))


class TestEncoders(unittest.TestCase):
    """위치 / 외형 인코더"""

    def test_zero_weights_give_zero(self):
        w = zero_weights()
        np.testing.assert_array_equal(encode_position(w, np.zeros(8)), np.zeros(64))
        np.testing.assert_array_equal(encode_appearance(w, (0.3, 0.6, 0.9)), np.zeros(64))

    def test_toy_position_encoder(self):
        w = zero_weights(TOY)
        w.tensors['pos.W1'][:, 0] = [1, 0, 0, 0, 0, 0, 0.5, 2.0]
        w.tensors['pos.b1'][0] = 0.25
        w.tensors['pos.W2'][0, 0] = -2.0
        w.tensors['pos.b2'][0] = 0.1
        g = GeomFeatures(np.array([0.2, 9.0, 9.0]), np.zeros(3), 0.4, 0.05)
        expected = -2.0 * softplus(0.2 + 0.5 * 0.4 + 2.0 * 0.05 + 0.25) + 0.1
        self.assertAlmostEqual(float(encode_position(w, g)[0]), expected, places=12)

    def test_toy_appearance_encoder(self):
        w = zero_weights(TOY)
        w.tensors['app.W1'][:, 0] = [2.0, 0.0, 0.0]
        w.tensors['app.b1'][0] = -1.0
        w.tensors['app.W2'][0, 0] = 3.0
        w.tensors['app.b2'][0] = 0.5
        self.assertAlmostEqual(float(encode_appearance(w, (1, 0, 0))[0]), 3.0 * softplus(1.0) + 0.5, places=12)

    def test_texel_encoding_is_zero_record(self):
        w = randomized(0)
        explicit = GeomFeatures(np.zeros(3), np.zeros(3), 1.0, 0.0)
        np.testing.assert_array_equal(encode_position(w, GeomFeatures.texel()), encode_position(w, explicit))
        np.testing.assert_array_equal(texel_feature_vector(), [0, 0, 0, 0, 0, 0, 1, 0])

    def test_empty_texel_is_black(self):
        w = randomized(1)
        np.testing.assert_array_equal(encode_appearance(w, None), encode_appearance(w, (0, 0, 0)))

    def test_out_of_range_color_clamped(self):
        w = randomized(2)
        with self.assertLogs('TexelFusion', level='WARNING'):
            clamped = encode_appearance(w, (1.5, -0.2, 0.5))
        np.testing.assert_array_equal(clamped, encode_appearance(w, (1.0, 0.0, 0.5)))


class TestAttentionBlock(unittest.TestCase):
    """교차 어텐션 블록"""

    def setUp(self):
        self.w = randomized(3)
        rng = np.random.default_rng(0)
        self.f_u = rng.normal(size=64)
        self.h_u = rng.normal(size=64)
        self.rec = (rng.normal(size=64), rng.normal(size=64))

    def test_identical_records_are_uniform(self):
        out, a = attention_block(self.w, 1, self.f_u, self.h_u, [self.rec] * 5, return_weights=True)
        np.testing.assert_allclose(a, np.full(5, 0.2), atol=1e-15)
        v = self.rec[0] @ self.w['block1.V']
        np.testing.assert_allclose(out, v + self.f_u, atol=1e-12)

    def test_single_record_weight_is_one(self):
        out, a = attention_block(self.w, 2, self.f_u, self.h_u, [self.rec], return_weights=True)
        self.assertEqual(a[0], 1.0)
        np.testing.assert_allclose(out, self.rec[0] @ self.w['block2.V'] + self.f_u, atol=1e-12)

    def test_logits_scaled_by_sqrt_dim(self):
        rng = np.random.default_rng(1)
        records = [(rng.normal(size=64), rng.normal(size=64)) for _ in range(4)]
        _, a = attention_block(self.w, 1, self.f_u, self.h_u, records, return_weights=True)
        q = (self.f_u + self.h_u) @ self.w['block1.Q']
        k = np.array([(f + h) @ self.w['block1.K'] for f, h in records])
        logits = k @ q / 8.0
        expected = np.exp(logits - logits.max())
        np.testing.assert_allclose(a, expected / expected.sum(), rtol=1e-10)

    def test_empty_records(self):
        with self.assertRaises(EmptyNeighborhoodError):
            attention_block(self.w, 1, self.f_u, self.h_u, [])


class TestForward(unittest.TestCase):
    """순전파"""

    def test_zero_network_is_constant(self):
        w = zero_weights()
        w.tensors['dec.b2'][:] = [0.0, 1.0, -1.0]
        rng = np.random.default_rng(4)
        expected = 1.0 / (1.0 + np.exp(-np.array([0.0, 1.0, -1.0])))
        for n in (1, 4, 9):
            np.testing.assert_allclose(forward(w, random_set(rng, n), rng.uniform(0, 1, 3)), expected, atol=1e-15)

    def test_record_order_invariance(self):
        w = randomized(5)
        rng = np.random.default_rng(5)
        ns = random_set(rng, 9)
        shuffled = NeighborSet(ns.texel, [ns.records[k] for k in rng.permutation(9)], ns.position, ns.normal)
        np.testing.assert_allclose(forward(w, ns), forward(w, shuffled), atol=1e-6)

    def test_output_in_unit_cube(self):
        w = randomized(6)
        rng = np.random.default_rng(6)
        out = forward(w, random_set(rng, 18), (0.2, 0.2, 0.2))
        self.assertTrue(((out > 0) & (out < 1)).all())

    def test_empty_set(self):
        with self.assertRaises(EmptyNeighborhoodError):
            forward(zero_weights(), NeighborSet((0, 0)))

    def test_shared_qkv_arch(self):
        arch = NetArch(share_qkv=True)
        w = init_weights(arch, 0)
        self.assertNotIn('block2.Q', w.names())
        self.assertEqual(len(forward(w, random_set(np.random.default_rng(0), 3))), 3)

    def test_gather_batch_matches_single_sets(self):
        mesh = compute_normals(quad())
        tm = build_texel_map(mesh, 8, 8)
        view = make_view(mesh, Camera(position=(0.2, 0.1, 2.0), width=48, height=48))
        gathered = gather_neighborhoods(tm, [view], None, K=3)
        w = randomized(7)
        texels = np.array([0, 9, 27, 63])
        current = np.random.default_rng(0).uniform(0, 1, (4, 3))
        batched = predict_gather(w, gathered, texels, current, batch_size=3)
        for k, t in enumerate(texels):
            single = forward(w, gathered.neighbor_set(int(t)), current[k])
            np.testing.assert_allclose(batched[k], single, atol=1e-12)


class TestBackward(unittest.TestCase):
    """손실 / 기울기"""

    def test_perfect_prediction(self):
        w = zero_weights()
        rng = np.random.default_rng(8)
        batch = [(random_set(rng, 3), None, np.full(3, 0.5)) for _ in range(2)]
        loss, grads = backward(w, batch)
        self.assertEqual(loss, 0.0)
        for _, g in grads:
            self.assertFalse(g.any())

    def test_batch_loss_is_mean(self):
        w = randomized(9)
        rng = np.random.default_rng(9)
        batch = [(random_set(rng, n), rng.uniform(0, 1, 3), rng.uniform(0, 1, 3)) for n in (1, 3, 5, 9)]
        total, _ = backward(w, batch)
        singles = [backward(w, [item])[0] for item in batch]
        self.assertAlmostEqual(total, float(np.mean(singles)), places=12)

    def test_finite_differences(self):
        w = randomized(10)
        rng = np.random.default_rng(10)
        items = [(random_set(rng, n), rng.uniform(0, 1, 3), rng.uniform(0, 1, 3)) for n in (2, 5, 9)]
        padded = batch_from_sets([i[0] for i in items], [i[1] for i in items])
        target = np.array([i[2] for i in items])
        _, grads = loss_and_grads(w, padded, target)

        names = w.names()
        eps = 1e-4
        for trial in range(120):
            name = names[trial % len(names)]
            idx = tuple(rng.integers(0, s) for s in w[name].shape)
            plus, minus = w.copy(), w.copy()
            plus.tensors[name][idx] += eps
            minus.tensors[name][idx] -= eps
            numeric = (loss_and_grads(plus, padded, target)[0] - loss_and_grads(minus, padded, target)[0]) / (2 * eps)
            analytic = grads[name][idx]
            tol = 1e-3 * max(abs(numeric), abs(analytic)) + 1e-7
            self.assertLessEqual(abs(numeric - analytic), tol, msg=f"{name}{idx}: {numeric} vs {analytic}")

    def test_masked_softmax_ignores_padding(self):
        tape = Tape()
        logits = tape.leaf(np.array([[1.0, 2.0, 50.0]]))
        out = tape.masked_softmax(logits, np.array([[True, True, False]]))
        self.assertEqual(out.value[0, 2], 0.0)
        self.assertAlmostEqual(float(out.value[0, :2].sum()), 1.0)

    def test_non_recording_tape(self):
        tape = Tape(record=False)
        node = tape.sigmoid(tape.leaf(np.zeros(2)))
        with self.assertRaises(RuntimeError):
            tape.backward(node)


class TestAdam(unittest.TestCase):
    """Adam 최적화기"""

    def setUp(self):
        self.w = randomized(11)
        rng = np.random.default_rng(11)
        items = [(random_set(rng, 4), None, rng.uniform(0, 1, 3)) for _ in range(4)]
        self.loss, self.grads = backward(self.w, items)

    def test_zero_learning_rate_is_identity(self):
        opt = Adam(self.w, lr=0.0)
        updated = opt.step(self.w, self.grads)
        self.assertTrue(updated.equals(self.w))

    def test_first_step_bounded_by_lr(self):
        lr = 1e-3
        updated = Adam(self.w, lr=lr).step(self.w, self.grads)
        for name, value in updated:
            delta = np.abs(value - self.w[name])
            self.assertTrue((delta <= lr * (1 + 1e-9)).all())
            moved = np.abs(self.grads[name]) > 1e-6
            self.assertTrue((delta[moved] > 0.5 * lr).all())

    def test_invalid_hyperparameters(self):
        with self.assertRaises(UsageError):
            Adam(self.w, lr=-1.0)
        with self.assertRaises(UsageError):
            Adam(self.w, beta1=1.0)


class TestWeightsFile(unittest.TestCase):
    """STXW 입출력"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = Path(self.tmp.name) / 'net.stxw'

    def tearDown(self):
        self.tmp.cleanup()

    def test_round_trip_bit_identical(self):
        w = randomized(12)
        save_weights(w, self.path)
        self.assertTrue(load_weights(self.path).equals(w))

    def test_shared_arch_round_trip(self):
        w = init_weights(NetArch(share_qkv=True, blocks=2), 3)
        again = weights_from_bytes(weights_to_bytes(w))
        self.assertTrue(again.arch.share_qkv)
        self.assertTrue(again.equals(w))

    def test_truncated_file(self):
        data = weights_to_bytes(randomized(13))
        self.path.write_bytes(data[:len(data) // 2])
        with self.assertRaises(FormatError):
            load_weights(self.path)

    def test_nan_names_tensor(self):
        w = randomized(14)
        w.tensors['dec.b2'][1] = np.nan
        save_weights(w, self.path)
        with self.assertRaises(FormatError) as ctx:
            load_weights(self.path)
        self.assertIn('dec.b2', str(ctx.exception))

    def test_version_mismatch(self):
        data = bytearray(weights_to_bytes(randomized(15)))
        data[4:8] = (2).to_bytes(4, 'little')
        with self.assertRaises(FormatError):
            weights_from_bytes(bytes(data))

    def test_missing_file(self):
        with self.assertRaises(FormatError):
            load_weights(self.path)


if __name__ == "__main__":
    print("=" * 60)
    print("역투영 네트워크 테스트")
    print("=" * 60)
    unittest.main(verbosity=2)
