import collections
import unittest

import numpy as np

from toolcl.exceptions import OptimizerException
from toolcl.misc import setup_logger
from toolcl.model import OptimConfig, OptimState, lr_at, warmup_steps, adamw_step, clip_gradients, global_norm


def scalar_params(value=1.0):
    return collections.OrderedDict([('w', np.array([value], dtype=np.float64))])


class ScheduleTests(unittest.TestCase):
    def setUp(self):
        setup_logger(0)
        self.cfg = OptimConfig(peak_lr=1.0)

    def test_warmup_steps(self):
        self.assertEqual(warmup_steps(1000, self.cfg), 100)
        self.assertEqual(warmup_steps(7, self.cfg), 1)
        self.assertEqual(warmup_steps(7, OptimConfig(warmup_frac=0.0)), 0)

    def test_known_values(self):
        self.assertEqual(lr_at(0, 1000, self.cfg), 0.0)
        self.assertAlmostEqual(lr_at(50, 1000, self.cfg), 0.5)
        self.assertEqual(lr_at(100, 1000, self.cfg), 1.0)
        self.assertAlmostEqual(lr_at(550, 1000, self.cfg), 450 / 900)
        self.assertAlmostEqual(lr_at(999, 1000, self.cfg), 1 / 900)
        self.assertEqual(lr_at(1000, 1000, self.cfg), 0.0)

    def test_peak_reached_once(self):
        for total in (7, 30, 1000):
            rates = [lr_at(s, total, self.cfg) for s in range(total + 1)]
            self.assertEqual(rates.count(max(rates)), 1, total)
            self.assertLessEqual(max(rates), 1.0)
            self.assertEqual(rates[-1], 0.0)

    def test_invalid_arguments(self):
        with self.assertRaises(OptimizerException):
            lr_at(0, 0, self.cfg)
        with self.assertRaises(OptimizerException):
            lr_at(-1, 10, self.cfg)


class AdamWTests(unittest.TestCase):
    def setUp(self):
        setup_logger(0)

    def test_zero_gradient_without_decay(self):
        params = scalar_params(2.0)
        state = OptimState(params)
        adamw_step(params, collections.OrderedDict([('w', np.zeros(1))]), state, 0.1,
                   OptimConfig(weight_decay=0.0))
        self.assertEqual(params['w'][0], 2.0)
        self.assertEqual(state.t, 1)

    def test_zero_gradient_with_decay(self):
        params = scalar_params(2.0)
        adamw_step(params, collections.OrderedDict([('w', np.zeros(1))]), OptimState(params), 0.1,
                   OptimConfig(weight_decay=0.01))
        self.assertAlmostEqual(params['w'][0], 2.0 * 0.999, places=12)

    def test_first_step_by_hand(self):
        cfg = OptimConfig(weight_decay=0.01)
        params = scalar_params(1.0)
        state = OptimState(params)
        adamw_step(params, collections.OrderedDict([('w', np.ones(1))]), state, 0.1, cfg)
        expected = 1.0 * (1 - 0.1 * 0.01) - 0.1 * 1.0 / (1.0 + cfg.eps)
        self.assertAlmostEqual(params['w'][0], expected, places=12)
        self.assertAlmostEqual(state.m['w'][0], 0.1, places=12)
        self.assertAlmostEqual(state.v['w'][0], 0.01, places=12)

    def test_non_finite_gradient(self):
        params = collections.OrderedDict([('a', np.ones(2)), ('b', np.ones(3))])
        grads = collections.OrderedDict([('a', np.zeros(2)), ('b', np.array([0.0, np.nan, 1.0]))])
        state = OptimState(params)
        with self.assertRaises(OptimizerException) as cm:
            adamw_step(params, grads, state, 0.1, OptimConfig())
        self.assertEqual(cm.exception.tensor, 'b')
        self.assertEqual(state.t, 0)
        np.testing.assert_array_equal(params['b'], np.ones(3))

    def test_shape_mismatch(self):
        params = scalar_params()
        with self.assertRaises(OptimizerException):
            adamw_step(params, collections.OrderedDict([('w', np.zeros(2))]), OptimState(params), 0.1,
                       OptimConfig())

    def test_gradient_scale_invariance(self):
        cfg = OptimConfig(weight_decay=0.0, eps=1e-12)
        rng = np.random.default_rng(3)
        a = collections.OrderedDict([('w', rng.normal(size=(4, 3)))])
        b = collections.OrderedDict([('w', a['w'].copy())])
        sa, sb = OptimState(a), OptimState(b)
        for _ in range(50):
            g = rng.normal(size=(4, 3))
            adamw_step(a, collections.OrderedDict([('w', g)]), sa, 1e-2, cfg)
            adamw_step(b, collections.OrderedDict([('w', 1000.0 * g)]), sb, 1e-2, cfg)
        np.testing.assert_allclose(a['w'], b['w'], rtol=1e-7, atol=1e-9)

    def test_deterministic(self):
        def run():
            rng = np.random.default_rng(9)
            params = collections.OrderedDict([('w', rng.normal(size=5))])
            state = OptimState(params)
            for _ in range(10):
                adamw_step(params, collections.OrderedDict([('w', rng.normal(size=5))]), state, 1e-3,
                           OptimConfig())
            return params['w']
        np.testing.assert_array_equal(run(), run())

    def test_reset(self):
        params = scalar_params()
        state = OptimState(params)
        adamw_step(params, collections.OrderedDict([('w', np.ones(1))]), state, 0.1, OptimConfig())
        state.reset()
        self.assertEqual(state.t, 0)
        self.assertEqual(state.m['w'][0], 0.0)
        self.assertEqual(state.v['w'][0], 0.0)


class ClippingTests(unittest.TestCase):
    def test_global_norm(self):
        grads = collections.OrderedDict([('a', np.array([3.0])), ('b', np.array([4.0]))])
        self.assertAlmostEqual(global_norm(grads), 5.0)

    def test_clip(self):
        grads = collections.OrderedDict([('a', np.array([3.0])), ('b', np.array([4.0]))])
        self.assertIs(clip_gradients(grads, 0.0), grads)
        self.assertIs(clip_gradients(grads, 10.0), grads)
        clipped = clip_gradients(grads, 1.0)
        self.assertAlmostEqual(global_norm(clipped), 1.0, places=9)
        self.assertAlmostEqual(clipped['a'][0] / clipped['b'][0], 0.75)


class ConfigTests(unittest.TestCase):
    def test_validation(self):
        for kwargs in ({'warmup_frac': 1.0}, {'peak_lr': -1.0}, {'beta2': 1.0}, {'eps': 0.0},
                       {'weight_decay': -0.1}, {'grad_clip': -1.0}):
            with self.assertRaises(OptimizerException):
                OptimConfig(**kwargs)

    def test_round_trip(self):
        cfg = OptimConfig(peak_lr=1e-3, grad_clip=1.0, moments_reset=False)
        self.assertEqual(OptimConfig.from_dict(cfg.to_dict()).to_dict(), cfg.to_dict())


if __name__ == '__main__':
    unittest.main()
