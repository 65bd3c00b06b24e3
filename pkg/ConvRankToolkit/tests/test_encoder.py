import numpy as np
from django.test import SimpleTestCase

from ..encoder import EncoderConfig, encode, init_encoder, join_phi, join_phi_backward
from ..exceptions import ConfigError, DimensionError, RankingArgumentError, StateError
from ..numerics import ParamStore, Tape, backward, conv1d_wide, grad_check, relu


class EncoderTests(SimpleTestCase):
    def setUp(self):
        self.config = EncoderConfig(dim=3, filter_sizes=(2, 3), copies=2, dropout_p=0.0)

    def test_default_config_has_thirty_features(self):
        self.assertEqual(EncoderConfig(dim=300).output_dim, 30)
        model = init_encoder(EncoderConfig(dim=4), seed=0)
        self.assertEqual(encode(np.zeros((5, 4)), model).shape, (30,))

    def test_same_seed_same_parameters(self):
        first, second = init_encoder(self.config, 3), init_encoder(self.config, 3)
        for name in first.params:
            np.testing.assert_array_equal(first.params.value(name), second.params.value(name))

    def test_biases_start_at_zero(self):
        model = init_encoder(self.config, 0)
        for name in model.params.names():
            if name.endswith('.bias'):
                self.assertFalse(model.params.value(name).any())

    def test_zero_sentence_zero_biases(self):
        model = init_encoder(self.config, 0)
        np.testing.assert_array_equal(encode(np.zeros((4, 3)), model), np.zeros(4))

    def test_zero_sentence_gives_relu_of_bias(self):
        model = init_encoder(self.config, 0)
        model.params.set_value(model.bias_name(2), [[0.3, -0.2]])
        model.params.set_value(model.bias_name(3), [[-1.0, 1.5]])
        np.testing.assert_array_equal(encode(np.zeros((4, 3)), model), [0.3, 0.0, 0.0, 1.5])

    def test_matches_window_max_oracle(self):
        model = init_encoder(self.config, 1)
        rng = np.random.default_rng(2)
        for name in model.params.names():
            if name.endswith('.bias'):
                model.params.set_value(name, rng.normal(size=(1, 2)))
        S = rng.normal(size=(6, 3))
        expected = []
        for bank in model.filters:
            for copy in range(bank.copies):
                expected.append(np.max(relu(conv1d_wide(S, bank.weights[copy], bank.bias[copy]))))
        np.testing.assert_allclose(encode(S, model), expected, atol=1e-12)

    def test_reversed_single_word_sentence(self):
        model = init_encoder(self.config, 3)
        rng = np.random.default_rng(4)
        for _ in range(10):
            S = np.zeros((4, 3))
            S[rng.integers(0, 4)] = rng.normal(size=3)
            np.testing.assert_allclose(encode(S, model), encode(S[::-1], model), atol=1e-12)

    def test_width_mismatch(self):
        with self.assertRaises(DimensionError):
            encode(np.zeros((4, 5)), init_encoder(self.config, 0))

    def test_train_mode_dropout_needs_rng(self):
        model = init_encoder(EncoderConfig(dim=3), 0)
        with self.assertRaises(RankingArgumentError):
            model.forward(np.ones((4, 3)), train_mode=True)

    def test_invalid_config(self):
        with self.assertRaises(ConfigError):
            EncoderConfig(dim=3, filter_sizes=(2, 2)).validate()
        with self.assertRaises(ConfigError):
            EncoderConfig(dim=3, dropout_p=1.0).validate()

    def test_forward_pass_counter(self):
        model = init_encoder(self.config, 0)
        for _ in range(3):
            encode(np.ones((4, 3)), model)
        self.assertEqual(model.forward_passes, 3)

    def test_slots_cannot_be_initialised_twice(self):
        params = ParamStore()
        init_encoder(self.config, 0, params)
        with self.assertRaises(StateError):
            init_encoder(self.config, 0, params)


class EncoderGradientTests(SimpleTestCase):
    config = EncoderConfig(dim=3, filter_sizes=(2, 3), copies=2, dropout_p=0.0)

    def setup_seed(self, seed):
        model = init_encoder(self.config, seed=seed)
        rng = np.random.default_rng(seed + 100)
        for name in model.params.names():
            if name.endswith('.bias'):
                model.params.set_value(name, rng.uniform(0.1, 0.5, size=(1, 2)))
        return model, rng.normal(size=(3, 3)), rng.normal(size=4)

    @staticmethod
    def loss_fn(model, S, upstream):
        def fn():
            features, tape = model.forward(S)
            return float(upstream @ features), Tape(
                lambda _, grad: model.backward(tape, grad * upstream)
            )
        return fn

    def test_parameter_gradients(self):
        for seed in range(10):
            model, S, upstream = self.setup_seed(seed)
            report = grad_check(model.params, self.loss_fn(model, S, upstream))
            self.assertTrue(report.passed, (seed, report.errors))

    def test_input_gradient(self):
        h = 1e-5
        for seed in range(10):
            model, S, upstream = self.setup_seed(seed)
            loss = self.loss_fn(model, S, upstream)
            _, tape = model.forward(S)
            grad_S = backward(tape, upstream)
            for index in np.ndindex(S.shape):
                original = S[index]
                S[index] = original + h
                plus = loss()[0]
                S[index] = original - h
                minus = loss()[0]
                S[index] = original
                self.assertAlmostEqual(grad_S[index], (plus - minus) / (2 * h), places=6, msg=(seed, index))


class JoinTests(SimpleTestCase):
    def test_never_negative(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            size = rng.integers(1, 20)
            self.assertTrue(np.all(join_phi(rng.normal(size=size), rng.normal(size=size)) >= 0.0))

    def test_equal_encodings(self):
        np.testing.assert_array_equal(join_phi([1.0, 2.0], [1.0, 2.0]), [0.0, 0.0])

    def test_hand_computed(self):
        np.testing.assert_array_equal(join_phi([1.0, 2.0], [0.0, 4.0]), [1.0, 4.0])

    def test_symmetric(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=6), rng.normal(size=6)
        np.testing.assert_array_equal(join_phi(a, b), join_phi(b, a))

    def test_backward(self):
        grad_q, grad_d = join_phi_backward([1.0, 2.0], [0.0, 4.0], [1.0, 1.0])
        np.testing.assert_array_equal(grad_q, [2.0, -4.0])
        np.testing.assert_array_equal(grad_d, [-2.0, 4.0])

    def test_length_mismatch(self):
        with self.assertRaises(DimensionError):
            join_phi([1.0], [1.0, 2.0])
