"""Tape op semantics, reverse-mode gradients vs finite differences."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hatecontext import numcore as nc
from hatecontext.numcore import ParameterSet, Tape


def single_param(array, name="w") -> ParameterSet:
    params = ParameterSet()
    params.add(name, np.asarray(array, dtype=np.float64))
    return params


class TestForwardSemantics:
    def test_sigmoid_at_zero(self):
        tape = Tape()
        assert float(nc.sigmoid(tape.constant(0.0)).data) == 0.5

    def test_softmax_analytic(self):
        tape = Tape()
        out = nc.softmax(tape.constant([0.0, math.log(3.0)])).data
        assert out == pytest.approx([0.25, 0.75], abs=1e-12)

    def test_tanh_at_zero_with_unit_derivative(self):
        params = single_param(0.0)
        tape = Tape()
        out = nc.tanh(tape.parameter("w", params))
        assert float(out.data) == 0.0
        nc.backward(out)
        assert float(params.grads["w"]) == 1.0

    def test_matmul_matrix_vector(self):
        tape = Tape()
        m = tape.constant([[1.0, 2.0], [3.0, 4.0]])
        v = tape.constant([1.0, -1.0])
        assert np.array_equal(nc.matmul(m, v).data, [-1.0, -1.0])

    def test_add_bias_to_rows(self):
        tape = Tape()
        m = tape.constant([[1.0, 2.0], [3.0, 4.0]])
        b = tape.constant([10.0, 20.0])
        assert np.array_equal(nc.add(m, b).data, [[11.0, 22.0], [13.0, 24.0]])

    def test_concat_and_narrow_inverse(self):
        tape = Tape()
        a = tape.constant([1.0, 2.0])
        b = tape.constant([3.0])
        joined = nc.concat([a, b])
        assert np.array_equal(joined.data, [1.0, 2.0, 3.0])
        assert np.array_equal(nc.narrow(joined, 0, 2).data, a.data)

    def test_shape_mismatch_names_both_shapes(self):
        tape = Tape()
        with pytest.raises(nc.ShapeError, match=r"\(2, 3\).*\(4,\)"):
            nc.matmul(tape.constant(np.zeros((2, 3))), tape.constant(np.zeros(4)))
        with pytest.raises(nc.ShapeError, match=r"\(2,\).*\(3,\)"):
            nc.add(tape.constant(np.zeros(2)), tape.constant(np.zeros(3)))

    def test_clip_clamps(self):
        tape = Tape()
        out = nc.clip(tape.constant([-1.0, 0.5, 2.0]), 0.0, 1.0)
        assert np.array_equal(out.data, [0.0, 0.5, 1.0])

    def test_deterministic_bit_identical(self):
        def run():
            tape = Tape()
            x = tape.constant(np.linspace(-2, 2, 7))
            return nc.softmax(nc.tanh(nc.scale(x, 1.7))).data.tobytes()

        assert run() == run()


class TestBackward:
    def test_sum_gradient_is_ones(self):
        params = single_param([1.0, 2.0, 3.0])
        tape = Tape()
        nc.backward(nc.sum(tape.parameter("w", params)))
        assert np.array_equal(params.grads["w"], np.ones(3))

    def test_sigmoid_chain_quarter(self):
        # loss = sigmoid(w * x) at w=0, x=1: dloss/dw = 0.25
        params = single_param(0.0)
        tape = Tape()
        w = tape.parameter("w", params)
        x = tape.constant(1.0)
        nc.backward(nc.sigmoid(nc.pointwise_mul(w, x)))
        assert float(params.grads["w"]) == 0.25

    def test_gradients_accumulate_until_zeroed(self):
        params = single_param([1.0, 1.0])
        for _ in range(2):
            tape = Tape()
            nc.backward(nc.sum(tape.parameter("w", params)))
        assert np.array_equal(params.grads["w"], [2.0, 2.0])
        params.zero_grads()
        assert np.array_equal(params.grads["w"], [0.0, 0.0])

    def test_non_scalar_loss_rejected(self):
        params = single_param([1.0, 2.0])
        tape = Tape()
        with pytest.raises(nc.ShapeError, match="scalar"):
            nc.backward(tape.parameter("w", params))

    def test_reused_operand(self):
        # loss = sum(w * w): gradient 2w
        params = single_param([1.0, -2.0])
        tape = Tape()
        w = tape.parameter("w", params)
        nc.backward(nc.sum(nc.pointwise_mul(w, w)))
        assert np.array_equal(params.grads["w"], [2.0, -4.0])


def _op_cases():
    # constants are drawn once here so every f(params) call sees the same graph
    rng = np.random.default_rng(202)

    def draw(shape):
        return rng.uniform(-1, 1, shape)

    def case(name, shape, build):
        return pytest.param(shape, build, id=name)

    c_vec4, c_mat42, c_vec5a, c_vec5b = draw(4), draw((4, 2)), draw(5), draw(5)
    c_mat34a, c_mat34b, c_vec2, c_vec3 = draw((3, 4)), draw((3, 4)), draw(2), draw(3)
    c_mat24, c_mat23, c_mat32 = draw((2, 4)), draw((2, 3)), draw((3, 2))
    return [
        case("matmul_mat_vec", (3, 4), lambda t, w: nc.sum(nc.matmul(w, t.constant(c_vec4)))),
        case("matmul_mat_mat", (3, 4), lambda t, w: nc.sum(nc.matmul(w, t.constant(c_mat42)))),
        case("matmul_vec_mat", (4,), lambda t, w: nc.sum(nc.matmul(w, t.constant(c_mat42)))),
        case("matmul_vec_vec", (4,), lambda t, w: nc.matmul(w, t.constant(c_vec4))),
        case("add_same", (5,), lambda t, w: nc.sum(nc.pointwise_mul(nc.add(w, t.constant(c_vec5a)), t.constant(c_vec5b)))),
        case("add_bias_rows", (4,), lambda t, w: nc.sum(nc.pointwise_mul(nc.add(t.constant(c_mat34a), w), t.constant(c_mat34b)))),
        case("pointwise_mul", (5,), lambda t, w: nc.sum(nc.pointwise_mul(w, t.constant(c_vec5a)))),
        case("scale", (5,), lambda t, w: nc.sum(nc.scale(w, -2.5))),
        case("concat", (3,), lambda t, w: nc.sum(nc.pointwise_mul(nc.concat([w, t.constant(c_vec2)]), t.constant(c_vec5a)))),
        case("sigmoid", (5,), lambda t, w: nc.sum(nc.sigmoid(w))),
        case("tanh", (5,), lambda t, w: nc.sum(nc.tanh(w))),
        case("softmax", (5,), lambda t, w: nc.sum(nc.pointwise_mul(nc.softmax(w), t.constant(c_vec5b)))),
        case("softmax_2d", (2, 4), lambda t, w: nc.sum(nc.pointwise_mul(nc.softmax(w), t.constant(c_mat24)))),
        case("log", (5,), lambda t, w: nc.sum(nc.log(nc.add(nc.sigmoid(w), t.constant(np.full(5, 0.5)))))),
        case("clip_interior", (5,), lambda t, w: nc.sum(nc.clip(w, -10.0, 10.0))),
        case("sum", (2, 3), lambda t, w: nc.sum(w)),
        case("mean", (2, 3), lambda t, w: nc.mean(w)),
        case("narrow", (6,), lambda t, w: nc.sum(nc.pointwise_mul(nc.narrow(w, 1, 4), t.constant(c_vec3)))),
        case("reshape", (6,), lambda t, w: nc.sum(nc.pointwise_mul(nc.reshape(w, (2, 3)), t.constant(c_mat23)))),
        case("transpose", (2, 3), lambda t, w: nc.sum(nc.pointwise_mul(nc.transpose(w), t.constant(c_mat32)))),
    ]


class TestGradientsMatchFiniteDifferences:
    @pytest.mark.parametrize("shape,build", _op_cases())
    def test_op_backward_matches_central_differences(self, shape, build):
        rng = np.random.default_rng(hash(str(shape)) % 2**31)
        params = single_param(rng.uniform(0.2, 1.0, shape) * rng.choice([-1, 1], shape))

        def f(p):
            tape = Tape()
            return build(tape, tape.parameter("w", p))

        assert nc.grad_check(f, params, eps=1e-5) < 1e-4

    def test_two_layer_network(self):
        rng = np.random.default_rng(7)
        params = ParameterSet()
        params.add("W1", rng.uniform(-0.5, 0.5, (4, 3)))
        params.add("b1", rng.uniform(-0.5, 0.5, 4))
        params.add("W2", rng.uniform(-0.5, 0.5, 4))
        x = rng.uniform(-1, 1, 3)

        def f(p):
            tape = Tape()
            hidden = nc.tanh(
                nc.add(nc.matmul(tape.parameter("W1", p), tape.constant(x)), tape.parameter("b1", p))
            )
            return nc.sigmoid(nc.matmul(tape.parameter("W2", p), hidden))

        assert nc.grad_check(f, params, eps=1e-5) < 1e-6


class TestSoftmaxInvariants:
    @given(
        st.lists(st.floats(min_value=-30, max_value=30), min_size=1, max_size=8),
    )
    @settings(max_examples=100, deadline=None)
    def test_rows_positive_and_sum_to_one(self, logits):
        tape = Tape()
        out = nc.softmax(tape.constant(logits)).data
        assert np.all(out > 0)
        assert abs(out.sum() - 1.0) < 1e-12

    @given(
        st.lists(st.floats(min_value=-30, max_value=30), min_size=1, max_size=8),
        st.floats(min_value=-50, max_value=50),
    )
    @settings(max_examples=100, deadline=None)
    def test_shift_invariance(self, logits, shift):
        tape = Tape()
        base = nc.softmax(tape.constant(logits)).data
        shifted = nc.softmax(tape.constant(np.asarray(logits) + shift)).data
        assert np.max(np.abs(base - shifted)) < 1e-12


class TestGradCheck:
    def test_quadratic_is_machine_precision(self):
        params = single_param([0.7, -1.3, 2.1])

        def f(p):
            tape = Tape()
            w = tape.parameter("w", p)
            return nc.scale(nc.sum(nc.pointwise_mul(w, w)), 0.5)

        assert nc.grad_check(f, params, eps=1e-5) < 1e-8

    def test_eps_zero_rejected(self):
        params = single_param([1.0])
        with pytest.raises(ValueError, match="eps"):
            nc.grad_check(lambda p: None, params, eps=0.0)

    def test_eps_too_large_rejected(self):
        params = single_param([1.0])
        with pytest.raises(ValueError, match="eps"):
            nc.grad_check(lambda p: None, params, eps=0.5)

    def test_non_finite_loss_rejected(self):
        params = single_param([-1.0])

        def f(p):
            tape = Tape()
            return nc.log(tape.parameter("w", p))  # log of a negative: nan

        with np.errstate(invalid="ignore"):
            with pytest.raises(nc.NonFiniteError):
                nc.grad_check(f, params, eps=1e-5)


class TestParameterSet:
    def test_duplicate_name_rejected(self):
        params = single_param([1.0])
        with pytest.raises(ValueError, match="exists"):
            params.add("w", [2.0])

    def test_non_finite_rejected(self):
        params = ParameterSet()
        with pytest.raises(nc.NonFiniteError):
            params.add("bad", [np.inf])

    def test_mixed_tape_operands_rejected(self):
        a = Tape().constant([1.0])
        b = Tape().constant([1.0])
        with pytest.raises(ValueError, match="tapes"):
            nc.add(a, b)
