import numpy as np
import pytest

from oracle_utils import H, REL_TOL, fd_grad, rel_err
from vidchain import autodiff as ad
from vidchain.autodiff import (GradientError, GradTape, NumericsError, Tensor,
                               backward)
from vidchain.rng import RandomStream


def grad_of(build, x0):
    """Autodiff gradient of a scalar-building function w.r.t. one array input."""
    x = Tensor(x0, requires_grad=True)
    with GradTape():
        loss = build(x)
    return backward(loss, [x])[0]


def check_primitive(build, x0):
    """Full-entry finite-difference check of one primitive wrapped in a scalar."""
    an = grad_of(build, x0)
    fd = fd_grad(lambda v: build(Tensor(v, requires_grad=True)).item(), x0)
    assert rel_err(an, fd) < REL_TOL


# -- elementwise primitives ----------------------------------------------------

RS = RandomStream.from_seed(2024)


def weighted(prim):
    """Scalarize a primitive through a fixed random weighting (full Jacobian)."""
    w = Tensor(RS.split(prim.__name__).normal((3, 4)))
    return lambda x: ad.sum(ad.mul(prim(x), w))


def away_from(points, x, margin=0.05):
    """Nudge samples so no entry sits within `margin` of a kink point."""
    for p in points:
        near = np.abs(x - p) < margin
        x = np.where(near, p + 2 * margin, x)
    return x


@pytest.mark.parametrize("prim,sampler", [
    (ad.neg, lambda r: r.normal((3, 4))),
    (ad.square, lambda r: r.normal((3, 4))),
    (ad.tanh, lambda r: r.normal((3, 4), scale=2.0)),
    (ad.sigmoid, lambda r: r.normal((3, 4), scale=3.0)),
    (ad.exp, lambda r: r.normal((3, 4))),
    (ad.log, lambda r: r.uniform((3, 4), 0.5, 3.0)),
    # kink-bearing primitive sampled away from its kink
    (ad.relu, lambda r: away_from([0.0], r.normal((3, 4)))),
])
def test_elementwise_gradients(prim, sampler):
    x0 = sampler(RandomStream.from_seed(11).split(prim.__name__))
    check_primitive(weighted(prim), x0)


def test_clip_gradient_away_from_boundaries():
    x0 = away_from([-1.5, 1.5], RandomStream.from_seed(12).normal((3, 4), scale=3.0))
    check_primitive(weighted(lambda t: ad.clip(t, -1.5, 1.5)), x0)


def test_clip_zeroes_gradient_outside_range():
    g = grad_of(lambda x: ad.sum(ad.clip(x, -1.0, 1.0)), np.array([-2.0, 0.5, 3.0]))
    assert np.array_equal(g, [0.0, 1.0, 0.0])


def test_add_sub_mul_gradients_both_args_with_broadcast():
    r = RandomStream.from_seed(13)
    a0 = r.normal((3, 4))
    b0 = r.normal((1, 4))  # broadcast across rows
    for op in (ad.add, ad.sub, ad.mul):
        w = Tensor(r.normal((3, 4)))
        for side in (0, 1):
            def build(x, side=side, op=op, w=w):
                args = [Tensor(a0), Tensor(b0)]
                args[side] = x
                return ad.sum(ad.mul(op(*args), w))
            x0 = (a0, b0)[side]
            check_primitive(build, x0)


def test_matmul_and_affine_gradients():
    r = RandomStream.from_seed(14)
    x0, w0, b0 = r.normal((5, 3)), r.normal((3, 2)), r.normal(2)
    s = Tensor(r.normal((5, 2)))
    check_primitive(lambda t: ad.sum(ad.mul(ad.matmul(t, Tensor(w0)), s)), x0)
    check_primitive(lambda t: ad.sum(ad.mul(ad.matmul(Tensor(x0), t), s)), w0)
    check_primitive(lambda t: ad.sum(ad.mul(ad.affine(t, Tensor(w0), Tensor(b0)), s)), x0)
    check_primitive(lambda t: ad.sum(ad.mul(ad.affine(Tensor(x0), t, Tensor(b0)), s)), w0)
    check_primitive(lambda t: ad.sum(ad.mul(ad.affine(Tensor(x0), Tensor(w0), t), s)), b0)


@pytest.mark.parametrize("axis,keepdims", [(None, False), (0, False), (1, True), ((0, 1), False)])
def test_reduction_gradients(axis, keepdims):
    r = RandomStream.from_seed(15)
    x0 = r.normal((4, 3))
    for red in (ad.sum, ad.mean):
        def build(t, red=red):
            out = red(t, axis=axis, keepdims=keepdims)
            w = Tensor(np.linspace(0.5, 1.5, out.size).reshape(out.shape))
            return ad.sum(ad.mul(out, w))
        check_primitive(build, x0)


def test_reshape_broadcast_concat_slice_gradients():
    r = RandomStream.from_seed(16)
    x0 = r.normal((2, 6))
    w = Tensor(r.normal((3, 4)))
    check_primitive(lambda t: ad.sum(ad.mul(ad.reshape(t, (3, 4)), w)), x0)

    y0 = r.normal((1, 4))
    wb = Tensor(r.normal((5, 4)))
    check_primitive(lambda t: ad.sum(ad.mul(ad.broadcast_to(t, (5, 4)), wb)), y0)

    a0, b0 = r.normal((2, 3)), r.normal((2, 3))
    wc = Tensor(r.normal((4, 3)))
    check_primitive(lambda t: ad.sum(ad.mul(ad.concat([t, Tensor(b0)], axis=0), wc)), a0)
    check_primitive(lambda t: ad.sum(ad.mul(ad.concat([Tensor(a0), t], axis=0), wc)), b0)

    z0 = r.normal((4, 5))
    ws = Tensor(r.normal((2, 3)))
    check_primitive(lambda t: ad.sum(ad.mul(t[1:3, ::2], ws)), z0)
    check_primitive(lambda t: ad.sum(ad.square(t[2])), z0)


# -- backward semantics ---------------------------------------------------------

def test_polynomial_derivative():
    g = grad_of(lambda x: ad.sum(ad.square(x)), np.array([3.0]))
    assert abs(g[0] - 6.0) < 1e-12


def test_sigmoid_net_matches_finite_differences():
    r = RandomStream.from_seed(17)
    w0 = r.normal((4, 4))
    v = Tensor(r.normal((4, 1)))
    build = lambda W: ad.sum(ad.sigmoid(ad.matmul(W, v)))
    an = grad_of(build, w0)
    fd = fd_grad(lambda W: build(Tensor(W, requires_grad=True)).item(), w0, h=H)
    assert rel_err(an, fd) < REL_TOL


def test_untouched_parameter_gets_zero_gradient():
    x = Tensor([1.0, 2.0], requires_grad=True)
    unused = Tensor(np.ones((3, 3)), requires_grad=True)
    with GradTape():
        loss = ad.sum(ad.square(x))
    gx, gu = backward(loss, [x, unused])
    assert np.array_equal(gu, np.zeros((3, 3)))
    assert np.array_equal(gx, [2.0, 4.0])


def test_gradient_accumulates_across_multiple_uses():
    # loss = sum((x + x) * x) = 2 * sum(x^2)  =>  grad 4x
    x = Tensor([1.0, -2.0], requires_grad=True)
    with GradTape():
        loss = ad.sum(ad.mul(ad.add(x, x), x))
    g = backward(loss, [x])[0]
    assert np.allclose(g, [4.0, -8.0])


def test_non_scalar_loss_rejected():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with GradTape():
        out = ad.square(x)
    with pytest.raises(GradientError, match="scalar"):
        backward(out, [x])


def test_non_parameter_rejected():
    x = Tensor([1.0], requires_grad=True)
    c = Tensor([1.0])
    with GradTape():
        loss = ad.sum(x)
    with pytest.raises(GradientError):
        backward(loss, [x, c])


def test_forward_nonfinite_is_an_error_naming_the_primitive():
    with pytest.raises(NumericsError, match="log"):
        ad.log(Tensor([0.0]))
    with pytest.raises(NumericsError, match="exp"):
        ad.exp(Tensor([1000.0]))


def test_backward_nonfinite_reports_producing_primitive():
    # exp(x)^3 at x=236.4: forward stays below the float64 ceiling, but the
    # gradient 3*exp(3x) overflows while replaying the exp record.
    x = Tensor([236.4], requires_grad=True)
    with GradTape():
        e = ad.exp(x)
        loss = ad.sum(ad.mul(ad.mul(e, e), e))
    with pytest.raises(GradientError, match="exp"):
        backward(loss, [x])


def test_detach_blocks_gradient():
    x = Tensor([2.0], requires_grad=True)
    with GradTape():
        loss = ad.sum(ad.mul(ad.detach(ad.square(x)), x))
    g = backward(loss, [x])[0]
    assert np.allclose(g, [4.0])  # only the direct factor contributes


def test_tensors_are_immutable():
    t = Tensor([1.0, 2.0])
    with pytest.raises(ValueError):
        t.data[0] = 5.0


def test_constructor_rejects_nonfinite():
    with pytest.raises(NumericsError):
        Tensor([np.nan])
    with pytest.raises(NumericsError):
        Tensor([np.inf])


def test_ops_outside_tape_are_not_recorded():
    x = Tensor([1.0], requires_grad=True)
    y = ad.square(x)  # no active tape
    assert y._tape is None
    with GradTape() as tape:
        z = ad.square(x)
    assert len(tape.records) == 1 and z._tape is tape


def test_loss_with_no_tracked_path_gives_zeros():
    x = Tensor([1.0], requires_grad=True)
    with GradTape():
        loss = ad.sum(ad.square(Tensor([3.0])))
    assert np.array_equal(backward(loss, [x])[0], [0.0])
