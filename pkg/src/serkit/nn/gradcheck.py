"""Central finite-difference gradient checks for layers and networks."""

import numpy as np

from .layers import Dropout
from .losses import cross_entropy_grad, one_hot

STEP = 1e-4


def relative_error(analytic, numeric):
    """Elementwise ``|a - n| / (|a| + 1e-8)``; returns the maximum."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric) / (np.abs(analytic) + 1e-8)))


def numeric_grad(f, array, step=STEP):
    """Central differences of scalar ``f()`` w.r.t. every entry of ``array`` (perturbed in place)."""
    grad = np.zeros(array.shape, dtype=np.float64)
    it = np.nditer(array, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = array[idx].copy()
        array[idx] = orig + step
        fp = f()
        array[idx] = orig - step
        fm = f()
        array[idx] = orig
        grad[idx] = (fp - fm) / (2 * step)
    return grad


def check_layer(layer, x, training=True, seed=0, step=STEP):
    """Compare analytic and numeric gradients of ``sum(layer(x) * G)``.

    ``G`` is a fixed random projection.  Returns ``{name: max relative error}``
    for the input and each trainable parameter.  Use float64 layers.
    """
    rng = np.random.default_rng(seed)
    x = np.array(x, dtype=np.float64)

    def run():
        if isinstance(layer, Dropout):
            layer.reseed(seed)
        return layer.forward(x, training)

    out = run()
    proj = rng.standard_normal(out.shape)
    for p in layer.params:
        p.zero_grad()
    dx = layer.backward(proj)
    analytic = {"input": dx}
    analytic.update({p.name: p.grad.copy() for p in layer.params if p.trainable})

    f = lambda: float(np.sum(run() * proj))
    errors = {"input": relative_error(dx, numeric_grad(f, x, step))}
    for p in layer.params:
        if p.trainable:
            errors[p.name] = relative_error(analytic[p.name], numeric_grad(f, p.value, step))
    return errors


def check_network(net, x, y, l2=0.0, l1=0.0, seed=0, step=STEP):
    """Gradient check of the full training loss of a float64 ``Sequential``.

    Dropout masks are frozen by reseeding before every forward pass.
    Returns ``{param label: max relative error}`` plus ``"input"``.
    """
    x = np.array(x, dtype=np.float64)

    def loss():
        net.reseed(seed)
        return net.loss_and_grad(x, y, l2, l1)[0]

    loss()
    analytic = {f"{layer.name}.{p.name}": p.grad.copy()
                for layer in net.layers for p in layer.params if p.trainable}
    net.reseed(seed)
    probs = net.forward(x, training=True)
    dx = net.backward(cross_entropy_grad(probs, one_hot(y, probs.shape[1], probs.dtype)))

    errors = {"input": relative_error(dx, numeric_grad(loss, x, step))}
    for key, grad in analytic.items():
        layer_name, pname = key.split(".")
        layer = next(lay for lay in net.layers if lay.name == layer_name)
        param = next(q for q in layer.params if q.name == pname)
        errors[key] = relative_error(grad, numeric_grad(loss, param.value, step))
    return errors
