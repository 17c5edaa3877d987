#!/usr/bin/env python3
"""Build a small computation graph, backpropagate through it, and confirm
the analytic gradients against central finite differences."""

import numpy as np

from dialact import autodiff as ad

# forward: a two-layer scalar loss over a 3x2 weight matrix
store = ad.ParamStore()
w1 = store.add("w1", np.array([[0.2, -0.4], [0.7, 0.1], [-0.3, 0.5]]))
w2 = store.add("w2", np.array([0.4, -0.2, 0.9]))
x = ad.constant([1.5, -2.0])


def loss() -> ad.Node:
    hidden = ad.tanh(w1 @ x)
    return ad.logsumexp(hidden * w2)


value = loss()
print(f"loss value: {float(value.value):.6f}")

# reverse pass: gradients land on the parameter nodes
ad.backward(value)
print("dL/dw1:")
print(w1.grad)
print("dL/dw2:", w2.grad)

# the same gradients, re-derived numerically
err = ad.grad_check(loss, store, eps=1e-5)
print(f"max relative error vs central finite differences: {err:.2e}")

# gradient accumulation across fan-out: f = g(x) + g(x) doubles the gradient
p = ad.parameter([0.3, -0.2])
ad.backward(ad.sum_all(ad.sigmoid(p)) + ad.sum_all(ad.sigmoid(p)))
q = ad.parameter([0.3, -0.2])
ad.backward(ad.sum_all(ad.sigmoid(q)))
print("fan-out doubles the gradient:", np.allclose(p.grad, 2 * q.grad))
