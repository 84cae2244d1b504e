"""Categorical cross-entropy and weight penalties."""

import numpy as np

CE_EPS = 1e-7


def cross_entropy(probs, one_hot, eps=CE_EPS):
    """Mean over the batch of ``-sum(y * log(p + eps))``, accumulated in float64."""
    probs = np.asarray(probs)
    one_hot = np.asarray(one_hot)
    if probs.shape != one_hot.shape:
        raise ValueError(f"probs {probs.shape} and labels {one_hot.shape} differ in shape")
    p = probs.astype(np.float64)
    return float(-(one_hot * np.log(p + eps)).sum() / p.shape[0])


def cross_entropy_grad(probs, one_hot, eps=CE_EPS):
    return (-(one_hot / (probs + eps)) / probs.shape[0]).astype(probs.dtype)


def one_hot(labels, num_classes, dtype=np.float32):
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(f"labels must lie in [0, {num_classes})")
    out = np.zeros((labels.size, num_classes), dtype)
    out[np.arange(labels.size), labels] = 1
    return out


def penalty(params, l2=0.0, l1=0.0):
    """``l2 * sum(w**2) + l1 * sum(|w|)`` over regularized parameters."""
    total = 0.0
    for p in params:
        if p.regularize:
            v = p.value.astype(np.float64)
            total += l2 * float((v * v).sum()) + l1 * float(np.abs(v).sum())
    return total


def add_penalty_grad(params, l2=0.0, l1=0.0):
    for p in params:
        if p.regularize:
            if l2:
                p.grad += (2 * l2) * p.value
            if l1:
                p.grad += l1 * np.sign(p.value)
