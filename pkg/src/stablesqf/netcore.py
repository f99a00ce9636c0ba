"""Reverse-mode autodiff on numpy arrays, plus the optimizer plumbing.

The op set is deliberately small: dense layers, ReLU, slicing, and the few
loss-specific reductions the training objective needs.  Each node stores its
value, its parents and a closure that scatters the output gradient back to
the parents.  Nodes at kinks (ReLU, absolute values, pinball indicators) also
record the sign pattern of their input so finite-difference checks can detect
when a probe crossed a kink and redraw it.
"""

from __future__ import annotations

import numpy as np


class Var:
    """One node in the computation graph."""

    __slots__ = ("val", "grad", "parents", "_backward", "kink")

    def __init__(self, val, parents=(), backward=None, kink=None):
        self.val = val if isinstance(val, np.ndarray) else np.asarray(val, dtype=float)
        self.grad = None
        self.parents = parents
        self._backward = backward
        self.kink = kink

    def __repr__(self):
        return f"Var(shape={self.val.shape})"


def _as_var(x):
    return x if isinstance(x, Var) else Var(np.asarray(x, dtype=float))


def _topo(out: Var) -> list[Var]:
    order, seen, stack = [], set(), [(out, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            stack.append((p, False))
    return order


def backward(out: Var):
    """Accumulate d(out)/d(node) into .grad over the whole graph."""
    order = _topo(out)
    for v in order:
        if v.grad is None:
            v.grad = np.zeros_like(v.val)
    out.grad = out.grad + np.ones_like(out.val)
    for v in reversed(order):
        if v._backward is not None:
            v._backward(v.grad)


def collect_kinks(out: Var):
    """Concatenated sign pattern of every kinked op, in graph order."""
    parts = [v.kink.ravel() for v in _topo(out) if v.kink is not None]
    return np.concatenate(parts) if parts else None


# ---- ops ----


def linear(x, w: Var, b: Var) -> Var:
    """x @ w + b with x either a Var or a constant array."""
    x = _as_var(x)
    out = Var(x.val @ w.val + b.val, parents=(x, w, b))

    def back(g):
        x.grad += g @ w.val.T
        w.grad += x.val.T @ g
        b.grad += g.sum(axis=0)

    out._backward = back
    return out


def relu(x: Var) -> Var:
    mask = x.val > 0
    out = Var(np.where(mask, x.val, 0.0), parents=(x,), kink=np.sign(x.val))

    def back(g):
        x.grad += g * mask

    out._backward = back
    return out


def add(x: Var, y: Var) -> Var:
    out = Var(x.val + y.val, parents=(x, y))

    def back(g):
        x.grad += g
        y.grad += g

    out._backward = back
    return out


def sub(x: Var, y: Var) -> Var:
    out = Var(x.val - y.val, parents=(x, y))

    def back(g):
        x.grad += g
        y.grad -= g

    out._backward = back
    return out


def scale(x: Var, c) -> Var:
    """Multiply by a constant scalar or same-shaped array."""
    c = np.asarray(c, dtype=float)
    if c.ndim and c.shape != x.val.shape:
        raise ValueError("constant factor must be scalar or match the operand shape")
    out = Var(x.val * c, parents=(x,))

    def back(g):
        x.grad += g * c

    out._backward = back
    return out


def rows(x: Var, start: int, stop: int) -> Var:
    out = Var(x.val[start:stop], parents=(x,))

    def back(g):
        x.grad[start:stop] += g

    out._backward = back
    return out


def cols(x: Var, start: int, stop: int) -> Var:
    out = Var(x.val[:, start:stop], parents=(x,))

    def back(g):
        x.grad[:, start:stop] += g

    out._backward = back
    return out


def spline_apply(gamma: Var, beta: Var, basis: np.ndarray) -> Var:
    """gamma + beta @ basis; gamma is (B, 1), beta (B, L), basis (L, M)."""
    out = Var(gamma.val + beta.val @ basis, parents=(gamma, beta))

    def back(g):
        gamma.grad += g.sum(axis=1, keepdims=True)
        beta.grad += g @ basis.T

    out._backward = back
    return out


def pinball(q: Var, y: np.ndarray, alphas: np.ndarray) -> Var:
    """2 (1{y <= q} - alpha) (q - y), treating the indicator as locally constant."""
    y = np.asarray(y, dtype=float)[..., None]
    coef = 2.0 * ((y <= q.val).astype(float) - alphas)
    out = Var(coef * (q.val - y), parents=(q,), kink=np.sign(q.val - y))

    def back(g):
        q.grad += g * coef

    out._backward = back
    return out


def abspow(x: Var, p: float) -> Var:
    """|x|^p elementwise, p >= 1; subgradient 0 at the origin."""
    if p < 1:
        raise ValueError("order p must be at least 1")
    sgn = np.sign(x.val)
    a = np.abs(x.val)
    out = Var(a if p == 1.0 else a**p, parents=(x,), kink=sgn)
    slope = sgn if p == 1.0 else p * a ** (p - 1.0) * sgn

    def back(g):
        x.grad += g * slope

    out._backward = back
    return out


def wmean_last(x: Var, w: np.ndarray) -> Var:
    """Weighted mean over the trailing axis with constant weights."""
    w = np.asarray(w, dtype=float) / len(w)
    out = Var(x.val @ w, parents=(x,))

    def back(g):
        x.grad += g[..., None] * w

    out._backward = back
    return out


def powx(x: Var, e: float) -> Var:
    """x^e elementwise for x >= 0, with zero gradient pinned at x = 0."""
    out = Var(x.val**e, parents=(x,))
    slope = np.where(x.val > 0, e * x.val ** (e - 1.0), 0.0)

    def back(g):
        x.grad += g * slope

    out._backward = back
    return out


def vsum(x: Var) -> Var:
    out = Var(x.val.sum(), parents=(x,))

    def back(g):
        x.grad += g

    out._backward = back
    return out


# ---- parameters ----


class ParamStore:
    """All model parameters in one flat float64 vector with named views.

    Views share memory with the flat vector, so optimizer steps on the flat
    vector are visible through every view and vice versa.  Gradients live in
    a parallel flat vector with the same layout.
    """

    def __init__(self, layout):
        self.layout = []
        offset = 0
        for name, shape in layout:
            size = int(np.prod(shape))
            self.layout.append((name, tuple(shape), offset))
            offset += size
        self.size = offset
        self.theta = np.zeros(offset)
        self.grad = np.zeros(offset)
        self._views = {}
        self._gviews = {}
        for name, shape, off in self.layout:
            n = int(np.prod(shape))
            self._views[name] = self.theta[off : off + n].reshape(shape)
            self._gviews[name] = self.grad[off : off + n].reshape(shape)

    def names(self):
        return [name for name, _, _ in self.layout]

    def view(self, name: str) -> np.ndarray:
        return self._views[name]

    def leaf(self, name: str) -> Var:
        v = Var(self._views[name])
        v.grad = self._gviews[name]
        return v

    def zero_grad(self):
        self.grad[:] = 0.0


def init_uniform(store: ParamStore, rng: np.random.Generator):
    """Fill every weight and bias with U(-1/sqrt(fan_in), 1/sqrt(fan_in)).

    fan_in is the input width of the layer the pair belongs to; biases use
    the same bound as their weight matrix.
    """
    for name in store.names():
        v = store.view(name)
        if v.ndim == 2:
            bound = 1.0 / np.sqrt(v.shape[0])
            v[:] = rng.uniform(-bound, bound, size=v.shape)
        else:
            wname = name[:-2] + ".w" if name.endswith(".b") else None
            fan_in = store.view(wname).shape[0] if wname in store._views else v.shape[0]
            bound = 1.0 / np.sqrt(fan_in)
            v[:] = rng.uniform(-bound, bound, size=v.shape)


class Adam:
    """Adam with bias correction; operates in place on a flat vector."""

    def __init__(self, size: int, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray):
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        mhat = self.m / (1 - self.beta1**self.t)
        vhat = self.v / (1 - self.beta2**self.t)
        theta -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


class EmaTracker:
    """Exponential moving average of the parameter vector; the served weights."""

    def __init__(self, theta: np.ndarray, decay: float):
        self.decay = decay
        self.shadow = theta.copy()

    def update(self, theta: np.ndarray):
        self.shadow = self.decay * self.shadow + (1 - self.decay) * theta


# ---- finite-difference verification ----


def grad_check(
    loss_fn,
    values: np.ndarray,
    analytic_grad: np.ndarray,
    n_probes: int = 10,
    rng: np.random.Generator | None = None,
    step: float = 1e-5,
    max_retries: int = 25,
):
    """Compare analytic directional derivatives against central differences.

    loss_fn maps a flat vector to (loss, kink_signature or None).  A probe
    whose forward or backward evaluation lands on the far side of a kink
    (signature differs from the base point) is redrawn, because the two-sided
    difference is then not an estimate of the local derivative.  Returns the
    relative error of each accepted probe.
    """
    rng = rng or np.random.default_rng()
    base_loss, base_sig = loss_fn(values)
    errors = []
    for _ in range(n_probes):
        for _ in range(max_retries):
            u = rng.standard_normal(values.size)
            u /= np.linalg.norm(u)
            lp, sp = loss_fn(values + step * u)
            lm, sm = loss_fn(values - step * u)
            if base_sig is not None:
                if not (np.array_equal(sp, base_sig) and np.array_equal(sm, base_sig)):
                    continue
            numeric = (lp - lm) / (2 * step)
            analytic = float(analytic_grad @ u)
            denom = max(abs(numeric), abs(analytic), 1e-8)
            errors.append(abs(numeric - analytic) / denom)
            break
        else:
            raise RuntimeError("could not find a kink-free probe direction")
    return np.array(errors)
