"""Two-layer networks in the mean-field regime as a :class:`GeneralModel`.

A neuron is a particle ``theta = (a, w)`` in ``R^{1 + d_in}`` with output
``f_theta(x) = tanh(a) tanh(<w, x>)``; the network predicts the average
over neurons. The loss functional is ``F0(rho) = sum_i l(f_rho(x_i), y_i)``
with squared loss ``l(u, y) = (u - y)^2 / 2``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ._validation import check_particles, check_positive
from .exceptions import ModelError
from .model import GeneralModel, finite_difference_gradient

__all__ = [
    "Dataset",
    "load_dataset",
    "toy_dataset",
    "predict",
    "predict_batch",
    "nn_F0",
    "nn_w2_grad",
    "nn_constants",
    "make_nn_model",
    "gradient_identity_error",
]

# max over s of |d^2/ds^2 tanh(s)| = max 2 sech^2(s) |tanh(s)|
_TANH_CURV = 4.0 / (3.0 * math.sqrt(3.0))


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.inputs, dtype=float)
        y = np.asarray(self.targets, dtype=float).reshape(-1)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] != y.size:
            raise ValueError(f"inputs {X.shape} and targets {y.shape} do not pair up")
        if y.size < 1:
            raise ValueError("a dataset needs at least one sample")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset entries must be finite")
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "targets", y)

    @property
    def n(self):
        return self.targets.size

    @property
    def d_in(self):
        return self.inputs.shape[1]

    @property
    def radius(self):
        return float(np.max(np.linalg.norm(self.inputs, axis=1)))


def _parse_rows(text, delimiter, source):
    rows, width = [], None
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    for lineno, raw in enumerate(reader, start=1):
        fields = [f.strip() for f in raw if f.strip() != ""]
        if not fields or fields[0].startswith("#"):
            continue
        try:
            values = [float(f) for f in fields]
        except ValueError:
            if not rows and width is None:
                # first non-empty line may be a header
                width = len(fields)
                continue
            raise ValueError(f"{source}: row {lineno}: non-numeric field in {raw!r}") from None
        if width is None:
            width = len(values)
        if len(values) != width:
            raise ValueError(f"{source}: row {lineno}: expected {width} columns, got {len(values)}")
        if width < 2:
            raise ValueError(f"{source}: row {lineno}: need at least one feature and a target")
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"{source}: row {lineno}: non-finite value")
        rows.append(values)
    if not rows:
        raise ValueError(f"{source}: no data rows")
    return np.array(rows)


def load_dataset(path, delimiter=","):
    """Read feature columns followed by one target column; a header row is optional."""
    with open(path, newline="") as fh:
        table = _parse_rows(fh.read(), delimiter, str(path))
    return Dataset(table[:, :-1], table[:, -1])


def toy_dataset():
    """Four-point XOR-like set on the coordinate axes, shipped as package data.

    Targets have the sign pattern of ``x1^2 - x2^2``; the network output is
    odd in ``x`` so a symmetric XOR target could not be fitted at all.
    """
    text = resources.files("mfsampling").joinpath("data/toy_xor.csv").read_text()
    table = _parse_rows(text, ",", "toy_xor.csv")
    return Dataset(table[:, :-1], table[:, -1])


def _split(neurons, d_in):
    theta = check_particles(neurons)
    if theta.shape[1] != 1 + d_in:
        raise ModelError(f"neuron dimension {theta.shape[1]} != 1 + d_in = {1 + d_in}")
    return theta[:, 0], theta[:, 1:]


def predict_batch(neurons, X):
    """Network output ``(1/N) sum_j tanh(a_j) tanh(<w_j, x>)`` for each row of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    a, w = _split(neurons, X.shape[1])
    return np.tanh(X @ w.T) @ np.tanh(a) / a.size


def predict(neurons, x):
    x = np.asarray(x, dtype=float).reshape(-1)
    return float(predict_batch(neurons, x[None, :])[0])


def nn_F0(neurons, data):
    r = predict_batch(neurons, data.inputs) - data.targets
    return 0.5 * float(r @ r)


def nn_w2_grad(neurons, theta, data):
    """Wasserstein gradient of :func:`nn_F0` at the neurons' empirical measure.

    ``theta`` may be one neuron ``(1 + d_in,)`` or a batch ``(M, 1 + d_in)``.
    """
    theta = np.asarray(theta, dtype=float)
    single = theta.ndim == 1
    T = np.atleast_2d(theta)
    a, w = _split(T, data.d_in)
    r = predict_batch(neurons, data.inputs) - data.targets          # (n,)
    s = np.tanh(data.inputs @ w.T)                                   # (n, M)
    ta = np.tanh(a)
    da = (1.0 - ta ** 2) * (r @ s)                                   # (M,)
    dw = ((r[:, None] * (1.0 - s ** 2)).T @ data.inputs) * ta[:, None]
    out = np.column_stack([da, dw])
    return out[0] if single else out


def nn_constants(data, radius=None):
    """Closed-form ``(B, beta)`` for the squared loss on data within ``radius``.

    With residuals bounded by ``1 + |y_i|`` (predictions lie in [-1, 1]):

    * ``||grad_theta f_theta(x)|| <= G = sqrt(1 + R^2)``, so the Wasserstein
      gradient is bounded by ``B = n (1 + max|y|) G``.
    * The Hessian of ``f_theta(x)`` in ``theta`` has Frobenius norm at most
      ``sqrt(c^2 + 2 R^2 + c^2 R^4)`` with ``c = 4 / (3 sqrt 3)``.
    * Moving ``theta`` costs ``(1 + |y_i|)`` times that curvature per data
      point; moving the measure by ``W1`` changes the residual by at most
      ``G W1``, costing another ``G^2``. Summing gives ``beta``.

    The squared loss has unbounded derivative, so these constants are only
    valid because the residuals are bounded on the given data.
    """
    R = data.radius if radius is None else check_positive(radius, "radius", strict=False)
    if R < data.radius * (1 - 1e-12):
        raise ValueError(f"radius {R:g} is smaller than the data radius {data.radius:g}")
    G = math.sqrt(1.0 + R * R)
    resid = 1.0 + np.abs(data.targets)
    B = data.n * float(resid.max()) * G
    curv = math.sqrt(_TANH_CURV ** 2 + 2.0 * R * R + _TANH_CURV ** 2 * R ** 4)
    beta = float(np.sum(resid * curv + G * G))
    return B, beta


def make_nn_model(data, lam, sigma, radius=None):
    """:class:`GeneralModel` for the network, with ``(B, beta)`` from :func:`nn_constants`."""
    B, beta = nn_constants(data, radius)

    def F0(x):
        return nn_F0(x, data)

    def w2_grad(x, points):
        return nn_w2_grad(x, points, data)

    return GeneralModel(F0=F0, w2_grad=w2_grad, lam=lam, sigma=sigma, beta=beta, B=B,
                        name="mean-field-nn",
                        meta={"family": "nn", "d_in": data.d_in, "n": data.n})


def gradient_identity_error(neurons, data, index=None, step=1e-6):
    """Relative gap between ``grad_{theta_i} (N F0)`` by central differences and the Wasserstein gradient.

    Checks one neuron when ``index`` is given, otherwise all of them, and
    returns the largest relative error.
    """
    theta = check_particles(neurons)
    N = theta.shape[0]
    idx = range(N) if index is None else [index]
    worst = 0.0
    for i in idx:
        def f(row, i=i):
            t = theta.copy()
            t[i] = row
            return N * nn_F0(t, data)

        fd = finite_difference_gradient(f, theta[i], step=step)
        an = nn_w2_grad(theta, theta[i], data)
        scale = max(np.linalg.norm(an), 1e-12)
        worst = max(worst, float(np.linalg.norm(fd - an) / scale))
    return worst
