"""Pairwise force kernels for the five similarity models.

Each kernel adds ``scale`` times a gradient of the per-pair loss with respect
to ``z_u`` into ``out``; the trainer then moves ``z_u`` against the summed
gradient. Model codes are small integers so the kernels can be dispatched
inside compiled loops.

For the three spring-electrical models the force factors (attractive
``t**2``, ``log(1+t)``, ``t``; repulsive ``1/t``) are displacement magnitudes
along the unit vector between the two points. The matching potentials are
``t**3/3``, ``(1+t)log(1+t) - t``, ``t**2/2`` and ``-log t``.
"""

import math

import numpy as np
from numba import njit

from .errors import ConfigError

SIGMOID, TDIST, FR, LINLOG, FORCEATLAS = 0, 1, 2, 3, 4

MODEL_CODES = {
    "sigmoid": SIGMOID,
    "tdist": TDIST,
    "fr": FR,
    "linlog": LINLOG,
    "forceatlas": FORCEATLAS,
}
SPRING_MODELS = ("fr", "linlog", "forceatlas")

DOT_CLAMP = 30.0
T_MIN = 1e-3


def model_code(name: str) -> int:
    try:
        return MODEL_CODES[name]
    except KeyError:
        raise ConfigError(f"unknown model {name!r}; choose from {sorted(MODEL_CODES)}") from None


@njit(inline="always")
def _sigmoid(x):
    if x > DOT_CLAMP:
        x = DOT_CLAMP
    elif x < -DOT_CLAMP:
        x = -DOT_CLAMP
    return 1.0 / (1.0 + math.exp(-x))


@njit(inline="always")
def _dot(a, b):
    s = 0.0
    for k in range(a.shape[0]):
        s += a[k] * b[k]
    return s


@njit(inline="always")
def _dist(a, b):
    s = 0.0
    for k in range(a.shape[0]):
        diff = a[k] - b[k]
        s += diff * diff
    return math.sqrt(s)


@njit(inline="always")
def attractive_coef(model, t):
    """Coefficient on ``z_u - z_v`` for distance-based models (t already clamped)."""
    if model == TDIST:
        return 2.0 / (1.0 + t * t)
    if model == FR:
        return t
    if model == LINLOG:
        return math.log1p(t) / t
    return 1.0  # FORCEATLAS


@njit(inline="always")
def repulsive_coef(model, t):
    if model == TDIST:
        return -2.0 / (t * t * (1.0 + t * t))
    return -1.0 / (t * t)  # spring models: (1/t) along -unit, divided by t


@njit(inline="always")
def add_attractive(model, zu, zv, scale, out):
    if model == SIGMOID:
        c = -(1.0 - _sigmoid(_dot(zu, zv))) * scale
        for k in range(zu.shape[0]):
            out[k] += c * zv[k]
        return
    t = _dist(zu, zv)
    if t < T_MIN:
        t = T_MIN
    c = attractive_coef(model, t) * scale
    for k in range(zu.shape[0]):
        out[k] += c * (zu[k] - zv[k])


@njit(inline="always")
def add_repulsive(model, zu, zv, scale, out):
    if model == SIGMOID:
        c = _sigmoid(_dot(zu, zv)) * scale
        for k in range(zu.shape[0]):
            out[k] += c * zv[k]
        return
    t = _dist(zu, zv)
    if t < T_MIN:
        t = T_MIN
    c = repulsive_coef(model, t) * scale
    for k in range(zu.shape[0]):
        out[k] += c * (zu[k] - zv[k])


@njit(inline="always")
def attractive_loss(model, zu, zv):
    if model == SIGMOID:
        x = min(max(_dot(zu, zv), -DOT_CLAMP), DOT_CLAMP)
        return math.log1p(math.exp(-x))
    t = max(_dist(zu, zv), T_MIN)
    if model == TDIST:
        return math.log1p(t * t)
    if model == FR:
        return t * t * t / 3.0
    if model == LINLOG:
        return (1.0 + t) * math.log1p(t) - t
    return 0.5 * t * t


@njit(inline="always")
def repulsive_loss(model, zu, zv):
    if model == SIGMOID:
        x = min(max(_dot(zu, zv), -DOT_CLAMP), DOT_CLAMP)
        return math.log1p(math.exp(x))
    t = max(_dist(zu, zv), T_MIN)
    if model == TDIST:
        return -math.log(t * t / (1.0 + t * t))
    return -math.log(t)


@njit(cache=True)
def _pair_grads(model, zu, zv):
    a = np.zeros(zu.shape[0])
    r = np.zeros(zu.shape[0])
    add_attractive(model, zu, zv, 1.0, a)
    add_repulsive(model, zu, zv, 1.0, r)
    return a, r


@njit(cache=True)
def _pair_losses(model, zu, zv):
    return attractive_loss(model, zu, zv), repulsive_loss(model, zu, zv)


def _vec(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float64)


def sigmoid_grads(zu, zv) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of ``log(1+e^-x)`` and ``log(1+e^x)`` in ``z_u``, with ``x = z_u . z_v``."""
    return _pair_grads(SIGMOID, _vec(zu), _vec(zv))


def tdist_grads(zu, zv) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of ``log(1+t^2)`` and ``-log(t^2/(1+t^2))`` in ``z_u``, ``t = |z_u - z_v|``."""
    return _pair_grads(TDIST, _vec(zu), _vec(zv))


def spring_grads(model: str, zu, zv) -> tuple[np.ndarray, np.ndarray]:
    """Attractive and repulsive *moves* of ``z_u`` under a spring-electrical model.

    Unlike the two functions above these are displacements, not gradients:
    with ``u_hat = (z_u - z_v)/t`` the attractive move is ``-factor(t) * u_hat``
    and the repulsive move is ``+u_hat / t``. The trainer applies them with
    the opposite sign convention, i.e. as gradients ``-move``.
    """
    if model not in SPRING_MODELS:
        raise ConfigError(f"unknown spring model {model!r}; choose from {SPRING_MODELS}")
    a, r = _pair_grads(MODEL_CODES[model], _vec(zu), _vec(zv))
    return -a, -r


def pair_losses(model: str, zu, zv) -> tuple[float, float]:
    """(attractive, repulsive) loss terms for one pair."""
    return _pair_losses(model_code(model), _vec(zu), _vec(zv))
