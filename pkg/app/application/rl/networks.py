# app/application/rl/networks.py
"""
MLP de arquitectura fija (tanh en ocultas, salida lineal) con pasadas
hacia delante/atrás analíticas, política gaussiana diagonal y Adam.

Todos los parámetros viven en un único vector plano; las matrices de cada
capa son vistas sobre ese vector. Orden por capa: W (out x in, por filas)
y luego b (out).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from app.core.constants import ADAM_BETA1, ADAM_BETA2, ADAM_EPS
from app.domain.errors import DimensionError, NumericalError

LOG_2PI = float(np.log(2.0 * np.pi))


# ------------------------------
# Parámetros
# ------------------------------
@dataclass(frozen=True)
class MlpArch:
    sizes: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.sizes) < 2 or any(s <= 0 for s in self.sizes):
            raise DimensionError(f"arquitectura inválida: {self.sizes}")

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    def layer_slices(self) -> List[Tuple[slice, slice, Tuple[int, int]]]:
        out, off = [], 0
        for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]):
            w = slice(off, off + n_out * n_in); off += n_out * n_in
            b = slice(off, off + n_out); off += n_out
            out.append((w, b, (n_out, n_in)))
        return out

    @property
    def n_params(self) -> int:
        return sum(o * i + o for i, o in zip(self.sizes[:-1], self.sizes[1:]))


@dataclass
class MlpParams:
    arch: MlpArch
    flat: np.ndarray

    def __post_init__(self) -> None:
        self.flat = np.asarray(self.flat, dtype=np.float64)
        if self.flat.shape != (self.arch.n_params,):
            raise DimensionError(
                f"vector plano de {self.flat.shape} para {self.arch.n_params} parámetros"
            )

    def layers(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        return [(self.flat[w].reshape(shape), self.flat[b]) for w, b, shape in self.arch.layer_slices()]

    def with_flat(self, flat: np.ndarray) -> "MlpParams":
        return MlpParams(self.arch, np.array(flat, dtype=np.float64, copy=True))

    def copy(self) -> "MlpParams":
        return self.with_flat(self.flat)

    @property
    def n_in(self) -> int:
        return self.arch.sizes[0]

    @property
    def n_out(self) -> int:
        return self.arch.sizes[-1]


def init_mlp(sizes: Sequence[int], rng: np.random.Generator, out_scale: float = 1.0) -> MlpParams:
    """Uniforme en +-1/sqrt(fan_in); la última capa se escala por `out_scale`."""
    arch = MlpArch(tuple(int(s) for s in sizes))
    flat = np.zeros(arch.n_params)
    slices = arch.layer_slices()
    for k, (w, b, (n_out, n_in)) in enumerate(slices):
        bound = 1.0 / np.sqrt(n_in)
        scale = out_scale if k == len(slices) - 1 else 1.0
        flat[w] = scale * rng.uniform(-bound, bound, size=n_out * n_in)
        flat[b] = scale * rng.uniform(-bound, bound, size=n_out)
    return MlpParams(arch, flat)


@dataclass
class GradAccumulator:
    flat: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "GradAccumulator":
        return cls(np.zeros(n))

    def add(self, other: "GradAccumulator", scale: float = 1.0) -> "GradAccumulator":
        if other.flat.shape != self.flat.shape:
            raise DimensionError("acumuladores de tamaños distintos")
        self.flat += scale * other.flat
        return self

    def zero(self) -> None:
        self.flat[:] = 0.0

    def check_finite(self) -> None:
        if not np.all(np.isfinite(self.flat)):
            raise NumericalError("gradiente no finito")


# ------------------------------
# Pasadas
# ------------------------------
def _as_batch(p: MlpParams, x) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x.reshape(1, -1) if single else x
    if X.ndim != 2 or X.shape[1] != p.n_in:
        raise DimensionError(f"entrada de forma {x.shape}, la red espera {p.n_in}")
    return X, single


def _trace(p: MlpParams, X: np.ndarray) -> List[np.ndarray]:
    """Activaciones por capa (la primera es la entrada)."""
    acts = [X]
    layers = p.layers()
    for k, (W, b) in enumerate(layers):
        z = acts[-1] @ W.T + b
        acts.append(z if k == len(layers) - 1 else np.tanh(z))
    return acts


def mlp_forward(p: MlpParams, x) -> np.ndarray:
    X, single = _as_batch(p, x)
    out = _trace(p, X)[-1]
    return out[0] if single else out


def mlp_backward(p: MlpParams, x, upstream) -> Tuple[GradAccumulator, np.ndarray]:
    """
    Gradientes de sum(upstream * salida) respecto a parámetros (sumados en
    el lote) y a la entrada.
    """
    X, single = _as_batch(p, x)
    U = np.asarray(upstream, dtype=np.float64).reshape(X.shape[0], -1)
    if U.shape[1] != p.n_out:
        raise DimensionError(f"upstream de ancho {U.shape[1]}, salida {p.n_out}")
    acts = _trace(p, X)
    layers = p.layers()
    grad = np.zeros(p.arch.n_params)
    delta = U
    for k in range(len(layers) - 1, -1, -1):
        W, _ = layers[k]
        w_sl, b_sl, _ = p.arch.layer_slices()[k]
        grad[w_sl] = (delta.T @ acts[k]).ravel()
        grad[b_sl] = delta.sum(axis=0)
        delta = delta @ W
        if k > 0:
            delta = delta * (1.0 - acts[k] ** 2)
    input_grad = delta[0] if single else delta
    return GradAccumulator(grad), input_grad


# ------------------------------
# Política gaussiana
# ------------------------------
@dataclass
class GaussianPolicy:
    mean: MlpParams
    log_std: np.ndarray

    def __post_init__(self) -> None:
        self.log_std = np.asarray(self.log_std, dtype=np.float64)
        if self.log_std.shape != (self.mean.n_out,):
            raise DimensionError("log_std debe tener la dimensión de la acción")

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std)

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate([self.mean.flat, self.log_std])

    def with_flat(self, flat: np.ndarray) -> "GaussianPolicy":
        n = self.mean.arch.n_params
        return GaussianPolicy(self.mean.with_flat(flat[:n]), np.array(flat[n:], copy=True))

    def copy(self) -> "GaussianPolicy":
        return self.with_flat(self.flat)

    def sample(self, x, rng: np.random.Generator) -> np.ndarray:
        mu = mlp_forward(self.mean, x)
        return mu + self.std * rng.standard_normal(mu.shape)


def gaussian_logprob(pol: GaussianPolicy, x, u) -> np.ndarray:
    mu = mlp_forward(pol.mean, x)
    u = np.asarray(u, dtype=np.float64).reshape(mu.shape)
    z = (u - mu) / pol.std
    return -0.5 * np.sum(z * z, axis=-1) - np.sum(pol.log_std) - 0.5 * mu.shape[-1] * LOG_2PI


def gaussian_logprob_grad(pol: GaussianPolicy, x, u, weights=None) -> Tuple[np.ndarray, GradAccumulator]:
    """
    log pi(u|x) y el gradiente de sum_i w_i log pi(u_i|x_i) respecto a
    (parámetros de la media, log_std). Sin pesos, w_i = 1.
    """
    X, single = _as_batch(pol.mean, x)
    mu = mlp_forward(pol.mean, X)
    U = np.asarray(u, dtype=np.float64).reshape(mu.shape)
    wts = np.ones(X.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64).reshape(-1)
    var = pol.std ** 2
    diff = U - mu
    logp = -0.5 * np.sum(diff * diff / var, axis=1) - np.sum(pol.log_std) - 0.5 * mu.shape[1] * LOG_2PI
    g_mean, _ = mlp_backward(pol.mean, X, wts[:, None] * diff / var)
    g_log_std = np.sum(wts[:, None] * (diff * diff / var - 1.0), axis=0)
    grad = GradAccumulator(np.concatenate([g_mean.flat, g_log_std]))
    return (logp[0] if single else logp), grad


# ------------------------------
# Adam
# ------------------------------
@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def for_params(cls, p) -> "AdamState":
        n = p.flat.shape[0]
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(p, g: GradAccumulator, state: AdamState, lr: float):
    """Un paso de descenso de Adam; devuelve parámetros nuevos y actualiza `state`."""
    g.check_finite()
    if g.flat.shape != state.m.shape:
        raise DimensionError("gradiente y estado de Adam con tamaños distintos")
    state.t += 1
    state.m = ADAM_BETA1 * state.m + (1.0 - ADAM_BETA1) * g.flat
    state.v = ADAM_BETA2 * state.v + (1.0 - ADAM_BETA2) * g.flat * g.flat
    m_hat = state.m / (1.0 - ADAM_BETA1 ** state.t)
    v_hat = state.v / (1.0 - ADAM_BETA2 ** state.t)
    return p.with_flat(p.flat - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS))


def polyak(target: MlpParams, online: MlpParams, tau: float) -> MlpParams:
    return target.with_flat((1.0 - tau) * target.flat + tau * online.flat)


@dataclass
class Optimizer:
    """Adam con su estado, asociado a un conjunto de parámetros."""

    lr: float
    state: AdamState = field(default=None)  # type: ignore[assignment]

    def step(self, p, g: GradAccumulator):
        if self.state is None:
            self.state = AdamState.for_params(p)
        return adam_step(p, g, self.state, self.lr)
