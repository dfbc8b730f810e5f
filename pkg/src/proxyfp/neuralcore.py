"""Minimal tensor network with exact analytic gradients.

Two fixed architectures are supported, both built from one layer type that
optionally nearest-neighbor-upsamples its input, applies a stride-1 "same"
convolution (or a dense product), an activation, and an average pool:

encoder   conv 3x3 (1->8) relu, avg-pool 2x2 -> conv 3x3 (8->2) relu
          -> flatten, latent length H/2 * W/2 * 2
decoder   reshape -> conv 3x3 (2->8) relu -> upsample 2x ->
          conv 3x3 (8->8) relu -> conv 3x3 (8->1) sigmoid

Everything is float64 numpy; no autodiff framework. Each backward pass is
the hand-derived adjoint of its forward pass, verified against central
finite differences in the test suite.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import matching
from .config import PipelineConfig
from .errors import DimensionError, TrainingError

MODEL_MAGIC = b"PXNN"
MODEL_VERSION = 1

_KIND_CODES = {"conv": 0, "dense": 1}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}
_ACT_CODES = {"none": 0, "relu": 1, "sigmoid": 2}
_ACT_NAMES = {v: k for k, v in _ACT_CODES.items()}


@dataclass(frozen=True)
class Layer:
    kind: str                 # "conv" | "dense"
    weights: np.ndarray       # conv: (kh, kw, cin, cout); dense: (din, dout)
    bias: np.ndarray          # (cout,) / (dout,)
    activation: str = "none"  # "relu" | "sigmoid" | "none"
    stride: int = 1
    padding: int = 1
    pool: int = 1             # average pool after activation
    upsample: int = 1         # nearest-neighbor upsample before the conv

    def geometry(self) -> tuple[int, int, int, int, int, int]:
        if self.kind == "conv":
            kh, kw = self.weights.shape[:2]
            return (kh, kw, self.stride, self.padding, self.pool, self.upsample)
        din, dout = self.weights.shape
        return (din, dout, 0, 0, 0, 0)


@dataclass(frozen=True)
class ModelParameters:
    layers: tuple[Layer, ...]

    def parameter_arrays(self) -> list[np.ndarray]:
        arrays = []
        for layer in self.layers:
            arrays.append(layer.weights)
            arrays.append(layer.bias)
        return arrays


@dataclass(frozen=True)
class AdamState:
    step: int
    m: tuple[np.ndarray, ...]
    v: tuple[np.ndarray, ...]
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    learning_rate: float = 1e-3


def init_adam(params: ModelParameters, learning_rate: float = 1e-3,
              beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8) -> AdamState:
    arrays = params.parameter_arrays()
    return AdamState(
        step=0,
        m=tuple(np.zeros_like(a) for a in arrays),
        v=tuple(np.zeros_like(a) for a in arrays),
        beta1=beta1, beta2=beta2, epsilon=epsilon, learning_rate=learning_rate,
    )


# -- initialization -----------------------------------------------------------

def _glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def _conv_layer(rng, cin, cout, activation, pool=1, upsample=1, k=3) -> Layer:
    w = _glorot_uniform(rng, (k, k, cin, cout), k * k * cin, k * k * cout)
    return Layer(kind="conv", weights=w, bias=np.zeros(cout), activation=activation,
                 padding=k // 2, pool=pool, upsample=upsample)


def encoder_parameters(seed: int) -> ModelParameters:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=[seed, 0xE0C]))
    return ModelParameters(layers=(
        _conv_layer(rng, 1, 8, "relu", pool=2),
        _conv_layer(rng, 8, 2, "relu"),
    ))


def decoder_parameters(seed: int) -> ModelParameters:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=[seed, 0xDEC]))
    return ModelParameters(layers=(
        _conv_layer(rng, 2, 8, "relu"),
        _conv_layer(rng, 8, 8, "relu", upsample=2),
        _conv_layer(rng, 8, 1, "sigmoid"),
    ))


@dataclass(frozen=True)
class Autoencoder:
    encoder: ModelParameters
    decoder: ModelParameters


# -- layer forward / backward --------------------------------------------------

def _upsample_nn(x: np.ndarray, k: int) -> np.ndarray:
    return np.repeat(np.repeat(x, k, axis=0), k, axis=1)


def _upsample_nn_backward(grad: np.ndarray, k: int) -> np.ndarray:
    h, w, c = grad.shape
    return grad.reshape(h // k, k, w // k, k, c).sum(axis=(1, 3))


def _avgpool(x: np.ndarray, k: int) -> np.ndarray:
    h, w, c = x.shape
    if h % k or w % k:
        raise DimensionError(f"pool size {k} does not divide {x.shape}")
    return x.reshape(h // k, k, w // k, k, c).mean(axis=(1, 3))


def _avgpool_backward(grad: np.ndarray, k: int) -> np.ndarray:
    return np.repeat(np.repeat(grad, k, axis=0), k, axis=1) / (k * k)


def _conv_same(x: np.ndarray, weights: np.ndarray, bias: np.ndarray, padding: int):
    """Stride-1 same convolution via an im2col matrix product.

    Returns the pre-activation map and the patch matrix needed for the
    weight gradient.
    """
    kh, kw, cin, cout = weights.shape
    h, w, c = x.shape
    if c != cin:
        raise DimensionError(f"conv expects {cin} channels, got {c}")
    xp = np.pad(x, ((padding, padding), (padding, padding), (0, 0)))
    windows = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(0, 1))
    # windows: (h, w, cin, kh, kw) -> patches (h*w, kh*kw*cin) matching
    # the (kh, kw, cin) ordering of the weight tensor
    patches = windows.transpose(0, 1, 3, 4, 2).reshape(h * w, kh * kw * cin)
    out = patches @ weights.reshape(kh * kw * cin, cout) + bias
    return out.reshape(h, w, cout), patches


def _conv_backward(grad_out: np.ndarray, patches: np.ndarray, weights: np.ndarray,
                   input_shape: tuple[int, int, int], padding: int):
    kh, kw, cin, cout = weights.shape
    h, w, _ = input_shape
    g = grad_out.reshape(h * w, cout)
    grad_w = (patches.T @ g).reshape(kh, kw, cin, cout)
    grad_b = g.sum(axis=0)
    dpatches = (g @ weights.reshape(kh * kw * cin, cout).T).reshape(h, w, kh, kw, cin)
    grad_xp = np.zeros((h + 2 * padding, w + 2 * padding, cin))
    for i in range(kh):
        for j in range(kw):
            grad_xp[i : i + h, j : j + w, :] += dpatches[:, :, i, j, :]
    grad_x = grad_xp[padding : padding + h, padding : padding + w, :]
    return grad_x, grad_w, grad_b


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    if activation == "none":
        return z
    raise DimensionError(f"unknown activation {activation!r}")


def _activate_backward(grad: np.ndarray, z: np.ndarray, a: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return grad * (z > 0.0)
    if activation == "sigmoid":
        return grad * a * (1.0 - a)
    return grad


def layer_forward(layer: Layer, x: np.ndarray):
    """Returns (output, cache) where cache feeds layer_backward."""
    if layer.kind == "dense":
        xin = x.reshape(-1)
        if xin.size != layer.weights.shape[0]:
            raise DimensionError(
                f"dense expects input {layer.weights.shape[0]}, got {xin.size}")
        z = xin @ layer.weights + layer.bias
        a = _activate(z, layer.activation)
        return a, ("dense", xin, z, a)
    xu = _upsample_nn(x, layer.upsample) if layer.upsample > 1 else x
    z, patches = _conv_same(xu, layer.weights, layer.bias, layer.padding)
    a = _activate(z, layer.activation)
    y = _avgpool(a, layer.pool) if layer.pool > 1 else a
    return y, ("conv", xu.shape, patches, z, a)


def layer_backward(layer: Layer, cache, grad_out: np.ndarray):
    """Returns (grad_input, grad_weights, grad_bias)."""
    if cache[0] == "dense":
        _, xin, z, a = cache
        gz = _activate_backward(grad_out.reshape(-1), z, a, layer.activation)
        grad_w = np.outer(xin, gz)
        grad_b = gz
        grad_x = layer.weights @ gz
        return grad_x, grad_w, grad_b
    _, xu_shape, patches, z, a = cache
    ga = _avgpool_backward(grad_out, layer.pool) if layer.pool > 1 else grad_out
    gz = _activate_backward(ga, z, a, layer.activation)
    grad_x, grad_w, grad_b = _conv_backward(gz, patches, layer.weights, xu_shape, layer.padding)
    if layer.upsample > 1:
        grad_x = _upsample_nn_backward(grad_x, layer.upsample)
    return grad_x, grad_w, grad_b


def forward(params: ModelParameters, x: np.ndarray, keep_cache: bool = False):
    caches = []
    out = x
    for layer in params.layers:
        out, cache = layer_forward(layer, out)
        if keep_cache:
            caches.append(cache)
    return (out, caches) if keep_cache else out


def backward(params: ModelParameters, caches, grad_out: np.ndarray):
    """Gradients for every layer plus the input gradient."""
    grads = [None] * len(params.layers)
    grad = grad_out
    for idx in range(len(params.layers) - 1, -1, -1):
        grad, gw, gb = layer_backward(params.layers[idx], caches[idx], grad)
        grads[idx] = (gw, gb)
    return grads, grad


# -- the two fixed maps ---------------------------------------------------------

def _as_hwc(image: np.ndarray) -> np.ndarray:
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise DimensionError(f"expected 2-D or 3-D image, got shape {arr.shape}")
    return arr


def encode(image: np.ndarray, params: ModelParameters,
           config: PipelineConfig | None = None) -> np.ndarray:
    """Image -> flat latent vector (row-major flatten of the feature map)."""
    x = _as_hwc(image)
    if config is not None and x.shape[:2] != (config.height, config.width):
        raise DimensionError(
            f"image shape {x.shape[:2]} != configured {(config.height, config.width)}")
    out = forward(params, x)
    return out.reshape(-1)


def decode(latent: np.ndarray, params: ModelParameters,
           config: PipelineConfig | None = None) -> np.ndarray:
    """Flat latent -> H x W x 1 image; all values in (0, 1) via sigmoid."""
    cfg = config or PipelineConfig()
    vec = np.asarray(latent, dtype=np.float64).reshape(-1)
    if vec.size != cfg.latent_length:
        raise DimensionError(f"latent length {vec.size} != {cfg.latent_length}")
    fmap = vec.reshape(cfg.height // 2, cfg.width // 2, 2)
    return forward(params, fmap)


# -- losses ---------------------------------------------------------------------

def reconstruction_loss(x: np.ndarray, x_hat: np.ndarray):
    """Mean squared error over pixels, with its gradient w.r.t. x_hat."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(x_hat, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shapes differ: {a.shape} vs {b.shape}")
    diff = b - a
    loss = float((diff ** 2).mean())
    grad = 2.0 * diff / diff.size
    return loss, grad


def mssim_loss(x: np.ndarray, y: np.ndarray, patch: int = matching.PATCH):
    """loss = 1 - MSSIM(x, y) and its exact gradient w.r.t. y.

    The gradient goes through each tile's mean, variance, and covariance;
    pixels outside the tiling (right/bottom remainder) get zero gradient.
    """
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    squeeze = xs.ndim == 3
    if squeeze:
        if xs.shape[2] != 1 or ys.shape[2] != 1:
            raise DimensionError("mssim_loss expects single-channel images")
        xs, ys = xs[:, :, 0], ys[:, :, 0]
    if xs.shape != ys.shape:
        raise DimensionError(f"shapes differ: {xs.shape} vs {ys.shape}")

    h, w = xs.shape
    ty, tx = h // patch, w // patch
    if ty == 0 or tx == 0:
        raise DimensionError(f"image {xs.shape} smaller than one {patch}x{patch} patch")
    n = patch * patch
    m = ty * tx
    c1 = (matching.SSIM_K1 * matching.DATA_RANGE) ** 2
    c2 = (matching.SSIM_K2 * matching.DATA_RANGE) ** 2

    xv = xs[: ty * patch, : tx * patch].reshape(ty, patch, tx, patch)
    yv = ys[: ty * patch, : tx * patch].reshape(ty, patch, tx, patch)
    mu_x = xv.mean(axis=(1, 3))[:, None, :, None]
    mu_y = yv.mean(axis=(1, 3))[:, None, :, None]
    dx = xv - mu_x
    dy = yv - mu_y
    var_x = (dx ** 2).mean(axis=(1, 3))[:, None, :, None]
    var_y = (dy ** 2).mean(axis=(1, 3))[:, None, :, None]
    cov = (dx * dy).mean(axis=(1, 3))[:, None, :, None]

    a1 = 2.0 * mu_x * mu_y + c1
    b1 = mu_x ** 2 + mu_y ** 2 + c1
    a2 = 2.0 * cov + c2
    b2 = var_x + var_y + c2
    ssim = (a1 * a2) / (b1 * b2)  # one entry per tile, shape (ty, 1, tx, 1)
    loss = 1.0 - float(ssim.mean())

    # d ssim / d y_i, per tile:
    #   = (2/n) * [ (mu_x*a2 + dx_i*a1) * b1*b2 - a1*a2 * (mu_y*b2 + dy_i*b1) ] / (b1*b2)^2
    denom = (b1 * b2) ** 2
    dssim = (2.0 / n) * ((mu_x * a2 + dx * a1) * b1 * b2 - a1 * a2 * (mu_y * b2 + dy * b1)) / denom
    grad = np.zeros_like(ys)
    grad[: ty * patch, : tx * patch] = (-dssim / m).reshape(ty * patch, tx * patch)
    if squeeze:
        grad = grad[:, :, None]
    return loss, grad


# -- optimizer -------------------------------------------------------------------

def adam_step(params: ModelParameters, grads, state: AdamState):
    """One Adam update with bias correction; returns new params and state."""
    arrays = params.parameter_arrays()
    flat_grads = []
    for li, (gw, gb) in enumerate(grads):
        if not (np.isfinite(gw).all() and np.isfinite(gb).all()):
            raise TrainingError(f"non-finite gradient in layer {li}", layer_index=li)
        flat_grads.extend([gw, gb])
    t = state.step + 1
    new_m, new_v, new_arrays = [], [], []
    for a, g, m, v in zip(arrays, flat_grads, state.m, state.v):
        m1 = state.beta1 * m + (1.0 - state.beta1) * g
        v1 = state.beta2 * v + (1.0 - state.beta2) * g * g
        m_hat = m1 / (1.0 - state.beta1 ** t)
        v_hat = v1 / (1.0 - state.beta2 ** t)
        new_arrays.append(a - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon))
        new_m.append(m1)
        new_v.append(v1)
    layers = []
    for i, layer in enumerate(params.layers):
        layers.append(replace(layer, weights=new_arrays[2 * i], bias=new_arrays[2 * i + 1]))
    return (ModelParameters(layers=tuple(layers)),
            replace(state, step=t, m=tuple(new_m), v=tuple(new_v)))


# -- training loops ---------------------------------------------------------------

@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    heldout_loss: float


def _check_loss(loss: float, what: str) -> None:
    if not np.isfinite(loss):
        raise TrainingError(f"{what} loss diverged (non-finite)")


def train_autoencoder(images: list[np.ndarray], config: PipelineConfig,
                      seed: int, epochs: int | None = None,
                      progress=None) -> tuple[Autoencoder, list[EpochLog]]:
    """Train encoder+decoder for reconstruction (MSE) with Adam.

    `images` are H x W arrays in [0, 1]. A held-out fraction is split off
    deterministically for the per-epoch log. Returns the trained pair plus
    one log row per epoch.
    """
    if not images:
        raise TrainingError("empty training corpus")
    epochs = config.ae_epochs if epochs is None else epochs
    rng = np.random.default_rng(np.random.SeedSequence(entropy=[seed, 0xAE]))
    order = rng.permutation(len(images))
    n_heldout = int(round(len(images) * config.heldout_fraction))
    n_heldout = min(n_heldout, len(images) - 1)
    heldout_idx = order[:n_heldout]
    train_idx = order[n_heldout:]

    enc = encoder_parameters(seed)
    dec = decoder_parameters(seed)
    opt_enc = init_adam(enc, config.ae_learning_rate, config.adam_beta1,
                        config.adam_beta2, config.adam_epsilon)
    opt_dec = init_adam(dec, config.ae_learning_rate, config.adam_beta1,
                        config.adam_beta2, config.adam_epsilon)
    samples = [_as_hwc(images[i]) for i in range(len(images))]

    logs: list[EpochLog] = []
    batch = max(1, config.ae_batch_size)
    for epoch in range(1, epochs + 1):
        perm = rng.permutation(train_idx)
        epoch_losses = []
        for start in range(0, len(perm), batch):
            idxs = perm[start : start + batch]
            grads_enc = grads_dec = None
            batch_loss = 0.0
            for i in idxs:
                x = samples[i]
                z, enc_cache = forward(enc, x, keep_cache=True)
                y, dec_cache = forward(dec, z, keep_cache=True)
                loss, grad_y = reconstruction_loss(x, y)
                batch_loss += loss
                g_dec, grad_z = backward(dec, dec_cache, grad_y)
                g_enc, _ = backward(enc, enc_cache, grad_z)
                grads_enc = _accumulate(grads_enc, g_enc)
                grads_dec = _accumulate(grads_dec, g_dec)
            scale = 1.0 / len(idxs)
            enc, opt_enc = adam_step(enc, _scale(grads_enc, scale), opt_enc)
            dec, opt_dec = adam_step(dec, _scale(grads_dec, scale), opt_dec)
            epoch_losses.append(batch_loss * scale)
        train_loss = float(np.mean(epoch_losses)) if epoch_losses else 0.0
        _check_loss(train_loss, "autoencoder")
        heldout_loss = _mean_reconstruction_loss(samples, heldout_idx, enc, dec)
        logs.append(EpochLog(epoch=epoch, train_loss=train_loss, heldout_loss=heldout_loss))
        if progress:
            progress(f"autoencoder epoch {epoch}/{epochs} "
                     f"train={train_loss:.5f} heldout={heldout_loss:.5f}")
    return Autoencoder(encoder=enc, decoder=dec), logs


def _mean_reconstruction_loss(samples, idxs, enc, dec) -> float:
    if len(idxs) == 0:
        return 0.0
    total = 0.0
    for i in idxs:
        x = samples[i]
        y = forward(dec, forward(enc, x))
        loss, _ = reconstruction_loss(x, y)
        total += loss
    return total / len(idxs)


def train_proxy_decoder(pairs: list[tuple[np.ndarray, np.ndarray]],
                        config: PipelineConfig, seed: int,
                        epochs: int | None = None,
                        progress=None) -> tuple[ModelParameters, list[EpochLog]]:
    """Train a decoder on (projected latent, target image) pairs.

    Loss is 1 - MSSIM(target, predicted); the encoder is not touched.
    Returns the decoder plus per-epoch mean losses (heldout column repeats
    the train loss; the pair list is the whole training set).
    """
    if not pairs:
        raise TrainingError("empty decoder training set")
    epochs = config.decoder_epochs if epochs is None else epochs
    rng = np.random.default_rng(np.random.SeedSequence(entropy=[seed, 0xDEC0]))
    dec = decoder_parameters(seed)
    opt = init_adam(dec, config.decoder_learning_rate, config.adam_beta1,
                    config.adam_beta2, config.adam_epsilon)
    latents = [np.asarray(p, dtype=np.float64).reshape(-1) for p, _ in pairs]
    targets = [_as_hwc(t) for _, t in pairs]
    fmap_shape = (config.height // 2, config.width // 2, 2)

    logs: list[EpochLog] = []
    batch = max(1, config.decoder_batch_size)
    for epoch in range(1, epochs + 1):
        perm = rng.permutation(len(pairs))
        epoch_losses = []
        for start in range(0, len(perm), batch):
            idxs = perm[start : start + batch]
            grads = None
            batch_loss = 0.0
            for i in idxs:
                fmap = latents[i].reshape(fmap_shape)
                y, cache = forward(dec, fmap, keep_cache=True)
                loss, grad_y = mssim_loss(targets[i], y, patch=config.patch_size)
                batch_loss += loss
                g, _ = backward(dec, cache, grad_y)
                grads = _accumulate(grads, g)
            scale = 1.0 / len(idxs)
            dec, opt = adam_step(dec, _scale(grads, scale), opt)
            epoch_losses.append(batch_loss * scale)
        train_loss = float(np.mean(epoch_losses))
        _check_loss(train_loss, "proxy decoder")
        logs.append(EpochLog(epoch=epoch, train_loss=train_loss, heldout_loss=train_loss))
        if progress:
            progress(f"decoder epoch {epoch}/{epochs} loss={train_loss:.5f}")
    return dec, logs


def _accumulate(acc, grads):
    if acc is None:
        return [(gw.copy(), gb.copy()) for gw, gb in grads]
    return [(aw + gw, ab + gb) for (aw, ab), (gw, gb) in zip(acc, grads)]


def _scale(grads, factor):
    return [(gw * factor, gb * factor) for gw, gb in grads]


# -- model files ------------------------------------------------------------------

def save_model(path: str | Path, params: ModelParameters) -> None:
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC)
        f.write(struct.pack("<II", MODEL_VERSION, len(params.layers)))
        for layer in params.layers:
            f.write(struct.pack("<BB", _KIND_CODES[layer.kind], _ACT_CODES[layer.activation]))
            f.write(struct.pack("<6I", *layer.geometry()))
            f.write(struct.pack("<QQ", layer.weights.size, layer.bias.size))
            f.write(layer.weights.astype("<f4").tobytes(order="C"))
            f.write(layer.bias.astype("<f4").tobytes(order="C"))


def load_model(path: str | Path) -> ModelParameters:
    with open(path, "rb") as f:
        if f.read(4) != MODEL_MAGIC:
            raise DimensionError(f"{path}: bad model magic")
        version, n_layers = struct.unpack("<II", f.read(8))
        if version != MODEL_VERSION:
            raise DimensionError(f"{path}: unsupported model version {version}")
        layers = []
        for _ in range(n_layers):
            kind_code, act_code = struct.unpack("<BB", f.read(2))
            geom = struct.unpack("<6I", f.read(24))
            wlen, blen = struct.unpack("<QQ", f.read(16))
            w = np.frombuffer(f.read(wlen * 4), dtype="<f4").astype(np.float64)
            b = np.frombuffer(f.read(blen * 4), dtype="<f4").astype(np.float64)
            kind = _KIND_NAMES[kind_code]
            if kind == "conv":
                kh, kw, stride, padding, pool, upsample = geom
                cout = blen
                cin = wlen // (kh * kw * cout)
                layers.append(Layer(kind="conv", weights=w.reshape(kh, kw, cin, cout),
                                    bias=b, activation=_ACT_NAMES[act_code],
                                    stride=stride, padding=padding, pool=pool,
                                    upsample=upsample))
            else:
                din, dout = geom[0], geom[1]
                layers.append(Layer(kind="dense", weights=w.reshape(din, dout), bias=b,
                                    activation=_ACT_NAMES[act_code]))
    return ModelParameters(layers=tuple(layers))


def write_training_log(path: str | Path, logs: list[EpochLog]) -> None:
    lines = ["epoch,train_loss,heldout_loss"]
    for row in logs:
        lines.append(f"{row.epoch},{row.train_loss!r},{row.heldout_loss!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
