"""User keys, key shares, latent salting, and orthonormal projection.

The protection transform is: salt the latent with a user key drawn from
N(0, 0.5), reshape the salted vector row-major to rows x cols, right-multiply
by a per-class orthonormal matrix built with modified Gram-Schmidt, and
flatten row-major again. Orthonormal columns make the projection an isometry,
so norms and pairwise distances survive the transform.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import N_CLASSES, derive_seed
from .errors import DimensionError, DomainError

MATRIX_MAGIC = b"PXMT"
KEYSHARE_MAGIC = b"PXKS"
FORMAT_VERSION = 1

KEY_SIGMA = 0.5  # user keys are N(0, 0.5)


@dataclass(frozen=True)
class UserKey:
    values: np.ndarray
    key_id: str


@dataclass(frozen=True)
class KeyShares:
    k1: np.ndarray  # user token share
    k2: np.ndarray  # system escrow share


@dataclass(frozen=True)
class ProjectionMatrix:
    class_index: int
    matrix: np.ndarray  # c x c, orthonormal columns
    seed: int
    retries: int = 0


@dataclass(frozen=True)
class SaltedLatent:
    values: np.ndarray


@dataclass(frozen=True)
class ProjectedLatent:
    values: np.ndarray
    class_index: int


def generate_key(seed: int, length: int) -> UserKey:
    """Deterministic Gaussian key, mean 0, standard deviation 0.5."""
    if length < 1:
        raise DomainError("key length must be >= 1")
    rng = np.random.default_rng(seed)
    return UserKey(values=rng.normal(0.0, KEY_SIGMA, size=length), key_id=f"key-{seed}")


def split_key(key: UserKey, seed: int) -> KeyShares:
    """Split K into shares with 0.5*k1 + 0.5*k2 == K.

    k1 is a fresh N(0, 0.5) draw, so either share alone is statistically
    independent of K; k2 = 2K - k1 closes the identity.
    """
    rng = np.random.default_rng(seed)
    k1 = rng.normal(0.0, KEY_SIGMA, size=key.values.shape)
    k2 = 2.0 * key.values - k1
    return KeyShares(k1=k1, k2=k2)


def recombine_shares(k1: np.ndarray, k2: np.ndarray) -> np.ndarray:
    k1 = np.asarray(k1, dtype=np.float64)
    k2 = np.asarray(k2, dtype=np.float64)
    if k1.shape != k2.shape:
        raise DimensionError(f"share lengths differ: {k1.shape} vs {k2.shape}")
    return 0.5 * k1 + 0.5 * k2


def salt(latent: np.ndarray, key: np.ndarray) -> SaltedLatent:
    latent = np.asarray(latent, dtype=np.float64)
    key = np.asarray(key, dtype=np.float64)
    if latent.shape != key.shape:
        raise DimensionError(f"latent/key lengths differ: {latent.shape} vs {key.shape}")
    return SaltedLatent(values=latent + key)


def gram_schmidt_matrix(seed: int, c: int, class_index: int = 0) -> ProjectionMatrix:
    """Orthonormal random c x c matrix via modified Gram-Schmidt.

    Columns of a seeded standard-Gaussian matrix are orthonormalized in
    place (right-looking MGS). A column whose residual norm collapses is
    redrawn from the same stream; the retry count is recorded.
    """
    if c < 1:
        raise DomainError("matrix dimension must be >= 1")
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(c, c))
    q = np.empty((c, c), dtype=np.float64)
    retries = 0
    tiny = 1e-12 * np.sqrt(c)
    for k in range(c):
        v = a[:, k].copy()
        while True:
            norm = np.linalg.norm(v)
            if norm > tiny:
                break
            retries += 1
            v = rng.normal(size=c)
            for j in range(k):
                v -= (q[:, j] @ v) * q[:, j]
        q[:, k] = v / norm
        if k + 1 < c:
            # project the new direction out of all remaining columns now
            a[:, k + 1 :] -= np.outer(q[:, k], q[:, k] @ a[:, k + 1 :])
    # one re-orthogonalization pass keeps max|QtQ - I| at machine precision
    for k in range(c):
        v = q[:, k]
        for j in range(k):
            v = v - (q[:, j] @ v) * q[:, j]
        q[:, k] = v / np.linalg.norm(v)
    return ProjectionMatrix(class_index=class_index, matrix=q, seed=seed, retries=retries)


def class_matrices(master_seed: int, c: int) -> dict[int, ProjectionMatrix]:
    """One orthonormal matrix per fingerprint class, seeded master XOR class."""
    return {
        i: gram_schmidt_matrix(master_seed ^ i, c, class_index=i)
        for i in range(1, N_CLASSES + 1)
    }


def project_latent(salted: SaltedLatent | np.ndarray, matrix: ProjectionMatrix,
                   rows: int, cols: int) -> ProjectedLatent:
    """Reshape row-major to rows x cols, right-multiply, flatten row-major."""
    values = salted.values if isinstance(salted, SaltedLatent) else np.asarray(salted, dtype=np.float64)
    if values.size != rows * cols:
        raise DimensionError(f"latent length {values.size} != {rows}*{cols}")
    m = matrix.matrix
    if m.shape != (cols, cols):
        raise DimensionError(f"matrix shape {m.shape} incompatible with cols={cols}")
    projected = values.reshape(rows, cols) @ m
    return ProjectedLatent(values=projected.reshape(-1), class_index=matrix.class_index)


# -- file formats -----------------------------------------------------------

def write_matrix(path: str | Path, pm: ProjectionMatrix) -> None:
    c = pm.matrix.shape[0]
    with open(path, "wb") as f:
        f.write(MATRIX_MAGIC)
        f.write(struct.pack("<III", FORMAT_VERSION, pm.class_index, c))
        f.write(pm.matrix.astype("<f8").tobytes(order="C"))


def read_matrix(path: str | Path) -> ProjectionMatrix:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != MATRIX_MAGIC:
            raise DimensionError(f"{path}: bad matrix magic {magic!r}")
        version, class_index, c = struct.unpack("<III", f.read(12))
        if version != FORMAT_VERSION:
            raise DimensionError(f"{path}: unsupported matrix format version {version}")
        data = np.frombuffer(f.read(c * c * 8), dtype="<f8").reshape(c, c)
    return ProjectionMatrix(class_index=class_index, matrix=np.array(data), seed=-1)


def write_key_share(path: str | Path, share: np.ndarray) -> None:
    share = np.asarray(share, dtype=np.float64)
    with open(path, "wb") as f:
        f.write(KEYSHARE_MAGIC)
        f.write(struct.pack("<Q", share.size))
        f.write(share.astype("<f8").tobytes(order="C"))


def read_key_share(path: str | Path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    return parse_key_share(data)


def parse_key_share(data: bytes) -> np.ndarray:
    if data[:4] != KEYSHARE_MAGIC:
        raise DimensionError(f"bad key-share magic {data[:4]!r}")
    (length,) = struct.unpack("<Q", data[4:12])
    return np.array(np.frombuffer(data, dtype="<f8", count=length, offset=12))


def pack_key_share(share: np.ndarray) -> bytes:
    share = np.asarray(share, dtype=np.float64)
    return KEYSHARE_MAGIC + struct.pack("<Q", share.size) + share.astype("<f8").tobytes(order="C")
