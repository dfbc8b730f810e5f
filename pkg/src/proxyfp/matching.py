"""Similarity scoring between fingerprint images.

Two complementary scores are computed per image pair and fused with equal
weights:

* patch-wise mean structural similarity (MSSIM) over a non-overlapping
  10x10 tiling (right/bottom remainder discarded), and
* a brute-force keypoint score: minutiae (ridge endings and bifurcations)
  are read off a thinned ridge skeleton with the crossing-number rule,
  then greedily matched one-to-one by spatial + angular cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

SSIM_K1 = 0.01
SSIM_K2 = 0.03
DATA_RANGE = 1.0

MATCH_MAX_DISTANCE = 12.0   # px
MATCH_MAX_ANGLE = math.radians(20.0)
ANGLE_COST_SCALE = 10.0     # px per radian
PATCH = 10
BORDER = 8


@dataclass(frozen=True)
class Keypoint:
    row: int
    col: int
    kind: str          # "ridge_ending" | "bifurcation"
    orientation: float  # radians in [0, pi)


@dataclass(frozen=True)
class MatchScore:
    mssim: float
    keypoint_score: float
    fused: float


# -- structural similarity ----------------------------------------------------

def _ssim_from_stats(mu_x, mu_y, var_x, var_y, cov, k1=SSIM_K1, k2=SSIM_K2):
    c1 = (k1 * DATA_RANGE) ** 2
    c2 = (k2 * DATA_RANGE) ** 2
    return ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / (
        (mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2)
    )


def ssim_patch(x_patch: np.ndarray, y_patch: np.ndarray) -> float:
    """SSIM between two equally shaped patches (population statistics)."""
    x = np.asarray(x_patch, dtype=np.float64)
    y = np.asarray(y_patch, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionError(f"patch shapes differ: {x.shape} vs {y.shape}")
    mu_x, mu_y = x.mean(), y.mean()
    var_x = ((x - mu_x) ** 2).mean()
    var_y = ((y - mu_y) ** 2).mean()
    cov = ((x - mu_x) * (y - mu_y)).mean()
    return float(_ssim_from_stats(mu_x, mu_y, var_x, var_y, cov))


def patch_statistics(x: np.ndarray, y: np.ndarray, patch: int = PATCH):
    """Per-tile means/variances/covariance over the non-overlapping tiling.

    Returns arrays shaped (tiles_y, tiles_x); the right/bottom remainder of
    the images is discarded.
    """
    if x.shape != y.shape:
        raise DimensionError(f"image shapes differ: {x.shape} vs {y.shape}")
    h, w = x.shape
    ty, tx = h // patch, w // patch
    if ty == 0 or tx == 0:
        raise DimensionError(f"image {x.shape} smaller than one {patch}x{patch} patch")
    xv = x[: ty * patch, : tx * patch].reshape(ty, patch, tx, patch)
    yv = y[: ty * patch, : tx * patch].reshape(ty, patch, tx, patch)
    mu_x = xv.mean(axis=(1, 3))
    mu_y = yv.mean(axis=(1, 3))
    dx = xv - mu_x[:, None, :, None]
    dy = yv - mu_y[:, None, :, None]
    var_x = (dx ** 2).mean(axis=(1, 3))
    var_y = (dy ** 2).mean(axis=(1, 3))
    cov = (dx * dy).mean(axis=(1, 3))
    return mu_x, mu_y, var_x, var_y, cov


def mssim(image_x: np.ndarray, image_y: np.ndarray, patch: int = PATCH) -> float:
    """Mean SSIM over the non-overlapping patch tiling; 1 iff identical."""
    x = np.asarray(image_x, dtype=np.float64)
    y = np.asarray(image_y, dtype=np.float64)
    mu_x, mu_y, var_x, var_y, cov = patch_statistics(x, y, patch)
    return float(_ssim_from_stats(mu_x, mu_y, var_x, var_y, cov).mean())


# -- keypoint extraction ------------------------------------------------------

def binarize(image: np.ndarray) -> np.ndarray:
    """Ridge mask: pixels strictly darker than the image mean."""
    img = np.asarray(image, dtype=np.float64)
    return img < img.mean()


def thin(mask: np.ndarray) -> np.ndarray:
    """Two-subiteration (Zhang-Suen) thinning to a one-pixel skeleton.

    Runs to fixpoint; fully vectorized over the image.
    """
    img = np.asarray(mask, dtype=bool).copy()
    if not img.any():
        return img

    def neighbors(a):
        # clockwise from north: p2 p3 p4 p5 p6 p7 p8 p9
        p = np.zeros((8,) + a.shape, dtype=bool)
        p[0, 1:, :] = a[:-1, :]          # N
        p[1, 1:, :-1] = a[:-1, 1:]       # NE
        p[2, :, :-1] = a[:, 1:]          # E
        p[3, :-1, :-1] = a[1:, 1:]       # SE
        p[4, :-1, :] = a[1:, :]          # S
        p[5, :-1, 1:] = a[1:, :-1]       # SW
        p[6, :, 1:] = a[:, :-1]          # W
        p[7, 1:, 1:] = a[:-1, :-1]       # NW
        return p

    while True:
        changed = False
        for step in (0, 1):
            p = neighbors(img)
            count = p.sum(axis=0)
            transitions = np.zeros(img.shape, dtype=np.int32)
            for i in range(8):
                transitions += (~p[i] & p[(i + 1) % 8]).astype(np.int32)
            cond = img & (count >= 2) & (count <= 6) & (transitions == 1)
            if step == 0:
                cond &= ~(p[0] & p[2] & p[4])   # N*E*S == 0
                cond &= ~(p[2] & p[4] & p[6])   # E*S*W == 0
            else:
                cond &= ~(p[0] & p[2] & p[6])   # N*E*W == 0
                cond &= ~(p[0] & p[4] & p[6])   # N*S*W == 0
            if cond.any():
                img[cond] = False
                changed = True
        if not changed:
            return img


def crossing_numbers(skeleton: np.ndarray) -> np.ndarray:
    """Crossing number per skeleton pixel (0 elsewhere).

    CN = half the sum of absolute differences around the 8-neighborhood
    cycle; 1 marks a ridge ending, 3 a bifurcation.
    """
    s = np.asarray(skeleton, dtype=bool)
    p = np.zeros((8,) + s.shape, dtype=bool)
    p[0, 1:, :] = s[:-1, :]
    p[1, 1:, :-1] = s[:-1, 1:]
    p[2, :, :-1] = s[:, 1:]
    p[3, :-1, :-1] = s[1:, 1:]
    p[4, :-1, :] = s[1:, :]
    p[5, :-1, 1:] = s[1:, :-1]
    p[6, :, 1:] = s[:, :-1]
    p[7, 1:, 1:] = s[:-1, :-1]
    cn = np.zeros(s.shape, dtype=np.int32)
    for i in range(8):
        cn += np.abs(p[i].astype(np.int32) - p[(i + 1) % 8].astype(np.int32))
    cn //= 2
    cn[~s] = 0
    return cn


def local_orientation(image: np.ndarray, row: int, col: int, half: int = 4) -> float:
    """Ridge orientation in [0, pi) from the structure tensor of a
    (2*half+1)^2 neighborhood (9x9 by default)."""
    img = np.asarray(image, dtype=np.float64)
    r0, r1 = max(0, row - half), min(img.shape[0], row + half + 1)
    c0, c1 = max(0, col - half), min(img.shape[1], col + half + 1)
    window = img[r0:r1, c0:c1]
    if window.shape[0] < 3 or window.shape[1] < 3:
        return 0.0
    gy, gx = np.gradient(window)
    gxx = float((gx * gx).sum())
    gyy = float((gy * gy).sum())
    gxy = float((gx * gy).sum())
    # gradient-dominant direction, rotated 90 deg to follow the ridge
    theta = 0.5 * math.atan2(2.0 * gxy, gxx - gyy) + math.pi / 2.0
    return theta % math.pi


def keypoints_from_skeleton(skeleton: np.ndarray, orientation_source: np.ndarray | None = None,
                            border: int = 0) -> list[Keypoint]:
    """Classify skeleton pixels by crossing number into minutiae."""
    s = np.asarray(skeleton, dtype=bool)
    source = s.astype(np.float64) if orientation_source is None else orientation_source
    cn = crossing_numbers(s)
    points = []
    h, w = s.shape
    rows, cols = np.nonzero((cn == 1) | (cn == 3))
    for row, col in zip(rows.tolist(), cols.tolist()):
        if row < border or col < border or row >= h - border or col >= w - border:
            continue
        kind = "ridge_ending" if cn[row, col] == 1 else "bifurcation"
        points.append(Keypoint(row=row, col=col, kind=kind,
                               orientation=local_orientation(source, row, col)))
    points.sort(key=lambda k: (k.row, k.col, k.kind))
    return points


def extract_keypoints(image: np.ndarray, border: int = BORDER) -> list[Keypoint]:
    """Full minutiae pipeline: binarize -> thin -> crossing number -> orient."""
    img = np.asarray(image, dtype=np.float64)
    mask = binarize(img)
    if not mask.any():
        return []
    skeleton = thin(mask)
    return keypoints_from_skeleton(skeleton, orientation_source=img, border=border)


# -- brute-force matching -----------------------------------------------------

def angular_distance(a: float, b: float) -> float:
    """Distance on the orientation half-circle [0, pi)."""
    d = abs(a - b) % math.pi
    return min(d, math.pi - d)


def brute_force_match(points_a: list[Keypoint], points_b: list[Keypoint],
                      max_distance: float = MATCH_MAX_DISTANCE,
                      max_angle: float = MATCH_MAX_ANGLE,
                      angle_cost_scale: float = ANGLE_COST_SCALE) -> float:
    """One-to-all nearest-cost candidate per left keypoint, thresholded and
    greedily assigned one-to-one; score = accepted / max(|A|, |B|)."""
    if not points_a or not points_b:
        return 0.0
    a = sorted(points_a, key=lambda k: (k.row, k.col, k.kind))
    b = sorted(points_b, key=lambda k: (k.row, k.col, k.kind))
    pa = np.array([[k.row, k.col] for k in a], dtype=np.float64)
    pb = np.array([[k.row, k.col] for k in b], dtype=np.float64)
    oa = np.array([k.orientation for k in a])
    ob = np.array([k.orientation for k in b])
    dist = np.sqrt(((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2))
    dang = np.abs(oa[:, None] - ob[None, :]) % math.pi
    dang = np.minimum(dang, math.pi - dang)
    cost = dist + angle_cost_scale * dang

    candidates = []
    for i in range(len(a)):
        j = int(np.argmin(cost[i]))  # ties resolve to the lowest canonical index
        if dist[i, j] <= max_distance and dang[i, j] <= max_angle and a[i].kind == b[j].kind:
            candidates.append((float(cost[i, j]), i, j))
    candidates.sort()
    used_a: set[int] = set()
    used_b: set[int] = set()
    accepted = 0
    for _, i, j in candidates:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        accepted += 1
    return accepted / max(len(a), len(b))


def fused_score(image_x: np.ndarray, image_y: np.ndarray,
                keypoints_x: list[Keypoint] | None = None,
                keypoints_y: list[Keypoint] | None = None) -> MatchScore:
    """Equal-weight fusion of clamped MSSIM and the keypoint score.

    Precomputed keypoint lists may be passed to amortize extraction over
    many pairs.
    """
    value = mssim(image_x, image_y)
    if keypoints_x is None:
        keypoints_x = extract_keypoints(image_x)
    if keypoints_y is None:
        keypoints_y = extract_keypoints(image_y)
    kp = brute_force_match(keypoints_x, keypoints_y)
    fused = 0.5 * min(max(value, 0.0), 1.0) + 0.5 * kp
    return MatchScore(mssim=value, keypoint_score=kp, fused=fused)
