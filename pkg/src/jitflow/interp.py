"""Unified interpolation from sparse anchors to the full grid.

One operator serves two roles in the engine: extrapolating velocities of
inactive tokens (the lifter) and building the structural prior for newly
activated tokens at a stage transition.  The pipeline is

    1. nearest-neighbor fill from the anchors,
    2. a density-matched separable Gaussian blur,
    3. masked composition that restores anchor values bitwise.

The blur scale tracks anchor density: with ratio rho = m / N the mean
anchor spacing is L = rho^(-1/2) tokens, sigma = 0.4 L, and the kernel
length is max(3, 2*floor(1.5*sigma) + 1) so it stays odd and roughly spans
3 sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .grid import ActiveBlock, IndexSet, TokenGrid, embed


@dataclass(frozen=True)
class BlurSpec:
    sigma: float
    kernel_size: int

    def __post_init__(self):
        if self.sigma <= 0:
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")
        if self.kernel_size < 3 or self.kernel_size % 2 == 0:
            raise ParameterError(
                f"kernel_size must be odd and >= 3, got {self.kernel_size}"
            )


def blur_params(m: int, n: int) -> BlurSpec:
    """Blur scale for m anchors among n tokens."""
    if m < 1:
        raise ParameterError("empty anchor set")
    if m > n:
        raise ParameterError(f"m={m} exceeds n={n}")
    rho = m / n
    sigma = 0.4 / math.sqrt(rho)
    kernel_size = max(3, 2 * math.floor(1.5 * sigma) + 1)
    return BlurSpec(sigma, kernel_size)


def _gaussian_kernel(spec: BlurSpec) -> np.ndarray:
    offsets = np.arange(spec.kernel_size, dtype=np.float64) - spec.kernel_size // 2
    k = np.exp(-0.5 * (offsets / spec.sigma) ** 2)
    return k / k.sum()


def _convolve_axis(arr: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    """1-D convolution along one axis with replicate (edge-clamp) padding."""
    r = len(kernel) // 2
    pad = [(0, 0)] * arr.ndim
    pad[axis] = (r, r)
    padded = np.pad(arr, pad, mode="edge")
    out = np.zeros(arr.shape, dtype=np.float64)
    index = [slice(None)] * arr.ndim
    for j, weight in enumerate(kernel):
        index[axis] = slice(j, j + arr.shape[axis])
        out += weight * padded[tuple(index)]
    return out


def nearest_fill(block: ActiveBlock, active: IndexSet, shape: tuple[int, int, int]) -> TokenGrid:
    """Assign every token the value of its nearest anchor.

    Distance is Euclidean between (row, col) grid coordinates; ties go to
    the anchor with the lower row-major index.  Squared distances are
    integers, so the tie-break is exact.
    """
    h, w, d = shape
    if len(active) < 1:
        raise ParameterError("empty anchor set")
    if active.n_total != h * w or block.m != len(active) or block.d != d:
        raise DimensionError("block / set / shape mismatch in nearest_fill")
    rows = np.arange(h * w, dtype=np.int64) // w
    cols = np.arange(h * w, dtype=np.int64) % w
    a_rows = active.indices // w
    a_cols = active.indices % w
    dist2 = (rows[:, None] - a_rows[None, :]) ** 2 + (cols[:, None] - a_cols[None, :]) ** 2
    owner = np.argmin(dist2, axis=1)  # first minimum = lowest anchor index
    return TokenGrid(h, w, d, block.values[owner])


def gaussian_blur(grid: TokenGrid, spec: BlurSpec) -> TokenGrid:
    """Per-channel separable Gaussian blur with replicate padding."""
    kernel = _gaussian_kernel(spec)
    arr = grid.spatial().astype(np.float64)
    arr = _convolve_axis(arr, kernel, axis=0)
    arr = _convolve_axis(arr, kernel, axis=1)
    return grid.with_data(arr.astype(np.float32))


def lift(block: ActiveBlock, active: IndexSet, shape: tuple[int, int, int]) -> TokenGrid:
    """Full-grid extension of anchor values with bitwise anchor preservation.

    Composition M * Z_nn + (1 - M) * Z_blur, where M marks anchors.  The
    anchor rows are written by direct scatter of the block values, so
    gather(lift(b, set), set) == b holds bitwise.
    """
    h, w, d = shape
    if len(active) == active.n_total:
        # full set: composition keeps every nearest-fill value, which is the
        # identity; skip the blur (bitwise-equal, verified in tests)
        return embed(block, active, shape)
    z_nn = nearest_fill(block, active, shape)
    z_blur = gaussian_blur(z_nn, blur_params(len(active), h * w))
    out = z_blur.data.copy()
    out[active.indices] = block.values
    return TokenGrid(h, w, d, out)
