"""Independent brute-force oracles used to verify the library.

Everything here is written from the mathematical definitions with plain
per-pixel / per-window loops and no imports from the package under test,
so a bug in the library cannot hide in a shared code path.
"""

import math

import numpy as np


def sample_bilinear_scalar(pixels, x, y, boundary="clamp", cval=0.0):
    """Bilinear sample at one point, corner by corner."""
    h, w = pixels.shape
    x0 = math.floor(x)
    y0 = math.floor(y)
    wx = x - x0
    wy = y - y0

    def at(yy, xx):
        if 0 <= yy < h and 0 <= xx < w:
            return float(pixels[yy, xx])
        if boundary == "clamp":
            return float(pixels[min(max(yy, 0), h - 1), min(max(xx, 0), w - 1)])
        return float(cval)

    v00 = at(y0, x0)
    v01 = at(y0, x0 + 1)
    v10 = at(y0 + 1, x0)
    v11 = at(y0 + 1, x0 + 1)
    top = (1.0 - wx) * v00 + wx * v01
    bot = (1.0 - wx) * v10 + wx * v11
    return (1.0 - wy) * top + wy * bot


def sample_nearest_scalar(pixels, x, y, boundary="clamp", cval=0.0):
    """Nearest-neighbor sample, halves rounding up."""
    h, w = pixels.shape
    xi = math.floor(x + 0.5)
    yi = math.floor(y + 0.5)
    if 0 <= yi < h and 0 <= xi < w:
        return float(pixels[yi, xi])
    if boundary == "clamp":
        return float(pixels[min(max(yi, 0), h - 1), min(max(xi, 0), w - 1)])
    return float(cval)


def warp_loops(pixels, map_x, map_y, interp="bilinear", boundary="clamp", cval=0.0):
    """Per-pixel backward warp."""
    h, w = pixels.shape
    out = np.zeros((h, w))
    fn = sample_bilinear_scalar if interp == "bilinear" else sample_nearest_scalar
    for r in range(h):
        for c in range(w):
            v = fn(pixels, map_x[r, c], map_y[r, c], boundary, cval)
            out[r, c] = min(max(v, 0.0), 255.0)
    return out


def mse_loops(a, b):
    """Two-loop mean squared error."""
    h, w = a.shape
    total = 0.0
    for r in range(h):
        for c in range(w):
            d = float(a[r, c]) - float(b[r, c])
            total += d * d
    return total / (h * w)


def gaussian_taps(size, sigma):
    half = (size - 1) / 2.0
    taps = [math.exp(-((i - half) ** 2) / (2.0 * sigma * sigma)) for i in range(size)]
    s = sum(taps)
    return [t / s for t in taps]


def ssim_loops(a, b, window=11, sigma=1.5, k1=0.01, k2=0.03, data_range=255.0):
    """Per-window SSIM, each window evaluated with explicit weighted sums."""
    h, w = a.shape
    taps = gaussian_taps(window, sigma)
    weights = [[taps[i] * taps[j] for j in range(window)] for i in range(window)]
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    total = 0.0
    count = 0
    for r0 in range(h - window + 1):
        for c0 in range(w - window + 1):
            mu_a = mu_b = 0.0
            for i in range(window):
                for j in range(window):
                    mu_a += weights[i][j] * float(a[r0 + i, c0 + j])
                    mu_b += weights[i][j] * float(b[r0 + i, c0 + j])
            var_a = var_b = cov = 0.0
            for i in range(window):
                for j in range(window):
                    da = float(a[r0 + i, c0 + j]) - mu_a
                    db = float(b[r0 + i, c0 + j]) - mu_b
                    var_a += weights[i][j] * da * da
                    var_b += weights[i][j] * db * db
                    cov += weights[i][j] * da * db
            num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
            den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
            total += num / den
            count += 1
    return total / count


def constant_pair_ssim(u, v, k1=0.01, data_range=255.0):
    """Closed form for two constant images: zero variances everywhere."""
    c1 = (k1 * data_range) ** 2
    return (2.0 * u * v + c1) / (u * u + v * v + c1)


def gftt_scores_loops(pixels):
    """Structure-tensor min-eigenvalue score, all loops.

    3x3 Sobel gradients and a 3x3 score window, both with edge
    replication.
    """
    h, w = pixels.shape

    def px(r, c):
        return float(pixels[min(max(r, 0), h - 1), min(max(c, 0), w - 1)])

    gx = np.zeros((h, w))
    gy = np.zeros((h, w))
    for r in range(h):
        for c in range(w):
            gx[r, c] = (
                px(r - 1, c + 1) + 2 * px(r, c + 1) + px(r + 1, c + 1)
                - px(r - 1, c - 1) - 2 * px(r, c - 1) - px(r + 1, c - 1)
            )
            gy[r, c] = (
                px(r + 1, c - 1) + 2 * px(r + 1, c) + px(r + 1, c + 1)
                - px(r - 1, c - 1) - 2 * px(r - 1, c) - px(r - 1, c + 1)
            )

    def win(img, r, c):
        total = 0.0
        for i in (-1, 0, 1):
            for j in (-1, 0, 1):
                rr = min(max(r + i, 0), h - 1)
                cc = min(max(c + j, 0), w - 1)
                total += img[rr, cc]
        return total

    scores = np.zeros((h, w))
    ixx = gx * gx
    ixy = gx * gy
    iyy = gy * gy
    for r in range(h):
        for c in range(w):
            a = win(ixx, r, c)
            b = win(ixy, r, c)
            d = win(iyy, r, c)
            scores[r, c] = 0.5 * ((a + d) - math.sqrt((a - d) ** 2 + 4 * b * b))
    return scores


def idw_loops(points, values, x, y, power=2.0, k=8):
    """Scalar inverse-distance interpolation of 2-vector values."""
    dists = []
    for i, (px, py) in enumerate(points):
        dists.append((math.hypot(x - px, y - py), i))
    dists.sort()
    dists = dists[: min(k, len(dists))]
    if dists[0][0] < 1e-9:
        return tuple(values[dists[0][1]])
    wsum = 0.0
    acc = [0.0, 0.0]
    for d, i in dists:
        wgt = 1.0 / d ** power
        wsum += wgt
        acc[0] += wgt * values[i][0]
        acc[1] += wgt * values[i][1]
    return (acc[0] / wsum, acc[1] / wsum)


def grid_bilinear_scalar(xs, ys, node_vals, x, y):
    """Bilinear interpolation on a rectilinear node grid, clamped to it."""
    x = min(max(x, xs[0]), xs[-1])
    y = min(max(y, ys[0]), ys[-1])
    ix = 0
    while ix < len(xs) - 2 and x >= xs[ix + 1]:
        ix += 1
    iy = 0
    while iy < len(ys) - 2 and y >= ys[iy + 1]:
        iy += 1
    tx = (x - xs[ix]) / (xs[ix + 1] - xs[ix])
    ty = (y - ys[iy]) / (ys[iy + 1] - ys[iy])
    top = (1 - tx) * node_vals[iy][ix] + tx * node_vals[iy][ix + 1]
    bot = (1 - tx) * node_vals[iy + 1][ix] + tx * node_vals[iy + 1][ix + 1]
    return (1 - ty) * top + ty * bot


def rotation_point(x, y, cx, cy, theta):
    """Rotate one point about (cx, cy) by theta radians."""
    dx = x - cx
    dy = y - cy
    return (
        cx + dx * math.cos(theta) - dy * math.sin(theta),
        cy + dx * math.sin(theta) + dy * math.cos(theta),
    )
