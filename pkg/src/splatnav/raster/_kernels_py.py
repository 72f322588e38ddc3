"""Pure-numpy tile blending kernel (fallback when the compiled one is absent).

Replicates the serial front-to-back compositing loop with chunked
vectorization: a splat contributes at a pixel iff its Mahalanobis distance
is within the 3-sigma support (d^2 <= 9) and the pixel's remaining
transmittance is still >= 1e-4 when the splat's turn comes.
"""

import numpy as np

TRANSMITTANCE_CUTOFF = 1e-4
SUPPORT_D2 = 9.0
ALPHA_CLIP = 0.99
_CHUNK = 64

KERNEL_NAME = "python"


def blend_tile_range(
    t_begin,
    t_end,
    tiles_x,
    tile_size,
    width,
    height,
    tile_starts,
    pair_splat,
    means2d,
    conics,
    depths,
    colors,
    alphas,
    color_acc,
    alpha_acc,
    trans,
    depth_acc,
):
    """Blend tiles [t_begin, t_end) into the accumulation buffers.

    Buffers: color_acc/depth_acc/alpha_acc start at zero, trans at one;
    they receive sum(c*a*T), sum(d*a*T), sum(a*T) and the remaining
    transmittance per pixel.
    """
    for t in range(t_begin, t_end):
        s0 = int(tile_starts[t])
        s1 = int(tile_starts[t + 1])
        if s0 == s1:
            continue
        x0 = (t % tiles_x) * tile_size
        y0 = (t // tiles_x) * tile_size
        tw = min(tile_size, width - x0)
        th = min(tile_size, height - y0)
        if tw <= 0 or th <= 0:
            continue

        px = x0 + np.arange(tw) + 0.5
        py = y0 + np.arange(th) + 0.5
        pxx = np.broadcast_to(px[None, :], (th, tw)).reshape(-1)
        pyy = np.broadcast_to(py[:, None], (th, tw)).reshape(-1)

        n_pix = th * tw
        tile_t = np.ones(n_pix)
        tile_color = np.zeros((n_pix, 3))
        tile_alpha = np.zeros(n_pix)
        tile_depth = np.zeros(n_pix)

        ids = pair_splat[s0:s1]
        for c0 in range(0, ids.size, _CHUNK):
            live = tile_t >= TRANSMITTANCE_CUTOFF
            if not live.any():
                break
            chunk = ids[c0:c0 + _CHUNK]
            mx = means2d[chunk, 0]
            my = means2d[chunk, 1]
            ca = conics[chunk, 0]
            cb = conics[chunk, 1]
            cc = conics[chunk, 2]

            dx = mx[None, :] - pxx[:, None]
            dy = my[None, :] - pyy[:, None]
            d2 = ca * dx * dx + 2.0 * cb * dx * dy + cc * dy * dy
            a = np.minimum(ALPHA_CLIP, alphas[chunk][None, :] * np.exp(-0.5 * d2))
            a[d2 > SUPPORT_D2] = 0.0

            # transmittance seen by each splat; a splat is skipped once the
            # pixel's transmittance has fallen below the cutoff
            cp = np.cumprod(1.0 - a, axis=1)
            t_before = np.empty_like(a)
            t_before[:, 0] = tile_t
            t_before[:, 1:] = tile_t[:, None] * cp[:, :-1]
            weight = a * t_before
            weight[t_before < TRANSMITTANCE_CUTOFF] = 0.0

            tile_color += weight @ colors[chunk]
            tile_alpha += weight.sum(axis=1)
            tile_depth += weight @ depths[chunk]

            # carry transmittance: frozen at the first skipped splat
            dead = t_before < TRANSMITTANCE_CUTOFF
            any_dead = dead.any(axis=1)
            t_next = tile_t * cp[:, -1]
            if any_dead.any():
                first = np.argmax(dead, axis=1)
                t_next = np.where(any_dead, t_before[np.arange(n_pix), first], t_next)
            tile_t = t_next

        color_acc[y0:y0 + th, x0:x0 + tw] += tile_color.reshape(th, tw, 3)
        alpha_acc[y0:y0 + th, x0:x0 + tw] += tile_alpha.reshape(th, tw)
        depth_acc[y0:y0 + th, x0:x0 + tw] += tile_depth.reshape(th, tw)
        trans[y0:y0 + th, x0:x0 + tw] = tile_t.reshape(th, tw)
