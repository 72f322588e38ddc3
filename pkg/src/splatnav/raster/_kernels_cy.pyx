# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled tile blending kernel: serial front-to-back alpha compositing.

Same contract as _kernels_py.blend_tile_range; releases the GIL so tile
ranges can run on a thread pool.
"""

from libc.math cimport exp

TRANSMITTANCE_CUTOFF = 1e-4
SUPPORT_D2 = 9.0
ALPHA_CLIP = 0.99

KERNEL_NAME = "cython"

cdef double _CUTOFF = 1e-4
cdef double _SUPPORT = 9.0
cdef double _CLIP = 0.99


cdef void _blend(
    int t_begin, int t_end, int tiles_x, int tile_size, int width, int height,
    const long long[::1] tile_starts,
    const int[::1] pair_splat,
    const double[:, ::1] means2d,
    const double[:, ::1] conics,
    const double[::1] depths,
    const double[:, ::1] colors,
    const double[::1] alphas,
    double[:, :, ::1] color_acc,
    double[:, ::1] alpha_acc,
    double[:, ::1] trans,
    double[:, ::1] depth_acc,
) noexcept nogil:
    cdef int t, x0, y0, tw, th, i, j, px_i, py_i
    cdef long long s0, s1, s
    cdef int sid
    cdef double px, py, dx, dy, d2, w, a, tcur, weight
    cdef double ca, cb, cc

    for t in range(t_begin, t_end):
        s0 = tile_starts[t]
        s1 = tile_starts[t + 1]
        if s0 == s1:
            continue
        x0 = (t % tiles_x) * tile_size
        y0 = (t // tiles_x) * tile_size
        tw = tile_size
        if x0 + tw > width:
            tw = width - x0
        th = tile_size
        if y0 + th > height:
            th = height - y0
        if tw <= 0 or th <= 0:
            continue

        for i in range(th):
            py_i = y0 + i
            py = py_i + 0.5
            for j in range(tw):
                px_i = x0 + j
                px = px_i + 0.5
                tcur = 1.0
                for s in range(s0, s1):
                    if tcur < _CUTOFF:
                        break
                    sid = pair_splat[s]
                    dx = means2d[sid, 0] - px
                    dy = means2d[sid, 1] - py
                    ca = conics[sid, 0]
                    cb = conics[sid, 1]
                    cc = conics[sid, 2]
                    d2 = ca * dx * dx + 2.0 * cb * dx * dy + cc * dy * dy
                    if d2 > _SUPPORT:
                        continue
                    a = alphas[sid] * exp(-0.5 * d2)
                    if a > _CLIP:
                        a = _CLIP
                    weight = a * tcur
                    color_acc[py_i, px_i, 0] += colors[sid, 0] * weight
                    color_acc[py_i, px_i, 1] += colors[sid, 1] * weight
                    color_acc[py_i, px_i, 2] += colors[sid, 2] * weight
                    alpha_acc[py_i, px_i] += weight
                    depth_acc[py_i, px_i] += depths[sid] * weight
                    tcur *= 1.0 - a
                trans[py_i, px_i] = tcur


def blend_tile_range(
    int t_begin,
    int t_end,
    int tiles_x,
    int tile_size,
    int width,
    int height,
    long long[::1] tile_starts,
    int[::1] pair_splat,
    double[:, ::1] means2d,
    double[:, ::1] conics,
    double[::1] depths,
    double[:, ::1] colors,
    double[::1] alphas,
    double[:, :, ::1] color_acc,
    double[:, ::1] alpha_acc,
    double[:, ::1] trans,
    double[:, ::1] depth_acc,
):
    """Blend tiles [t_begin, t_end) into the accumulation buffers."""
    with nogil:
        _blend(
            t_begin, t_end, tiles_x, tile_size, width, height,
            tile_starts, pair_splat, means2d, conics, depths, colors, alphas,
            color_acc, alpha_acc, trans, depth_acc,
        )
