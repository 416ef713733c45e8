#pragma once

#include <algorithm>
#include <cmath>

#include "emrecon/nn/tensor.hpp"
#include "emrecon/parallel.hpp"

namespace emrecon::nn {

// 3^ndim cross-correlation with zero padding 1 and stride 1. Weights are laid
// out [out_ch][in_ch][kz][ky][kx] (kz absent in 2D). The shift-and-accumulate
// form keeps the inner loop contiguous so it vectorizes.

template <class T>
void conv_forward_plane_2d(const T* in, T* out, const T* w, int nx, int ny) {
    for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
            const T wv = w[ky * 3 + kx];
            if (wv == T(0)) continue;
            const int dy = ky - 1, dx = kx - 1;
            const int y0 = std::max(0, -dy), y1 = std::min(ny, ny - dy);
            const int x0 = std::max(0, -dx), x1 = std::min(nx, nx - dx);
            for (int y = y0; y < y1; ++y) {
                const T* src = in + (y + dy) * nx + dx;
                T* dst = out + y * nx;
                for (int x = x0; x < x1; ++x) dst[x] += wv * src[x];
            }
        }
    }
}

template <class T>
void conv_forward_plane_3d(const T* in, T* out, const T* w, int nx, int ny, int nz) {
    const int plane = nx * ny;
    for (int kz = 0; kz < 3; ++kz)
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                const T wv = w[(kz * 3 + ky) * 3 + kx];
                if (wv == T(0)) continue;
                const int dz = kz - 1, dy = ky - 1, dx = kx - 1;
                const int z0 = std::max(0, -dz), z1 = std::min(nz, nz - dz);
                const int y0 = std::max(0, -dy), y1 = std::min(ny, ny - dy);
                const int x0 = std::max(0, -dx), x1 = std::min(nx, nx - dx);
                for (int z = z0; z < z1; ++z)
                    for (int y = y0; y < y1; ++y) {
                        const T* src = in + (z + dz) * plane + (y + dy) * nx + dx;
                        T* dst = out + z * plane + y * nx;
                        for (int x = x0; x < x1; ++x) dst[x] += wv * src[x];
                    }
            }
}

/// out[n][oc] = bias[oc] + sum_ic corr(in[n][ic], w[oc][ic])
template <class T>
void conv_forward(const Tensor<T>& in, Tensor<T>& out, const T* weights, const T* bias,
                  int kvol) {
    const int ndim = static_cast<int>(in.sp.size());
    const std::size_t vox = in.voxels();
#pragma omp parallel for collapse(2) schedule(static) num_threads(worker_count())
    for (int s = 0; s < in.n; ++s)
        for (int oc = 0; oc < out.c; ++oc) {
            T* o = out.plane(s, oc);
            std::fill(o, o + vox, bias[oc]);
            for (int ic = 0; ic < in.c; ++ic) {
                const T* w = weights + (static_cast<std::size_t>(oc) * in.c + ic) * kvol;
                if (ndim == 2)
                    conv_forward_plane_2d(in.plane(s, ic), o, w, in.sp[0], in.sp[1]);
                else
                    conv_forward_plane_3d(in.plane(s, ic), o, w, in.sp[0], in.sp[1], in.sp[2]);
            }
        }
}

// Backward w.r.t. input: correlation of grad_out with the spatially flipped
// kernel; realized by swapping the roles of the offsets.
template <class T>
void conv_backward_input_plane_2d(const T* gout, T* gin, const T* w, int nx, int ny) {
    for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
            const T wv = w[ky * 3 + kx];
            if (wv == T(0)) continue;
            const int dy = ky - 1, dx = kx - 1;
            const int y0 = std::max(0, -dy), y1 = std::min(ny, ny - dy);
            const int x0 = std::max(0, -dx), x1 = std::min(nx, nx - dx);
            for (int y = y0; y < y1; ++y) {
                const T* src = gout + y * nx;
                T* dst = gin + (y + dy) * nx + dx;
                for (int x = x0; x < x1; ++x) dst[x] += wv * src[x];
            }
        }
}

template <class T>
void conv_backward_input_plane_3d(const T* gout, T* gin, const T* w, int nx, int ny, int nz) {
    const int plane = nx * ny;
    for (int kz = 0; kz < 3; ++kz)
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                const T wv = w[(kz * 3 + ky) * 3 + kx];
                if (wv == T(0)) continue;
                const int dz = kz - 1, dy = ky - 1, dx = kx - 1;
                const int z0 = std::max(0, -dz), z1 = std::min(nz, nz - dz);
                const int y0 = std::max(0, -dy), y1 = std::min(ny, ny - dy);
                const int x0 = std::max(0, -dx), x1 = std::min(nx, nx - dx);
                for (int z = z0; z < z1; ++z)
                    for (int y = y0; y < y1; ++y) {
                        const T* src = gout + z * plane + y * nx;
                        T* dst = gin + (z + dz) * plane + (y + dy) * nx + dx;
                        for (int x = x0; x < x1; ++x) dst[x] += wv * src[x];
                    }
            }
}

template <class T>
void conv_backward_input(const Tensor<T>& gout, Tensor<T>& gin, const T* weights, int kvol) {
    const int ndim = static_cast<int>(gin.sp.size());
#pragma omp parallel for collapse(2) schedule(static) num_threads(worker_count())
    for (int s = 0; s < gin.n; ++s)
        for (int ic = 0; ic < gin.c; ++ic) {
            T* g = gin.plane(s, ic);
            std::fill(g, g + gin.voxels(), T(0));
            for (int oc = 0; oc < gout.c; ++oc) {
                const T* w = weights + (static_cast<std::size_t>(oc) * gin.c + ic) * kvol;
                if (ndim == 2)
                    conv_backward_input_plane_2d(gout.plane(s, oc), g, w, gin.sp[0], gin.sp[1]);
                else
                    conv_backward_input_plane_3d(gout.plane(s, oc), g, w, gin.sp[0], gin.sp[1],
                                                 gin.sp[2]);
            }
        }
}

template <class T>
T conv_weight_grad_tap_2d(const T* in, const T* gout, int nx, int ny, int dy, int dx) {
    const int y0 = std::max(0, -dy), y1 = std::min(ny, ny - dy);
    const int x0 = std::max(0, -dx), x1 = std::min(nx, nx - dx);
    T acc = 0;
    for (int y = y0; y < y1; ++y) {
        const T* a = in + (y + dy) * nx + dx;
        const T* b = gout + y * nx;
        for (int x = x0; x < x1; ++x) acc += a[x] * b[x];
    }
    return acc;
}

template <class T>
T conv_weight_grad_tap_3d(const T* in, const T* gout, int nx, int ny, int nz, int dz, int dy,
                          int dx) {
    const int plane = nx * ny;
    const int z0 = std::max(0, -dz), z1 = std::min(nz, nz - dz);
    const int y0 = std::max(0, -dy), y1 = std::min(ny, ny - dy);
    const int x0 = std::max(0, -dx), x1 = std::min(nx, nx - dx);
    T acc = 0;
    for (int z = z0; z < z1; ++z)
        for (int y = y0; y < y1; ++y) {
            const T* a = in + (z + dz) * plane + (y + dy) * nx + dx;
            const T* b = gout + z * plane + y * nx;
            for (int x = x0; x < x1; ++x) acc += a[x] * b[x];
        }
    return acc;
}

/// Accumulates weight and bias gradients. Parallel over out channels with a
/// serial sample loop inside, so the reduction order is fixed regardless of
/// thread count.
template <class T>
void conv_backward_params(const Tensor<T>& in, const Tensor<T>& gout, T* grad_w, T* grad_b,
                          int kvol) {
    const int ndim = static_cast<int>(in.sp.size());
#pragma omp parallel for schedule(static) num_threads(worker_count())
    for (int oc = 0; oc < gout.c; ++oc) {
        for (int s = 0; s < in.n; ++s) {
            const T* g = gout.plane(s, oc);
            for (int ic = 0; ic < in.c; ++ic) {
                const T* a = in.plane(s, ic);
                T* gw = grad_w + (static_cast<std::size_t>(oc) * in.c + ic) * kvol;
                if (ndim == 2) {
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx)
                            gw[ky * 3 + kx] +=
                                conv_weight_grad_tap_2d(a, g, in.sp[0], in.sp[1], ky - 1, kx - 1);
                } else {
                    for (int kz = 0; kz < 3; ++kz)
                        for (int ky = 0; ky < 3; ++ky)
                            for (int kx = 0; kx < 3; ++kx)
                                gw[(kz * 3 + ky) * 3 + kx] += conv_weight_grad_tap_3d(
                                    a, g, in.sp[0], in.sp[1], in.sp[2], kz - 1, ky - 1, kx - 1);
                }
            }
            T acc = 0;
            const std::size_t vox = gout.voxels();
            for (std::size_t i = 0; i < vox; ++i) acc += g[i];
            grad_b[oc] += acc;
        }
    }
}

}  // namespace emrecon::nn
