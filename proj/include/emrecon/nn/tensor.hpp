#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace emrecon::nn {

/// Dense (batch, channels, spatial...) tensor. Spatial dims are listed x
/// fastest ({nx, ny[, nz]}) and the layout matches the field modules: x is
/// the fastest-varying index, then y, then z, then channel, then sample.
template <class T>
struct Tensor {
    int n = 0;
    int c = 0;
    std::vector<int> sp;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int n_, int c_, std::vector<int> sp_) : n(n_), c(c_), sp(std::move(sp_)) {
        data.assign(static_cast<std::size_t>(n) * c * voxels(), T(0));
    }

    std::size_t voxels() const {
        std::size_t v = 1;
        for (int d : sp) v *= static_cast<std::size_t>(d);
        return v;
    }
    std::size_t size() const { return data.size(); }

    T* plane(int in, int ic) { return data.data() + (static_cast<std::size_t>(in) * c + ic) * voxels(); }
    const T* plane(int in, int ic) const {
        return data.data() + (static_cast<std::size_t>(in) * c + ic) * voxels();
    }

    bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && sp == o.sp; }
};

}  // namespace emrecon::nn
