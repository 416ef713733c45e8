#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace emrecon {

/// Regular 2D/3D grid geometry. Dimensions are listed x-first and values are
/// stored row-major with x fastest.
struct GridShape {
    std::vector<int> dims;
    double spacing = 1.0;

    GridShape() = default;
    GridShape(std::vector<int> d, double h = 1.0) : dims(std::move(d)), spacing(h) {
        validate();
    }
    GridShape(int nx, int ny, double h = 1.0) : dims{nx, ny}, spacing(h) { validate(); }
    GridShape(int nx, int ny, int nz, double h = 1.0) : dims{nx, ny, nz}, spacing(h) {
        validate();
    }

    int ndim() const { return static_cast<int>(dims.size()); }

    std::size_t cell_count() const {
        std::size_t n = 1;
        for (int d : dims) n *= static_cast<std::size_t>(d);
        return n;
    }

    int nx() const { return dims[0]; }
    int ny() const { return dims[1]; }
    int nz() const { return ndim() == 3 ? dims[2] : 1; }

    std::size_t index(int x, int y, int z = 0) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(dims[0]) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims[1]) * z);
    }

    bool operator==(const GridShape& o) const {
        return dims == o.dims && spacing == o.spacing;
    }
    bool operator!=(const GridShape& o) const { return !(*this == o); }

    void validate() const {
        if (dims.size() != 2 && dims.size() != 3)
            throw std::invalid_argument("GridShape: ndim must be 2 or 3");
        for (int d : dims)
            if (d < 1) throw std::invalid_argument("GridShape: dims must be >= 1");
        if (spacing <= 0.0) throw std::invalid_argument("GridShape: spacing must be > 0");
    }
};

}  // namespace emrecon
