#include "emrecon/resize.hpp"

#include <cmath>

namespace emrecon {

namespace {

struct Tap {
    int i0, i1;
    double w1;  // weight of i1; i0 gets (1 - w1)
};

std::vector<Tap> taps(int n_in, int n_out) {
    std::vector<Tap> t(n_out);
    const double scale = n_out > 1 ? static_cast<double>(n_in - 1) / (n_out - 1) : 0.0;
    for (int j = 0; j < n_out; ++j) {
        const double x = j * scale;
        int i0 = static_cast<int>(std::floor(x));
        if (i0 > n_in - 2) i0 = n_in - 2;
        if (i0 < 0) i0 = 0;
        t[j] = {i0, i0 + 1, x - i0};
    }
    return t;
}

void check2d(const GridShape& s, int nx, int ny) {
    if (s.ndim() != 2)
        throw std::invalid_argument("resize_bilinear: only 2D fields are supported");
    if (nx < 2 || ny < 2)
        throw std::invalid_argument("resize_bilinear: new dims must be >= 2 per axis");
}

}  // namespace

ScalarField resize_bilinear(const ScalarField& in, int new_nx, int new_ny) {
    check2d(in.shape, new_nx, new_ny);
    const auto tx = taps(in.shape.nx(), new_nx);
    const auto ty = taps(in.shape.ny(), new_ny);
    ScalarField out(GridShape(new_nx, new_ny, in.shape.spacing));
    for (int y = 0; y < new_ny; ++y) {
        const Tap& t = ty[y];
        for (int x = 0; x < new_nx; ++x) {
            const Tap& s = tx[x];
            const double v00 = in.at(s.i0, t.i0);
            const double v10 = in.at(s.i1, t.i0);
            const double v01 = in.at(s.i0, t.i1);
            const double v11 = in.at(s.i1, t.i1);
            out.at(x, y) = (1.0 - t.w1) * ((1.0 - s.w1) * v00 + s.w1 * v10) +
                           t.w1 * ((1.0 - s.w1) * v01 + s.w1 * v11);
        }
    }
    return out;
}

DisplacementField resize_bilinear(const DisplacementField& in, int new_nx, int new_ny) {
    check2d(in.shape, new_nx, new_ny);
    const auto tx = taps(in.shape.nx(), new_nx);
    const auto ty = taps(in.shape.ny(), new_ny);
    const double cscale[2] = {static_cast<double>(new_nx) / in.shape.nx(),
                              static_cast<double>(new_ny) / in.shape.ny()};
    DisplacementField out(GridShape(new_nx, new_ny, in.shape.spacing));
    for (int y = 0; y < new_ny; ++y) {
        const Tap& t = ty[y];
        for (int x = 0; x < new_nx; ++x) {
            const Tap& s = tx[x];
            for (int c = 0; c < 2; ++c) {
                const double v00 = in.comp(s.i0, t.i0, c);
                const double v10 = in.comp(s.i1, t.i0, c);
                const double v01 = in.comp(s.i0, t.i1, c);
                const double v11 = in.comp(s.i1, t.i1, c);
                const double v = (1.0 - t.w1) * ((1.0 - s.w1) * v00 + s.w1 * v10) +
                                 t.w1 * ((1.0 - s.w1) * v01 + s.w1 * v11);
                out.comp(x, y, c) = v * cscale[c];
            }
        }
    }
    return out;
}

}  // namespace emrecon
