#include "emrecon/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace emrecon {

namespace {

void write_gray_png(const std::filesystem::path& path, const std::vector<unsigned char>& pixels,
                    int width, int height) {
    FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) throw std::runtime_error("png: cannot open " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw std::runtime_error("png: write failure for " + path.string());
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y)
        png_write_row(png, const_cast<unsigned char*>(pixels.data() + static_cast<std::size_t>(y) * width));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

}  // namespace

void write_field_png(const std::filesystem::path& path, const ScalarField& f, double lo,
                     double hi, int z_slice) {
    const GridShape& g = f.shape;
    const int nx = g.nx(), ny = g.ny();
    std::vector<unsigned char> pixels(static_cast<std::size_t>(nx) * ny);
    const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            const double v = (f.at(x, y, g.ndim() == 3 ? z_slice : 0) - lo) * scale;
            // image rows run top to bottom; flip so y increases upward
            pixels[static_cast<std::size_t>(ny - 1 - y) * nx + x] =
                static_cast<unsigned char>(std::clamp(v, 0.0, 255.0));
        }
    write_gray_png(path, pixels, nx, ny);
}

void write_curve_png(const std::filesystem::path& path, const std::vector<double>& xs,
                     const std::vector<double>& ys, int width, int height) {
    if (xs.size() != ys.size() || xs.empty())
        throw std::invalid_argument("write_curve_png: need matching non-empty series");
    std::vector<unsigned char> pixels(static_cast<std::size_t>(width) * height, 255);

    const double x_lo = *std::min_element(xs.begin(), xs.end());
    const double x_hi = *std::max_element(xs.begin(), xs.end());
    const double y_lo = std::min(0.0, *std::min_element(ys.begin(), ys.end()));
    const double y_hi = *std::max_element(ys.begin(), ys.end());
    const int margin = 24;
    const double sx = x_hi > x_lo ? (width - 2.0 * margin) / (x_hi - x_lo) : 0.0;
    const double sy = y_hi > y_lo ? (height - 2.0 * margin) / (y_hi - y_lo) : 0.0;

    auto put = [&](int x, int y, unsigned char v) {
        if (x >= 0 && x < width && y >= 0 && y < height)
            pixels[static_cast<std::size_t>(height - 1 - y) * width + x] = v;
    };
    // axes
    for (int x = margin; x < width - margin; ++x) put(x, margin, 128);
    for (int y = margin; y < height - margin; ++y) put(margin, y, 128);

    auto px = [&](double x) { return margin + static_cast<int>(std::lround((x - x_lo) * sx)); };
    auto py = [&](double y) { return margin + static_cast<int>(std::lround((y - y_lo) * sy)); };

    for (std::size_t i = 1; i < xs.size(); ++i) {
        int x0 = px(xs[i - 1]), y0 = py(ys[i - 1]);
        int x1 = px(xs[i]), y1 = py(ys[i]);
        const int steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1});
        for (int sstep = 0; sstep <= steps; ++sstep) {
            const double t = static_cast<double>(sstep) / steps;
            put(static_cast<int>(std::lround(x0 + t * (x1 - x0))),
                static_cast<int>(std::lround(y0 + t * (y1 - y0))), 0);
        }
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const int x = px(xs[i]), y = py(ys[i]);
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) put(x + dx, y + dy, 0);
    }
    write_gray_png(path, pixels, width, height);
}

}  // namespace emrecon
