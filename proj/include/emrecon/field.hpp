#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "emrecon/grid.hpp"

namespace emrecon {

/// Dense scalar field on a regular grid, one value per cell, x fastest.
struct ScalarField {
    GridShape shape;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(GridShape s, double fill = 0.0)
        : shape(std::move(s)), values(shape.cell_count(), fill) {}
    ScalarField(GridShape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
        if (values.size() != shape.cell_count())
            throw std::invalid_argument("ScalarField: value count does not match shape");
    }

    double& at(int x, int y, int z = 0) { return values[shape.index(x, y, z)]; }
    double at(int x, int y, int z = 0) const { return values[shape.index(x, y, z)]; }

    double min() const { return *std::min_element(values.begin(), values.end()); }
    double max() const { return *std::max_element(values.begin(), values.end()); }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/// Dense vector field: ndim components per node, interleaved (ux, uy[, uz]).
struct DisplacementField {
    GridShape shape;
    std::vector<double> vectors;

    DisplacementField() = default;
    explicit DisplacementField(GridShape s)
        : shape(std::move(s)), vectors(shape.cell_count() * shape.ndim(), 0.0) {}
    DisplacementField(GridShape s, std::vector<double> v)
        : shape(std::move(s)), vectors(std::move(v)) {
        if (vectors.size() != shape.cell_count() * static_cast<std::size_t>(shape.ndim()))
            throw std::invalid_argument("DisplacementField: vector count does not match shape");
    }

    double& comp(int x, int y, int c) { return vectors[shape.index(x, y) * shape.ndim() + c]; }
    double comp(int x, int y, int c) const {
        return vectors[shape.index(x, y) * shape.ndim() + c];
    }
    double& comp3(int x, int y, int z, int c) {
        return vectors[shape.index(x, y, z) * shape.ndim() + c];
    }
    double comp3(int x, int y, int z, int c) const {
        return vectors[shape.index(x, y, z) * shape.ndim() + c];
    }

    bool all_finite() const {
        for (double v : vectors)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

using FieldVariant = std::variant<ScalarField, DisplacementField>;

inline const GridShape& field_shape(const FieldVariant& f) {
    return std::visit([](const auto& x) -> const GridShape& { return x.shape; }, f);
}

/// Ordered series of frames; every member field shares one GridShape and
/// time indices are strictly increasing.
struct FrameSequence {
    struct Frame {
        int time_index = 0;
        std::map<std::string, FieldVariant> fields;
    };
    std::vector<Frame> frames;

    void append(Frame f) {
        if (!frames.empty() && f.time_index <= frames.back().time_index)
            throw std::invalid_argument("FrameSequence: time indices must be strictly increasing");
        if (!f.fields.empty()) {
            const GridShape& s = field_shape(f.fields.begin()->second);
            for (const auto& [name, fv] : f.fields)
                if (field_shape(fv) != s)
                    throw std::invalid_argument("FrameSequence: fields must share one GridShape");
            if (!frames.empty() && !frames.front().fields.empty()) {
                const GridShape& s0 = field_shape(frames.front().fields.begin()->second);
                if (s != s0)
                    throw std::invalid_argument("FrameSequence: frames must share one GridShape");
            }
        }
        frames.push_back(std::move(f));
    }

    std::size_t size() const { return frames.size(); }
    bool empty() const { return frames.empty(); }
};

}  // namespace emrecon
