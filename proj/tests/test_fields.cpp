#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "emrecon/container.hpp"
#include "emrecon/resize.hpp"
#include "emrecon/rng.hpp"

using namespace emrecon;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& stem) {
    return fs::temp_directory_path() / ("emrecon_test_" + stem + ".emec");
}

ScalarField random_scalar(const GridShape& g, Rng& rng) {
    ScalarField f(g);
    // f32-representable values so container round-trips are bit-exact
    for (auto& v : f.values) v = static_cast<float>(rng.uniform(-10.0, 10.0));
    return f;
}

DisplacementField random_vector(const GridShape& g, Rng& rng) {
    DisplacementField f(g);
    for (auto& v : f.vectors) v = static_cast<float>(rng.uniform(-4.0, 4.0));
    return f;
}

}  // namespace

TEST_CASE("container round-trips a 3x3 scalar field of zeros") {
    const fs::path p = temp_file("zeros");
    ScalarField f(GridShape(3, 3));
    write_container(p, {{"u", f}}, {{"note", "zeros"}});
    Container c = read_container(p);
    const auto& g = std::get<ScalarField>(c.fields.at("u"));
    CHECK(g.shape == f.shape);
    CHECK(g.values == f.values);
    CHECK(c.metadata.at("note") == "zeros");
    fs::remove(p);
}

TEST_CASE("container round-trips a uniform 128x128 displacement field bit-exactly") {
    const fs::path p = temp_file("disp");
    DisplacementField f(GridShape(128, 128));
    for (std::size_t i = 0; i < f.vectors.size(); i += 2) {
        f.vectors[i] = 1.5;
        f.vectors[i + 1] = -0.25;
    }
    write_container(p, {{"ur", f}});
    Container c = read_container(p);
    CHECK(std::get<DisplacementField>(c.fields.at("ur")).vectors == f.vectors);
    fs::remove(p);
}

TEST_CASE("container round-trips a 100x100x24 linear ramp bit-exactly") {
    const fs::path p = temp_file("ramp");
    GridShape g(100, 100, 24);
    ScalarField f(g);
    const std::size_t n = f.values.size();
    for (std::size_t i = 0; i < n; ++i)
        f.values[i] = static_cast<float>(static_cast<double>(i) / n);
    write_container(p, {{"u", f}});
    Container c = read_container(p);
    const auto& r = std::get<ScalarField>(c.fields.at("u"));
    REQUIRE(r.values.size() == n);
    for (std::size_t i = 0; i < n; i += 997)
        CHECK(r.values[i] == f.values[i]);
    CHECK(r.values == f.values);
    fs::remove(p);
}

TEST_CASE("container round-trip is bit-exact for random fields (property)") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        const fs::path p = temp_file("prop" + std::to_string(trial));
        GridShape g = trial % 2 == 0
                          ? GridShape(3 + static_cast<int>(rng.below(12)),
                                      3 + static_cast<int>(rng.below(12)))
                          : GridShape(3 + static_cast<int>(rng.below(8)),
                                      3 + static_cast<int>(rng.below(8)),
                                      3 + static_cast<int>(rng.below(5)));
        ScalarField s = random_scalar(g, rng);
        DisplacementField d = random_vector(g, rng);
        write_container(p, {{"s", s}, {"d", d}}, {{"trial", std::to_string(trial)}});
        Container c = read_container(p);
        CHECK(std::get<ScalarField>(c.fields.at("s")).values == s.values);
        CHECK(std::get<DisplacementField>(c.fields.at("d")).vectors == d.vectors);
        fs::remove(p);
    }
}

TEST_CASE("container read reports distinct failures") {
    const fs::path p = temp_file("bad");

    SUBCASE("bad magic") {
        std::ofstream out(p, std::ios::binary);
        out << "NOPExxxxxxxxxxxxxxxxxxxx";
        out.close();
        CHECK_THROWS_WITH_AS(read_container(p), doctest::Contains("bad magic"),
                             std::runtime_error);
    }
    SUBCASE("truncated payload") {
        ScalarField f(GridShape(8, 8));
        write_container(p, {{"u", f}});
        const auto size = fs::file_size(p);
        fs::resize_file(p, size / 2);
        CHECK_THROWS_WITH_AS(read_container(p), doctest::Contains("truncated"),
                             std::runtime_error);
    }
    SUBCASE("unsupported version") {
        ScalarField f(GridShape(8, 8));
        write_container(p, {{"u", f}});
        std::fstream io(p, std::ios::binary | std::ios::in | std::ios::out);
        io.seekp(4);
        const char v2[2] = {2, 0};
        io.write(v2, 2);
        io.close();
        CHECK_THROWS_WITH_AS(read_container(p), doctest::Contains("version"),
                             std::runtime_error);
    }
    SUBCASE("shape mismatch rejected on write") {
        ScalarField a(GridShape(8, 8));
        ScalarField b(GridShape(9, 8));
        CHECK_THROWS_WITH_AS(write_container(p, {{"a", a}, {"b", b}}),
                             doctest::Contains("shape mismatch"), std::invalid_argument);
    }
    fs::remove(p);
}

TEST_CASE("resize of a constant field is constant") {
    ScalarField f(GridShape(7, 5), 3.25);
    ScalarField r = resize_bilinear(f, 13, 11);
    for (double v : r.values) CHECK(v == doctest::Approx(3.25).epsilon(1e-15));
}

TEST_CASE("resize 2x2 -> 4x4 matches hand-evaluated bilinear weights") {
    ScalarField f(GridShape(2, 2));
    // column x=0 is 0, column x=1 is 1
    f.at(0, 0) = 0;
    f.at(1, 0) = 1;
    f.at(0, 1) = 0;
    f.at(1, 1) = 1;
    ScalarField r = resize_bilinear(f, 4, 4);
    for (int y = 0; y < 4; ++y) {
        CHECK(r.at(0, y) == doctest::Approx(0.0));
        CHECK(r.at(1, y) == doctest::Approx(1.0 / 3.0));
        CHECK(r.at(2, y) == doctest::Approx(2.0 / 3.0));
        CHECK(r.at(3, y) == doctest::Approx(1.0));
    }
}

TEST_CASE("displacement resize rescales components to new-grid units") {
    DisplacementField f(GridShape(200, 200));
    for (std::size_t i = 0; i < f.vectors.size(); i += 2) f.vectors[i] = 2.0;
    DisplacementField r = resize_bilinear(f, 128, 128);
    for (std::size_t i = 0; i < r.vectors.size(); i += 2) {
        CHECK(r.vectors[i] == doctest::Approx(1.28).epsilon(1e-12));
        CHECK(r.vectors[i + 1] == doctest::Approx(0.0));
    }
}

TEST_CASE("resize stays inside the input min/max envelope (property)") {
    Rng rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        GridShape g(3 + static_cast<int>(rng.below(20)), 3 + static_cast<int>(rng.below(20)));
        ScalarField f = random_scalar(g, rng);
        const int nx = 2 + static_cast<int>(rng.below(40));
        const int ny = 2 + static_cast<int>(rng.below(40));
        ScalarField r = resize_bilinear(f, nx, ny);
        const double lo = f.min(), hi = f.max();
        for (double v : r.values) {
            CHECK(v >= lo - 1e-12);
            CHECK(v <= hi + 1e-12);
        }
    }
}

TEST_CASE("resize rejects 3D input") {
    ScalarField f(GridShape(4, 4, 4));
    CHECK_THROWS_AS(resize_bilinear(f, 8, 8), std::invalid_argument);
}

TEST_CASE("frame sequence enforces ordering and shape consistency") {
    FrameSequence seq;
    FrameSequence::Frame f0;
    f0.time_index = 0;
    f0.fields.emplace("u", ScalarField(GridShape(4, 4)));
    seq.append(f0);

    FrameSequence::Frame f1;
    f1.time_index = 0;  // not strictly increasing
    CHECK_THROWS_AS(seq.append(f1), std::invalid_argument);

    FrameSequence::Frame f2;
    f2.time_index = 5;
    f2.fields.emplace("u", ScalarField(GridShape(5, 4)));
    CHECK_THROWS_AS(seq.append(f2), std::invalid_argument);
}
