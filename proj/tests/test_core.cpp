#include "ppd/image.hpp"
#include "ppd/metrics.hpp"
#include "ppd/rng.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <doctest.h>

using namespace ppd;

namespace {

Mask make_mask(int w, int h, const std::set<std::pair<int, int>>& fg) {
    Mask m(w, h, 0);
    for (auto [x, y] : fg) m.at(x, y) = 1;
    return m;
}

Mask random_mask(int w, int h, Rng& rng, double p = 0.5) {
    Mask m(w, h, 0);
    for (auto& v : m.data) v = rng.next_float() < p ? 1 : 0;
    return m;
}

}  // namespace

TEST_CASE("dice identity and disjoint cases") {
    Mask a = make_mask(4, 4, {{0, 0}, {1, 1}});
    CHECK(dice(a, a) == doctest::Approx(1.0));
    Mask b = make_mask(4, 4, {{2, 2}, {3, 3}});
    CHECK(dice(a, b) == doctest::Approx(0.0));
}

TEST_CASE("dice half-overlap") {
    // |a| = 4, |b| = 4, |a and b| = 2 -> 2*2/(4+4) = 0.5
    Mask a = make_mask(4, 4, {{0, 0}, {0, 1}, {0, 2}, {0, 3}});
    Mask b = make_mask(4, 4, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    CHECK(dice(a, b) == doctest::Approx(0.5));
}

TEST_CASE("iou basic values") {
    Mask a = make_mask(4, 4, {{0, 0}, {0, 1}, {0, 2}, {0, 3}});
    CHECK(iou(a, a) == doctest::Approx(1.0));
    Mask b = make_mask(4, 4, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    CHECK(iou(a, b) == doctest::Approx(2.0 / 6.0));
    Mask c = make_mask(4, 4, {{3, 3}});
    CHECK(iou(a, c) == doctest::Approx(0.0));
}

TEST_CASE("empty vs empty is perfect agreement") {
    Mask a(5, 5, 0), b(5, 5, 0);
    CHECK(dice(a, b) == 1.0);
    CHECK(iou(a, b) == 1.0);
}

TEST_CASE("dice/iou reject shape mismatch") {
    Mask a(4, 4, 0), b(4, 5, 0);
    CHECK_THROWS(dice(a, b));
    CHECK_THROWS(iou(a, b));
}

TEST_CASE("dice = 2*iou/(1+iou) and symmetry over random masks") {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        Mask a = random_mask(8, 8, rng);
        Mask b = random_mask(8, 8, rng);
        double d = dice(a, b), i = iou(a, b);
        CHECK(d == doctest::Approx(2.0 * i / (1.0 + i)).epsilon(1e-12));
        CHECK(d == dice(b, a));
        CHECK(i == iou(b, a));
        CHECK(i <= d + 1e-15);
    }
}

TEST_CASE("rng determinism per seed") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng streams with different seeds differ early") {
    Rng a(1), b(2);
    bool differ = false;
    for (int i = 0; i < 16; ++i)
        if (a.next_u64() != b.next_u64()) differ = true;
    CHECK(differ);
}

TEST_CASE("rng_next_int single outcome and zero rejection") {
    Rng rng(7);
    for (int i = 0; i < 100; ++i) CHECK(rng.next_int(1) == 0);
    CHECK_THROWS(rng.next_int(0));
}

TEST_CASE("rng_next_float empirical mean") {
    Rng rng(123);
    double sum = 0;
    for (int i = 0; i < 100000; ++i) sum += rng.next_float();
    double mean = sum / 100000;
    CHECK(mean > 0.49);
    CHECK(mean < 0.51);
}

TEST_CASE("metrics json shape") {
    std::string j = metrics_to_json({0.5, 0.25});
    CHECK(j.find("\"dice\"") != std::string::npos);
    CHECK(j.find("\"iou\"") != std::string::npos);
}

TEST_CASE("ppm/pgm round trip") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "ppd_io_test";
    fs::create_directories(dir);

    Rng rng(9);
    Image img(13, 7);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.next_int(256));
    write_ppm((dir / "t.ppm").string(), img);
    Image back = read_ppm((dir / "t.ppm").string());
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.data == img.data);

    Mask mask = random_mask(13, 7, rng);
    write_pgm((dir / "t.pgm").string(), mask);
    Mask mback = read_pgm((dir / "t.pgm").string());
    CHECK(mback.data == mask.data);
}

TEST_CASE("pgm thresholds at 128 on read") {
    namespace fs = std::filesystem;
    fs::path p = fs::temp_directory_path() / "ppd_thresh.pgm";
    std::vector<std::uint8_t> raw = {0, 127, 128, 255};
    {
        std::ofstream out(p, std::ios::binary);
        out << "P5\n4 1\n255\n";
        out.write(reinterpret_cast<const char*>(raw.data()), 4);
    }
    Mask m = read_pgm(p.string());
    CHECK(m.data == std::vector<std::uint8_t>{0, 0, 1, 1});
}
