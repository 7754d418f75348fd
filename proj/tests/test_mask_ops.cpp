#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "midseg/mask_ops.hpp"

using namespace midseg;

namespace {

// Checks the mask is exactly one solid axis-aligned rectangle by comparing
// against the bounding box of its set pixels.
bool is_solid_rectangle(const BinaryMask& m, int* area_out = nullptr) {
    int y0 = m.height(), y1 = -1, x0 = m.width(), x1 = -1;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.test(y, x)) {
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
            }
    if (y1 < 0) return false;
    const int box = (y1 - y0 + 1) * (x1 - x0 + 1);
    if (static_cast<int>(m.popcount()) != box) return false;
    if (area_out) *area_out = box;
    return true;
}

LabelField field_with(std::initializer_list<std::pair<int, int>> fg, int h = 8, int w = 8,
                      int classes = 2) {
    LabelField l(classes, h, w);
    for (auto [y, x] : fg) l.at(y, x) = 1;
    return l;
}

}  // namespace

TEST_CASE("full-area spec yields the all-ones mask") {
    Rng rng(1);
    RectSpec spec{1.0, 1.0, 1.0, 1.0};
    const BinaryMask m = sample_rect_mask(8, 8, spec, rng);
    CHECK(m.popcount() == 64);
}

TEST_CASE("quarter-area square on an 8x8 grid is a 4x4 block") {
    Rng rng(2);
    RectSpec spec{0.25, 0.25, 1.0, 1.0};
    const BinaryMask m = sample_rect_mask(8, 8, spec, rng);
    int area = 0;
    CHECK(is_solid_rectangle(m, &area));
    CHECK(area == 16);
}

TEST_CASE("fixed seed gives identical masks") {
    RectSpec spec;
    Rng a(42), b(42);
    CHECK(sample_rect_mask(64, 64, spec, a) == sample_rect_mask(64, 64, spec, b));
}

TEST_CASE("impossible specs are rejected") {
    Rng rng(3);
    // full area with 2:1 aspect cannot fit a 64x64 image
    CHECK_THROWS_AS(sample_rect_mask(64, 64, RectSpec{1.0, 1.0, 2.0, 2.0}, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(sample_rect_mask(8, 8, RectSpec{0.5, 0.4, 1.0, 1.0}, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(sample_rect_mask(8, 8, RectSpec{0.0, 0.2, 1.0, 1.0}, rng),
                    std::invalid_argument);
}

TEST_CASE("sampled rectangles are solid and respect the area range") {
    Rng rng(7);
    const RectSpec spec;  // defaults
    for (int rep = 0; rep < 200; ++rep) {
        const BinaryMask m = sample_rect_mask(64, 64, spec, rng);
        int area = 0;
        REQUIRE(is_solid_rectangle(m, &area));
        // allow one row/column of rounding slack relative to the target range
        const double frac = static_cast<double>(area) / (64.0 * 64.0);
        CHECK(frac >= spec.area_lo - 64.0 / 4096.0);
        CHECK(frac <= spec.area_hi + 64.0 / 4096.0);
    }
}

TEST_CASE("foreground_union_box oracle examples") {
    const LabelField a = field_with({{2, 3}});
    const LabelField b = field_with({{5, 7}});
    const BinaryMask m = foreground_union_box(a, b);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            CHECK(m.test(y, x) == (y >= 2 && y <= 5 && x >= 3 && x <= 7));

    CHECK(foreground_union_box(field_with({}), field_with({})).popcount() == 0);

    const LabelField single = field_with({{4, 4}});
    const BinaryMask one = foreground_union_box(single, single);
    CHECK(one.popcount() == 1);
    CHECK(one.test(4, 4));
}

TEST_CASE("foreground_union_box is symmetric") {
    Rng rng(17);
    for (int rep = 0; rep < 25; ++rep) {
        LabelField a(2, 10, 10), b(2, 10, 10);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = rng.bernoulli(0.1);
            b[i] = rng.bernoulli(0.1);
        }
        CHECK(foreground_union_box(a, b) == foreground_union_box(b, a));
    }
}

TEST_CASE("mask_xor_agreement oracle examples") {
    Rng rng(23);
    LabelField a(3, 8, 8);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.uniform_int(0, 2);
    CHECK(mask_xor_agreement(a, a).popcount() == 64);

    LabelField bin(2, 8, 8), inv(2, 8, 8);
    for (std::size_t i = 0; i < bin.size(); ++i) {
        bin[i] = rng.bernoulli(0.5);
        inv[i] = 1 - bin[i];
    }
    CHECK(mask_xor_agreement(bin, inv).popcount() == 0);

    // 3-class fields differing at exactly 5 of 64 pixels
    LabelField b = a;
    for (int k = 0; k < 5; ++k) b[static_cast<std::size_t>(k * 7)] = (a[static_cast<std::size_t>(k * 7)] + 1) % 3;
    CHECK(mask_xor_agreement(a, b).popcount() == 59);
}

TEST_CASE("binary agreement equals 1-XOR of the planes") {
    Rng rng(29);
    LabelField a(2, 6, 6), b(2, 6, 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.bernoulli(0.5);
        b[i] = rng.bernoulli(0.5);
    }
    const BinaryMask agree = mask_xor_agreement(a, b);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(static_cast<int>(agree.test(i)) == 1 - (a[i] ^ b[i]));
}
