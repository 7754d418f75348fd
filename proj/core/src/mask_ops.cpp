#include "midseg/mask_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace midseg {

namespace {

int round_side(double v, int limit) {
    return std::clamp(static_cast<int>(std::lround(v)), 1, limit);
}

}  // namespace

BinaryMask sample_rect_mask(int height, int width, const RectSpec& spec, Rng& rng) {
    if (!(spec.area_lo <= spec.area_hi) || !(spec.aspect_lo <= spec.aspect_hi))
        throw std::invalid_argument("sample_rect_mask: lo must not exceed hi");
    if (!(spec.area_lo > 0.0 && spec.area_hi <= 1.0))
        throw std::invalid_argument("sample_rect_mask: area fraction must lie in (0,1]");
    if (!(spec.aspect_lo > 0.0))
        throw std::invalid_argument("sample_rect_mask: aspect ratio must be positive");

    const double max_area = spec.area_hi * height * width;
    // Worst-case sides over the range corners must fit the image.
    const double w_max = std::sqrt(max_area * spec.aspect_hi);
    const double h_max = std::sqrt(max_area / spec.aspect_lo);
    if (std::lround(w_max) > width || std::lround(h_max) > height)
        throw std::invalid_argument("sample_rect_mask: spec cannot fit inside the image");

    const double area = spec.area_lo * height * width +
                        (spec.area_hi - spec.area_lo) * height * width * rng.uniform();
    const double aspect = rng.uniform(spec.aspect_lo, spec.aspect_hi);

    const int rect_h = round_side(std::sqrt(area / aspect), height);
    const int rect_w = round_side(area / rect_h, width);

    const int top = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(height - rect_h + 1)));
    const int left = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(width - rect_w + 1)));

    BinaryMask m(height, width);
    for (int y = top; y < top + rect_h; ++y)
        for (int x = left; x < left + rect_w; ++x) m.set(y, x, true);
    return m;
}

BinaryMask foreground_union_box(const LabelField& a, const LabelField& b) {
    if (a.height() != b.height() || a.width() != b.width())
        throw std::invalid_argument("foreground_union_box: dimension mismatch");
    int y0 = std::numeric_limits<int>::max(), y1 = -1;
    int x0 = std::numeric_limits<int>::max(), x1 = -1;
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            if (a.at(y, x) != 0 || b.at(y, x) != 0) {
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
            }
        }
    }
    BinaryMask m(a.height(), a.width());
    if (y1 < 0) return m;  // neither field has foreground
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) m.set(y, x, true);
    return m;
}

BinaryMask mask_xor_agreement(const LabelField& a, const LabelField& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("mask_xor_agreement: shape mismatch");
    BinaryMask m(a.height(), a.width());
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) m.set(y, x, a.at(y, x) == b.at(y, x));
    return m;
}

}  // namespace midseg
