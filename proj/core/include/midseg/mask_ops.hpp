#pragma once

// Rectangular paste-region masks, foreground bounding boxes, and label
// agreement masks.

#include "midseg/grid.hpp"
#include "midseg/rng.hpp"

namespace midseg {

/// Ranges for the random paste rectangle: target area as a fraction of the
/// image, and aspect ratio (width/height). Defaults keep both compositing
/// directions nontrivial at 64x64.
struct RectSpec {
    double area_lo = 0.04;
    double area_hi = 0.36;
    double aspect_lo = 0.5;
    double aspect_hi = 2.0;
};

/// Single axis-aligned all-ones rectangle with area fraction and aspect ratio
/// drawn from `spec`, placed uniformly over valid positions (border-touching
/// allowed). Deterministic given the rng state. Throws std::invalid_argument
/// when the spec cannot fit (a range corner forces a side > H or > W).
BinaryMask sample_rect_mask(int height, int width, const RectSpec& spec, Rng& rng);

/// Tight bounding box of all pixels that are foreground (class != 0) in
/// either field; all-zeros when neither has foreground.
BinaryMask foreground_union_box(const LabelField& a, const LabelField& b);

/// 1 where a and b assign the same class, 0 where they differ.
BinaryMask mask_xor_agreement(const LabelField& a, const LabelField& b);

}  // namespace midseg
