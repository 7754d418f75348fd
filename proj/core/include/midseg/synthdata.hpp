#pragma once

// Synthetic multi-domain 2D segmentation benchmark: shared smooth-blob
// geometry rendered under per-domain intensity styles, plus the weak/strong
// augmentation pipelines. Weak and strong twins of the same sample share
// the geometric draw so their pixel grids stay aligned.

#include <string>
#include <utility>
#include <vector>

#include "midseg/grid.hpp"
#include "midseg/rng.hpp"

namespace midseg {

/// Intensity style of one acquisition domain. The identity style leaves the
/// rendered geometry untouched; styles are the only cross-domain difference.
/// texture_freq = 0 disables the sinusoidal texture (its amplitude is fixed).
struct DomainStyle {
    double gamma = 1.0;
    double brightness = 0.0;
    double contrast = 1.0;
    double bias_amplitude = 0.0;
    double noise_sigma = 0.0;
    double texture_freq = 0.0;

    static DomainStyle identity() { return {}; }
};

/// Four progressively shifted styles; domain 0 is the labeled domain.
std::vector<DomainStyle> default_domain_styles();

struct Sample {
    MultiGrid image;   // D x H x W, values in [0,1]
    LabelField label;  // class indices, 0 = background
    int domain = 0;
    std::string id;
};

struct Dataset {
    int classes = 2;
    int height = 64;
    int width = 64;
    std::vector<Sample> labeled;    // domain 0 only
    std::vector<Sample> unlabeled;  // all domains
    std::vector<Sample> test;       // all domains, labels kept for eval
};

struct DatasetSpec {
    int size = 64;
    int classes = 2;              // 3 enables the blob-ring mode
    int n_labeled = 8;            // from domain 0
    int n_unlabeled_per_domain = 50;
    int n_test_per_domain = 20;
    std::vector<DomainStyle> domains = default_domain_styles();
    std::uint64_t seed = 7;
};

/// Deterministic per seed; the same geometry index renders identically
/// across domains up to style, so identity styles collapse the domains.
Dataset generate_dataset(const DatasetSpec& spec);

/// Directory layout: manifest.txt (one line per sample: id,domain,split)
/// plus images/<id>.grid and labels/<id>.grid.
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

/// Geometric transform parameters: crop-and-resize (scale 0.8..1.0),
/// quarter turns plus a small angle, and axis flips.
struct GeometricDraw {
    double crop_scale = 1.0;
    double crop_off_y = 0.5;  // relative position of the crop window
    double crop_off_x = 0.5;
    int quarter_turns = 0;
    double small_angle_deg = 0.0;
    bool flip_h = false;
    bool flip_v = false;
};

/// Non-geometric parameters applied on top by the strong branch.
struct IntensityDraw {
    double brightness = 0.0;  // -0.2..0.2
    double contrast = 1.0;    // 0.8..1.2
    double gamma = 1.0;       // 0.8..1.25
    double blur_sigma = 0.0;  // 0..1
};

struct AugmentDraw {
    GeometricDraw geo;
    IntensityDraw intensity;
};

AugmentDraw sample_augment_draw(Rng& rng);

/// Applies the geometric transform to image and label identically (bilinear
/// image warp, nearest-neighbor label warp). Identity draws return the
/// sample unchanged, bit-exactly.
Sample apply_geometric(const Sample& s, const GeometricDraw& g);

/// Intensity jitter plus Gaussian blur; labels are untouched by design.
MultiGrid apply_intensity(const MultiGrid& image, const IntensityDraw& d);

Sample weak_augment(const Sample& s, Rng& rng);
Sample strong_augment(const Sample& s, Rng& rng);

/// Weak and strong twins sharing one geometric draw.
std::pair<Sample, Sample> weak_strong_pair(const Sample& s, Rng& rng);

}  // namespace midseg
