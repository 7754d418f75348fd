#pragma once

// Segmentation evaluation: Dice, Jaccard, 95th-percentile Hausdorff
// distance, and average surface distance, plus per-domain aggregation over
// a test split.

#include <string>
#include <vector>

#include "midseg/grid.hpp"
#include "midseg/segnet.hpp"
#include "midseg/synthdata.hpp"

namespace midseg {

/// 2|A and B| / (|A|+|B|); both masks empty reads as perfect agreement (1).
double dice(const BinaryMask& a, const BinaryMask& b);

/// |A and B| / |A or B|; both empty -> 1.
double jaccard(const BinaryMask& a, const BinaryMask& b);

/// Surface pixels are foreground pixels 4-adjacent to background (pixels
/// outside the image count as background). Directed exact Euclidean
/// nearest-surface distances are pooled from both directions; hd95 is the
/// 95th percentile of that multiset with linear interpolation between order
/// statistics, asd its mean. Undefined when either mask is empty.
struct SurfaceDistances {
    double hd95 = 0.0;
    double asd = 0.0;
    bool defined = false;
};

SurfaceDistances surface_distances(const BinaryMask& a, const BinaryMask& b);

inline double hd95(const BinaryMask& a, const BinaryMask& b) { return surface_distances(a, b).hd95; }
inline double asd(const BinaryMask& a, const BinaryMask& b) { return surface_distances(a, b).asd; }

/// Binary mask of one class of a label field.
BinaryMask class_mask(const LabelField& l, int cls);

/// Mean over foreground classes of the per-class Dice between two label
/// fields (both-empty classes read as 1).
double mean_foreground_dice(const LabelField& prediction, const LabelField& truth);

/// One aggregated row of the evaluation report. domain == -1 means all
/// domains pooled. hd95/asd average only the defined samples.
struct MetricRow {
    int domain = 0;
    int cls = 0;
    double dc = 0.0;
    double jc = 0.0;
    double hd95 = 0.0;
    double asd = 0.0;
    int n = 0;
    int n_undefined = 0;
};

struct EvalReport {
    std::vector<MetricRow> rows;
    double overall_mean_dc = 0.0;
};

/// Runs the model over the test split and aggregates per (domain, class).
EvalReport evaluate_model(const SegmenterParams& params, const std::vector<Sample>& test_split,
                          int classes);

/// Mean over test samples (restricted to the given domains) of the
/// per-sample mean foreground Dice.
double mean_dice_over_domains(const SegmenterParams& params, const std::vector<Sample>& test_split,
                              const std::vector<int>& domains);

/// CSV with columns domain,class,dc,jc,hd95,asd,n,n_undefined. The header
/// states the hd95 convention.
void write_report_csv(const EvalReport& report, const std::string& path);

}  // namespace midseg
