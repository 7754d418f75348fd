#pragma once

// Raster types shared by every other module: a single-channel float plane,
// stacks of planes, per-pixel class distributions and assignments, and
// binary masks. All types are value types; operations are pure functions.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace midseg {

/// Row-major H x W plane of real values. Public operations never produce
/// NaN/Inf; construction validates dimensions only.
class Grid {
public:
    Grid() = default;
    Grid(int height, int width, double fill = 0.0);

    int height() const { return h_; }
    int width() const { return w_; }
    std::size_t size() const { return data_.size(); }

    double& at(int y, int x) { return data_[static_cast<std::size_t>(y) * w_ + x]; }
    double at(int y, int x) const { return data_[static_cast<std::size_t>(y) * w_ + x]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Grid& other) const { return h_ == other.h_ && w_ == other.w_; }

    /// True iff every value is finite.
    bool all_finite() const;

    double sum() const;
    double mean() const;

    /// Number of nonzero entries (popcount for binary masks).
    std::size_t count_nonzero() const;

    bool operator==(const Grid& other) const = default;

private:
    int h_ = 0;
    int w_ = 0;
    std::vector<double> data_;
};

/// A stack of same-shaped planes (image channels or per-class planes).
class MultiGrid {
public:
    MultiGrid() = default;
    MultiGrid(int channels, int height, int width, double fill = 0.0);
    explicit MultiGrid(std::vector<Grid> planes);

    int channels() const { return static_cast<int>(planes_.size()); }
    int height() const { return planes_.empty() ? 0 : planes_[0].height(); }
    int width() const { return planes_.empty() ? 0 : planes_[0].width(); }

    Grid& plane(int c) { return planes_[c]; }
    const Grid& plane(int c) const { return planes_[c]; }

    bool same_shape(const MultiGrid& other) const;

    bool operator==(const MultiGrid& other) const = default;

private:
    std::vector<Grid> planes_;
};

/// Per-pixel class distribution over C >= 2 classes. Each pixel's values
/// lie in [0,1] and sum to 1 within 1e-6.
class ProbField {
public:
    ProbField() = default;
    ProbField(int classes, int height, int width);
    explicit ProbField(MultiGrid planes);

    int classes() const { return planes_.channels(); }
    int height() const { return planes_.height(); }
    int width() const { return planes_.width(); }

    Grid& plane(int c) { return planes_.plane(c); }
    const Grid& plane(int c) const { return planes_.plane(c); }
    MultiGrid& planes() { return planes_; }
    const MultiGrid& planes() const { return planes_; }

    /// Checks the per-pixel simplex invariant (values in [0,1], sum within
    /// `tol` of 1). Used by tests and debug assertions, not hot paths.
    bool is_valid(double tol = 1e-6) const;

    bool operator==(const ProbField& other) const = default;

private:
    MultiGrid planes_;
};

/// Per-pixel class assignment. Indices lie in [0, classes).
class LabelField {
public:
    LabelField() = default;
    LabelField(int classes, int height, int width, int fill = 0);

    int classes() const { return classes_; }
    int height() const { return h_; }
    int width() const { return w_; }

    int& at(int y, int x) { return idx_[static_cast<std::size_t>(y) * w_ + x]; }
    int at(int y, int x) const { return idx_[static_cast<std::size_t>(y) * w_ + x]; }
    int& operator[](std::size_t i) { return idx_[i]; }
    int operator[](std::size_t i) const { return idx_[i]; }
    std::size_t size() const { return idx_.size(); }

    bool same_shape(const LabelField& other) const {
        return h_ == other.h_ && w_ == other.w_ && classes_ == other.classes_;
    }

    bool operator==(const LabelField& other) const = default;

private:
    int classes_ = 0;
    int h_ = 0;
    int w_ = 0;
    std::vector<int> idx_;
};

/// Grid restricted to {0,1}.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int height, int width, int fill = 0);

    int height() const { return grid_.height(); }
    int width() const { return grid_.width(); }

    const Grid& grid() const { return grid_; }

    void set(int y, int x, bool on) { grid_.at(y, x) = on ? 1.0 : 0.0; }
    bool test(int y, int x) const { return grid_.at(y, x) != 0.0; }
    bool test(std::size_t i) const { return grid_[i] != 0.0; }
    std::size_t size() const { return grid_.size(); }

    std::size_t popcount() const { return grid_.count_nonzero(); }
    bool same_shape(const BinaryMask& other) const { return grid_.same_shape(other.grid_); }

    bool operator==(const BinaryMask& other) const = default;

private:
    Grid grid_;
};

/// Per pixel, the class of maximal probability; ties break to the lowest
/// class index.
LabelField argmax_field(const ProbField& p);

/// 1 exactly where the per-pixel max probability is >= tau (inclusive).
BinaryMask confidence_mask(const ProbField& p, double tau);

/// One-hot probability view of a label field.
ProbField one_hot(const LabelField& l);

/// a*m + b*(1-m), pixelwise. Throws std::invalid_argument on shape mismatch.
Grid blend(const Grid& a, const Grid& b, const BinaryMask& m);
MultiGrid blend(const MultiGrid& a, const MultiGrid& b, const BinaryMask& m);
ProbField blend(const ProbField& a, const ProbField& b, const BinaryMask& m);

/// Label blending selects a's index where m=1 and b's where m=0.
LabelField blend(const LabelField& a, const LabelField& b, const BinaryMask& m);

/// Element-wise AND of binary masks.
BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b);

/// Mask blending: a*m + b*(1-m) stays binary.
BinaryMask blend(const BinaryMask& a, const BinaryMask& b, const BinaryMask& m);

}  // namespace midseg
