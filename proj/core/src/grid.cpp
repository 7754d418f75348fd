#include "midseg/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace midseg {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Grid::Grid(int height, int width, double fill) : h_(height), w_(width) {
    require(height >= 1 && width >= 1, "Grid: dimensions must be >= 1");
    data_.assign(static_cast<std::size_t>(height) * width, fill);
}

bool Grid::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double Grid::sum() const {
    double s = 0.0;
    for (double v : data_) s += v;
    return s;
}

double Grid::mean() const { return data_.empty() ? 0.0 : sum() / static_cast<double>(data_.size()); }

std::size_t Grid::count_nonzero() const {
    std::size_t n = 0;
    for (double v : data_)
        if (v != 0.0) ++n;
    return n;
}

MultiGrid::MultiGrid(int channels, int height, int width, double fill) {
    require(channels >= 1, "MultiGrid: need at least one channel");
    planes_.reserve(channels);
    for (int c = 0; c < channels; ++c) planes_.emplace_back(height, width, fill);
}

MultiGrid::MultiGrid(std::vector<Grid> planes) : planes_(std::move(planes)) {
    require(!planes_.empty(), "MultiGrid: need at least one plane");
    for (const Grid& g : planes_)
        require(g.same_shape(planes_[0]), "MultiGrid: planes must share dimensions");
}

bool MultiGrid::same_shape(const MultiGrid& other) const {
    return channels() == other.channels() && height() == other.height() && width() == other.width();
}

ProbField::ProbField(int classes, int height, int width) : planes_(classes, height, width) {
    require(classes >= 2, "ProbField: need at least two classes");
}

ProbField::ProbField(MultiGrid planes) : planes_(std::move(planes)) {
    require(planes_.channels() >= 2, "ProbField: need at least two classes");
}

bool ProbField::is_valid(double tol) const {
    const int c = classes();
    const std::size_t n = plane(0).size();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = 0; k < c; ++k) {
            const double v = plane(k)[i];
            if (!(v >= 0.0 && v <= 1.0)) return false;
            s += v;
        }
        if (std::fabs(s - 1.0) > tol) return false;
    }
    return true;
}

LabelField::LabelField(int classes, int height, int width, int fill)
    : classes_(classes), h_(height), w_(width) {
    require(classes >= 1, "LabelField: need at least one class");
    require(height >= 1 && width >= 1, "LabelField: dimensions must be >= 1");
    require(fill >= 0 && fill < classes, "LabelField: fill index out of range");
    idx_.assign(static_cast<std::size_t>(height) * width, fill);
}

BinaryMask::BinaryMask(int height, int width, int fill) : grid_(height, width, fill ? 1.0 : 0.0) {}

LabelField argmax_field(const ProbField& p) {
    LabelField out(p.classes(), p.height(), p.width());
    const int c = p.classes();
    const std::size_t n = p.plane(0).size();
    for (std::size_t i = 0; i < n; ++i) {
        int best = 0;
        double best_v = p.plane(0)[i];
        for (int k = 1; k < c; ++k) {
            const double v = p.plane(k)[i];
            if (v > best_v) {  // strict: ties keep the lowest index
                best_v = v;
                best = k;
            }
        }
        out[i] = best;
    }
    return out;
}

BinaryMask confidence_mask(const ProbField& p, double tau) {
    BinaryMask out(p.height(), p.width());
    const int c = p.classes();
    const std::size_t n = p.plane(0).size();
    for (std::size_t i = 0; i < n; ++i) {
        double best_v = p.plane(0)[i];
        for (int k = 1; k < c; ++k) best_v = std::max(best_v, p.plane(k)[i]);
        if (best_v >= tau) out.set(static_cast<int>(i / p.width()), static_cast<int>(i % p.width()), true);
    }
    return out;
}

ProbField one_hot(const LabelField& l) {
    ProbField out(l.classes(), l.height(), l.width());
    const std::size_t n = l.size();
    for (std::size_t i = 0; i < n; ++i) out.plane(l[i])[i] = 1.0;
    return out;
}

Grid blend(const Grid& a, const Grid& b, const BinaryMask& m) {
    if (!a.same_shape(b) || !a.same_shape(m.grid()))
        throw std::invalid_argument("blend: dimension mismatch");
    Grid out(a.height(), a.width());
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double mv = m.grid()[i];
        out[i] = a[i] * mv + b[i] * (1.0 - mv);
    }
    return out;
}

MultiGrid blend(const MultiGrid& a, const MultiGrid& b, const BinaryMask& m) {
    if (!a.same_shape(b)) throw std::invalid_argument("blend: dimension mismatch");
    std::vector<Grid> planes;
    planes.reserve(a.channels());
    for (int c = 0; c < a.channels(); ++c) planes.push_back(blend(a.plane(c), b.plane(c), m));
    return MultiGrid(std::move(planes));
}

ProbField blend(const ProbField& a, const ProbField& b, const BinaryMask& m) {
    return ProbField(blend(a.planes(), b.planes(), m));
}

LabelField blend(const LabelField& a, const LabelField& b, const BinaryMask& m) {
    if (!a.same_shape(b) || a.height() != m.height() || a.width() != m.width())
        throw std::invalid_argument("blend: dimension mismatch");
    LabelField out(a.classes(), a.height(), a.width());
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) out[i] = m.test(i) ? a[i] : b[i];
    return out;
}

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("mask_and: dimension mismatch");
    BinaryMask out(a.height(), a.width());
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i)
        if (a.test(i) && b.test(i)) out.set(static_cast<int>(i / a.width()), static_cast<int>(i % a.width()), true);
    return out;
}

BinaryMask blend(const BinaryMask& a, const BinaryMask& b, const BinaryMask& m) {
    if (!a.same_shape(b) || !a.same_shape(m)) throw std::invalid_argument("blend: dimension mismatch");
    BinaryMask out(a.height(), a.width());
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
        const bool v = m.test(i) ? a.test(i) : b.test(i);
        if (v) out.set(static_cast<int>(i / a.width()), static_cast<int>(i % a.width()), true);
    }
    return out;
}

}  // namespace midseg
