#include "midseg/reliability.hpp"

#include <algorithm>
#include <stdexcept>

#include "midseg/mask_ops.hpp"

namespace midseg {

double hardness(const LabelField& teacher_label, const LabelField& student_label) {
    if (!teacher_label.same_shape(student_label))
        throw std::invalid_argument("hardness: shape mismatch");
    const int classes = teacher_label.classes();
    const std::size_t n = teacher_label.size();
    double dice_sum = 0.0;
    for (int c = 1; c < classes; ++c) {
        std::size_t a = 0, b = 0, both = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool in_a = teacher_label[i] == c;
            const bool in_b = student_label[i] == c;
            a += in_a;
            b += in_b;
            both += in_a && in_b;
        }
        dice_sum += (a + b == 0) ? 1.0 : 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
    }
    return 1.0 - dice_sum / static_cast<double>(classes - 1);
}

ReliableQueue::ReliableQueue(std::size_t capacity, double gamma0, double delta)
    : capacity_(capacity), gamma_(gamma0), gamma0_(gamma0), delta_(delta) {
    if (capacity == 0) throw std::invalid_argument("ReliableQueue: capacity must be positive");
    if (!(gamma0 > 0.0)) throw std::invalid_argument("ReliableQueue: gamma0 must be positive");
    if (!(delta > 1.0)) throw std::invalid_argument("ReliableQueue: delta must exceed 1");
}

bool ReliableQueue::try_admit(ReliableEntry candidate) {
    if (!(candidate.hardness < gamma_)) return false;
    entries_.push_back(std::move(candidate));
    if (entries_.size() > capacity_) {
        entries_.pop_front();
        double max_h = 0.0;
        for (const ReliableEntry& e : entries_) max_h = std::max(max_h, e.hardness);
        gamma_ = std::max(gamma0_, max_h);
    }
    return true;
}

void ReliableQueue::relax_threshold() { gamma_ = std::max(gamma0_, delta_ * gamma_); }

double ReliableQueue::mean_hardness() const {
    if (entries_.empty()) return 0.0;
    double s = 0.0;
    for (const ReliableEntry& e : entries_) s += e.hardness;
    return s / static_cast<double>(entries_.size());
}

std::size_t pick_unreliable(const std::vector<double>& batch_hardness) {
    if (batch_hardness.empty()) throw std::invalid_argument("pick_unreliable: empty batch");
    std::size_t best = 0;
    for (std::size_t i = 1; i < batch_hardness.size(); ++i)
        if (batch_hardness[i] > batch_hardness[best]) best = i;
    return best;
}

UnreliableIntermediate build_unreliable_intermediate(const MultiGrid& labeled_image,
                                                     const LabelField& labeled_gt,
                                                     const MultiGrid& unreliable_image,
                                                     const LabelField& unreliable_pseudo,
                                                     const ProbField& unreliable_prob,
                                                     double tau) {
    UnreliableIntermediate out;
    out.box = foreground_union_box(unreliable_pseudo, labeled_gt);
    out.sample = blend(labeled_image, unreliable_image, out.box);
    out.label = blend(labeled_gt, unreliable_pseudo, out.box);
    const BinaryMask ones(labeled_gt.height(), labeled_gt.width(), 1);
    out.weight = blend(ones, confidence_mask(unreliable_prob, tau), out.box);
    return out;
}

}  // namespace midseg
