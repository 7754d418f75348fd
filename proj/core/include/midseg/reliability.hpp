#pragma once

// Hardness scoring from teacher/student pseudo-label agreement, the
// capacity-K reliable-sample queue with its dynamic threshold, and the
// targeted intermediate built for the hardest sample of a batch.

#include <cstddef>
#include <deque>
#include <vector>

#include "midseg/grid.hpp"

namespace midseg {

/// 1 - mean foreground-class Dice between the two label fields. A class
/// with empty foreground in both reads as perfect agreement (Dice 1).
/// Symmetric in its arguments.
double hardness(const LabelField& teacher_label, const LabelField& student_label);

/// A sample admitted below the threshold, with the pseudo-label state it
/// carried at admission time (scores are frozen, never re-evaluated).
struct ReliableEntry {
    MultiGrid sample;
    ProbField prob;
    LabelField label;
    double hardness = 0.0;
};

/// FIFO of reliable samples under a dynamic hardness threshold gamma.
/// gamma never drops below gamma0.
class ReliableQueue {
public:
    ReliableQueue() = default;
    ReliableQueue(std::size_t capacity, double gamma0, double delta);

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    double gamma() const { return gamma_; }
    double gamma0() const { return gamma0_; }
    double delta() const { return delta_; }

    const ReliableEntry& entry(std::size_t i) const { return entries_[i]; }

    /// Admits when hardness < gamma (strict). If the push overflows the
    /// capacity the oldest entry is popped and gamma becomes the maximum
    /// hardness over the retained entries (floored at gamma0). Returns
    /// whether the candidate was admitted.
    bool try_admit(ReliableEntry candidate);

    /// Called once per iteration in which nothing was admitted:
    /// gamma <- max(gamma0, delta * gamma).
    void relax_threshold();

    double mean_hardness() const;

private:
    std::deque<ReliableEntry> entries_;
    std::size_t capacity_ = 0;
    double gamma_ = 0.0;
    double gamma0_ = 0.0;
    double delta_ = 1.0;
};

/// Index of the highest hardness in the batch; ties break to the lowest
/// index. Throws std::invalid_argument on an empty batch.
std::size_t pick_unreliable(const std::vector<double>& batch_hardness);

/// Targeted intermediate for an unreliable sample: the union bounding box
/// of both foregrounds is pasted from the labeled side only (no reverse
/// direction). Weight is 1 inside the box, the unreliable pseudo-label's
/// confidence outside.
struct UnreliableIntermediate {
    MultiGrid sample;
    LabelField label;
    BinaryMask weight;
    BinaryMask box;
};

UnreliableIntermediate build_unreliable_intermediate(const MultiGrid& labeled_image,
                                                     const LabelField& labeled_gt,
                                                     const MultiGrid& unreliable_image,
                                                     const LabelField& unreliable_pseudo,
                                                     const ProbField& unreliable_prob, double tau);

}  // namespace midseg
