#pragma once

// Unified copy-paste between a source (labeled data or a reliable sample)
// and an unlabeled sample: both paste directions share one mask, and the
// composite probability maps, pseudo-labels, and weight maps come with the
// images. Also the merged pseudo-label used by symmetric guidance.

#include "midseg/grid.hpp"

namespace midseg {

/// Both paste directions built from one mask. All members share H x W; the
/// labels are argmax-consistent with their probability fields pixelwise.
struct IntermediatePair {
    MultiGrid sample_in;
    MultiGrid sample_out;
    ProbField prob_in;
    ProbField prob_out;
    LabelField label_in;
    LabelField label_out;
    BinaryMask weight_in;
    BinaryMask weight_out;
    BinaryMask mask;
};

/// Builds all six composites: "in" pastes source content inside the mask
/// onto the unlabeled sample, "out" is the mirror. Weight maps are the
/// confidence masks of the composite probability fields at tau (one-hot
/// source regions therefore always pass). Source probabilities are either
/// one_hot(ground truth) or a stored pseudo-probability field.
IntermediatePair compose_ucp(const MultiGrid& source_image, const ProbField& source_prob,
                             const MultiGrid& unlabeled_image, const ProbField& unlabeled_prob,
                             const BinaryMask& mask, double tau);

/// Merges the unlabeled regions of the teacher's predictions on the two
/// weak intermediates: argmax(pred_on_out) inside the mask (where "out"
/// carries unlabeled content), argmax(pred_on_in) outside. The weight map
/// composes the two confidence masks the same way.
struct MergedPseudoLabel {
    LabelField label;
    BinaryMask weight;
};

MergedPseudoLabel merge_intermediate_pseudolabels(const ProbField& pred_on_in,
                                                  const ProbField& pred_on_out,
                                                  const BinaryMask& mask, double tau);

/// Agreement-gated weight for the merged pseudo-label:
/// agreement(q_direct, q_merged) AND w AND w_mg.
BinaryMask ensemble_weight(const LabelField& q_direct, const LabelField& q_merged,
                           const BinaryMask& w, const BinaryMask& w_mg);

}  // namespace midseg
