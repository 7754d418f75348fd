#include "midseg/ucp.hpp"

#include <stdexcept>

#include "midseg/mask_ops.hpp"

namespace midseg {

IntermediatePair compose_ucp(const MultiGrid& source_image, const ProbField& source_prob,
                             const MultiGrid& unlabeled_image, const ProbField& unlabeled_prob,
                             const BinaryMask& mask, double tau) {
    if (!source_image.same_shape(unlabeled_image) ||
        !source_prob.planes().same_shape(unlabeled_prob.planes()) ||
        source_image.height() != source_prob.height() ||
        source_image.width() != source_prob.width() || mask.height() != source_image.height() ||
        mask.width() != source_image.width())
        throw std::invalid_argument("compose_ucp: dimension mismatch");

    IntermediatePair pair;
    pair.mask = mask;
    pair.sample_in = blend(source_image, unlabeled_image, mask);
    pair.sample_out = blend(unlabeled_image, source_image, mask);
    pair.prob_in = blend(source_prob, unlabeled_prob, mask);
    pair.prob_out = blend(unlabeled_prob, source_prob, mask);
    pair.label_in = argmax_field(pair.prob_in);
    pair.label_out = argmax_field(pair.prob_out);
    pair.weight_in = confidence_mask(pair.prob_in, tau);
    pair.weight_out = confidence_mask(pair.prob_out, tau);
    return pair;
}

MergedPseudoLabel merge_intermediate_pseudolabels(const ProbField& pred_on_in,
                                                  const ProbField& pred_on_out,
                                                  const BinaryMask& mask, double tau) {
    if (!pred_on_in.planes().same_shape(pred_on_out.planes()))
        throw std::invalid_argument("merge_intermediate_pseudolabels: dimension mismatch");
    MergedPseudoLabel merged;
    merged.label = blend(argmax_field(pred_on_out), argmax_field(pred_on_in), mask);
    merged.weight = blend(confidence_mask(pred_on_out, tau), confidence_mask(pred_on_in, tau), mask);
    return merged;
}

BinaryMask ensemble_weight(const LabelField& q_direct, const LabelField& q_merged,
                           const BinaryMask& w, const BinaryMask& w_mg) {
    return mask_and(mask_xor_agreement(q_direct, q_merged), mask_and(w, w_mg));
}

}  // namespace midseg
