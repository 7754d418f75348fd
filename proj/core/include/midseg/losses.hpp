#pragma once

// Weighted cross-entropy and Dice losses with analytic gradients w.r.t. the
// probability field, the warm-up coefficient lambda(t), and the composite
// loss aggregation.

#include "midseg/grid.hpp"

namespace midseg {

/// Probabilities are clamped to [kProbEps, 1-kProbEps] before log/ratio use.
inline constexpr double kProbEps = 1e-7;

/// Mean over all H*W pixels of w_i * (-log p at the true class). Masked
/// pixels contribute 0 but still count in the denominator.
double weighted_ce(const LabelField& y, const ProbField& p, const BinaryMask& w);

/// d(weighted_ce)/dp, same shape as p's planes. Zero where the clamp binds.
MultiGrid weighted_ce_grad(const LabelField& y, const ProbField& p, const BinaryMask& w);

/// 1 - 2*sum(w p y) / sum(w (p^2 + y^2)) per foreground class, averaged over
/// classes 1..C-1; a class with zero denominator contributes 0.
double weighted_dice(const LabelField& y, const ProbField& p, const BinaryMask& w);

MultiGrid weighted_dice_grad(const LabelField& y, const ProbField& p, const BinaryMask& w);

/// exp(-5 (1 - t/t_total)): ramps from e^-5 at t=0 to 1 at t=t_total.
double lambda_schedule(long t, long t_total);

/// Per-iteration loss components and their aggregation
/// l_total = l_s + lambda (l_in + l_out + lambda l_sym).
struct LossBreakdown {
    double l_s = 0.0;
    double l_in = 0.0;
    double l_out = 0.0;
    double l_sym = 0.0;
    double lambda_t = 0.0;
    double l_total = 0.0;
};

LossBreakdown total_loss(double l_s, double l_in, double l_out, double l_sym, long t,
                         long t_total);

}  // namespace midseg
