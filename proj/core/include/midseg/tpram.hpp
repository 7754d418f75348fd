#pragma once

// Progressive Fourier style mixing: the low-frequency amplitude of an
// unlabeled image is blended into a labeled image while the labeled phase is
// kept, with a mixing ratio whose upper bound grows with training progress.

#include "midseg/fft.hpp"
#include "midseg/grid.hpp"
#include "midseg/rng.hpp"

namespace midseg {

/// Training clock and low-frequency extent for the style mixer.
/// progress() = t / t_total in [0,1]; beta is the half-extent fraction of
/// the mixed low-frequency block, in (0, 0.5).
struct StyleSchedule {
    long t = 0;
    long t_total = 1;
    double beta = 0.01;

    double progress() const { return static_cast<double>(t) / static_cast<double>(t_total); }
};

/// Half-extent in bins of the low-frequency block along one axis:
/// ceil(beta * size), so the block is nonempty for any beta > 0.
int low_freq_half_extent(double beta, int size);

/// Convex amplitude blend a*(1-rho) + b*rho restricted to the centered
/// block with the given half-extents; outside the block the result is
/// bit-identical to a.
Grid mix_amplitude_block(const Grid& a, const Grid& b, double rho, int half_h, int half_w);

/// Core mixer with an explicit ratio: inverse transform of (blended
/// amplitude, labeled phase), clamped to [0,1]. Channels mix independently
/// with the same rho.
MultiGrid amplitude_mixup_with_ratio(const MultiGrid& labeled, const MultiGrid& unlabeled,
                                     double rho, int half_h, int half_w);
Grid amplitude_mixup_with_ratio(const Grid& labeled, const Grid& unlabeled, double rho,
                                int half_h, int half_w);

/// Progress-bounded random mixing: rho ~ Uniform[0, progress()], block
/// extent from schedule.beta. rho is returned through *rho_out when given
/// (logged by the trainer for reproducibility).
MultiGrid amplitude_mixup(const MultiGrid& labeled, const MultiGrid& unlabeled,
                          const StyleSchedule& schedule, Rng& rng, double* rho_out = nullptr);
Grid amplitude_mixup(const Grid& labeled, const Grid& unlabeled, const StyleSchedule& schedule,
                     Rng& rng, double* rho_out = nullptr);

/// Ablation variant: rho ~ Uniform[0,1] independent of training progress.
MultiGrid ram_mixup(const MultiGrid& labeled, const MultiGrid& unlabeled, double beta, Rng& rng,
                    double* rho_out = nullptr);
Grid ram_mixup(const Grid& labeled, const Grid& unlabeled, double beta, Rng& rng,
               double* rho_out = nullptr);

}  // namespace midseg
