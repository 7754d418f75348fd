#include "midseg/tpram.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace midseg {

int low_freq_half_extent(double beta, int size) {
    if (!(beta > 0.0 && beta < 0.5)) throw std::invalid_argument("beta must lie in (0, 0.5)");
    return static_cast<int>(std::ceil(beta * size));
}

Grid mix_amplitude_block(const Grid& a, const Grid& b, double rho, int half_h, int half_w) {
    if (!a.same_shape(b)) throw std::invalid_argument("mix_amplitude_block: shape mismatch");
    Grid out = a;
    const int cy = a.height() / 2, cx = a.width() / 2;
    const int y0 = std::max(0, cy - half_h), y1 = std::min(a.height() - 1, cy + half_h);
    const int x0 = std::max(0, cx - half_w), x1 = std::min(a.width() - 1, cx + half_w);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            out.at(y, x) = (1.0 - rho) * a.at(y, x) + rho * b.at(y, x);
    return out;
}

Grid amplitude_mixup_with_ratio(const Grid& labeled, const Grid& unlabeled, double rho,
                                int half_h, int half_w) {
    if (!labeled.same_shape(unlabeled))
        throw std::invalid_argument("amplitude_mixup: shape mismatch");
    const Spectrum sl = fft2(labeled);
    const Spectrum su = fft2(unlabeled);
    Spectrum mixed{mix_amplitude_block(sl.amplitude, su.amplitude, rho, half_h, half_w), sl.phase};
    Grid out = ifft2(mixed);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], 0.0, 1.0);
    return out;
}

MultiGrid amplitude_mixup_with_ratio(const MultiGrid& labeled, const MultiGrid& unlabeled,
                                     double rho, int half_h, int half_w) {
    if (!labeled.same_shape(unlabeled))
        throw std::invalid_argument("amplitude_mixup: shape mismatch");
    std::vector<Grid> planes;
    planes.reserve(labeled.channels());
    for (int c = 0; c < labeled.channels(); ++c)
        planes.push_back(amplitude_mixup_with_ratio(labeled.plane(c), unlabeled.plane(c), rho,
                                                    half_h, half_w));
    return MultiGrid(std::move(planes));
}

Grid amplitude_mixup(const Grid& labeled, const Grid& unlabeled, const StyleSchedule& schedule,
                     Rng& rng, double* rho_out) {
    const double rho = rng.uniform() * schedule.progress();
    if (rho_out) *rho_out = rho;
    if (rho == 0.0) return labeled;  // zero mixing, skip the transform pair
    return amplitude_mixup_with_ratio(labeled, unlabeled, rho,
                                      low_freq_half_extent(schedule.beta, labeled.height()),
                                      low_freq_half_extent(schedule.beta, labeled.width()));
}

MultiGrid amplitude_mixup(const MultiGrid& labeled, const MultiGrid& unlabeled,
                          const StyleSchedule& schedule, Rng& rng, double* rho_out) {
    const double rho = rng.uniform() * schedule.progress();
    if (rho_out) *rho_out = rho;
    if (rho == 0.0) return labeled;
    return amplitude_mixup_with_ratio(labeled, unlabeled, rho,
                                      low_freq_half_extent(schedule.beta, labeled.height()),
                                      low_freq_half_extent(schedule.beta, labeled.width()));
}

Grid ram_mixup(const Grid& labeled, const Grid& unlabeled, double beta, Rng& rng,
               double* rho_out) {
    const double rho = rng.uniform();
    if (rho_out) *rho_out = rho;
    return amplitude_mixup_with_ratio(labeled, unlabeled, rho,
                                      low_freq_half_extent(beta, labeled.height()),
                                      low_freq_half_extent(beta, labeled.width()));
}

MultiGrid ram_mixup(const MultiGrid& labeled, const MultiGrid& unlabeled, double beta, Rng& rng,
                    double* rho_out) {
    const double rho = rng.uniform();
    if (rho_out) *rho_out = rho;
    return amplitude_mixup_with_ratio(labeled, unlabeled, rho,
                                      low_freq_half_extent(beta, labeled.height()),
                                      low_freq_half_extent(beta, labeled.width()));
}

}  // namespace midseg
