#include "midseg/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace midseg {

namespace {

void check_shapes(const LabelField& y, const ProbField& p, const BinaryMask& w,
                  const char* who) {
    if (y.height() != p.height() || y.width() != p.width() || y.classes() != p.classes() ||
        w.height() != p.height() || w.width() != p.width())
        throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

double clamp_prob(double v) {
    if (v < kProbEps) return kProbEps;
    if (v > 1.0 - kProbEps) return 1.0 - kProbEps;
    return v;
}

}  // namespace

double weighted_ce(const LabelField& y, const ProbField& p, const BinaryMask& w) {
    check_shapes(y, p, w, "weighted_ce");
    const std::size_t n = y.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!w.test(i)) continue;
        acc -= std::log(clamp_prob(p.plane(y[i])[i]));
    }
    return acc / static_cast<double>(n);
}

MultiGrid weighted_ce_grad(const LabelField& y, const ProbField& p, const BinaryMask& w) {
    check_shapes(y, p, w, "weighted_ce_grad");
    MultiGrid g(p.classes(), p.height(), p.width());
    const std::size_t n = y.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!w.test(i)) continue;
        const double v = p.plane(y[i])[i];
        if (v <= kProbEps || v >= 1.0 - kProbEps) continue;  // clamp region: flat
        g.plane(y[i])[i] = -inv_n / v;
    }
    return g;
}

double weighted_dice(const LabelField& y, const ProbField& p, const BinaryMask& w) {
    check_shapes(y, p, w, "weighted_dice");
    const int classes = p.classes();
    const std::size_t n = y.size();
    double total = 0.0;
    for (int c = 1; c < classes; ++c) {
        double num = 0.0, den = 0.0;
        const Grid& pc = p.plane(c);
        for (std::size_t i = 0; i < n; ++i) {
            if (!w.test(i)) continue;
            const double pv = clamp_prob(pc[i]);
            const double yv = (y[i] == c) ? 1.0 : 0.0;
            num += pv * yv;
            den += pv * pv + yv * yv;
        }
        if (den > 0.0) total += 1.0 - 2.0 * num / den;
    }
    return total / static_cast<double>(classes - 1);
}

MultiGrid weighted_dice_grad(const LabelField& y, const ProbField& p, const BinaryMask& w) {
    check_shapes(y, p, w, "weighted_dice_grad");
    const int classes = p.classes();
    const std::size_t n = y.size();
    MultiGrid g(classes, p.height(), p.width());
    const double class_scale = 1.0 / static_cast<double>(classes - 1);
    for (int c = 1; c < classes; ++c) {
        double num = 0.0, den = 0.0;
        const Grid& pc = p.plane(c);
        for (std::size_t i = 0; i < n; ++i) {
            if (!w.test(i)) continue;
            const double pv = clamp_prob(pc[i]);
            const double yv = (y[i] == c) ? 1.0 : 0.0;
            num += pv * yv;
            den += pv * pv + yv * yv;
        }
        if (den <= 0.0) continue;
        // d(1 - 2N/D)/dp_i = -2 (y_i D - 2 p_i N) / D^2 per weighted pixel
        Grid& gc = g.plane(c);
        const double inv_d2 = 1.0 / (den * den);
        for (std::size_t i = 0; i < n; ++i) {
            if (!w.test(i)) continue;
            const double raw = pc[i];
            if (raw <= kProbEps || raw >= 1.0 - kProbEps) continue;  // clamp region: flat
            const double pv = raw;
            const double yv = (y[i] == c) ? 1.0 : 0.0;
            gc[i] = class_scale * (-2.0) * (yv * den - 2.0 * pv * num) * inv_d2;
        }
    }
    return g;
}

double lambda_schedule(long t, long t_total) {
    if (t_total <= 0 || t < 0 || t > t_total)
        throw std::invalid_argument("lambda_schedule: need 0 <= t <= t_total");
    return std::exp(-5.0 * (1.0 - static_cast<double>(t) / static_cast<double>(t_total)));
}

LossBreakdown total_loss(double l_s, double l_in, double l_out, double l_sym, long t,
                         long t_total) {
    LossBreakdown b;
    b.l_s = l_s;
    b.l_in = l_in;
    b.l_out = l_out;
    b.l_sym = l_sym;
    b.lambda_t = lambda_schedule(t, t_total);
    b.l_total = l_s + b.lambda_t * (l_in + l_out + b.lambda_t * l_sym);
    return b;
}

}  // namespace midseg
