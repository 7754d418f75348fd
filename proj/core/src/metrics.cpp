#include "midseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

namespace midseg {

namespace {

struct Pixel {
    int y, x;
};

std::vector<Pixel> surface_pixels(const BinaryMask& m) {
    std::vector<Pixel> out;
    const int h = m.height(), w = m.width();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!m.test(y, x)) continue;
            const bool bg_up = y == 0 || !m.test(y - 1, x);
            const bool bg_dn = y == h - 1 || !m.test(y + 1, x);
            const bool bg_lf = x == 0 || !m.test(y, x - 1);
            const bool bg_rt = x == w - 1 || !m.test(y, x + 1);
            if (bg_up || bg_dn || bg_lf || bg_rt) out.push_back({y, x});
        }
    return out;
}

void directed_distances(const std::vector<Pixel>& from, const std::vector<Pixel>& to,
                        std::vector<double>& out) {
    for (const Pixel& p : from) {
        double best = std::numeric_limits<double>::max();
        for (const Pixel& q : to) {
            const double dy = p.y - q.y, dx = p.x - q.x;
            best = std::min(best, dy * dy + dx * dx);
        }
        out.push_back(std::sqrt(best));
    }
}

double percentile_linear(std::vector<double>& v, double q) {
    std::sort(v.begin(), v.end());
    const double rank = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(rank));
    const double frac = rank - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

double dice(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("dice: shape mismatch");
    std::size_t na = 0, nb = 0, both = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool ia = a.test(i), ib = b.test(i);
        na += ia;
        nb += ib;
        both += ia && ib;
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

double jaccard(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("jaccard: shape mismatch");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool ia = a.test(i), ib = b.test(i);
        inter += ia && ib;
        uni += ia || ib;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

SurfaceDistances surface_distances(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("surface_distances: shape mismatch");
    SurfaceDistances result;
    const std::vector<Pixel> sa = surface_pixels(a);
    const std::vector<Pixel> sb = surface_pixels(b);
    if (sa.empty() || sb.empty()) return result;  // undefined
    std::vector<double> pooled;
    pooled.reserve(sa.size() + sb.size());
    directed_distances(sa, sb, pooled);
    directed_distances(sb, sa, pooled);
    // sorted accumulation makes asd independent of pooling direction
    std::sort(pooled.begin(), pooled.end());
    double sum = 0.0;
    for (double d : pooled) sum += d;
    result.asd = sum / static_cast<double>(pooled.size());
    result.hd95 = percentile_linear(pooled, 0.95);
    result.defined = true;
    return result;
}

BinaryMask class_mask(const LabelField& l, int cls) {
    BinaryMask m(l.height(), l.width());
    for (int y = 0; y < l.height(); ++y)
        for (int x = 0; x < l.width(); ++x) m.set(y, x, l.at(y, x) == cls);
    return m;
}

double mean_foreground_dice(const LabelField& prediction, const LabelField& truth) {
    if (!prediction.same_shape(truth))
        throw std::invalid_argument("mean_foreground_dice: shape mismatch");
    double sum = 0.0;
    for (int c = 1; c < truth.classes(); ++c)
        sum += dice(class_mask(prediction, c), class_mask(truth, c));
    return sum / static_cast<double>(truth.classes() - 1);
}

EvalReport evaluate_model(const SegmenterParams& params, const std::vector<Sample>& test_split,
                          int classes) {
    struct Acc {
        double dc = 0, jc = 0, hd = 0, as = 0;
        int n = 0, n_undef = 0;
    };
    std::map<std::pair<int, int>, Acc> acc;  // (domain, class) with -1 = all

    for (const Sample& s : test_split) {
        const LabelField pred = argmax_field(forward(params, s.image));
        for (int c = 1; c < classes; ++c) {
            const BinaryMask pm = class_mask(pred, c);
            const BinaryMask tm = class_mask(s.label, c);
            const double dc = dice(pm, tm);
            const double jc = jaccard(pm, tm);
            const SurfaceDistances sd = surface_distances(pm, tm);
            for (int dom : {s.domain, -1}) {
                Acc& a = acc[{dom, c}];
                a.dc += dc;
                a.jc += jc;
                a.n += 1;
                if (sd.defined) {
                    a.hd += sd.hd95;
                    a.as += sd.asd;
                } else {
                    a.n_undef += 1;
                }
            }
        }
    }

    EvalReport report;
    double dc_total = 0.0;
    int dc_count = 0;
    for (const auto& [key, a] : acc) {
        MetricRow row;
        row.domain = key.first;
        row.cls = key.second;
        row.n = a.n;
        row.n_undefined = a.n_undef;
        row.dc = a.n ? a.dc / a.n : 0.0;
        row.jc = a.n ? a.jc / a.n : 0.0;
        const int defined = a.n - a.n_undef;
        row.hd95 = defined > 0 ? a.hd / defined : 0.0;
        row.asd = defined > 0 ? a.as / defined : 0.0;
        report.rows.push_back(row);
        if (key.first == -1) {
            dc_total += a.dc;
            dc_count += a.n;
        }
    }
    report.overall_mean_dc = dc_count ? dc_total / dc_count : 0.0;
    return report;
}

double mean_dice_over_domains(const SegmenterParams& params, const std::vector<Sample>& test_split,
                              const std::vector<int>& domains) {
    double sum = 0.0;
    int n = 0;
    for (const Sample& s : test_split) {
        if (std::find(domains.begin(), domains.end(), s.domain) == domains.end()) continue;
        const LabelField pred = argmax_field(forward(params, s.image));
        sum += mean_foreground_dice(pred, s.label);
        n += 1;
    }
    return n ? sum / n : 0.0;
}

void write_report_csv(const EvalReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write report: " + path);
    os << "# hd95: 95th percentile (linear interpolation) of the union of both directed "
          "surface-distance multisets; asd: mean of that union; domain -1 pools all domains\n";
    os << "domain,class,dc,jc,hd95,asd,n,n_undefined\n";
    for (const MetricRow& r : report.rows)
        os << r.domain << "," << r.cls << "," << r.dc << "," << r.jc << "," << r.hd95 << ","
           << r.asd << "," << r.n << "," << r.n_undefined << "\n";
}

}  // namespace midseg
