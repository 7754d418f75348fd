#include "midseg/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "midseg/grid_io.hpp"

namespace midseg {

namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kTextureAmplitude = 0.05;
constexpr double kEdgeSoftness = 0.35;  // relative width of the blob boundary

std::uint64_t mix_salt(std::uint64_t a, std::uint64_t b) { return a * 0x100000001b3ULL + b; }

// Smooth scalar field: a few anisotropic Gaussian bumps. Level sets of this
// field are the blob shapes.
Grid blob_field(int size, Rng& rng) {
    Grid field(size, size);
    const int n_blobs = rng.uniform_int(1, 3);
    for (int b = 0; b < n_blobs; ++b) {
        const double cy = rng.uniform(0.2, 0.8) * size;
        const double cx = rng.uniform(0.2, 0.8) * size;
        const double ry = rng.uniform(0.10, 0.28) * size;
        const double rx = rng.uniform(0.10, 0.28) * size;
        const double theta = rng.uniform(0.0, kTwoPi);
        const double ct = std::cos(theta), st = std::sin(theta);
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                const double dy = y - cy, dx = x - cx;
                const double u = (ct * dx + st * dy) / rx;
                const double v = (-st * dx + ct * dy) / ry;
                field.at(y, x) += std::exp(-(u * u + v * v));
            }
        }
    }
    return field;
}

// Threshold at the exact quantile so the foreground fraction always lands
// in the target range.
double quantile_threshold(const Grid& field, double fg_fraction) {
    std::vector<double> vals(field.data(), field.data() + field.size());
    const std::size_t k = static_cast<std::size_t>(
        std::min<double>(static_cast<double>(vals.size()) - 1.0,
                         std::floor((1.0 - fg_fraction) * static_cast<double>(vals.size()))));
    std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(k), vals.end());
    return vals[k];
}

struct Geometry {
    Grid field;
    LabelField label;
    Grid base_image;  // pre-style rendering
};

Geometry make_geometry(int size, int classes, Rng& rng) {
    Geometry g{blob_field(size, rng), LabelField(classes, size, size), Grid(size, size)};
    const double fg_fraction = rng.uniform(0.07, 0.28);
    const double thr = quantile_threshold(g.field, fg_fraction);
    const double core_thr =
        classes >= 3 ? quantile_threshold(g.field, fg_fraction * 0.35) : 0.0;

    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double v = g.field.at(y, x);
            int cls = 0;
            if (v >= thr) cls = 1;
            if (classes >= 3 && v >= core_thr) cls = 2;
            g.label.at(y, x) = cls;
        }
    }

    // Soft-edged rendering: background 0.35, foreground 0.68 (0.85 core),
    // plus a low-frequency intensity undulation from the same stream.
    const double und_fy = rng.uniform(0.5, 1.5), und_fx = rng.uniform(0.5, 1.5);
    const double und_py = rng.uniform(0.0, kTwoPi), und_px = rng.uniform(0.0, kTwoPi);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double v = g.field.at(y, x);
            const double a1 = std::clamp((v - thr) / (kEdgeSoftness * thr) + 0.5, 0.0, 1.0);
            double val = 0.35 + 0.33 * a1;
            if (classes >= 3) {
                const double a2 =
                    std::clamp((v - core_thr) / (kEdgeSoftness * core_thr) + 0.5, 0.0, 1.0);
                val += 0.17 * a2;
            }
            val += 0.03 * std::sin(kTwoPi * und_fy * y / size + und_py) *
                   std::sin(kTwoPi * und_fx * x / size + und_px);
            g.base_image.at(y, x) = std::clamp(val, 0.0, 1.0);
        }
    }
    return g;
}

Grid render_style(const Grid& base, const DomainStyle& style, Rng& style_rng) {
    const int size = base.height();
    Grid img = base;

    if (style.texture_freq > 0.0) {
        const double phase_y = style_rng.uniform(0.0, kTwoPi);
        const double phase_x = style_rng.uniform(0.0, kTwoPi);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                img.at(y, x) *= 1.0 + kTextureAmplitude *
                                          std::sin(kTwoPi * style.texture_freq * y / size + phase_y) *
                                          std::sin(kTwoPi * style.texture_freq * x / size + phase_x);
    }

    if (style.bias_amplitude != 0.0) {
        // One smooth multiplicative bump per image, placed per (sample, domain).
        const double cy = style_rng.uniform(0.0, 1.0) * size;
        const double cx = style_rng.uniform(0.0, 1.0) * size;
        const double r = size * style_rng.uniform(0.5, 0.9);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const double d2 = ((y - cy) * (y - cy) + (x - cx) * (x - cx)) / (r * r);
                img.at(y, x) *= 1.0 + style.bias_amplitude * (std::exp(-d2) - 0.5);
            }
    }

    for (std::size_t i = 0; i < img.size(); ++i) {
        double v = (img[i] - 0.5) * style.contrast + 0.5 + style.brightness;
        v = std::clamp(v, 0.0, 1.0);
        v = std::pow(v, style.gamma);
        if (style.noise_sigma > 0.0) v += style_rng.normal(0.0, style.noise_sigma);
        img[i] = std::clamp(v, 0.0, 1.0);
    }
    return img;
}

Sample render_sample(const Geometry& geo, const DomainStyle& style, int domain,
                     const std::string& id, Rng style_rng) {
    Sample s;
    s.image = MultiGrid(std::vector<Grid>{render_style(geo.base_image, style, style_rng)});
    s.label = geo.label;
    s.domain = domain;
    s.id = id;
    return s;
}

std::string sample_id(const char* split, int domain, int index) {
    std::ostringstream os;
    os << split << "_d" << domain << "_" << index;
    return os.str();
}

}  // namespace

std::vector<DomainStyle> default_domain_styles() {
    // A ladder of progressively darker level shifts. A decision boundary
    // fit on domain 0 misfires on the far rungs, but each rung stays within
    // reach of the previous one, and the shifts live in low-frequency
    // amplitude where the style mixer can move them.
    return {
        {1.00, 0.00, 1.00, 0.06, 0.010, 0.0},
        {1.12, -0.09, 0.95, 0.10, 0.015, 6.0},
        {1.27, -0.19, 0.90, 0.14, 0.020, 10.0},
        {1.45, -0.30, 0.84, 0.18, 0.025, 14.0},
    };
}

Dataset generate_dataset(const DatasetSpec& spec) {
    if (spec.domains.size() < 2)
        throw std::invalid_argument("generate_dataset: need at least two domains");
    if (spec.size < 8 || spec.size % 2 != 0)
        throw std::invalid_argument("generate_dataset: size must be even and >= 8");

    const Rng root(spec.seed);
    Dataset ds;
    ds.classes = spec.classes;
    ds.height = ds.width = spec.size;
    const int n_domains = static_cast<int>(spec.domains.size());

    // Labeled split: fresh geometry per sample, always domain 0.
    for (int i = 0; i < spec.n_labeled; ++i) {
        Rng geo_rng = root.derive(mix_salt(1, static_cast<std::uint64_t>(i)));
        const Geometry geo = make_geometry(spec.size, spec.classes, geo_rng);
        Rng style_rng = root.derive(mix_salt(mix_salt(2, static_cast<std::uint64_t>(i)), 0));
        ds.labeled.push_back(
            render_sample(geo, spec.domains[0], 0, sample_id("lab", 0, i), style_rng));
    }

    // Unlabeled and test splits: one geometry per index, rendered under every
    // domain's style, so the style is the only cross-domain difference.
    for (int i = 0; i < spec.n_unlabeled_per_domain; ++i) {
        Rng geo_rng = root.derive(mix_salt(3, static_cast<std::uint64_t>(i)));
        const Geometry geo = make_geometry(spec.size, spec.classes, geo_rng);
        for (int d = 0; d < n_domains; ++d) {
            Rng style_rng = root.derive(
                mix_salt(mix_salt(4, static_cast<std::uint64_t>(i)), static_cast<std::uint64_t>(d)));
            ds.unlabeled.push_back(
                render_sample(geo, spec.domains[d], d, sample_id("unl", d, i), style_rng));
        }
    }
    for (int i = 0; i < spec.n_test_per_domain; ++i) {
        Rng geo_rng = root.derive(mix_salt(5, static_cast<std::uint64_t>(i)));
        const Geometry geo = make_geometry(spec.size, spec.classes, geo_rng);
        for (int d = 0; d < n_domains; ++d) {
            Rng style_rng = root.derive(
                mix_salt(mix_salt(6, static_cast<std::uint64_t>(i)), static_cast<std::uint64_t>(d)));
            ds.test.push_back(
                render_sample(geo, spec.domains[d], d, sample_id("tst", d, i), style_rng));
        }
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "images");
    fs::create_directories(fs::path(dir) / "labels");
    std::ofstream manifest(fs::path(dir) / "manifest.txt");
    if (!manifest) throw std::runtime_error("cannot write manifest in " + dir);
    manifest << "# midseg dataset classes=" << ds.classes << " height=" << ds.height
             << " width=" << ds.width << "\n";
    auto dump = [&](const std::vector<Sample>& split, const char* name) {
        for (const Sample& s : split) {
            manifest << s.id << "," << s.domain << "," << name << "\n";
            save_multigrid(s.image, (fs::path(dir) / "images" / (s.id + ".grid")).string());
            save_labelfield(s.label, ds.classes, (fs::path(dir) / "labels" / (s.id + ".grid")).string());
        }
    };
    dump(ds.labeled, "labeled");
    dump(ds.unlabeled, "unlabeled");
    dump(ds.test, "test");
}

Dataset load_dataset(const std::string& dir) {
    std::ifstream manifest(fs::path(dir) / "manifest.txt");
    if (!manifest) throw std::runtime_error("cannot read manifest in " + dir);
    std::string line;
    if (!std::getline(manifest, line) || line.rfind("# midseg dataset", 0) != 0)
        throw std::runtime_error("bad manifest header in " + dir);
    Dataset ds;
    {
        std::istringstream hdr(line);
        std::string tok;
        while (hdr >> tok) {
            if (tok.rfind("classes=", 0) == 0) ds.classes = std::stoi(tok.substr(8));
            if (tok.rfind("height=", 0) == 0) ds.height = std::stoi(tok.substr(7));
            if (tok.rfind("width=", 0) == 0) ds.width = std::stoi(tok.substr(6));
        }
    }
    while (std::getline(manifest, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string id, domain_s, split;
        if (!std::getline(ls, id, ',') || !std::getline(ls, domain_s, ',') ||
            !std::getline(ls, split, ','))
            throw std::runtime_error("bad manifest line: " + line);
        Sample s;
        s.id = id;
        s.domain = std::stoi(domain_s);
        s.image = load_multigrid((fs::path(dir) / "images" / (id + ".grid")).string());
        s.label = load_labelfield((fs::path(dir) / "labels" / (id + ".grid")).string(), ds.classes);
        if (split == "labeled")
            ds.labeled.push_back(std::move(s));
        else if (split == "unlabeled")
            ds.unlabeled.push_back(std::move(s));
        else if (split == "test")
            ds.test.push_back(std::move(s));
        else
            throw std::runtime_error("unknown split in manifest: " + split);
    }
    return ds;
}

namespace {

double sample_pixel_bilinear(const Grid& g, double y, double x) {
    const double cy = std::clamp(y, 0.0, static_cast<double>(g.height() - 1));
    const double cx = std::clamp(x, 0.0, static_cast<double>(g.width() - 1));
    const int y0 = static_cast<int>(cy), x0 = static_cast<int>(cx);
    const int y1 = std::min(y0 + 1, g.height() - 1), x1 = std::min(x0 + 1, g.width() - 1);
    const double fy = cy - y0, fx = cx - x0;
    return (1 - fy) * ((1 - fx) * g.at(y0, x0) + fx * g.at(y0, x1)) +
           fy * ((1 - fx) * g.at(y1, x0) + fx * g.at(y1, x1));
}

int sample_pixel_nearest(const LabelField& l, double y, double x) {
    const int ny = std::clamp(static_cast<int>(std::lround(y)), 0, l.height() - 1);
    const int nx = std::clamp(static_cast<int>(std::lround(x)), 0, l.width() - 1);
    return l.at(ny, nx);
}

Sample crop_resize(const Sample& s, double scale, double off_y, double off_x) {
    const int h = s.label.height(), w = s.label.width();
    const int ch = std::max(2, static_cast<int>(std::lround(scale * h)));
    const int cw = std::max(2, static_cast<int>(std::lround(scale * w)));
    if (ch >= h && cw >= w) return s;
    const double top = off_y * (h - ch);
    const double left = off_x * (w - cw);
    Sample out = s;
    for (int c = 0; c < s.image.channels(); ++c) {
        Grid& plane = out.image.plane(c);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double sy = top + (static_cast<double>(y) / (h - 1)) * (ch - 1);
                const double sx = left + (static_cast<double>(x) / (w - 1)) * (cw - 1);
                plane.at(y, x) = sample_pixel_bilinear(s.image.plane(c), sy, sx);
            }
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double sy = top + (static_cast<double>(y) / (h - 1)) * (ch - 1);
            const double sx = left + (static_cast<double>(x) / (w - 1)) * (cw - 1);
            out.label.at(y, x) = sample_pixel_nearest(s.label, sy, sx);
        }
    return out;
}

Sample rotate_quarters(const Sample& s, int turns) {
    turns = ((turns % 4) + 4) % 4;
    if (turns == 0) return s;
    Sample out = s;
    const int h = s.label.height(), w = s.label.width();
    auto map_coord = [&](int y, int x, int& sy, int& sx) {
        // destination (y,x) pulled from source for a counterclockwise turn
        switch (turns) {
            case 1: sy = x; sx = h - 1 - y; break;
            case 2: sy = h - 1 - y; sx = w - 1 - x; break;
            default: sy = w - 1 - x; sx = y; break;
        }
    };
    for (int c = 0; c < s.image.channels(); ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                int sy, sx;
                map_coord(y, x, sy, sx);
                out.image.plane(c).at(y, x) = s.image.plane(c).at(sy, sx);
            }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int sy, sx;
            map_coord(y, x, sy, sx);
            out.label.at(y, x) = s.label.at(sy, sx);
        }
    return out;
}

Sample rotate_small(const Sample& s, double angle_deg) {
    if (angle_deg == 0.0) return s;
    const double a = angle_deg * std::numbers::pi / 180.0;
    const double ca = std::cos(a), sa = std::sin(a);
    const int h = s.label.height(), w = s.label.width();
    const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
    Sample out = s;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double dy = y - cy, dx = x - cx;
            const double sy = cy + ca * dy - sa * dx;
            const double sx = cx + sa * dy + ca * dx;
            for (int c = 0; c < s.image.channels(); ++c)
                out.image.plane(c).at(y, x) = sample_pixel_bilinear(s.image.plane(c), sy, sx);
            out.label.at(y, x) = sample_pixel_nearest(s.label, sy, sx);
        }
    return out;
}

Sample flip(const Sample& s, bool horizontal, bool vertical) {
    if (!horizontal && !vertical) return s;
    Sample out = s;
    const int h = s.label.height(), w = s.label.width();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int sy = vertical ? h - 1 - y : y;
            const int sx = horizontal ? w - 1 - x : x;
            for (int c = 0; c < s.image.channels(); ++c)
                out.image.plane(c).at(y, x) = s.image.plane(c).at(sy, sx);
            out.label.at(y, x) = s.label.at(sy, sx);
        }
    return out;
}

// Circular-boundary separable Gaussian; circular padding keeps the image
// mean exactly.
Grid gaussian_blur(const Grid& g, double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    if (radius < 1) return g;
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double ksum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        ksum += kernel[static_cast<std::size_t>(i + radius)];
    }
    for (double& k : kernel) k /= ksum;

    const int h = g.height(), w = g.width();
    Grid tmp(h, w), out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[static_cast<std::size_t>(i + radius)] * g.at(y, ((x + i) % w + w) % w);
            tmp.at(y, x) = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[static_cast<std::size_t>(i + radius)] * tmp.at(((y + i) % h + h) % h, x);
            out.at(y, x) = acc;
        }
    return out;
}

}  // namespace

AugmentDraw sample_augment_draw(Rng& rng) {
    AugmentDraw d;
    d.geo.crop_scale = rng.uniform(0.8, 1.0);
    d.geo.crop_off_y = rng.uniform();
    d.geo.crop_off_x = rng.uniform();
    d.geo.quarter_turns = rng.uniform_int(0, 3);
    d.geo.small_angle_deg = rng.uniform(-10.0, 10.0);
    d.geo.flip_h = rng.bernoulli(0.5);
    d.geo.flip_v = rng.bernoulli(0.5);
    d.intensity.brightness = rng.uniform(-0.2, 0.2);
    d.intensity.contrast = rng.uniform(0.8, 1.2);
    d.intensity.gamma = rng.uniform(0.8, 1.25);
    d.intensity.blur_sigma = rng.uniform(0.0, 1.0);
    return d;
}

Sample apply_geometric(const Sample& s, const GeometricDraw& g) {
    Sample out = crop_resize(s, g.crop_scale, g.crop_off_y, g.crop_off_x);
    out = rotate_quarters(out, g.quarter_turns);
    out = rotate_small(out, g.small_angle_deg);
    out = flip(out, g.flip_h, g.flip_v);
    return out;
}

MultiGrid apply_intensity(const MultiGrid& image, const IntensityDraw& d) {
    MultiGrid out = image;
    for (int c = 0; c < out.channels(); ++c) {
        Grid& plane = out.plane(c);
        if (d.contrast != 1.0 || d.brightness != 0.0 || d.gamma != 1.0) {
            for (std::size_t i = 0; i < plane.size(); ++i) {
                double v = (plane[i] - 0.5) * d.contrast + 0.5 + d.brightness;
                v = std::clamp(v, 0.0, 1.0);
                plane[i] = std::pow(v, d.gamma);
            }
        }
        if (d.blur_sigma > 0.0) plane = gaussian_blur(plane, d.blur_sigma);
    }
    return out;
}

Sample weak_augment(const Sample& s, Rng& rng) {
    return apply_geometric(s, sample_augment_draw(rng).geo);
}

Sample strong_augment(const Sample& s, Rng& rng) {
    const AugmentDraw d = sample_augment_draw(rng);
    Sample out = apply_geometric(s, d.geo);
    out.image = apply_intensity(out.image, d.intensity);
    return out;
}

std::pair<Sample, Sample> weak_strong_pair(const Sample& s, Rng& rng) {
    const AugmentDraw d = sample_augment_draw(rng);
    Sample weak = apply_geometric(s, d.geo);
    Sample strong = weak;
    strong.image = apply_intensity(strong.image, d.intensity);
    return {std::move(weak), std::move(strong)};
}

}  // namespace midseg
