#include "midseg/segnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace midseg {

namespace {

inline int reflect_index(int i, int n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
}

// src: ch x h x w  ->  dst: ch x (h+2) x (w+2), reflect border (no edge repeat)
void pad_reflect(const double* src, int ch, int h, int w, std::vector<double>& dst) {
    const int ph = h + 2, pw = w + 2;
    dst.resize(static_cast<std::size_t>(ch) * ph * pw);
    for (int c = 0; c < ch; ++c) {
        const double* s = src + static_cast<std::size_t>(c) * h * w;
        double* d = dst.data() + static_cast<std::size_t>(c) * ph * pw;
        for (int y = 0; y < ph; ++y) {
            const int sy = reflect_index(y - 1, h);
            for (int x = 0; x < pw; ++x) d[y * pw + x] = s[sy * w + reflect_index(x - 1, w)];
        }
    }
}

// Accumulates a padded-buffer gradient back onto the unpadded source.
void fold_reflect(const std::vector<double>& dpad, int ch, int h, int w, std::vector<double>& dsrc) {
    const int ph = h + 2, pw = w + 2;
    dsrc.assign(static_cast<std::size_t>(ch) * h * w, 0.0);
    for (int c = 0; c < ch; ++c) {
        const double* dp = dpad.data() + static_cast<std::size_t>(c) * ph * pw;
        double* ds = dsrc.data() + static_cast<std::size_t>(c) * h * w;
        for (int y = 0; y < ph; ++y) {
            const int sy = reflect_index(y - 1, h);
            for (int x = 0; x < pw; ++x) ds[sy * w + reflect_index(x - 1, w)] += dp[y * pw + x];
        }
    }
}

// out[oc] = bias[oc] + sum_ic conv3x3(in_padded[ic]); out is oc x h x w.
void conv_forward(const double* in_pad, int in_ch, const double* w9, const double* bias,
                  int out_ch, int h, int w, std::vector<double>& out) {
    const int pw = w + 2;
    out.resize(static_cast<std::size_t>(out_ch) * h * w);
    for (int oc = 0; oc < out_ch; ++oc) {
        double* o = out.data() + static_cast<std::size_t>(oc) * h * w;
        std::fill(o, o + static_cast<std::size_t>(h) * w, bias[oc]);
        for (int ic = 0; ic < in_ch; ++ic) {
            const double* k = w9 + (static_cast<std::size_t>(oc) * in_ch + ic) * 9;
            const double k0 = k[0], k1 = k[1], k2 = k[2], k3 = k[3], k4 = k[4], k5 = k[5],
                         k6 = k[6], k7 = k[7], k8 = k[8];
            const double* ip = in_pad + static_cast<std::size_t>(ic) * (h + 2) * pw;
            for (int y = 0; y < h; ++y) {
                const double* r0 = ip + y * pw;
                const double* r1 = r0 + pw;
                const double* r2 = r1 + pw;
                double* orow = o + static_cast<std::size_t>(y) * w;
                for (int x = 0; x < w; ++x) {
                    orow[x] += k0 * r0[x] + k1 * r0[x + 1] + k2 * r0[x + 2] + k3 * r1[x] +
                               k4 * r1[x + 1] + k5 * r1[x + 2] + k6 * r2[x] + k7 * r2[x + 1] +
                               k8 * r2[x + 2];
                }
            }
        }
    }
}

// Weight/bias gradients plus gradient w.r.t. the padded input. The input
// gradient is computed in gather form against a zero-padded copy of each
// output-gradient row so the inner loops carry no overlapping writes.
void conv_backward(const double* in_pad, int in_ch, const double* w9, int out_ch, int h, int w,
                   const double* dout, double* dw9, double* dbias, std::vector<double>& din_pad,
                   std::vector<double>& gpad_scratch) {
    const int ph = h + 2, pw = w + 2;
    din_pad.assign(static_cast<std::size_t>(in_ch) * ph * pw, 0.0);

    // zero-padded output gradient: gpad(oc, y+2, x+2) = dout(oc, y, x); the
    // two-row/two-column apron keeps every gather read in bounds
    const int gph = h + 4, gpw = w + 4;
    gpad_scratch.assign(static_cast<std::size_t>(out_ch) * gph * gpw, 0.0);
    for (int oc = 0; oc < out_ch; ++oc)
        for (int y = 0; y < h; ++y) {
            const double* src = dout + (static_cast<std::size_t>(oc) * h + y) * w;
            double* dst = gpad_scratch.data() + (static_cast<std::size_t>(oc) * gph + y + 2) * gpw + 2;
            for (int x = 0; x < w; ++x) dst[x] = src[x];
        }

    for (int oc = 0; oc < out_ch; ++oc) {
        const double* go = dout + static_cast<std::size_t>(oc) * h * w;
        double bsum = 0.0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) bsum += go[i];
        dbias[oc] += bsum;
        const double* gp = gpad_scratch.data() + static_cast<std::size_t>(oc) * gph * gpw;
        for (int ic = 0; ic < in_ch; ++ic) {
            const double* ip = in_pad + static_cast<std::size_t>(ic) * ph * pw;
            double* dip = din_pad.data() + static_cast<std::size_t>(ic) * ph * pw;
            const double* k = w9 + (static_cast<std::size_t>(oc) * in_ch + ic) * 9;
            double* dk = dw9 + (static_cast<std::size_t>(oc) * in_ch + ic) * 9;

            // weight gradients: 9 shifted dot products
            for (int ky = 0; ky < 3; ++ky)
                for (int y = 0; y < h; ++y) {
                    const double* grow = go + static_cast<std::size_t>(y) * w;
                    const double* irow = ip + (y + ky) * pw;
                    double s0 = 0, s1 = 0, s2 = 0;
                    for (int x = 0; x < w; ++x) {
                        const double g = grow[x];
                        s0 += g * irow[x];
                        s1 += g * irow[x + 1];
                        s2 += g * irow[x + 2];
                    }
                    dk[ky * 3] += s0;
                    dk[ky * 3 + 1] += s1;
                    dk[ky * 3 + 2] += s2;
                }

            // input gradient, gather form:
            // din(py, px) += sum_t k[t] * gpad(py - ky + 2, px - kx + 2)
            for (int py = 0; py < ph; ++py) {
                double* drow = dip + py * pw;
                const double* g0 = gp + (py + 2) * gpw;  // ky = 0 row
                const double* g1 = gp + (py + 1) * gpw;  // ky = 1 row
                const double* g2 = gp + py * gpw;        // ky = 2 row
                for (int px = 0; px < pw; ++px) {
                    drow[px] += k[0] * g0[px + 2] + k[1] * g0[px + 1] + k[2] * g0[px] +
                                k[3] * g1[px + 2] + k[4] * g1[px + 1] + k[5] * g1[px] +
                                k[6] * g2[px + 2] + k[7] * g2[px + 1] + k[8] * g2[px];
                }
            }
        }
    }
}

void relu_inplace(std::vector<double>& v) {
    for (double& x : v)
        if (x < 0.0) x = 0.0;
}

void avgpool2(const std::vector<double>& in, int ch, int h, int w, std::vector<double>& out) {
    const int oh = h / 2, ow = w / 2;
    out.resize(static_cast<std::size_t>(ch) * oh * ow);
    for (int c = 0; c < ch; ++c) {
        const double* s = in.data() + static_cast<std::size_t>(c) * h * w;
        double* d = out.data() + static_cast<std::size_t>(c) * oh * ow;
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x)
                d[y * ow + x] = 0.25 * (s[(2 * y) * w + 2 * x] + s[(2 * y) * w + 2 * x + 1] +
                                        s[(2 * y + 1) * w + 2 * x] + s[(2 * y + 1) * w + 2 * x + 1]);
    }
}

void upsample_nearest2(const std::vector<double>& in, int ch, int h, int w,
                       std::vector<double>& out) {
    const int oh = h * 2, ow = w * 2;
    out.resize(static_cast<std::size_t>(ch) * oh * ow);
    for (int c = 0; c < ch; ++c) {
        const double* s = in.data() + static_cast<std::size_t>(c) * h * w;
        double* d = out.data() + static_cast<std::size_t>(c) * oh * ow;
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) d[y * ow + x] = s[(y / 2) * w + x / 2];
    }
}

void check_image(const SegmenterParams& params, const MultiGrid& image) {
    if (image.channels() != params.in_channels())
        throw std::invalid_argument("segnet: image channel count mismatch");
    if (image.height() < 2 || image.width() < 2 || image.height() % 2 != 0 ||
        image.width() % 2 != 0)
        throw std::invalid_argument("segnet: image dims must be even and >= 2");
}

std::vector<double> flatten_image(const MultiGrid& image) {
    const std::size_t plane = image.plane(0).size();
    std::vector<double> v(static_cast<std::size_t>(image.channels()) * plane);
    for (int c = 0; c < image.channels(); ++c)
        std::memcpy(v.data() + static_cast<std::size_t>(c) * plane, image.plane(c).data(),
                    plane * sizeof(double));
    return v;
}

}  // namespace

SegmenterParams::SegmenterParams(int in_channels, int num_classes)
    : in_channels_(in_channels), num_classes_(num_classes) {
    if (in_channels < 1 || num_classes < 2)
        throw std::invalid_argument("SegmenterParams: need >=1 channel, >=2 classes");
    const int chain[5] = {in_channels, kHidden1, kHidden2, kHidden3, num_classes};
    std::size_t off = 0;
    for (int i = 0; i < 4; ++i) {
        layers_[i].in_ch = chain[i];
        layers_[i].out_ch = chain[i + 1];
        layers_[i].w_offset = off;
        off += layers_[i].weight_count();
        layers_[i].b_offset = off;
        off += static_cast<std::size_t>(layers_[i].out_ch);
    }
    data_.assign(off, 0.0);
}

void SegmenterParams::init_kaiming(Rng& rng) {
    for (int i = 0; i < 3; ++i) {  // final layer stays zero
        const double stddev = std::sqrt(2.0 / (static_cast<double>(layers_[i].in_ch) * 9.0));
        double* w = weights(i);
        for (std::size_t k = 0; k < layers_[i].weight_count(); ++k) w[k] = rng.normal(0.0, stddev);
    }
}

ProbField forward_trace(const SegmenterParams& params, const MultiGrid& image,
                        ForwardTrace& trace) {
    check_image(params, image);
    const int h = image.height(), w = image.width();
    const int hh = h / 2, hw = w / 2;
    trace.h = h;
    trace.w = w;

    const std::vector<double> in = flatten_image(image);
    pad_reflect(in.data(), params.in_channels(), h, w, trace.pad0);
    conv_forward(trace.pad0.data(), params.layer(0).in_ch, params.weights(0), params.biases(0),
                 params.layer(0).out_ch, h, w, trace.r1);
    relu_inplace(trace.r1);

    avgpool2(trace.r1, SegmenterParams::kHidden1, h, w, trace.p1);
    pad_reflect(trace.p1.data(), SegmenterParams::kHidden1, hh, hw, trace.pad1);
    conv_forward(trace.pad1.data(), params.layer(1).in_ch, params.weights(1), params.biases(1),
                 params.layer(1).out_ch, hh, hw, trace.r2);
    relu_inplace(trace.r2);

    pad_reflect(trace.r2.data(), SegmenterParams::kHidden2, hh, hw, trace.pad2);
    conv_forward(trace.pad2.data(), params.layer(2).in_ch, params.weights(2), params.biases(2),
                 params.layer(2).out_ch, hh, hw, trace.r3);
    relu_inplace(trace.r3);

    upsample_nearest2(trace.r3, SegmenterParams::kHidden3, hh, hw, trace.u3);
    pad_reflect(trace.u3.data(), SegmenterParams::kHidden3, h, w, trace.pad3);
    std::vector<double> logits;
    conv_forward(trace.pad3.data(), params.layer(3).in_ch, params.weights(3), params.biases(3),
                 params.layer(3).out_ch, h, w, logits);

    // Per-pixel softmax (max-shifted).
    const int classes = params.num_classes();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    trace.probs.resize(static_cast<std::size_t>(classes) * plane);
    for (std::size_t i = 0; i < plane; ++i) {
        double m = logits[i];
        for (int c = 1; c < classes; ++c) m = std::max(m, logits[c * plane + i]);
        double sum = 0.0;
        for (int c = 0; c < classes; ++c) {
            const double e = std::exp(logits[c * plane + i] - m);
            trace.probs[c * plane + i] = e;
            sum += e;
        }
        const double inv = 1.0 / sum;
        for (int c = 0; c < classes; ++c) trace.probs[c * plane + i] *= inv;
    }

    ProbField out(classes, h, w);
    for (int c = 0; c < classes; ++c)
        std::memcpy(out.plane(c).data(), trace.probs.data() + static_cast<std::size_t>(c) * plane,
                    plane * sizeof(double));
    return out;
}

ProbField forward(const SegmenterParams& params, const MultiGrid& image) {
    ForwardTrace trace;
    return forward_trace(params, image, trace);
}

std::vector<double> backward(const SegmenterParams& params, const ForwardTrace& trace,
                             const MultiGrid& dloss_dprob) {
    const int h = trace.h, w = trace.w;
    const int hh = h / 2, hw = w / 2;
    const int classes = params.num_classes();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    if (dloss_dprob.channels() != classes || dloss_dprob.height() != h ||
        dloss_dprob.width() != w)
        throw std::invalid_argument("backward: dloss_dprob shape mismatch");

    std::vector<double> grads(params.param_count(), 0.0);

    // Softmax backward: dz_c = p_c (dp_c - sum_k p_k dp_k)
    std::vector<double> dz(static_cast<std::size_t>(classes) * plane);
    for (std::size_t i = 0; i < plane; ++i) {
        double dot = 0.0;
        for (int c = 0; c < classes; ++c)
            dot += trace.probs[c * plane + i] * dloss_dprob.plane(c)[i];
        for (int c = 0; c < classes; ++c) {
            const double p = trace.probs[c * plane + i];
            dz[c * plane + i] = p * (dloss_dprob.plane(c)[i] - dot);
        }
    }

    std::vector<double> dpad, dbuf, gpad;

    // conv4
    conv_backward(trace.pad3.data(), params.layer(3).in_ch, params.weights(3),
                  params.layer(3).out_ch, h, w, dz.data(),
                  grads.data() + params.layer(3).w_offset, grads.data() + params.layer(3).b_offset,
                  dpad, gpad);
    std::vector<double> du3;
    fold_reflect(dpad, SegmenterParams::kHidden3, h, w, du3);

    // upsample backward: each source cell collects its 4 replicas, then ReLU mask
    std::vector<double> dr3(static_cast<std::size_t>(SegmenterParams::kHidden3) * hh * hw, 0.0);
    for (int c = 0; c < SegmenterParams::kHidden3; ++c) {
        const double* src = du3.data() + static_cast<std::size_t>(c) * h * w;
        double* dst = dr3.data() + static_cast<std::size_t>(c) * hh * hw;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) dst[(y / 2) * hw + x / 2] += src[y * w + x];
    }
    for (std::size_t i = 0; i < dr3.size(); ++i)
        if (trace.r3[i] <= 0.0) dr3[i] = 0.0;

    // conv3
    conv_backward(trace.pad2.data(), params.layer(2).in_ch, params.weights(2),
                  params.layer(2).out_ch, hh, hw, dr3.data(),
                  grads.data() + params.layer(2).w_offset, grads.data() + params.layer(2).b_offset,
                  dpad, gpad);
    std::vector<double> dr2;
    fold_reflect(dpad, SegmenterParams::kHidden2, hh, hw, dr2);
    for (std::size_t i = 0; i < dr2.size(); ++i)
        if (trace.r2[i] <= 0.0) dr2[i] = 0.0;

    // conv2
    conv_backward(trace.pad1.data(), params.layer(1).in_ch, params.weights(1),
                  params.layer(1).out_ch, hh, hw, dr2.data(),
                  grads.data() + params.layer(1).w_offset, grads.data() + params.layer(1).b_offset,
                  dpad, gpad);
    std::vector<double> dp1;
    fold_reflect(dpad, SegmenterParams::kHidden1, hh, hw, dp1);

    // pool backward, then ReLU mask
    std::vector<double> dr1(static_cast<std::size_t>(SegmenterParams::kHidden1) * h * w);
    for (int c = 0; c < SegmenterParams::kHidden1; ++c) {
        const double* src = dp1.data() + static_cast<std::size_t>(c) * hh * hw;
        double* dst = dr1.data() + static_cast<std::size_t>(c) * h * w;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) dst[y * w + x] = 0.25 * src[(y / 2) * hw + x / 2];
    }
    for (std::size_t i = 0; i < dr1.size(); ++i)
        if (trace.r1[i] <= 0.0) dr1[i] = 0.0;

    // conv1 (input gradient discarded)
    conv_backward(trace.pad0.data(), params.layer(0).in_ch, params.weights(0),
                  params.layer(0).out_ch, h, w, dr1.data(),
                  grads.data() + params.layer(0).w_offset, grads.data() + params.layer(0).b_offset,
                  dbuf, gpad);

    return grads;
}

std::vector<double> backward(const SegmenterParams& params, const MultiGrid& image,
                             const std::function<MultiGrid(const ProbField&)>& loss_grad) {
    ForwardTrace trace;
    const ProbField p = forward_trace(params, image, trace);
    return backward(params, trace, loss_grad(p));
}

void sgd_step(SegmenterParams& params, const std::vector<double>& grads, SgdState& state,
              double lr, double momentum, double weight_decay) {
    std::vector<double>& p = params.data();
    if (grads.size() != p.size()) throw std::invalid_argument("sgd_step: gradient size mismatch");
    if (state.velocity.size() != p.size()) state.velocity.assign(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double g = grads[i] + weight_decay * p[i];
        state.velocity[i] = momentum * state.velocity[i] + g;
        p[i] -= lr * state.velocity[i];
    }
}

double polynomial_decay_lr(double lr0, long t, long t_total) {
    const double frac = 1.0 - static_cast<double>(t) / static_cast<double>(t_total);
    return lr0 * std::pow(std::max(frac, 0.0), 0.9);
}

void ema_update(TeacherStudent& pair, double decay) {
    if (decay < 0.0 || decay >= 1.0) throw std::invalid_argument("ema_update: decay must be in [0,1)");
    std::vector<double>& t = pair.teacher.data();
    const std::vector<double>& s = pair.student.data();
    if (t.size() != s.size()) throw std::invalid_argument("ema_update: parameter size mismatch");
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = decay * t[i] + (1.0 - decay) * s[i];
}

double ema_decay_at(long t, double base) {
    return std::min(base, 1.0 - 1.0 / static_cast<double>(t + 1));
}

namespace {

void put_u32le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_checkpoint(const SegmenterParams& params, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    os.write("SEGN", 4);
    put_u32le(os, static_cast<std::uint32_t>(params.in_channels()));
    put_u32le(os, static_cast<std::uint32_t>(params.num_classes()));
    put_u32le(os, static_cast<std::uint32_t>(params.param_count()));
    for (double v : params.data()) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32le(os, bits);
    }
    if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

SegmenterParams load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "SEGN", 4) != 0)
        throw std::runtime_error("not a SEGN checkpoint: " + path);
    const std::uint32_t in_ch = get_u32le(is);
    const std::uint32_t classes = get_u32le(is);
    const std::uint32_t count = get_u32le(is);
    SegmenterParams params(static_cast<int>(in_ch), static_cast<int>(classes));
    if (params.param_count() != count)
        throw std::runtime_error("checkpoint parameter count mismatch: " + path);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t bits = get_u32le(is);
        float f;
        std::memcpy(&f, &bits, 4);
        params.data()[i] = static_cast<double>(f);
    }
    if (!is) throw std::runtime_error("checkpoint truncated: " + path);
    return params;
}

}  // namespace midseg
