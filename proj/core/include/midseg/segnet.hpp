#pragma once

// Small two-scale convolutional segmenter with exact analytic gradients,
// SGD with momentum and weight decay, and the student/teacher EMA pair.
//
// Layout: conv 3x3 (D->16, full res, ReLU) -> 2x2 average pool ->
// conv 3x3 (16->32, ReLU) -> conv 3x3 (32->16, ReLU) -> 2x nearest
// upsample -> conv 3x3 (16->C) -> per-pixel softmax. All convolutions use
// reflect padding. Parameters live in one flat vector so the optimizer,
// EMA, and checkpoints treat them uniformly.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "midseg/grid.hpp"
#include "midseg/rng.hpp"

namespace midseg {

struct ConvShape {
    int in_ch = 0;
    int out_ch = 0;
    std::size_t w_offset = 0;  // into the flat parameter vector
    std::size_t b_offset = 0;
    std::size_t weight_count() const { return static_cast<std::size_t>(in_ch) * out_ch * 9; }
    bool operator==(const ConvShape&) const = default;
};

class SegmenterParams {
public:
    static constexpr int kHidden1 = 16;
    static constexpr int kHidden2 = 32;
    static constexpr int kHidden3 = 16;

    SegmenterParams() = default;
    SegmenterParams(int in_channels, int num_classes);

    int in_channels() const { return in_channels_; }
    int num_classes() const { return num_classes_; }
    std::size_t param_count() const { return data_.size(); }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    const ConvShape& layer(int i) const { return layers_[i]; }
    static constexpr int layer_count() { return 4; }

    const double* weights(int layer) const { return data_.data() + layers_[layer].w_offset; }
    double* weights(int layer) { return data_.data() + layers_[layer].w_offset; }
    const double* biases(int layer) const { return data_.data() + layers_[layer].b_offset; }
    double* biases(int layer) { return data_.data() + layers_[layer].b_offset; }

    /// Kaiming fan-in initialization for all but the final layer, which stays
    /// zero so a fresh model outputs uniform probabilities.
    void init_kaiming(Rng& rng);

    bool operator==(const SegmenterParams& other) const = default;

private:
    int in_channels_ = 0;
    int num_classes_ = 0;
    ConvShape layers_[4];
    std::vector<double> data_;
};

/// Intermediate activations kept for the backward pass. Reusable across
/// calls to avoid reallocation; each concurrent caller needs its own.
struct ForwardTrace {
    int h = 0, w = 0;
    std::vector<double> pad0, r1, p1, pad1, r2, pad2, r3, u3, pad3;
    std::vector<double> probs;  // C x h x w
};

/// Deterministic forward pass. Requires image dims divisible by 2 and
/// channel count equal to params.in_channels().
ProbField forward(const SegmenterParams& params, const MultiGrid& image);

/// Forward that records activations; returns the probability field and
/// leaves everything backward() needs in `trace`.
ProbField forward_trace(const SegmenterParams& params, const MultiGrid& image,
                        ForwardTrace& trace);

/// Analytic gradients for every parameter given dL/dp on the output
/// probability field. Flat vector matching params.data().
std::vector<double> backward(const SegmenterParams& params, const ForwardTrace& trace,
                             const MultiGrid& dloss_dprob);

/// Convenience wrapper: forward, evaluate loss_grad on the probabilities,
/// and backpropagate in one call.
std::vector<double> backward(const SegmenterParams& params, const MultiGrid& image,
                             const std::function<MultiGrid(const ProbField&)>& loss_grad);

/// Heavy-ball SGD with the L2 term added to the gradient:
/// v <- momentum*v + (g + weight_decay*p); p <- p - lr*v.
struct SgdState {
    std::vector<double> velocity;
};

void sgd_step(SegmenterParams& params, const std::vector<double>& grads, SgdState& state,
              double lr, double momentum, double weight_decay);

/// lr0 * (1 - t/t_total)^0.9, the conventional polynomial decay.
double polynomial_decay_lr(double lr0, long t, long t_total);

/// Student/teacher pair; the teacher is only ever updated through EMA.
struct TeacherStudent {
    SegmenterParams student;
    SegmenterParams teacher;
    double ema_decay = 0.99;
};

/// teacher <- decay*teacher + (1-decay)*student, parameterwise.
void ema_update(TeacherStudent& pair, double decay);

/// Warm-ramped decay min(base, 1 - 1/(t+1)); the teacher copies the student
/// on the first step and settles to `base`.
double ema_decay_at(long t, double base = 0.99);

/// Checkpoint: magic "SEGN", u32 in_channels, u32 num_classes, u32 param
/// count, then the parameters as little-endian f32.
void save_checkpoint(const SegmenterParams& params, const std::string& path);
SegmenterParams load_checkpoint(const std::string& path);

}  // namespace midseg
