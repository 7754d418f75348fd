#pragma once

// Training loop orchestration: per-iteration composition of the style
// mixer, unified copy-paste, symmetric guidance, reliability-driven sample
// selection and the unreliable-sample pathway; ablation presets; telemetry
// and checkpoint management.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "midseg/losses.hpp"
#include "midseg/mask_ops.hpp"
#include "midseg/reliability.hpp"
#include "midseg/segnet.hpp"
#include "midseg/synthdata.hpp"

namespace midseg {

struct TrainFlags {
    bool ucp = false;
    bool vanilla_gd = false;
    bool sym_gd = false;
    bool tp_ram = false;
    bool ram = false;
    bool reliable = false;
    bool unreliable = false;
};

struct TrainConfig {
    long t_total = 2000;
    int batch_labeled = 4;
    int batch_unlabeled = 4;
    double tau = 0.95;
    double beta = 0.01;
    std::size_t queue_capacity = 20;  // K
    double delta = 1.0005;
    double gamma0 = 0.05;
    double lr0 = 0.03;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double ema_base = 0.99;
    double reliable_source_prob = 0.5;
    long eval_every = 200;
    std::uint64_t seed = 1;
    TrainFlags flags;
    RectSpec rect;
    std::string out_dir;  // empty keeps everything in memory
    std::string resume;   // checkpoint to start from instead of fresh init
    bool dump_intermediates = false;

    /// Throws std::invalid_argument on flag contradictions: vanilla_gd and
    /// sym_gd are mutually exclusive, so are ram and tp_ram; reliable and
    /// unreliable both require ucp.
    void validate() const;

    /// key=value lines (one per field) used for the telemetry header and
    /// the config file format.
    std::string to_key_values() const;
};

/// Reads flat key=value pairs ('#' starts a comment); unknown keys are an
/// error. Only the keys present are overridden.
void apply_key_values(TrainConfig& config, const std::string& text);
TrainConfig load_config_file(const std::string& path);

struct IterationTrace {
    long iter = 0;
    LossBreakdown loss;
    double gamma = 0.0;
    std::size_t queue_size = 0;
    int admitted = 0;
    int unreliable_id = -1;  // index into the unlabeled split, -1 = none
};

struct EvalPoint {
    long iter = 0;
    double mean_dc = 0.0;                 // whole test split
    std::map<int, double> per_domain_dc;  // domain -> mean foreground dice
};

struct TrainResult {
    SegmenterParams final_student;
    SegmenterParams final_teacher;
    SegmenterParams best_student;
    double best_mean_dc = 0.0;
    long best_iter = -1;
    std::vector<IterationTrace> traces;
    std::vector<EvalPoint> evals;

    /// Rendered telemetry CSV (identical to the file written to out_dir).
    std::string telemetry_csv;
    std::string reliability_csv;
};

/// Runs the full loop. When config.out_dir is non-empty, writes
/// telemetry.csv, reliability.csv, eval.csv, checkpoint_best.segn and
/// checkpoint_final.segn there.
TrainResult train(const TrainConfig& config, const Dataset& dataset);

/// Student-model prediction: argmax of the forward pass. The teacher never
/// participates at test time.
LabelField infer(const SegmenterParams& params, const MultiGrid& image);

/// Named flag presets mirroring the ablation grid rows plus the two
/// baselines used by the acceptance trend checks.
///   supervised: all flags off            fixmatch: vanilla_gd only
///   row1: ucp                            row2: ucp+vanilla_gd
///   row3: ucp+sym_gd                     row4: ucp+tp_ram
///   row5: ucp+sym_gd+ram                 row6: ucp+sym_gd+tp_ram
///   row7: row6+reliable                  row8: row7+unreliable (full)
TrainFlags preset_flags(const std::string& name);

struct AblationRow {
    std::string name;
    TrainFlags flags;
};

struct AblationResult {
    std::string name;
    std::vector<double> per_seed_dc;  // mean DC over all test domains
    double mean_dc = 0.0;
    double std_dc = 0.0;
};

/// Trains every row for every seed on the dataset and evaluates the best
/// checkpoint over the full test split. Writes a comparison CSV when
/// out_csv is non-empty.
std::vector<AblationResult> run_ablation(const TrainConfig& base, const std::vector<AblationRow>& rows,
                                         const std::vector<std::uint64_t>& seeds,
                                         const Dataset& dataset, const std::string& out_csv = "");

}  // namespace midseg
