#include "midseg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "midseg/grid_io.hpp"
#include "midseg/metrics.hpp"
#include "midseg/tpram.hpp"
#include "midseg/ucp.hpp"

namespace midseg {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
    if (flags.sym_gd && flags.vanilla_gd)
        throw std::invalid_argument("config: sym_gd and vanilla_gd are mutually exclusive");
    if (flags.ram && flags.tp_ram)
        throw std::invalid_argument("config: ram and tp_ram are mutually exclusive");
    if (flags.reliable && !flags.ucp) throw std::invalid_argument("config: reliable requires ucp");
    if (flags.unreliable && !flags.ucp)
        throw std::invalid_argument("config: unreliable requires ucp");
    if (t_total <= 0) throw std::invalid_argument("config: t_total must be positive");
    if (batch_labeled <= 0 || batch_unlabeled <= 0)
        throw std::invalid_argument("config: batch sizes must be positive");
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("config: tau must lie in (0,1)");
    if (!(beta > 0.0 && beta < 0.5)) throw std::invalid_argument("config: beta must lie in (0,0.5)");
    if (queue_capacity == 0) throw std::invalid_argument("config: queue capacity must be positive");
    if (!(delta > 1.0)) throw std::invalid_argument("config: delta must exceed 1");
    if (!(gamma0 > 0.0)) throw std::invalid_argument("config: gamma0 must be positive");
    if (eval_every <= 0) throw std::invalid_argument("config: eval_every must be positive");
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

std::string TrainConfig::to_key_values() const {
    std::ostringstream os;
    os << "t_total=" << t_total << "\n";
    os << "batch_labeled=" << batch_labeled << "\n";
    os << "batch_unlabeled=" << batch_unlabeled << "\n";
    os << "tau=" << fmt(tau) << "\n";
    os << "beta=" << fmt(beta) << "\n";
    os << "queue_capacity=" << queue_capacity << "\n";
    os << "delta=" << fmt(delta) << "\n";
    os << "gamma0=" << fmt(gamma0) << "\n";
    os << "lr0=" << fmt(lr0) << "\n";
    os << "momentum=" << fmt(momentum) << "\n";
    os << "weight_decay=" << fmt(weight_decay) << "\n";
    os << "ema_base=" << fmt(ema_base) << "\n";
    os << "reliable_source_prob=" << fmt(reliable_source_prob) << "\n";
    os << "eval_every=" << eval_every << "\n";
    os << "seed=" << seed << "\n";
    os << "ucp=" << (flags.ucp ? 1 : 0) << "\n";
    os << "vanilla_gd=" << (flags.vanilla_gd ? 1 : 0) << "\n";
    os << "sym_gd=" << (flags.sym_gd ? 1 : 0) << "\n";
    os << "tp_ram=" << (flags.tp_ram ? 1 : 0) << "\n";
    os << "ram=" << (flags.ram ? 1 : 0) << "\n";
    os << "reliable=" << (flags.reliable ? 1 : 0) << "\n";
    os << "unreliable=" << (flags.unreliable ? 1 : 0) << "\n";
    os << "rect_area_lo=" << fmt(rect.area_lo) << "\n";
    os << "rect_area_hi=" << fmt(rect.area_hi) << "\n";
    os << "rect_aspect_lo=" << fmt(rect.aspect_lo) << "\n";
    os << "rect_aspect_hi=" << fmt(rect.aspect_hi) << "\n";
    if (!resume.empty()) os << "resume=" << resume << "\n";
    return os.str();
}

void apply_key_values(TrainConfig& config, const std::string& text) {
    std::istringstream is(text);
    std::string line;
    auto parse_bool = [](const std::string& v) { return v == "1" || v == "true" || v == "on"; };
    while (std::getline(is, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        // trim
        const std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const std::size_t e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key=value, got: " + line);
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "t_total") config.t_total = std::stol(val);
        else if (key == "batch_labeled") config.batch_labeled = std::stoi(val);
        else if (key == "batch_unlabeled") config.batch_unlabeled = std::stoi(val);
        else if (key == "tau") config.tau = std::stod(val);
        else if (key == "beta") config.beta = std::stod(val);
        else if (key == "queue_capacity") config.queue_capacity = std::stoul(val);
        else if (key == "delta") config.delta = std::stod(val);
        else if (key == "gamma0") config.gamma0 = std::stod(val);
        else if (key == "lr0") config.lr0 = std::stod(val);
        else if (key == "momentum") config.momentum = std::stod(val);
        else if (key == "weight_decay") config.weight_decay = std::stod(val);
        else if (key == "ema_base") config.ema_base = std::stod(val);
        else if (key == "reliable_source_prob") config.reliable_source_prob = std::stod(val);
        else if (key == "eval_every") config.eval_every = std::stol(val);
        else if (key == "seed") config.seed = std::stoull(val);
        else if (key == "ucp") config.flags.ucp = parse_bool(val);
        else if (key == "vanilla_gd") config.flags.vanilla_gd = parse_bool(val);
        else if (key == "sym_gd") config.flags.sym_gd = parse_bool(val);
        else if (key == "tp_ram") config.flags.tp_ram = parse_bool(val);
        else if (key == "ram") config.flags.ram = parse_bool(val);
        else if (key == "reliable") config.flags.reliable = parse_bool(val);
        else if (key == "unreliable") config.flags.unreliable = parse_bool(val);
        else if (key == "rect_area_lo") config.rect.area_lo = std::stod(val);
        else if (key == "rect_area_hi") config.rect.area_hi = std::stod(val);
        else if (key == "rect_aspect_lo") config.rect.aspect_lo = std::stod(val);
        else if (key == "rect_aspect_hi") config.rect.aspect_hi = std::stod(val);
        else if (key == "resume") config.resume = val;
        else throw std::invalid_argument("config: unknown key: " + key);
    }
}

TrainConfig load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config: " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    TrainConfig config;
    apply_key_values(config, buf.str());
    return config;
}

TrainFlags preset_flags(const std::string& name) {
    TrainFlags f;
    if (name == "supervised") return f;
    if (name == "fixmatch") {
        f.vanilla_gd = true;
        return f;
    }
    if (name == "row1") {
        f.ucp = true;
        return f;
    }
    if (name == "row2") {
        f.ucp = f.vanilla_gd = true;
        return f;
    }
    if (name == "row3") {
        f.ucp = f.sym_gd = true;
        return f;
    }
    if (name == "row4") {
        f.ucp = f.tp_ram = true;
        return f;
    }
    if (name == "row5") {
        f.ucp = f.sym_gd = f.ram = true;
        return f;
    }
    if (name == "row6") {
        f.ucp = f.sym_gd = f.tp_ram = true;
        return f;
    }
    if (name == "row7") {
        f.ucp = f.sym_gd = f.tp_ram = f.reliable = true;
        return f;
    }
    if (name == "row8" || name == "full") {
        f.ucp = f.sym_gd = f.tp_ram = f.reliable = f.unreliable = true;
        return f;
    }
    throw std::invalid_argument("unknown preset: " + name);
}

LabelField infer(const SegmenterParams& params, const MultiGrid& image) {
    return argmax_field(forward(params, image));
}

namespace {

// One student forward whose CE+Dice gradient flows back with `scale`.
struct StudentJob {
    const MultiGrid* image = nullptr;
    const LabelField* target = nullptr;
    const BinaryMask* weight = nullptr;
    double scale = 0.0;
    double loss_value = 0.0;  // unscaled CE+Dice
    std::vector<double> grads;
};

void run_student_jobs(const SegmenterParams& params, std::vector<StudentJob>& jobs) {
    const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        StudentJob& job = jobs[static_cast<std::size_t>(k)];
        ForwardTrace trace;
        const ProbField p = forward_trace(params, *job.image, trace);
        const double ce = weighted_ce(*job.target, p, *job.weight);
        const double dc = weighted_dice(*job.target, p, *job.weight);
        job.loss_value = ce + dc;
        MultiGrid grad = weighted_ce_grad(*job.target, p, *job.weight);
        const MultiGrid dgrad = weighted_dice_grad(*job.target, p, *job.weight);
        for (int c = 0; c < grad.channels(); ++c) {
            Grid& plane = grad.plane(c);
            const Grid& dplane = dgrad.plane(c);
            for (std::size_t i = 0; i < plane.size(); ++i)
                plane[i] = (plane[i] + dplane[i]) * job.scale;
        }
        job.grads = backward(params, trace, grad);
    }
}

void run_forward_jobs(const SegmenterParams& params, const std::vector<const MultiGrid*>& images,
                      std::vector<ProbField>& out) {
    out.resize(images.size());
    const auto n = static_cast<std::ptrdiff_t>(images.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t k = 0; k < n; ++k)
        out[static_cast<std::size_t>(k)] = forward(params, *images[static_cast<std::size_t>(k)]);
}

struct StoredUnreliable {
    MultiGrid weak_image;
    MultiGrid strong_image;
    LabelField pseudo;
    ProbField prob;
    int index = -1;
};

struct DomainEval {
    double overall = 0.0;
    std::map<int, double> per_domain;
};

DomainEval eval_student(const SegmenterParams& params, const std::vector<Sample>& test) {
    std::vector<double> dices(test.size());
    const auto n = static_cast<std::ptrdiff_t>(test.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const Sample& s = test[static_cast<std::size_t>(k)];
        dices[static_cast<std::size_t>(k)] =
            mean_foreground_dice(argmax_field(forward(params, s.image)), s.label);
    }
    DomainEval ev;
    std::map<int, std::pair<double, int>> acc;
    double total = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        total += dices[i];
        auto& [sum, count] = acc[test[i].domain];
        sum += dices[i];
        count += 1;
    }
    ev.overall = test.empty() ? 0.0 : total / static_cast<double>(test.size());
    for (const auto& [dom, sc] : acc) ev.per_domain[dom] = sc.first / sc.second;
    return ev;
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& dataset) {
    config.validate();
    if (dataset.labeled.empty()) throw std::invalid_argument("train: no labeled samples");
    if (dataset.unlabeled.empty()) throw std::invalid_argument("train: no unlabeled samples");

    Rng rng(config.seed);
    const int in_channels = dataset.labeled[0].image.channels();

    TeacherStudent pair;
    if (config.resume.empty()) {
        pair.student = SegmenterParams(in_channels, dataset.classes);
        pair.student.init_kaiming(rng);
    } else {
        pair.student = load_checkpoint(config.resume);
        if (pair.student.in_channels() != in_channels ||
            pair.student.num_classes() != dataset.classes)
            throw std::invalid_argument("train: resume checkpoint does not match the dataset");
    }
    pair.teacher = pair.student;
    SgdState sgd_state;

    ReliableQueue queue(config.queue_capacity, config.gamma0, config.delta);
    std::optional<StoredUnreliable> pending_unreliable;

    TrainResult result;
    result.traces.reserve(static_cast<std::size_t>(config.t_total));

    const bool need_teacher = config.flags.ucp || config.flags.vanilla_gd || config.flags.sym_gd ||
                              config.flags.reliable || config.flags.unreliable;
    const bool need_hardness = config.flags.reliable || config.flags.unreliable;

    const long epoch_len = std::max<long>(
        1, static_cast<long>((dataset.unlabeled.size() + config.batch_unlabeled - 1) /
                             config.batch_unlabeled));
    long epoch_admitted = 0;
    std::ostringstream reliability_csv;
    reliability_csv << "epoch,admitted,gamma,queue_mean_hardness\n";

    if (!config.out_dir.empty()) fs::create_directories(config.out_dir);
    if (config.dump_intermediates && !config.out_dir.empty())
        fs::create_directories(fs::path(config.out_dir) / "intermediates");

    const int n_lab_batch = config.batch_labeled;
    const int n_pairs = config.batch_unlabeled;

    for (long t = 0; t < config.t_total; ++t) {
        const double lambda = lambda_schedule(t, config.t_total);
        const StyleSchedule sched{t, config.t_total, config.beta};

        // --- sequential draws: batches, augmentation, style transition -----
        std::vector<Sample> xw(static_cast<std::size_t>(n_lab_batch));
        for (int j = 0; j < n_lab_batch; ++j) {
            const Sample& src = dataset.labeled[rng.uniform_index(dataset.labeled.size())];
            xw[static_cast<std::size_t>(j)] = weak_augment(src, rng);
        }
        std::vector<Sample> uw(static_cast<std::size_t>(n_pairs)),
            us(static_cast<std::size_t>(n_pairs));
        std::vector<int> unl_index(static_cast<std::size_t>(n_pairs));
        for (int i = 0; i < n_pairs; ++i) {
            const std::size_t idx = rng.uniform_index(dataset.unlabeled.size());
            unl_index[static_cast<std::size_t>(i)] = static_cast<int>(idx);
            auto [weak, strong] = weak_strong_pair(dataset.unlabeled[idx], rng);
            uw[static_cast<std::size_t>(i)] = std::move(weak);
            us[static_cast<std::size_t>(i)] = std::move(strong);
        }

        std::vector<MultiGrid> xu(static_cast<std::size_t>(n_pairs));
        for (int i = 0; i < n_pairs; ++i) {
            const Sample& lab = xw[static_cast<std::size_t>(i % n_lab_batch)];
            const MultiGrid& u_img = uw[static_cast<std::size_t>(i)].image;
            if (config.flags.tp_ram)
                xu[static_cast<std::size_t>(i)] = amplitude_mixup(lab.image, u_img, sched, rng);
            else if (config.flags.ram)
                xu[static_cast<std::size_t>(i)] = ram_mixup(lab.image, u_img, config.beta, rng);
            else
                xu[static_cast<std::size_t>(i)] = lab.image;
        }

        // --- masks and paste sources --------------------------------------
        std::vector<BinaryMask> masks(static_cast<std::size_t>(n_pairs));
        std::vector<const MultiGrid*> src_student(static_cast<std::size_t>(n_pairs), nullptr);
        std::vector<const MultiGrid*> src_teacher(static_cast<std::size_t>(n_pairs), nullptr);
        std::vector<ProbField> src_prob(static_cast<std::size_t>(n_pairs));
        bool use_reliable_source = false;
        if (config.flags.ucp) {
            use_reliable_source = config.flags.reliable && !queue.empty() &&
                                  rng.bernoulli(config.reliable_source_prob);
            for (int i = 0; i < n_pairs; ++i) {
                masks[static_cast<std::size_t>(i)] =
                    sample_rect_mask(dataset.height, dataset.width, config.rect, rng);
                if (use_reliable_source) {
                    const ReliableEntry& entry =
                        queue.entry(rng.uniform_index(queue.size()));
                    src_student[static_cast<std::size_t>(i)] = &entry.sample;
                    src_teacher[static_cast<std::size_t>(i)] = &entry.sample;
                    src_prob[static_cast<std::size_t>(i)] = entry.prob;
                } else {
                    const Sample& lab = xw[static_cast<std::size_t>(i % n_lab_batch)];
                    src_student[static_cast<std::size_t>(i)] = &xu[static_cast<std::size_t>(i)];
                    src_teacher[static_cast<std::size_t>(i)] = &lab.image;
                    src_prob[static_cast<std::size_t>(i)] = one_hot(lab.label);
                }
            }
        }

        // --- no-grad forwards (teacher + hardness student) -----------------
        std::vector<MultiGrid> uw_in(static_cast<std::size_t>(n_pairs)),
            uw_out(static_cast<std::size_t>(n_pairs));
        std::vector<const MultiGrid*> nograd_images;
        if (need_teacher)
            for (int i = 0; i < n_pairs; ++i)
                nograd_images.push_back(&uw[static_cast<std::size_t>(i)].image);
        if (config.flags.sym_gd) {
            for (int i = 0; i < n_pairs; ++i) {
                uw_in[static_cast<std::size_t>(i)] =
                    blend(*src_teacher[static_cast<std::size_t>(i)],
                          uw[static_cast<std::size_t>(i)].image, masks[static_cast<std::size_t>(i)]);
                uw_out[static_cast<std::size_t>(i)] =
                    blend(uw[static_cast<std::size_t>(i)].image,
                          *src_teacher[static_cast<std::size_t>(i)], masks[static_cast<std::size_t>(i)]);
                nograd_images.push_back(&uw_in[static_cast<std::size_t>(i)]);
                nograd_images.push_back(&uw_out[static_cast<std::size_t>(i)]);
            }
        }

        std::vector<ProbField> teacher_out;
        run_forward_jobs(pair.teacher, nograd_images, teacher_out);
        std::vector<ProbField> student_uw_out;
        if (need_hardness) {
            std::vector<const MultiGrid*> imgs;
            for (int i = 0; i < n_pairs; ++i)
                imgs.push_back(&uw[static_cast<std::size_t>(i)].image);
            run_forward_jobs(pair.student, imgs, student_uw_out);
        }

        // --- pseudo-labels, composites, merged guidance --------------------
        std::vector<ProbField> p_hat(static_cast<std::size_t>(n_pairs));
        std::vector<LabelField> q_hat(static_cast<std::size_t>(n_pairs));
        std::vector<BinaryMask> w_conf(static_cast<std::size_t>(n_pairs));
        std::vector<double> hard(static_cast<std::size_t>(n_pairs), 0.0);
        if (need_teacher) {
            for (int i = 0; i < n_pairs; ++i) {
                p_hat[static_cast<std::size_t>(i)] = teacher_out[static_cast<std::size_t>(i)];
                q_hat[static_cast<std::size_t>(i)] = argmax_field(p_hat[static_cast<std::size_t>(i)]);
                w_conf[static_cast<std::size_t>(i)] =
                    confidence_mask(p_hat[static_cast<std::size_t>(i)], config.tau);
            }
        }
        if (need_hardness)
            for (int i = 0; i < n_pairs; ++i)
                hard[static_cast<std::size_t>(i)] =
                    hardness(q_hat[static_cast<std::size_t>(i)],
                             argmax_field(student_uw_out[static_cast<std::size_t>(i)]));

        std::vector<IntermediatePair> composites;
        if (config.flags.ucp) {
            composites.reserve(static_cast<std::size_t>(n_pairs));
            for (int i = 0; i < n_pairs; ++i)
                composites.push_back(compose_ucp(*src_student[static_cast<std::size_t>(i)],
                                                 src_prob[static_cast<std::size_t>(i)],
                                                 us[static_cast<std::size_t>(i)].image,
                                                 p_hat[static_cast<std::size_t>(i)],
                                                 masks[static_cast<std::size_t>(i)], config.tau));
        }

        std::vector<LabelField> sym_target(static_cast<std::size_t>(n_pairs));
        std::vector<BinaryMask> sym_weight(static_cast<std::size_t>(n_pairs));
        if (config.flags.sym_gd) {
            for (int i = 0; i < n_pairs; ++i) {
                const ProbField& pred_in =
                    teacher_out[static_cast<std::size_t>(n_pairs + 2 * i)];
                const ProbField& pred_out =
                    teacher_out[static_cast<std::size_t>(n_pairs + 2 * i + 1)];
                MergedPseudoLabel merged = merge_intermediate_pseudolabels(
                    pred_in, pred_out, masks[static_cast<std::size_t>(i)], config.tau);
                sym_weight[static_cast<std::size_t>(i)] =
                    ensemble_weight(q_hat[static_cast<std::size_t>(i)], merged.label,
                                    w_conf[static_cast<std::size_t>(i)], merged.weight);
                sym_target[static_cast<std::size_t>(i)] = std::move(merged.label);
            }
        } else if (config.flags.vanilla_gd) {
            for (int i = 0; i < n_pairs; ++i) {
                sym_target[static_cast<std::size_t>(i)] = q_hat[static_cast<std::size_t>(i)];
                sym_weight[static_cast<std::size_t>(i)] = w_conf[static_cast<std::size_t>(i)];
            }
        }

        std::optional<UnreliableIntermediate> ur;
        int used_unreliable_id = -1;
        if (config.flags.unreliable && pending_unreliable.has_value()) {
            ur = build_unreliable_intermediate(
                xu[0], xw[0].label, pending_unreliable->strong_image, pending_unreliable->pseudo,
                pending_unreliable->prob, config.tau);
            used_unreliable_id = pending_unreliable->index;
        }

        // --- student jobs ---------------------------------------------------
        const int n_in_terms = (config.flags.ucp ? n_pairs : 0) + (ur ? 1 : 0);
        std::vector<BinaryMask> ones_masks;
        ones_masks.reserve(static_cast<std::size_t>(n_lab_batch));
        for (int j = 0; j < n_lab_batch; ++j)
            ones_masks.emplace_back(dataset.height, dataset.width, 1);

        std::vector<StudentJob> jobs;
        std::vector<int> job_kind;  // 0=sup 1=in 2=out 3=sym
        for (int j = 0; j < n_lab_batch; ++j) {
            jobs.push_back({&xw[static_cast<std::size_t>(j)].image,
                            &xw[static_cast<std::size_t>(j)].label,
                            &ones_masks[static_cast<std::size_t>(j)],
                            1.0 / n_lab_batch});
            job_kind.push_back(0);
        }
        if (config.flags.ucp) {
            for (int i = 0; i < n_pairs; ++i) {
                const IntermediatePair& cp = composites[static_cast<std::size_t>(i)];
                jobs.push_back({&cp.sample_in, &cp.label_in, &cp.weight_in, lambda / n_in_terms});
                job_kind.push_back(1);
                jobs.push_back({&cp.sample_out, &cp.label_out, &cp.weight_out,
                                lambda / n_pairs});
                job_kind.push_back(2);
            }
        }
        if (ur) {
            jobs.push_back({&ur->sample, &ur->label, &ur->weight, lambda / n_in_terms});
            job_kind.push_back(1);
        }
        if (config.flags.sym_gd || config.flags.vanilla_gd) {
            for (int i = 0; i < n_pairs; ++i) {
                jobs.push_back({&us[static_cast<std::size_t>(i)].image,
                                &sym_target[static_cast<std::size_t>(i)],
                                &sym_weight[static_cast<std::size_t>(i)],
                                lambda * lambda / n_pairs});
                job_kind.push_back(3);
            }
        }

        run_student_jobs(pair.student, jobs);

        // --- aggregate losses and gradients (fixed order) -------------------
        double l_s = 0.0, l_in = 0.0, l_out = 0.0, l_sym = 0.0;
        std::vector<double> grads(pair.student.param_count(), 0.0);
        for (std::size_t k = 0; k < jobs.size(); ++k) {
            switch (job_kind[k]) {
                case 0: l_s += jobs[k].loss_value / n_lab_batch; break;
                case 1: l_in += jobs[k].loss_value / n_in_terms; break;
                case 2: l_out += jobs[k].loss_value / n_pairs; break;
                default: l_sym += jobs[k].loss_value / n_pairs; break;
            }
            for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += jobs[k].grads[i];
        }
        const LossBreakdown breakdown = total_loss(l_s, l_in, l_out, l_sym, t, config.t_total);

        sgd_step(pair.student, grads, sgd_state, polynomial_decay_lr(config.lr0, t, config.t_total),
                 config.momentum, config.weight_decay);
        ema_update(pair, ema_decay_at(t, config.ema_base));

        // --- reliability bookkeeping ----------------------------------------
        int admitted = 0;
        if (config.flags.reliable) {
            for (int i = 0; i < n_pairs; ++i) {
                ReliableEntry entry{uw[static_cast<std::size_t>(i)].image,
                                    p_hat[static_cast<std::size_t>(i)],
                                    q_hat[static_cast<std::size_t>(i)],
                                    hard[static_cast<std::size_t>(i)]};
                if (queue.try_admit(std::move(entry))) ++admitted;
            }
            if (admitted == 0) queue.relax_threshold();
            epoch_admitted += admitted;
        }
        if (config.flags.unreliable) {
            const std::size_t pick = pick_unreliable(hard);
            pending_unreliable = StoredUnreliable{uw[pick].image, us[pick].image, q_hat[pick],
                                                  p_hat[pick], unl_index[pick]};
        }

        result.traces.push_back(IterationTrace{t, breakdown, queue.gamma(), queue.size(), admitted,
                                               used_unreliable_id});

        if (config.flags.reliable && (t + 1) % epoch_len == 0) {
            reliability_csv << (t + 1) / epoch_len - 1 << "," << epoch_admitted << ","
                            << fmt(queue.gamma()) << "," << fmt(queue.mean_hardness()) << "\n";
            epoch_admitted = 0;
        }

        if (config.dump_intermediates && !config.out_dir.empty() && config.flags.ucp &&
            t % config.eval_every == 0) {
            const fs::path dir = fs::path(config.out_dir) / "intermediates";
            const std::string tag = "iter" + std::to_string(t);
            save_pgm(composites[0].sample_in.plane(0), (dir / (tag + "_in.pgm")).string());
            save_pgm(composites[0].sample_out.plane(0), (dir / (tag + "_out.pgm")).string());
            save_pgm(composites[0].mask.grid(), (dir / (tag + "_mask.pgm")).string());
        }

        // --- periodic evaluation --------------------------------------------
        if ((t + 1) % config.eval_every == 0 || t + 1 == config.t_total) {
            const DomainEval ev = eval_student(pair.student, dataset.test);
            EvalPoint pt{t + 1, ev.overall, ev.per_domain};
            result.evals.push_back(pt);
            if (ev.overall > result.best_mean_dc || result.best_iter < 0) {
                result.best_mean_dc = ev.overall;
                result.best_iter = t + 1;
                result.best_student = pair.student;
            }
        }
    }

    result.final_student = pair.student;
    result.final_teacher = pair.teacher;
    if (result.best_iter < 0) result.best_student = pair.student;

    // --- render telemetry -----------------------------------------------------
    std::ostringstream telemetry;
    {
        std::istringstream cfg(config.to_key_values());
        std::string line;
        while (std::getline(cfg, line)) telemetry << "# " << line << "\n";
    }
    telemetry << "iter,l_s,l_in,l_out,l_sym,lambda,l_total,gamma,queue_size,admitted,unreliable_id\n";
    for (const IterationTrace& tr : result.traces) {
        telemetry << tr.iter << "," << fmt(tr.loss.l_s) << "," << fmt(tr.loss.l_in) << ","
                  << fmt(tr.loss.l_out) << "," << fmt(tr.loss.l_sym) << ","
                  << fmt(tr.loss.lambda_t) << "," << fmt(tr.loss.l_total) << "," << fmt(tr.gamma)
                  << "," << tr.queue_size << "," << tr.admitted << "," << tr.unreliable_id << "\n";
    }
    result.telemetry_csv = telemetry.str();
    result.reliability_csv = reliability_csv.str();

    if (!config.out_dir.empty()) {
        std::ofstream(fs::path(config.out_dir) / "telemetry.csv") << result.telemetry_csv;
        std::ofstream(fs::path(config.out_dir) / "reliability.csv") << result.reliability_csv;
        std::ofstream evals(fs::path(config.out_dir) / "eval.csv");
        evals << "iter,domain,mean_dc\n";
        for (const EvalPoint& pt : result.evals) {
            evals << pt.iter << ",all," << fmt(pt.mean_dc) << "\n";
            for (const auto& [dom, dc] : pt.per_domain_dc)
                evals << pt.iter << "," << dom << "," << fmt(dc) << "\n";
        }
        save_checkpoint(result.best_student,
                        (fs::path(config.out_dir) / "checkpoint_best.segn").string());
        save_checkpoint(result.final_student,
                        (fs::path(config.out_dir) / "checkpoint_final.segn").string());
    }
    return result;
}

std::vector<AblationResult> run_ablation(const TrainConfig& base, const std::vector<AblationRow>& rows,
                                         const std::vector<std::uint64_t>& seeds,
                                         const Dataset& dataset, const std::string& out_csv) {
    std::vector<AblationResult> results;
    for (const AblationRow& row : rows) {
        AblationResult r;
        r.name = row.name;
        for (std::uint64_t seed : seeds) {
            TrainConfig config = base;
            config.flags = row.flags;
            config.seed = seed;
            config.out_dir.clear();  // ablation keeps results in memory
            const TrainResult tr = train(config, dataset);
            r.per_seed_dc.push_back(tr.best_mean_dc);
        }
        double mean = 0.0;
        for (double v : r.per_seed_dc) mean += v;
        mean /= static_cast<double>(r.per_seed_dc.size());
        double var = 0.0;
        for (double v : r.per_seed_dc) var += (v - mean) * (v - mean);
        r.mean_dc = mean;
        r.std_dc = r.per_seed_dc.size() > 1
                       ? std::sqrt(var / static_cast<double>(r.per_seed_dc.size() - 1))
                       : 0.0;
        results.push_back(std::move(r));
    }
    if (!out_csv.empty()) {
        std::ofstream os(out_csv);
        if (!os) throw std::runtime_error("cannot write ablation csv: " + out_csv);
        os << "row,mean_dc,std_dc,per_seed\n";
        for (const AblationResult& r : results) {
            os << r.name << "," << fmt(r.mean_dc) << "," << fmt(r.std_dc) << ",";
            for (std::size_t i = 0; i < r.per_seed_dc.size(); ++i)
                os << (i ? ";" : "") << fmt(r.per_seed_dc[i]);
            os << "\n";
        }
    }
    return results;
}

}  // namespace midseg
