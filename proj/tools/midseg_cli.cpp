// Command-line front end: dataset generation, training, evaluation,
// ablation grids and single-image inference.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "midseg/grid_io.hpp"
#include "midseg/metrics.hpp"
#include "midseg/synthdata.hpp"
#include "midseg/trainer.hpp"

namespace fs = std::filesystem;
using namespace midseg;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ','))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

void print_eval_summary(const EvalReport& report) {
    std::cout << "domain class dc      jc      hd95    asd     n  undef\n";
    for (const MetricRow& r : report.rows) {
        std::printf("%6d %5d %-7.4f %-7.4f %-7.3f %-7.3f %-2d %d\n", r.domain, r.cls, r.dc, r.jc,
                    r.hd95, r.asd, r.n, r.n_undefined);
    }
    std::printf("overall mean DC: %.4f\n", report.overall_mean_dc);
}

struct SweepSpec {
    std::string beta, tau, delta, capacity;
};

// Seed-averaged grid over one hyperparameter, reusing the trainer directly.
void run_sweep(const TrainConfig& base, const Dataset& data, const std::string& param,
               const std::vector<std::string>& values, const std::vector<std::uint64_t>& seeds,
               std::ostream& os) {
    os << "param,value,mean_dc,std_dc\n";
    for (const std::string& v : values) {
        std::vector<double> dcs;
        for (std::uint64_t seed : seeds) {
            TrainConfig c = base;
            c.seed = seed;
            c.out_dir.clear();
            if (param == "beta") c.beta = std::stod(v);
            else if (param == "tau") c.tau = std::stod(v);
            else if (param == "delta") c.delta = std::stod(v);
            else if (param == "capacity") c.queue_capacity = std::stoul(v);
            dcs.push_back(train(c, data).best_mean_dc);
        }
        double mean = 0.0;
        for (double d : dcs) mean += d;
        mean /= static_cast<double>(dcs.size());
        double var = 0.0;
        for (double d : dcs) var += (d - mean) * (d - mean);
        const double sd = dcs.size() > 1 ? std::sqrt(var / static_cast<double>(dcs.size() - 1)) : 0.0;
        os << param << "," << v << "," << mean << "," << sd << "\n";
        std::cout << param << "=" << v << ": mean DC " << mean << " (std " << sd << ")\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"midseg: mixed-domain semi-supervised segmentation workbench"};
    app.require_subcommand(1);

    // ---- generate-data -----------------------------------------------------
    auto* gen = app.add_subcommand("generate-data", "Generate the synthetic multi-domain benchmark");
    std::string gen_out = "data";
    DatasetSpec spec;
    int gen_domains = 4;
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--seed", spec.seed, "Dataset seed");
    gen->add_option("--domains", gen_domains, "Number of domains (first styles of the default set)");
    gen->add_option("--size", spec.size, "Image side length");
    gen->add_option("--classes", spec.classes, "Class count (2 or 3)");
    gen->add_option("--labeled", spec.n_labeled, "Labeled samples (domain 0)");
    gen->add_option("--unlabeled-per-domain", spec.n_unlabeled_per_domain, "Unlabeled per domain");
    gen->add_option("--test-per-domain", spec.n_test_per_domain, "Test samples per domain");

    // ---- train ---------------------------------------------------------------
    auto* tr = app.add_subcommand("train", "Train on a generated dataset");
    std::string tr_data, tr_out = "run", tr_config, tr_preset = "full", tr_resume;
    TrainConfig tcfg;
    bool tr_dump = false;
    std::uint64_t tr_seed = 1;
    long tr_iters = 2000;
    double tr_beta = 0.01, tr_tau = 0.95;
    std::vector<double> tr_rect_area, tr_rect_aspect;
    tr->add_option("--data", tr_data, "Dataset directory")->required();
    tr->add_option("--out", tr_out, "Output directory for telemetry and checkpoints");
    tr->add_option("--config", tr_config, "key=value config file");
    tr->add_option("--preset", tr_preset,
                   "Flag preset: supervised|fixmatch|row1..row8|full (overridden by --config flags)");
    tr->add_option("--seed", tr_seed, "Training seed");
    tr->add_option("--iters", tr_iters, "Total iterations");
    tr->add_option("--beta", tr_beta, "Low-frequency half-extent fraction");
    tr->add_option("--tau", tr_tau, "Confidence threshold");
    tr->add_option("--rect-area", tr_rect_area, "Paste rectangle area fraction range (lo hi)")
        ->expected(2);
    tr->add_option("--rect-aspect", tr_rect_aspect, "Paste rectangle aspect range (lo hi)")
        ->expected(2);
    tr->add_option("--resume", tr_resume, "Checkpoint to resume from");
    tr->add_flag("--dump-intermediates", tr_dump, "Dump composite PGMs during training");

    // ---- evaluate -------------------------------------------------------------
    auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset's test split");
    std::string ev_ckpt, ev_data, ev_out = "report.csv";
    ev->add_option("--checkpoint", ev_ckpt, "Checkpoint file")->required();
    ev->add_option("--data", ev_data, "Dataset directory")->required();
    ev->add_option("--out", ev_out, "Report CSV path");

    // ---- ablate ----------------------------------------------------------------
    auto* ab = app.add_subcommand("ablate", "Train flag-preset rows or hyperparameter sweeps");
    std::string ab_data, ab_out = "ablation.csv", ab_rows = "row1,row2,row3", ab_seeds = "1,2,3";
    std::string ab_sweep_param, ab_sweep_values;
    TrainConfig abcfg;
    ab->add_option("--data", ab_data, "Dataset directory")->required();
    ab->add_option("--rows", ab_rows, "Comma-separated preset names");
    ab->add_option("--seeds", ab_seeds, "Comma-separated seeds");
    ab->add_option("--out", ab_out, "Comparison CSV path");
    ab->add_option("--iters", abcfg.t_total, "Iterations per run");
    ab->add_option("--sweep", ab_sweep_param, "Sweep one of: beta, tau, delta, capacity");
    ab->add_option("--sweep-values", ab_sweep_values, "Comma-separated sweep values");

    // ---- infer -----------------------------------------------------------------
    auto* in = app.add_subcommand("infer", "Segment one GRID image with a checkpoint");
    std::string in_ckpt, in_image, in_out = "prediction.grid", in_pgm;
    in->add_option("--checkpoint", in_ckpt, "Checkpoint file")->required();
    in->add_option("--image", in_image, "Input image (GRID format)")->required();
    in->add_option("--out", in_out, "Predicted label field (GRID format)");
    in->add_option("--pgm", in_pgm, "Optional PGM visualization path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            std::vector<DomainStyle> all = default_domain_styles();
            if (gen_domains < 2 || gen_domains > static_cast<int>(all.size())) {
                std::cerr << "generate-data: --domains must lie in [2," << all.size() << "]\n";
                return 1;
            }
            spec.domains.assign(all.begin(), all.begin() + gen_domains);
            const Dataset ds = generate_dataset(spec);
            save_dataset(ds, gen_out);
            std::cout << "wrote " << ds.labeled.size() << " labeled, " << ds.unlabeled.size()
                      << " unlabeled, " << ds.test.size() << " test samples to " << gen_out << "\n";
        } else if (*tr) {
            // precedence: defaults < preset < config file < explicit CLI options
            tcfg.flags = preset_flags(tr_preset);
            if (!tr_config.empty()) {
                std::ifstream is(tr_config);
                if (!is) throw std::runtime_error("cannot open config: " + tr_config);
                std::stringstream buf;
                buf << is.rdbuf();
                apply_key_values(tcfg, buf.str());
            }
            if (tr->count("--seed")) tcfg.seed = tr_seed;
            if (tr->count("--iters")) tcfg.t_total = tr_iters;
            if (tr->count("--beta")) tcfg.beta = tr_beta;
            if (tr->count("--tau")) tcfg.tau = tr_tau;
            if (tr_rect_area.size() == 2) {
                tcfg.rect.area_lo = tr_rect_area[0];
                tcfg.rect.area_hi = tr_rect_area[1];
            }
            if (tr_rect_aspect.size() == 2) {
                tcfg.rect.aspect_lo = tr_rect_aspect[0];
                tcfg.rect.aspect_hi = tr_rect_aspect[1];
            }
            tcfg.out_dir = tr_out;
            tcfg.resume = tr_resume;
            tcfg.dump_intermediates = tr_dump;
            const Dataset data = load_dataset(tr_data);
            const TrainResult result = train(tcfg, data);
            std::cout << "best mean DC " << result.best_mean_dc << " at iter " << result.best_iter
                      << "; outputs in " << tr_out << "\n";
        } else if (*ev) {
            const Dataset data = load_dataset(ev_data);
            const SegmenterParams params = load_checkpoint(ev_ckpt);
            const EvalReport report = evaluate_model(params, data.test, data.classes);
            write_report_csv(report, ev_out);
            print_eval_summary(report);
        } else if (*ab) {
            const Dataset data = load_dataset(ab_data);
            std::vector<std::uint64_t> seeds;
            for (const std::string& s : split_list(ab_seeds)) seeds.push_back(std::stoull(s));
            if (!ab_sweep_param.empty()) {
                if (ab_sweep_values.empty())
                    throw std::runtime_error("--sweep requires --sweep-values");
                abcfg.flags = preset_flags("full");
                std::ofstream os(ab_out);
                run_sweep(abcfg, data, ab_sweep_param, split_list(ab_sweep_values), seeds, os);
            } else {
                std::vector<AblationRow> rows;
                for (const std::string& name : split_list(ab_rows))
                    rows.push_back({name, preset_flags(name)});
                const auto results = run_ablation(abcfg, rows, seeds, data, ab_out);
                for (const AblationResult& r : results)
                    std::cout << r.name << ": mean DC " << r.mean_dc << " (std " << r.std_dc << ")\n";
            }
            std::cout << "wrote " << ab_out << "\n";
        } else if (*in) {
            const SegmenterParams params = load_checkpoint(in_ckpt);
            const MultiGrid image = load_multigrid(in_image);
            const LabelField pred = infer(params, image);
            save_labelfield(pred, params.num_classes(), in_out);
            if (!in_pgm.empty()) {
                Grid vis(pred.height(), pred.width());
                for (std::size_t i = 0; i < pred.size(); ++i)
                    vis[i] = static_cast<double>(pred[i]) /
                             static_cast<double>(params.num_classes() - 1);
                save_pgm(vis, in_pgm);
            }
            std::cout << "wrote " << in_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
