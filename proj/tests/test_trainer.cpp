#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "midseg/trainer.hpp"

using namespace midseg;
namespace fs = std::filesystem;

namespace {

Dataset tiny_dataset() {
    DatasetSpec spec;
    spec.n_labeled = 3;
    spec.n_unlabeled_per_domain = 4;
    spec.n_test_per_domain = 2;
    spec.seed = 5;
    return generate_dataset(spec);
}

TrainConfig tiny_config(const TrainFlags& flags, std::uint64_t seed = 1) {
    TrainConfig c;
    c.t_total = 12;
    c.batch_labeled = 2;
    c.batch_unlabeled = 2;
    c.eval_every = 6;
    c.seed = seed;
    c.flags = flags;
    return c;
}

}  // namespace

TEST_CASE("config invariants are enforced") {
    TrainConfig c;
    c.flags.sym_gd = c.flags.vanilla_gd = true;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    TrainConfig c2;
    c2.flags.ram = c2.flags.tp_ram = true;
    CHECK_THROWS_AS(c2.validate(), std::invalid_argument);

    TrainConfig c3;
    c3.flags.reliable = true;  // without ucp
    CHECK_THROWS_AS(c3.validate(), std::invalid_argument);

    TrainConfig c4;
    c4.flags.unreliable = true;
    CHECK_THROWS_AS(c4.validate(), std::invalid_argument);

    TrainConfig ok;
    ok.flags = preset_flags("full");
    CHECK_NOTHROW(ok.validate());
}

TEST_CASE("config key=value round trip and overrides") {
    TrainConfig c;
    c.flags = preset_flags("row6");
    c.tau = 0.9;
    c.seed = 77;
    TrainConfig parsed;
    apply_key_values(parsed, c.to_key_values());
    CHECK(parsed.tau == c.tau);
    CHECK(parsed.seed == c.seed);
    CHECK(parsed.flags.sym_gd == true);
    CHECK(parsed.flags.tp_ram == true);
    CHECK(parsed.flags.unreliable == false);

    CHECK_THROWS_AS(apply_key_values(parsed, "no_such_key=1\n"), std::invalid_argument);
    CHECK_NOTHROW(apply_key_values(parsed, "# comment only\n\n"));
    apply_key_values(parsed, "beta=0.05 # inline comment\n");
    CHECK(parsed.beta == doctest::Approx(0.05));
}

TEST_CASE("preset flags match the ablation grid rows") {
    CHECK_FALSE(preset_flags("supervised").ucp);
    CHECK(preset_flags("fixmatch").vanilla_gd);
    CHECK_FALSE(preset_flags("fixmatch").ucp);
    CHECK(preset_flags("row3").sym_gd);
    CHECK_FALSE(preset_flags("row3").tp_ram);
    CHECK(preset_flags("row5").ram);
    CHECK(preset_flags("row8").unreliable);
    CHECK(preset_flags("full").reliable);
    CHECK_THROWS_AS(preset_flags("row99"), std::invalid_argument);
}

TEST_CASE("all flags off reduces to supervised training") {
    const Dataset data = tiny_dataset();
    const TrainResult r = train(tiny_config(preset_flags("supervised")), data);
    REQUIRE(r.traces.size() == 12);
    for (const IterationTrace& tr : r.traces) {
        CHECK(tr.loss.l_in == 0.0);
        CHECK(tr.loss.l_out == 0.0);
        CHECK(tr.loss.l_sym == 0.0);
        CHECK(tr.loss.l_total == tr.loss.l_s);
        CHECK(tr.admitted == 0);
        CHECK(tr.queue_size == 0);
    }
}

TEST_CASE("loss breakdown satisfies the aggregation identity on a full run") {
    const Dataset data = tiny_dataset();
    const TrainResult r = train(tiny_config(preset_flags("full")), data);
    for (const IterationTrace& tr : r.traces) {
        const double expect =
            tr.loss.l_s + tr.loss.lambda_t * (tr.loss.l_in + tr.loss.l_out +
                                              tr.loss.lambda_t * tr.loss.l_sym);
        CHECK(std::fabs(tr.loss.l_total - expect) < 1e-9);
        CHECK(tr.loss.lambda_t == doctest::Approx(lambda_schedule(tr.iter, 12)).epsilon(1e-12));
    }
}

TEST_CASE("unreliable pathway skips iteration 0 and engages afterwards") {
    const Dataset data = tiny_dataset();
    const TrainResult r = train(tiny_config(preset_flags("full")), data);
    CHECK(r.traces[0].unreliable_id == -1);
    bool engaged = false;
    for (std::size_t t = 1; t < r.traces.size(); ++t) engaged |= r.traces[t].unreliable_id >= 0;
    CHECK(engaged);
}

TEST_CASE("training is deterministic: identical runs produce identical artifacts") {
    const Dataset data = tiny_dataset();
    const TrainConfig c = tiny_config(preset_flags("full"), 9);
    const TrainResult a = train(c, data);
    const TrainResult b = train(c, data);
    CHECK(a.telemetry_csv == b.telemetry_csv);
    CHECK(a.final_student == b.final_student);
    CHECK(a.final_teacher == b.final_teacher);
    CHECK(a.best_student == b.best_student);

    TrainConfig other = c;
    other.seed = 10;
    const TrainResult d = train(other, data);
    CHECK(a.telemetry_csv != d.telemetry_csv);
}

TEST_CASE("train writes telemetry, checkpoints and eval files") {
    const fs::path dir = fs::temp_directory_path() / "midseg_trainer_test";
    fs::remove_all(dir);
    const Dataset data = tiny_dataset();
    TrainConfig c = tiny_config(preset_flags("row6"), 3);
    c.out_dir = dir.string();
    c.dump_intermediates = true;
    const TrainResult r = train(c, data);
    CHECK(fs::exists(dir / "telemetry.csv"));
    CHECK(fs::exists(dir / "reliability.csv"));
    CHECK(fs::exists(dir / "eval.csv"));
    CHECK(fs::exists(dir / "checkpoint_best.segn"));
    CHECK(fs::exists(dir / "checkpoint_final.segn"));
    CHECK(fs::exists(dir / "intermediates"));

    // telemetry on disk matches the in-memory rendering
    std::ifstream is(dir / "telemetry.csv");
    const std::string file_contents{std::istreambuf_iterator<char>(is),
                                    std::istreambuf_iterator<char>()};
    CHECK(file_contents == r.telemetry_csv);

    // the best checkpoint reloads into the recorded best student
    const SegmenterParams best = load_checkpoint((dir / "checkpoint_best.segn").string());
    CHECK(best.num_classes() == 2);

    // resume path: a fresh run can start from the final checkpoint
    TrainConfig rc = tiny_config(preset_flags("row6"), 4);
    rc.resume = (dir / "checkpoint_final.segn").string();
    CHECK_NOTHROW(train(rc, data));
    fs::remove_all(dir);
}

TEST_CASE("infer is deterministic and uniform checkpoints predict background") {
    const Dataset data = tiny_dataset();
    Rng rng(3);
    SegmenterParams params(1, 2);
    params.init_kaiming(rng);  // zero final layer: uniform output
    const LabelField a = infer(params, data.test[0].image);
    const LabelField b = infer(params, data.test[0].image);
    CHECK(a == b);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == 0);
}

TEST_CASE("empty queue never stalls the ucp source selection") {
    // at iteration 0 the queue is always empty when sources are chosen, so a
    // completing run demonstrates the labeled-data fallback; the substitution
    // probability draw happens only once the queue is non-empty
    const Dataset data = tiny_dataset();
    TrainConfig c = tiny_config(preset_flags("row7"), 5);
    c.reliable_source_prob = 1.0;  // force substitution whenever possible
    const TrainResult r = train(c, data);
    REQUIRE(r.traces.size() == 12);
    CHECK(r.traces[0].loss.l_in > 0.0);  // ucp ran with labeled sources
}

TEST_CASE("run_ablation aggregates mean and std across seeds") {
    const Dataset data = tiny_dataset();
    TrainConfig base = tiny_config(TrainFlags{});
    const std::vector<AblationRow> rows = {{"supervised", preset_flags("supervised")},
                                           {"row1", preset_flags("row1")}};
    const auto results = run_ablation(base, rows, {1, 2}, data);
    REQUIRE(results.size() == 2);
    for (const AblationResult& r : results) {
        CHECK(r.per_seed_dc.size() == 2);
        CHECK(r.mean_dc == doctest::Approx((r.per_seed_dc[0] + r.per_seed_dc[1]) / 2.0));
        CHECK(r.mean_dc >= 0.0);
        CHECK(r.mean_dc <= 1.0);
    }
}

TEST_CASE("single row single seed ablation runs one train+eval") {
    const Dataset data = tiny_dataset();
    TrainConfig base = tiny_config(TrainFlags{});
    const auto results = run_ablation(base, {{"row1", preset_flags("row1")}}, {7}, data);
    REQUIRE(results.size() == 1);
    CHECK(results[0].per_seed_dc.size() == 1);
    CHECK(results[0].std_dc == 0.0);
}
