#include <doctest.h>

#include <filesystem>

#include "alucell/errors.hpp"
#include "alucell/experiment.hpp"
#include "alucell/io.hpp"
#include "test_helpers.hpp"

using namespace alucell;
namespace fs = std::filesystem;

namespace {

// Micro study: 2 classes x 2 instances x 5 test trajectories x 3 horizons.
ExperimentConfig micro_config() {
    ExperimentConfig cfg;
    cfg.plant =
        PlantParams::load(testutil::repo_path("config/plant_default.json"));
    cfg.corpus.n_train = 2;
    cfg.corpus.n_test = 5;
    cfg.corpus.steps = 60;
    cfg.corpus.h = 10.0;
    cfg.sizes = {{"mini", 2}};
    cfg.classes = {ModelClass::plain_dense, ModelClass::input_skip_sparse};
    cfg.instances = 2;
    cfg.horizons = {10, 30, 60};
    cfg.train.epochs = 2;
    cfg.train.batch_size = 32;
    cfg.architecture.hidden_layers = 2;
    cfg.architecture.hidden_width = 4;
    cfg.master_seed = 77;
    cfg.workers = 1;
    return cfg;
}

ResultRow row(const char* size, const char* cls, std::uint64_t seed,
              std::uint32_t traj, long horizon, std::optional<double> metric,
              bool blowup) {
    ResultRow r;
    r.dataset_size = size;
    r.model_class = cls;
    r.seed = seed;
    r.trajectory_id = traj;
    r.horizon = horizon;
    r.an_rfmse = metric;
    r.blowup = blowup;
    if (blowup) r.divergence_step = horizon / 2;
    return r;
}

}  // namespace

TEST_CASE("quantiles: linear interpolation fixture") {
    const std::vector<double> v{1.0, 1.5, 3.0, 4.0, 9.0};
    CHECK(quantile_sorted(v, 0.25) == 1.5);
    CHECK(quantile_sorted(v, 0.5) == 3.0);
    CHECK(quantile_sorted(v, 0.75) == 4.0);
    CHECK(quantile_sorted(v, 0.0) == 1.0);
    CHECK(quantile_sorted(v, 1.0) == 9.0);
    const std::vector<double> pair{1.0, 2.0};
    CHECK(quantile_sorted(pair, 0.5) == 1.5);
    CHECK_THROWS_AS(quantile_sorted({}, 0.5), UsageError);
}

TEST_CASE("blow-up summary counts per cell") {
    ResultsTable t;
    t.rows.push_back(row("s", "A", 1, 0, 10, 0.5, false));
    t.rows.push_back(row("s", "A", 1, 1, 10, {}, true));
    t.rows.push_back(row("s", "A", 2, 0, 10, {}, true));
    t.rows.push_back(row("s", "A", 1, 0, 20, 0.7, false));
    t.rows.push_back(row("s", "B", 1, 0, 10, 0.1, false));

    const auto counts = blowup_summary(t);
    REQUIRE(counts.size() == 3);
    CHECK(counts[0].model_class == "A");
    CHECK(counts[0].horizon == 10);
    CHECK(counts[0].count == 2);
    CHECK(counts[0].denominator == 3);
    CHECK(counts[1].count == 0);
    CHECK(counts[1].denominator == 1);
    CHECK(counts[2].model_class == "B");

    CHECK(blowup_summary(ResultsTable{}).empty());
}

TEST_CASE("accuracy summary: quartiles, single row, all-excluded cell") {
    ResultsTable t;
    for (double v : {3.0, 1.0, 4.0, 1.5, 9.0})
        t.rows.push_back(row("s", "A", 1, 0, 10, v, false));
    t.rows.push_back(row("s", "A", 1, 5, 10, 100.0, true));  // excluded
    t.rows.push_back(row("s", "B", 1, 0, 10, 0.25, false));
    t.rows.push_back(row("s", "C", 1, 0, 10, {}, true));

    const auto cells = accuracy_summary(t);
    REQUIRE(cells.size() == 3);
    CHECK(cells[0].count == 5);
    CHECK(cells[0].min == 1.0);
    CHECK(cells[0].q1 == 1.5);
    CHECK(cells[0].median == 3.0);
    CHECK(cells[0].q3 == 4.0);
    CHECK(cells[0].max == 9.0);
    CHECK(cells[0].mean == doctest::Approx(3.7).epsilon(1e-15));

    CHECK(cells[1].count == 1);
    CHECK(cells[1].min == 0.25);
    CHECK(cells[1].max == 0.25);
    CHECK(cells[1].mean == 0.25);

    CHECK(cells[2].count == 0);  // everything blew up: reported empty
}

TEST_CASE("results table: csv round trip") {
    ResultsTable t;
    t.rows.push_back(row("s", "A", 12, 3, 10, 0.125, false));
    t.rows.push_back(row("s", "B", 13, 4, 20, {}, true));
    const std::string csv = t.to_csv();
    const ResultsTable r = ResultsTable::from_csv(csv);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[0].an_rfmse == 0.125);
    CHECK(r.rows[0].seed == 12);
    CHECK_FALSE(r.rows[0].blowup);
    CHECK(r.rows[1].blowup);
    CHECK_FALSE(r.rows[1].an_rfmse.has_value());
    CHECK(r.rows[1].divergence_step == 10);
    CHECK(r.to_csv() == csv);

    CHECK_THROWS_AS(ResultsTable::from_csv("bad header\n"), IoError);
}

TEST_CASE("report files: headers, empty table") {
    testutil::ScratchDir dir("report");
    write_report(ResultsTable{}, dir.path);
    CHECK(read_file(dir.path / "results_raw.csv") ==
          "model_class,seed,dataset_size,trajectory_id,horizon,an_rfmse,"
          "blowup,divergence_step\n");
    CHECK(read_file(dir.path / "blowups.csv") ==
          "dataset_size,model_class,horizon,blowups,denominator\n");
    CHECK(read_file(dir.path / "accuracy.csv") ==
          "dataset_size,model_class,horizon,count,min,q1,median,q3,max,mean\n");
    CHECK(read_file(dir.path / "summary.md").find("# Forecast study summary") ==
          0);
}

TEST_CASE("experiment config: JSON loading and validation") {
    SUBCASE("shipped desk and paper presets parse and validate") {
        const ExperimentConfig desk =
            ExperimentConfig::load(testutil::repo_path("config/desk.json"));
        CHECK(desk.corpus.n_train == 5);
        CHECK(desk.sizes.size() == 1);
        CHECK(desk.instances == 3);
        CHECK(desk.train.batch_size == 128);
        CHECK(desk.architecture.hidden_width == 25);

        const ExperimentConfig paper =
            ExperimentConfig::load(testutil::repo_path("config/paper.json"));
        CHECK(paper.corpus.n_train == 40);
        CHECK(paper.corpus.n_test == 100);
        CHECK(paper.sizes.size() == 3);
        CHECK(paper.sizes[2].trajectories == 40);
        CHECK(paper.instances == 10);
        CHECK(paper.horizons == std::vector<long>{100, 2000, 5000});
    }

    SUBCASE("rejects descending sizes and horizons") {
        ExperimentConfig bad = micro_config();
        bad.sizes = {{"a", 2}, {"b", 1}};
        CHECK_THROWS_AS(bad.validate(), ConfigError);

        ExperimentConfig bad2 = micro_config();
        bad2.horizons = {30, 10};
        CHECK_THROWS_AS(bad2.validate(), ConfigError);

        ExperimentConfig bad3 = micro_config();
        bad3.horizons = {10, 100};  // exceeds steps
        CHECK_THROWS_AS(bad3.validate(), ConfigError);

        ExperimentConfig bad4 = micro_config();
        bad4.sizes = {{"big", 3}};  // exceeds n_train
        CHECK_THROWS_AS(bad4.validate(), ConfigError);
    }

    SUBCASE("malformed JSON text") {
        CHECK_THROWS_AS(ExperimentConfig::from_json_text("{", "."), ConfigError);
        CHECK_THROWS_AS(ExperimentConfig::from_json_text("{}", "."),
                        ConfigError);
    }
}

TEST_CASE("experiment: row-count contract, determinism, resumability") {
    const ExperimentConfig cfg = micro_config();
    testutil::ScratchDir dir("experiment");
    const fs::path a = dir.path / "a";
    const fs::path b = dir.path / "b";

    const ResultsTable ta = run_experiment(cfg, a);
    // 2 classes x 2 instances x 5 trajectories x 3 horizons
    CHECK(ta.rows.size() == 60);
    CHECK_FALSE(fs::exists(a / "errors.log"));

    const ResultsTable tb = run_experiment(cfg, b);
    CHECK(read_file(a / "results_raw.csv") == read_file(b / "results_raw.csv"));

    SUBCASE("resume after losing artifacts reproduces the table") {
        fs::remove(a / "models" / "mini_PlainDense_1.ckpt.json");
        fs::remove(a / "metrics" / "mini_PlainDense_1.csv");
        fs::remove(a / "metrics" / "mini_InputSkipSparse_0.csv");
        fs::remove(a / "results_raw.csv");
        const ResultsTable tr = run_experiment(cfg, a);
        CHECK(tr.rows.size() == 60);
        CHECK(read_file(a / "results_raw.csv") ==
              read_file(b / "results_raw.csv"));
    }

    SUBCASE("a different config cannot reuse the directory") {
        ExperimentConfig other = cfg;
        other.master_seed = 78;
        CHECK_THROWS_AS(run_experiment(other, a), ConfigError);
    }

    SUBCASE("worker count does not change the results") {
        ExperimentConfig par = cfg;
        par.workers = 4;
        const fs::path c = dir.path / "c";
        run_experiment(par, c);
        CHECK(read_file(c / "results_raw.csv") ==
              read_file(b / "results_raw.csv"));
    }

    SUBCASE("report regenerates summaries from the raw csv") {
        const ResultsTable loaded =
            ResultsTable::from_csv(read_file(b / "results_raw.csv"));
        testutil::ScratchDir rdir("report_regen");
        write_report(loaded, rdir.path);
        CHECK(read_file(rdir.path / "blowups.csv") ==
              read_file(b / "blowups.csv"));
        CHECK(read_file(rdir.path / "accuracy.csv") ==
              read_file(b / "accuracy.csv"));
    }
}
