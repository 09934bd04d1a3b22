#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "alucell/control.hpp"
#include "alucell/dataset.hpp"
#include "alucell/eval.hpp"
#include "alucell/plant.hpp"
#include "alucell/train.hpp"

namespace alucell {

struct DatasetSizeSpec {
    std::string name;
    long trajectories = 0;
};

// Whole-study configuration, loaded from one JSON file.  Dataset sizes are
// nested prefixes of the training corpus, ascending.
struct ExperimentConfig {
    PlantParams plant;
    ControllerConfig controller = ControllerConfig::defaults();
    AprbsConfig aprbs = AprbsConfig::defaults();
    InitBox init_box = InitBox::defaults();
    CorpusConfig corpus;
    std::vector<DatasetSizeSpec> sizes;
    std::vector<ModelClass> classes{kAllModelClasses,
                                    kAllModelClasses + 4};
    int instances = 10;
    std::vector<long> horizons{100, 2000, 5000};
    TrainConfig train;
    double sparse_lambda = 1e-4;
    ArchitectureSpec architecture;  // topology is overridden per class
    std::uint64_t master_seed = 1;
    int workers = 1;

    static ExperimentConfig load(const std::filesystem::path& file);
    static ExperimentConfig from_json_text(const std::string& text,
                                           const std::filesystem::path& base_dir);
    void validate() const;
};

struct ResultRow {
    std::string dataset_size;
    std::string model_class;
    std::uint64_t seed = 0;
    std::uint32_t trajectory_id = 0;
    long horizon = 0;
    std::optional<double> an_rfmse;  // absent when the forecast blew up
    bool blowup = false;
    std::optional<long> divergence_step;
};

struct ResultsTable {
    std::vector<ResultRow> rows;

    std::string to_csv() const;
    static ResultsTable from_csv(const std::string& text);
};

struct BlowupCount {
    std::string dataset_size;
    std::string model_class;
    long horizon = 0;
    long count = 0;
    long denominator = 0;  // instances * trajectories
};

struct AccuracyCell {
    std::string dataset_size;
    std::string model_class;
    long horizon = 0;
    long count = 0;  // rows that survived the blow-up exclusion
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0;
};

std::vector<BlowupCount> blowup_summary(const ResultsTable& table);
// Distribution stats of AN-RFMSE per cell, excluding blown-up rows.  Cells
// where everything blew up are reported with count 0 and no stats.
std::vector<AccuracyCell> accuracy_summary(const ResultsTable& table);

// Linear-interpolation quantile on a sorted sample (the numpy default).
double quantile_sorted(const std::vector<double>& sorted, double q);

// Runs corpus generation, dataset construction, ensemble training and
// evaluation, persisting every stage under out_dir; stages whose artifacts
// already exist and validate are skipped, so an interrupted run resumes to
// an identical table.  Per-cell failures are recorded in errors.log and the
// run continues.
ResultsTable run_experiment(const ExperimentConfig& cfg,
                            const std::filesystem::path& out_dir);

// Writes results_raw.csv, blowups.csv, accuracy.csv and summary.md.
void write_report(const ResultsTable& table, const std::filesystem::path& dir);

}  // namespace alucell
