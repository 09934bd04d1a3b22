// Command-line front end: simulate / generate / train / forecast / evaluate /
// experiment / report.  Exit code 0 on success; on failure a single
// machine-readable JSON error line goes to stderr.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "alucell/dataset.hpp"
#include "alucell/errors.hpp"
#include "alucell/eval.hpp"
#include "alucell/experiment.hpp"
#include "alucell/io.hpp"
#include "alucell/rng.hpp"
#include "alucell/train.hpp"

namespace {

using namespace alucell;
namespace fs = std::filesystem;

struct GlobalOpts {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::optional<int> workers;
};

ExperimentConfig load_config(const GlobalOpts& g) {
    if (g.config.empty()) throw ConfigError("--config is required");
    ExperimentConfig cfg = ExperimentConfig::load(g.config);
    if (g.seed) cfg.master_seed = *g.seed;
    if (g.workers) cfg.workers = *g.workers;
    return cfg;
}

int cmd_simulate(const GlobalOpts& g, long steps, const std::string& out_file) {
    ExperimentConfig cfg = load_config(g);
    const long n = steps > 0 ? steps : cfg.corpus.steps;

    const std::uint64_t traj_seed = derive_seed(cfg.master_seed, "simulate", 0);
    Rng init_rng(derive_seed(traj_seed, "init"));
    const CellState x0 = sample_initial_state(cfg.init_box, init_rng);
    AprbsConfig aprbs = cfg.aprbs;
    aprbs.seed = derive_seed(traj_seed, "aprbs");
    const AprbsSignal signal = aprbs_signal(aprbs, n);
    Trajectory traj = simulate(
        x0,
        [&](const CellState& x, long t) {
            return stochastic_policy(x, t, cfg.controller, signal);
        },
        n, cfg.corpus.h, cfg.plant);
    traj.seed = traj_seed;
    save_trajectory(traj, out_file);
    std::cout << "wrote " << out_file << " (" << traj.steps() << " steps, h="
              << traj.h << "s)\n";
    return 0;
}

int cmd_generate(const GlobalOpts& g) {
    ExperimentConfig cfg = load_config(g);
    const fs::path out(g.out);
    Corpus corpus = build_corpus(cfg.corpus, cfg.controller, cfg.aprbs,
                                 cfg.init_box, cfg.plant, cfg.master_seed,
                                 cfg.workers);
    save_corpus(corpus, out / "corpus", cfg.master_seed);
    fs::create_directories(out / "datasets");
    for (const auto& size : cfg.sizes) {
        Dataset ds = build_dataset(size.name, corpus.train, size.trajectories,
                                   cfg.master_seed);
        save_dataset(ds, out / "datasets" / ("dataset_" + size.name));
        std::cout << "dataset " << size.name << ": " << ds.pairs.size()
                  << " pairs from " << size.trajectories << " trajectories\n";
    }
    std::cout << "corpus: " << corpus.train.size() << " train + "
              << corpus.test.size() << " test trajectories\n";
    return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& cls_name,
              const std::string& size_name, int instances) {
    ExperimentConfig cfg = load_config(g);
    const ModelClass cls = model_class_from_string(cls_name);
    const fs::path out(g.out);

    const DatasetSizeSpec* size = nullptr;
    for (const auto& s : cfg.sizes)
        if (s.name == size_name || size_name.empty()) {
            size = &s;
            break;
        }
    if (!size) throw ConfigError("unknown dataset size: " + size_name);

    Dataset ds = load_dataset(out / "datasets" / ("dataset_" + size->name));
    const int n = instances > 0 ? instances : cfg.instances;
    const std::uint64_t base_seed = derive_seed(
        cfg.master_seed, "train/" + size->name + "/" + to_string(cls));

    ArchitectureSpec arch = cfg.architecture;
    TrainConfig tc = cfg.train;
    fs::create_directories(out / "models");
    fs::create_directories(out / "logs");
    for (int i = 0; i < n; ++i) {
        ArchitectureSpec spec = arch;
        spec.topology = topology_of(cls);
        TrainConfig itc = tc;
        itc.lambda = lambda_of(cls, cfg.sparse_lambda);
        itc.seed = base_seed + static_cast<std::uint64_t>(i);
        const std::string stem =
            size->name + "_" + to_string(cls) + "_" + std::to_string(i);
        std::ofstream log(out / "logs" / ("train_" + stem + ".csv"));
        log << "epoch,loss_mse,loss_l1,sparsity\n";
        Checkpoint ck = train_model(spec, ds, itc, &log);
        ck.model_class = to_string(cls);
        ck.save(out / "models" / (stem + ".ckpt.json"));
        std::cout << stem << ": final mse " << ck.history.back().mse
                  << ", sparsity " << ck.history.back().sparsity << "\n";
    }
    return 0;
}

int cmd_forecast(const std::string& ckpt_file,
                 const std::string& traj_file, long horizon,
                 const std::string& out_file) {
    const Checkpoint ck = Checkpoint::load(ckpt_file);
    const Trajectory truth = load_trajectory(traj_file);
    const long n = horizon > 0 ? std::min(horizon, truth.steps()) : truth.steps();
    const Forecast fc = rolling_forecast(
        checkpoint_model(ck), truth.states.front(),
        std::span<const InputVec>(truth.inputs.data(), truth.inputs.size()), n,
        truth.h);

    std::string csv = "step";
    for (int i = 1; i <= kStateDim; ++i) csv += ",x" + std::to_string(i) + "_hat";
    for (int i = 1; i <= kStateDim; ++i) csv += ",x" + std::to_string(i);
    csv += '\n';
    for (long j = 0; j < static_cast<long>(fc.states.size()); ++j) {
        csv += std::to_string(j);
        for (int i = 0; i < kStateDim; ++i)
            csv += ',' + format_double(fc.states[static_cast<std::size_t>(j)][i]);
        for (int i = 0; i < kStateDim; ++i)
            csv += ',' +
                   format_double(truth.states[static_cast<std::size_t>(j)][i]);
        csv += '\n';
    }
    write_file_atomic(out_file, csv);
    if (fc.divergence_step)
        std::cout << "forecast diverged at step " << *fc.divergence_step << "\n";
    std::cout << "wrote " << out_file << " (" << fc.states.size()
              << " states)\n";
    return 0;
}

int cmd_evaluate(const GlobalOpts& g, const std::vector<std::string>& ckpts) {
    ExperimentConfig cfg = load_config(g);
    const fs::path out(g.out);
    Corpus corpus = load_corpus(out / "corpus");

    std::vector<std::string> files = ckpts;
    if (files.empty()) {
        for (const auto& e : fs::directory_iterator(out / "models"))
            if (e.path().extension() == ".json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
    }
    if (files.empty()) throw ConfigError("no checkpoints to evaluate");

    fs::create_directories(out / "metrics");
    for (const auto& f : files) {
        const Checkpoint ck = Checkpoint::load(f);
        const auto metrics = evaluate_model(
            ck, corpus.test,
            std::span<const long>(cfg.horizons.data(), cfg.horizons.size()));
        long blowups = 0;
        for (const auto& tm : metrics)
            for (const auto& hm : tm.horizons)
                if (hm.blowup) ++blowups;
        std::cout << fs::path(f).filename().string() << ": " << metrics.size()
                  << " trajectories, " << blowups << " blow-up flags\n";
    }
    return 0;
}

int cmd_experiment(const GlobalOpts& g) {
    ExperimentConfig cfg = load_config(g);
    const ResultsTable table = run_experiment(cfg, g.out);
    std::cout << "experiment complete: " << table.rows.size() << " rows in "
              << (fs::path(g.out) / "results_raw.csv").string() << "\n";
    return 0;
}

int cmd_report(const GlobalOpts& g) {
    const fs::path dir(g.out);
    const ResultsTable table =
        ResultsTable::from_csv(read_file(dir / "results_raw.csv"));
    write_report(table, dir);
    std::cout << "report written to " << dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"aluminum electrolysis cell system-identification workbench"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config, "experiment JSON config")
        ->envname("ALUCELL_CONFIG");
    std::uint64_t seed_opt = 0;
    auto* seed_flag =
        app.add_option("--seed", seed_opt, "override the master seed");
    app.add_option("--out", g.out, "artifact directory (default: out)");
    int workers_opt = 0;
    auto* workers_flag =
        app.add_option("--workers", workers_opt, "worker thread count");

    auto* sim = app.add_subcommand("simulate", "single plant rollout to a file");
    long sim_steps = 0;
    std::string sim_out = "trajectory.traj";
    sim->add_option("--steps", sim_steps, "steps (default: corpus steps)");
    sim->add_option("--traj-out", sim_out, "output .traj file");

    auto* gen = app.add_subcommand("generate", "corpus + datasets");

    auto* tr = app.add_subcommand("train", "train one model class ensemble");
    std::string tr_class, tr_size;
    int tr_instances = 0;
    tr->add_option("--class", tr_class, "model class")->required();
    tr->add_option("--size", tr_size, "dataset size name (default: first)");
    tr->add_option("--instances", tr_instances, "instance count override");

    auto* fc = app.add_subcommand("forecast", "one model on one trajectory");
    std::string fc_ckpt, fc_traj, fc_out = "forecast.csv";
    long fc_horizon = 0;
    fc->add_option("--checkpoint", fc_ckpt, "checkpoint file")->required();
    fc->add_option("--trajectory", fc_traj, ".traj file")->required();
    fc->add_option("--horizon", fc_horizon, "steps (default: full)");
    fc->add_option("--csv-out", fc_out, "output CSV");

    auto* ev = app.add_subcommand("evaluate", "metrics for checkpoints");
    std::vector<std::string> ev_ckpts;
    ev->add_option("--checkpoints", ev_ckpts, "checkpoint files");

    auto* ex = app.add_subcommand("experiment", "full Monte Carlo study");
    auto* rp = app.add_subcommand("report", "summaries from results_raw.csv");

    CLI11_PARSE(app, argc, argv);
    if (seed_flag->count() > 0) g.seed = seed_opt;
    if (workers_flag->count() > 0) g.workers = workers_opt;

    try {
        if (sim->parsed()) return cmd_simulate(g, sim_steps, sim_out);
        if (gen->parsed()) return cmd_generate(g);
        if (tr->parsed()) return cmd_train(g, tr_class, tr_size, tr_instances);
        if (fc->parsed())
            return cmd_forecast(fc_ckpt, fc_traj, fc_horizon, fc_out);
        if (ev->parsed()) return cmd_evaluate(g, ev_ckpts);
        if (ex->parsed()) return cmd_experiment(g);
        if (rp->parsed()) return cmd_report(g);
    } catch (const std::exception& e) {
        nlohmann::json err;
        err["error"] = {{"type", typeid(e).name()}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 2;
}
