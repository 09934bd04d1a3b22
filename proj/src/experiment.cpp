#include "alucell/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "alucell/errors.hpp"
#include "alucell/io.hpp"
#include "alucell/rng.hpp"

namespace alucell {

namespace {

using nlohmann::json;

constexpr const char* kRawHeader =
    "model_class,seed,dataset_size,trajectory_id,horizon,an_rfmse,blowup,"
    "divergence_step";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["plant_params"] = json::parse(c.plant.to_json_text());
    j["controller"] = {{"setpoints", c.controller.setpoints},
                       {"nominal", c.controller.nominal},
                       {"gain", c.controller.gain},
                       {"tracked", c.controller.tracked},
                       {"bounds_lo", c.controller.lo},
                       {"bounds_hi", c.controller.hi}};
    j["aprbs"] = {{"amplitude_lo", c.aprbs.amplitude_lo},
                  {"amplitude_hi", c.aprbs.amplitude_hi},
                  {"hold_min", c.aprbs.hold_min},
                  {"hold_max", c.aprbs.hold_max}};
    j["init_box"] = {{"lo", c.init_box.lo}, {"hi", c.init_box.hi}};
    j["corpus"] = {{"n_train", c.corpus.n_train},
                   {"n_test", c.corpus.n_test},
                   {"steps", c.corpus.steps},
                   {"h", c.corpus.h}};
    json sizes = json::array();
    for (const auto& s : c.sizes)
        sizes.push_back({{"name", s.name}, {"trajectories", s.trajectories}});
    j["dataset_sizes"] = sizes;
    json classes = json::array();
    for (ModelClass mc : c.classes) classes.push_back(to_string(mc));
    j["classes"] = classes;
    j["instances"] = c.instances;
    j["horizons"] = c.horizons;
    j["train"] = {{"batch_size", c.train.batch_size},
                  {"epochs", c.train.epochs},
                  {"learning_rate", c.train.learning_rate},
                  {"beta1", c.train.beta1},
                  {"beta2", c.train.beta2},
                  {"epsilon", c.train.epsilon}};
    j["sparse_lambda"] = c.sparse_lambda;
    j["architecture"] = {{"hidden_layers", c.architecture.hidden_layers},
                         {"hidden_width", c.architecture.hidden_width},
                         {"activation", to_string(c.architecture.activation)}};
    j["master_seed"] = c.master_seed;
    j["workers"] = c.workers;
    return j;
}

std::uint64_t config_hash(const ExperimentConfig& c) {
    // The worker count affects scheduling only, never results.
    json j = config_to_json(c);
    j.erase("workers");
    return fnv1a64(j.dump());
}

template <std::size_t N>
std::array<double, N> array_from(const json& j, const char* key) {
    auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != N)
        throw ConfigError(std::string("config: ") + key + " must have " +
                          std::to_string(N) + " entries");
    std::array<double, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(
    const std::string& text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }

    ExperimentConfig c;
    try {
        const auto& plant = j.at("plant_params");
        if (plant.is_string()) {
            std::filesystem::path p = plant.get<std::string>();
            if (p.is_relative()) p = base_dir / p;
            c.plant = PlantParams::load(p);
        } else {
            c.plant = PlantParams::from_json_text(plant.dump());
        }

        if (j.contains("controller")) {
            const auto& ctl = j.at("controller");
            c.controller.setpoints = array_from<8>(ctl, "setpoints");
            c.controller.nominal = array_from<kInputDim>(ctl, "nominal");
            c.controller.gain = array_from<kInputDim>(ctl, "gain");
            auto tracked = ctl.at("tracked").get<std::vector<int>>();
            if (tracked.size() != kInputDim)
                throw ConfigError("config: controller.tracked needs 5 entries");
            std::copy(tracked.begin(), tracked.end(), c.controller.tracked.begin());
            c.controller.lo = array_from<kInputDim>(ctl, "bounds_lo");
            c.controller.hi = array_from<kInputDim>(ctl, "bounds_hi");
        }
        if (j.contains("aprbs")) {
            const auto& ap = j.at("aprbs");
            c.aprbs.amplitude_lo = array_from<kInputDim>(ap, "amplitude_lo");
            c.aprbs.amplitude_hi = array_from<kInputDim>(ap, "amplitude_hi");
            c.aprbs.hold_min = ap.at("hold_min").get<long>();
            c.aprbs.hold_max = ap.at("hold_max").get<long>();
        }
        if (j.contains("init_box")) {
            c.init_box.lo = array_from<8>(j.at("init_box"), "lo");
            c.init_box.hi = array_from<8>(j.at("init_box"), "hi");
        }

        const auto& corpus = j.at("corpus");
        c.corpus.n_train = corpus.at("n_train").get<long>();
        c.corpus.n_test = corpus.at("n_test").get<long>();
        c.corpus.steps = corpus.at("steps").get<long>();
        c.corpus.h = corpus.at("h").get<double>();

        c.sizes.clear();
        for (const auto& s : j.at("dataset_sizes"))
            c.sizes.push_back({s.at("name").get<std::string>(),
                               s.at("trajectories").get<long>()});

        if (j.contains("classes")) {
            c.classes.clear();
            for (const auto& s : j.at("classes"))
                c.classes.push_back(model_class_from_string(s.get<std::string>()));
        }
        c.instances = j.at("instances").get<int>();
        c.horizons = j.at("horizons").get<std::vector<long>>();

        if (j.contains("train")) {
            const auto& t = j.at("train");
            c.train.batch_size = t.value("batch_size", c.train.batch_size);
            c.train.epochs = t.value("epochs", c.train.epochs);
            c.train.learning_rate =
                t.value("learning_rate", c.train.learning_rate);
            c.train.beta1 = t.value("beta1", c.train.beta1);
            c.train.beta2 = t.value("beta2", c.train.beta2);
            c.train.epsilon = t.value("epsilon", c.train.epsilon);
        }
        c.sparse_lambda = j.value("sparse_lambda", 1e-4);
        if (j.contains("architecture")) {
            const auto& a = j.at("architecture");
            c.architecture.hidden_layers =
                a.value("hidden_layers", c.architecture.hidden_layers);
            c.architecture.hidden_width =
                a.value("hidden_width", c.architecture.hidden_width);
            if (a.contains("activation"))
                c.architecture.activation =
                    activation_from_string(a.at("activation").get<std::string>());
        }
        c.master_seed = j.at("master_seed").get<std::uint64_t>();
        c.workers = j.value("workers", 1);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& file) {
    return from_json_text(read_file(file), file.parent_path());
}

void ExperimentConfig::validate() const {
    plant.validate();
    controller.validate();
    aprbs.validate();
    init_box.validate();
    corpus.validate();
    train.validate();
    architecture.validate();
    if (sizes.empty()) throw ConfigError("config: no dataset sizes");
    long prev = 0;
    for (const auto& s : sizes) {
        if (s.name.empty() ||
            !std::all_of(s.name.begin(), s.name.end(), [](unsigned char ch) {
                return std::isalnum(ch) != 0;
            }))
            throw ConfigError("config: dataset size names must be alphanumeric");
        if (s.trajectories <= prev)
            throw ConfigError(
                "config: dataset sizes must be strictly ascending nested "
                "prefixes");
        prev = s.trajectories;
    }
    if (prev > corpus.n_train)
        throw ConfigError("config: largest dataset exceeds the training corpus");
    if (classes.empty()) throw ConfigError("config: no model classes");
    if (instances < 1) throw ConfigError("config: instances must be >= 1");
    if (horizons.empty()) throw ConfigError("config: no horizons");
    long hprev = 0;
    for (long h : horizons) {
        if (h <= hprev)
            throw ConfigError("config: horizons must be ascending and positive");
        hprev = h;
    }
    if (hprev > corpus.steps)
        throw ConfigError("config: largest horizon exceeds trajectory length");
    if (workers < 1) throw ConfigError("config: workers must be >= 1");
    if (sparse_lambda < 0.0) throw ConfigError("config: sparse_lambda < 0");
}

// ------------------------------------------------------------------- table

std::string ResultsTable::to_csv() const {
    std::string out = kRawHeader;
    out += '\n';
    for (const ResultRow& r : rows) {
        out += r.model_class;
        out += ',';
        out += std::to_string(r.seed);
        out += ',';
        out += r.dataset_size;
        out += ',';
        out += std::to_string(r.trajectory_id);
        out += ',';
        out += std::to_string(r.horizon);
        out += ',';
        if (r.an_rfmse) out += format_double(*r.an_rfmse);
        out += ',';
        out += r.blowup ? '1' : '0';
        out += ',';
        if (r.divergence_step) out += std::to_string(*r.divergence_step);
        out += '\n';
    }
    return out;
}

ResultsTable ResultsTable::from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kRawHeader)
        throw IoError("results csv: bad or missing header");
    ResultsTable table;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 8) throw IoError("results csv: malformed row: " + line);
        ResultRow r;
        r.model_class = f[0];
        r.seed = std::stoull(f[1]);
        r.dataset_size = f[2];
        r.trajectory_id = static_cast<std::uint32_t>(std::stoul(f[3]));
        r.horizon = std::stol(f[4]);
        if (!f[5].empty()) r.an_rfmse = std::stod(f[5]);
        r.blowup = f[6] == "1";
        if (!f[7].empty()) r.divergence_step = std::stol(f[7]);
        table.rows.push_back(std::move(r));
    }
    return table;
}

// ---------------------------------------------------------------- summaries

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw UsageError("quantile of empty sample");
    if (q <= 0.0) return sorted.front();
    if (q >= 1.0) return sorted.back();
    const double h = static_cast<double>(sorted.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

// Deterministic cell ordering: first-seen order of (size, class), horizons
// ascending within.
struct CellKey {
    std::string size, cls;
    long horizon;
    bool operator<(const CellKey& o) const {
        return std::tie(size, cls, horizon) < std::tie(o.size, o.cls, o.horizon);
    }
};

}  // namespace

std::vector<BlowupCount> blowup_summary(const ResultsTable& table) {
    std::map<CellKey, BlowupCount> cells;
    std::vector<CellKey> order;
    for (const ResultRow& r : table.rows) {
        const CellKey key{r.dataset_size, r.model_class, r.horizon};
        auto [it, fresh] = cells.try_emplace(key);
        if (fresh) {
            it->second = {r.dataset_size, r.model_class, r.horizon, 0, 0};
            order.push_back(key);
        }
        it->second.denominator += 1;
        if (r.blowup) it->second.count += 1;
    }
    std::vector<BlowupCount> out;
    out.reserve(order.size());
    for (const CellKey& key : order) out.push_back(cells.at(key));
    return out;
}

std::vector<AccuracyCell> accuracy_summary(const ResultsTable& table) {
    std::map<CellKey, std::vector<double>> values;
    std::vector<CellKey> order;
    for (const ResultRow& r : table.rows) {
        const CellKey key{r.dataset_size, r.model_class, r.horizon};
        auto [it, fresh] = values.try_emplace(key);
        if (fresh) order.push_back(key);
        if (!r.blowup && r.an_rfmse) it->second.push_back(*r.an_rfmse);
    }
    std::vector<AccuracyCell> out;
    for (const CellKey& key : order) {
        auto& v = values.at(key);
        AccuracyCell cell;
        cell.dataset_size = key.size;
        cell.model_class = key.cls;
        cell.horizon = key.horizon;
        cell.count = static_cast<long>(v.size());
        if (!v.empty()) {
            std::sort(v.begin(), v.end());
            cell.min = v.front();
            cell.q1 = quantile_sorted(v, 0.25);
            cell.median = quantile_sorted(v, 0.5);
            cell.q3 = quantile_sorted(v, 0.75);
            cell.max = v.back();
            double s = 0.0;
            for (double x : v) s += x;
            cell.mean = s / static_cast<double>(v.size());
        }
        out.push_back(cell);
    }
    return out;
}

// ------------------------------------------------------------------ report

void write_report(const ResultsTable& table, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "results_raw.csv", table.to_csv());

    const auto blowups = blowup_summary(table);
    std::string bl = "dataset_size,model_class,horizon,blowups,denominator\n";
    for (const auto& b : blowups) {
        bl += b.dataset_size + ',' + b.model_class + ',' +
              std::to_string(b.horizon) + ',' + std::to_string(b.count) + ',' +
              std::to_string(b.denominator) + '\n';
    }
    write_file_atomic(dir / "blowups.csv", bl);

    const auto accuracy = accuracy_summary(table);
    std::string ac =
        "dataset_size,model_class,horizon,count,min,q1,median,q3,max,mean\n";
    for (const auto& a : accuracy) {
        ac += a.dataset_size + ',' + a.model_class + ',' +
              std::to_string(a.horizon) + ',' + std::to_string(a.count) + ',';
        if (a.count > 0) {
            ac += format_double(a.min) + ',' + format_double(a.q1) + ',' +
                  format_double(a.median) + ',' + format_double(a.q3) + ',' +
                  format_double(a.max) + ',' + format_double(a.mean);
        } else {
            ac += ",,,,,";
        }
        ac += '\n';
    }
    write_file_atomic(dir / "accuracy.csv", ac);

    // Markdown summary: one table per (dataset size, horizon) comparing the
    // model classes.
    std::vector<std::pair<std::string, long>> groups;
    for (const auto& b : blowups) {
        const std::pair<std::string, long> g{b.dataset_size, b.horizon};
        if (std::find(groups.begin(), groups.end(), g) == groups.end())
            groups.push_back(g);
    }
    std::string md = "# Forecast study summary\n";
    for (const auto& [size, horizon] : groups) {
        md += "\n## Dataset `" + size + "`, horizon " + std::to_string(horizon) +
              " steps\n\n";
        md += "| model class | blow-ups | evaluated | median AN-RFMSE | IQR |\n";
        md += "|---|---|---|---|---|\n";
        for (const auto& b : blowups) {
            if (b.dataset_size != size || b.horizon != horizon) continue;
            const AccuracyCell* cell = nullptr;
            for (const auto& a : accuracy) {
                if (a.dataset_size == size && a.horizon == horizon &&
                    a.model_class == b.model_class) {
                    cell = &a;
                    break;
                }
            }
            md += "| " + b.model_class + " | " + std::to_string(b.count) + "/" +
                  std::to_string(b.denominator) + " | ";
            if (cell && cell->count > 0) {
                char buf[96];
                std::snprintf(buf, sizeof buf, "%ld | %.4g | %.4g..%.4g |",
                              cell->count, cell->median, cell->q1, cell->q3);
                md += buf;
            } else {
                md += "0 | (all excluded) | |";
            }
            md += '\n';
        }
    }
    write_file_atomic(dir / "summary.md", md);
}

// -------------------------------------------------------------- experiment

namespace {

std::string cell_stem(const DatasetSizeSpec& size, ModelClass cls,
                      int instance) {
    return size.name + "_" + to_string(cls) + "_" + std::to_string(instance);
}

std::string metrics_to_csv(const std::vector<TrajectoryMetrics>& metrics) {
    std::string out = "trajectory_id,horizon,an_rfmse,blowup,divergence_step\n";
    for (const auto& tm : metrics) {
        for (const auto& hm : tm.horizons) {
            out += std::to_string(tm.trajectory_id) + ',' +
                   std::to_string(hm.horizon) + ',';
            if (hm.an_rfmse) out += format_double(*hm.an_rfmse);
            out += ',';
            out += hm.blowup ? '1' : '0';
            out += ',';
            if (hm.divergence_step) out += std::to_string(*hm.divergence_step);
            out += '\n';
        }
    }
    return out;
}

std::vector<TrajectoryMetrics> metrics_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) ||
        line != "trajectory_id,horizon,an_rfmse,blowup,divergence_step")
        throw IoError("metrics csv: bad header");
    std::vector<TrajectoryMetrics> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 5) throw IoError("metrics csv: malformed row");
        const auto id = static_cast<std::uint32_t>(std::stoul(f[0]));
        if (out.empty() || out.back().trajectory_id != id) {
            out.push_back({id, {}});
        }
        HorizonMetrics hm;
        hm.horizon = std::stol(f[1]);
        if (!f[2].empty()) hm.an_rfmse = std::stod(f[2]);
        hm.blowup = f[3] == "1";
        if (!f[4].empty()) hm.divergence_step = std::stol(f[4]);
        out.back().horizons.push_back(hm);
    }
    return out;
}

}  // namespace

ResultsTable run_experiment(const ExperimentConfig& cfg,
                            const std::filesystem::path& out_dir) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    std::filesystem::create_directories(out_dir / "models");
    std::filesystem::create_directories(out_dir / "metrics");
    std::filesystem::create_directories(out_dir / "logs");

    // Guard against resuming into a directory produced by a different setup.
    const std::uint64_t hash = config_hash(cfg);
    const auto manifest_path = out_dir / "run_manifest.json";
    if (std::filesystem::exists(manifest_path)) {
        json m = json::parse(read_file(manifest_path));
        if (m.value("config_hash", std::uint64_t{0}) != hash)
            throw ConfigError(
                "output directory belongs to a different configuration: " +
                out_dir.string());
    } else {
        json m;
        m["config_hash"] = hash;
        m["config"] = config_to_json(cfg);
        write_file_atomic(manifest_path, m.dump(2) + "\n");
    }

    // Stage 1: corpus (load when already on disk).
    const auto corpus_dir = out_dir / "corpus";
    Corpus corpus;
    if (std::filesystem::exists(corpus_dir / "manifest.json")) {
        corpus = load_corpus(corpus_dir);
        if (static_cast<long>(corpus.train.size()) != cfg.corpus.n_train ||
            static_cast<long>(corpus.test.size()) != cfg.corpus.n_test)
            throw ConfigError("stored corpus does not match configuration");
    } else {
        corpus = build_corpus(cfg.corpus, cfg.controller, cfg.aprbs,
                              cfg.init_box, cfg.plant, cfg.master_seed,
                              cfg.workers);
        save_corpus(corpus, corpus_dir, cfg.master_seed);
    }

    // Stage 2: nested datasets.
    std::filesystem::create_directories(out_dir / "datasets");
    std::vector<Dataset> datasets;
    for (const auto& size : cfg.sizes) {
        const auto stem = out_dir / "datasets" / ("dataset_" + size.name);
        bool loaded = false;
        if (std::filesystem::exists(stem.string() + ".json")) {
            try {
                datasets.push_back(load_dataset(stem));
                loaded = true;
            } catch (const IoError&) {
                loaded = false;  // rebuild a partially written dataset
            }
        }
        if (!loaded) {
            datasets.push_back(build_dataset(size.name, corpus.train,
                                             size.trajectories,
                                             cfg.master_seed));
            save_dataset(datasets.back(), stem);
        }
    }

    // Stage 3+4: train and evaluate each (size, class, instance) cell.
    struct Cell {
        std::size_t size_idx;
        std::size_t class_idx;
        int instance;
    };
    std::vector<Cell> cells;
    for (std::size_t s = 0; s < cfg.sizes.size(); ++s)
        for (std::size_t c = 0; c < cfg.classes.size(); ++c)
            for (int i = 0; i < cfg.instances; ++i) cells.push_back({s, c, i});

    std::vector<std::vector<TrajectoryMetrics>> cell_metrics(cells.size());
    std::vector<std::string> cell_errors(cells.size());

    std::atomic<std::size_t> cursor{0};
    auto work = [&] {
        for (;;) {
            const std::size_t idx = cursor.fetch_add(1);
            if (idx >= cells.size()) return;
            const Cell& cell = cells[idx];
            const DatasetSizeSpec& size = cfg.sizes[cell.size_idx];
            const ModelClass cls = cfg.classes[cell.class_idx];
            const std::string stem = cell_stem(size, cls, cell.instance);
            try {
                const auto ckpt_path =
                    out_dir / "models" / (stem + ".ckpt.json");
                const auto metrics_path = out_dir / "metrics" / (stem + ".csv");
                const std::uint64_t seed =
                    derive_seed(cfg.master_seed,
                                "train/" + size.name + "/" + to_string(cls)) +
                    static_cast<std::uint64_t>(cell.instance);

                if (std::filesystem::exists(metrics_path)) {
                    try {
                        cell_metrics[idx] =
                            metrics_from_csv(read_file(metrics_path));
                        continue;
                    } catch (const IoError&) {
                        // fall through and recompute
                    }
                }

                Checkpoint ck;
                bool have_ck = false;
                if (std::filesystem::exists(ckpt_path)) {
                    try {
                        ck = Checkpoint::load(ckpt_path);
                        have_ck = ck.seed == seed;
                    } catch (const IoError&) {
                        have_ck = false;
                    }
                }
                if (!have_ck) {
                    ArchitectureSpec spec = cfg.architecture;
                    spec.topology = topology_of(cls);
                    TrainConfig tc = cfg.train;
                    tc.lambda = lambda_of(cls, cfg.sparse_lambda);
                    tc.seed = seed;
                    std::ofstream log(out_dir / "logs" /
                                      ("train_" + stem + ".csv"));
                    log << "epoch,loss_mse,loss_l1,sparsity\n";
                    ck = train_model(spec, datasets[cell.size_idx], tc, &log);
                    ck.model_class = to_string(cls);
                    ck.save(ckpt_path);
                }

                cell_metrics[idx] = evaluate_model(
                    ck, corpus.test,
                    std::span<const long>(cfg.horizons.data(),
                                          cfg.horizons.size()));
                write_file_atomic(metrics_path,
                                  metrics_to_csv(cell_metrics[idx]));
            } catch (const std::exception& e) {
                cell_errors[idx] = e.what();
            }
        }
    };

    const int n_workers = std::clamp<int>(
        cfg.workers, 1, static_cast<int>(std::max<std::size_t>(cells.size(), 1)));
    if (n_workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    // Record failures; keep going with whatever completed.
    std::string errors;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cell_errors[i].empty()) continue;
        const Cell& cell = cells[i];
        errors += cell_stem(cfg.sizes[cell.size_idx],
                            cfg.classes[cell.class_idx], cell.instance) +
                  ": " + cell_errors[i] + '\n';
    }
    if (!errors.empty()) write_file_atomic(out_dir / "errors.log", errors);

    // Deterministic merge, independent of completion order.
    ResultsTable table;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!cell_errors[i].empty()) continue;
        const Cell& cell = cells[i];
        const DatasetSizeSpec& size = cfg.sizes[cell.size_idx];
        const ModelClass cls = cfg.classes[cell.class_idx];
        const std::uint64_t seed =
            derive_seed(cfg.master_seed,
                        "train/" + size.name + "/" + to_string(cls)) +
            static_cast<std::uint64_t>(cell.instance);
        for (const auto& tm : cell_metrics[i]) {
            for (const auto& hm : tm.horizons) {
                ResultRow r;
                r.dataset_size = size.name;
                r.model_class = to_string(cls);
                r.seed = seed;
                r.trajectory_id = tm.trajectory_id;
                r.horizon = hm.horizon;
                r.an_rfmse = hm.an_rfmse;
                r.blowup = hm.blowup;
                r.divergence_step = hm.divergence_step;
                table.rows.push_back(std::move(r));
            }
        }
    }

    write_report(table, out_dir);
    return table;
}

}  // namespace alucell
