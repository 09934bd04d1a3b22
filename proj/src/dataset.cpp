#include "alucell/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "alucell/errors.hpp"
#include "alucell/io.hpp"

namespace alucell {

namespace {

using nlohmann::json;

constexpr char kTrajMagic[9] = "ALUTRAJ1";
constexpr char kDataMagic[9] = "ALUDSET1";

std::string index_name(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03zu", i);
    return buf;
}

}  // namespace

InitBox InitBox::defaults() {
    InitBox b;
    b.lo = {2060.0, 0.02, 0.09, 11500.0, 9550.0, 940.0, 790.0, 555.0};
    b.hi = {4460.0, 0.05, 0.13, 16000.0, 10600.0, 990.0, 850.0, 610.0};
    return b;
}

void InitBox::validate() const {
    for (int i = 0; i < 8; ++i) {
        if (!(lo[i] <= hi[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i]))
            throw ConfigError("init box: bad interval on coordinate " +
                              std::to_string(i));
    }
    if (!(lo[1] + lo[2] < 1.0) || !(hi[1] + hi[2] < 1.0))
        throw ConfigError("init box: mass ratios must satisfy c2 + c3 < 1");
}

CellState sample_initial_state(const InitBox& box, Rng& rng) {
    std::array<double, 8> c{};
    for (int i = 0; i < 8; ++i) c[i] = rng.uniform(box.lo[i], box.hi[i]);
    const double c2 = c[1];
    const double c3 = c[2];
    const double total = c[3] / (1.0 - c2 - c3);

    CellState x;
    x.side_ledge_mass = c[0];
    x.alumina_mass = c2 * total;
    x.fluoride_mass = c3 * total;
    x.cryolite_mass = c[3];
    x.metal_mass = c[4];
    x.bath_temp = c[5];
    x.ledge_temp = c[6];
    x.wall_temp = c[7];
    return x;
}

void CorpusConfig::validate() const {
    if (n_train < 0 || n_test < 0 || n_train + n_test < 1)
        throw ConfigError("corpus: need at least one trajectory");
    if (steps < 1) throw ConfigError("corpus: steps must be >= 1");
    if (!(h > 0.0)) throw ConfigError("corpus: h must be positive");
}

namespace {

Trajectory make_trajectory(std::uint64_t traj_seed, std::uint32_t id,
                           const CorpusConfig& cfg,
                           const ControllerConfig& ctrl,
                           const AprbsConfig& aprbs_base, const InitBox& box,
                           const PlantParams& plant) {
    Rng init_rng(derive_seed(traj_seed, "init"));
    const CellState x0 = sample_initial_state(box, init_rng);

    AprbsConfig aprbs = aprbs_base;
    aprbs.seed = derive_seed(traj_seed, "aprbs");
    const AprbsSignal signal = aprbs_signal(aprbs, cfg.steps);

    const InputPolicy policy = [&](const CellState& x, long step) {
        return stochastic_policy(x, step, ctrl, signal);
    };

    Trajectory traj;
    try {
        traj = simulate(x0, policy, cfg.steps, cfg.h, plant);
    } catch (const SimulationError& e) {
        throw SimulationError("corpus trajectory with seed " +
                                  std::to_string(traj_seed) + " aborted: " +
                                  e.what(),
                              e.step, e.component);
    }
    traj.seed = traj_seed;
    traj.id = id;
    return traj;
}

}  // namespace

Corpus build_corpus(const CorpusConfig& cfg, const ControllerConfig& ctrl,
                    const AprbsConfig& aprbs, const InitBox& box,
                    const PlantParams& plant, std::uint64_t master_seed,
                    int workers) {
    cfg.validate();
    ctrl.validate();
    aprbs.validate();
    box.validate();
    plant.validate();

    const long total = cfg.n_train + cfg.n_test;
    Corpus corpus;
    corpus.train.resize(static_cast<std::size_t>(cfg.n_train));
    corpus.test.resize(static_cast<std::size_t>(cfg.n_test));

    std::atomic<long> cursor{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&] {
        for (;;) {
            const long i = cursor.fetch_add(1);
            if (i >= total) return;
            try {
                const bool is_train = i < cfg.n_train;
                const char* split = is_train ? "corpus.train" : "corpus.test";
                const std::uint64_t idx =
                    static_cast<std::uint64_t>(is_train ? i : i - cfg.n_train);
                const std::uint64_t seed = derive_seed(master_seed, split, idx);
                Trajectory t = make_trajectory(
                    seed, static_cast<std::uint32_t>(i), cfg, ctrl, aprbs, box,
                    plant);
                if (is_train)
                    corpus.train[static_cast<std::size_t>(i)] = std::move(t);
                else
                    corpus.test[static_cast<std::size_t>(i - cfg.n_train)] =
                        std::move(t);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const int n_workers =
        static_cast<int>(std::clamp<long>(workers, 1, total));
    if (n_workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return corpus;
}

std::vector<RegressionPair> to_pairs(const Trajectory& traj) {
    if (traj.steps() < 1) throw UsageError("to_pairs: trajectory has no steps");
    std::vector<RegressionPair> pairs(static_cast<std::size_t>(traj.steps()));
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        RegressionPair& p = pairs[k];
        for (int i = 0; i < kStateDim; ++i) {
            p.z[i] = traj.states[k][i];
            p.y[i] = (traj.states[k + 1][i] - traj.states[k][i]) / traj.h;
        }
        for (int i = 0; i < kInputDim; ++i)
            p.z[kStateDim + i] = traj.inputs[k][i];
    }
    return pairs;
}

namespace {

template <std::size_t N>
void fit_dims(const std::vector<RegressionPair>& pairs,
              const double* (*get)(const RegressionPair&),
              std::array<double, N>& mean, std::array<double, N>& stdev,
              std::array<bool, N>& constant) {
    const double n = static_cast<double>(pairs.size());
    mean.fill(0.0);
    for (const auto& p : pairs) {
        const double* v = get(p);
        for (std::size_t i = 0; i < N; ++i) mean[i] += v[i];
    }
    for (std::size_t i = 0; i < N; ++i) mean[i] /= n;
    stdev.fill(0.0);
    for (const auto& p : pairs) {
        const double* v = get(p);
        for (std::size_t i = 0; i < N; ++i) {
            const double d = v[i] - mean[i];
            stdev[i] += d * d;
        }
    }
    for (std::size_t i = 0; i < N; ++i) {
        stdev[i] = std::sqrt(stdev[i] / n);  // population std
        constant[i] = !(stdev[i] > 0.0);
        if (constant[i]) stdev[i] = 1.0;
    }
}

}  // namespace

Normalizer fit_normalizer(const std::vector<RegressionPair>& pairs) {
    if (pairs.size() < 2)
        throw UsageError("fit_normalizer: need at least two pairs");
    Normalizer nm;
    fit_dims<kFeatureDim>(
        pairs, +[](const RegressionPair& p) { return p.z.data(); }, nm.z_mean,
        nm.z_std, nm.z_constant);
    fit_dims<kStateDim>(
        pairs, +[](const RegressionPair& p) { return p.y.data(); }, nm.y_mean,
        nm.y_std, nm.y_constant);
    return nm;
}

std::array<double, kStateDim> Normalizer::state_stds() const {
    std::array<double, kStateDim> s{};
    for (int i = 0; i < kStateDim; ++i) s[i] = z_std[i];
    return s;
}

Dataset build_dataset(const std::string& name,
                      const std::vector<Trajectory>& train, long n_trajectories,
                      std::uint64_t master_seed) {
    if (n_trajectories < 1 ||
        n_trajectories > static_cast<long>(train.size()))
        throw ConfigError("dataset " + name + ": needs " +
                          std::to_string(n_trajectories) +
                          " training trajectories, corpus has " +
                          std::to_string(train.size()));
    Dataset ds;
    ds.name = name;
    ds.master_seed = master_seed;
    ds.h = train.front().h;
    for (long i = 0; i < n_trajectories; ++i) {
        const Trajectory& t = train[static_cast<std::size_t>(i)];
        ds.source_trajectory_ids.push_back(t.id);
        ds.source_trajectory_seeds.push_back(t.seed);
        auto pairs = to_pairs(t);
        ds.pairs.insert(ds.pairs.end(), pairs.begin(), pairs.end());
    }
    ds.norm = fit_normalizer(ds.pairs);
    return ds;
}

// --------------------------------------------------------------- trajectory

void save_trajectory(const Trajectory& traj, const std::filesystem::path& file) {
    if (!traj.consistent())
        throw IoError("refusing to save inconsistent trajectory");
    BinaryWriter w;
    w.magic(kTrajMagic);
    w.u32(1);  // format version
    w.u32(traj.id);
    w.u64(traj.seed);
    w.u64(static_cast<std::uint64_t>(traj.steps()));
    w.f64(traj.h);
    std::vector<double> flat;
    flat.reserve(traj.states.size() * kStateDim +
                 traj.inputs.size() * kInputDim);
    for (const auto& s : traj.states) flat.insert(flat.end(), s.begin(), s.end());
    for (const auto& u : traj.inputs) flat.insert(flat.end(), u.begin(), u.end());
    w.f64_span(flat);
    w.u64(checksum_doubles(flat));
    write_file_atomic(file, w.bytes());
}

Trajectory load_trajectory(const std::filesystem::path& file) {
    BinaryReader r(read_file(file));
    r.expect_magic(kTrajMagic, file.string());
    const std::uint32_t version = r.u32();
    if (version != 1)
        throw IoError("unsupported trajectory version in " + file.string());
    Trajectory traj;
    traj.id = r.u32();
    traj.seed = r.u64();
    const auto steps = static_cast<long>(r.u64());
    traj.h = r.f64();
    if (steps < 1) throw IoError("corrupt step count in " + file.string());

    std::vector<double> flat(static_cast<std::size_t>(steps + 1) * kStateDim +
                             static_cast<std::size_t>(steps) * kInputDim);
    r.f64_span(flat);
    const std::uint64_t expect = r.u64();
    if (!r.at_end()) throw IoError("trailing bytes in " + file.string());
    if (checksum_doubles(flat) != expect)
        throw IoError("checksum mismatch in " + file.string());

    traj.states.resize(static_cast<std::size_t>(steps + 1));
    traj.inputs.resize(static_cast<std::size_t>(steps));
    std::size_t off = 0;
    for (auto& s : traj.states)
        for (double& v : s) v = flat[off++];
    for (auto& u : traj.inputs)
        for (double& v : u) v = flat[off++];
    if (!traj.consistent())
        throw IoError("loaded trajectory is inconsistent: " + file.string());
    return traj;
}

// ------------------------------------------------------------------ dataset

void save_dataset(const Dataset& ds, const std::filesystem::path& stem) {
    BinaryWriter w;
    w.magic(kDataMagic);
    w.u32(1);
    w.u64(ds.pairs.size());
    std::vector<double> flat;
    flat.reserve(ds.pairs.size() * (kFeatureDim + kStateDim));
    for (const auto& p : ds.pairs) flat.insert(flat.end(), p.z.begin(), p.z.end());
    for (const auto& p : ds.pairs) flat.insert(flat.end(), p.y.begin(), p.y.end());
    w.f64_span(flat);
    const std::uint64_t sum = checksum_doubles(flat);
    w.u64(sum);
    write_file_atomic(std::filesystem::path(stem.string() + ".bin"), w.bytes());

    json j;
    j["version"] = 1;
    j["name"] = ds.name;
    j["pair_count"] = ds.pairs.size();
    j["source_trajectory_ids"] = ds.source_trajectory_ids;
    j["source_trajectory_seeds"] = ds.source_trajectory_seeds;
    j["h"] = ds.h;
    j["master_seed"] = ds.master_seed;
    j["checksum"] = sum;
    j["z_mean"] = ds.norm.z_mean;
    j["z_std"] = ds.norm.z_std;
    j["y_mean"] = ds.norm.y_mean;
    j["y_std"] = ds.norm.y_std;
    j["z_constant"] = ds.norm.z_constant;
    j["y_constant"] = ds.norm.y_constant;
    write_file_atomic(std::filesystem::path(stem.string() + ".json"),
                      j.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& stem) {
    const auto json_path = std::filesystem::path(stem.string() + ".json");
    json j;
    try {
        j = json::parse(read_file(json_path));
    } catch (const json::exception& e) {
        throw IoError("bad dataset manifest " + json_path.string() + ": " +
                      e.what());
    }
    if (j.value("version", 0) != 1)
        throw IoError("unsupported dataset version in " + json_path.string());

    Dataset ds;
    try {
        ds.name = j.at("name").get<std::string>();
        ds.source_trajectory_ids =
            j.at("source_trajectory_ids").get<std::vector<std::uint32_t>>();
        ds.source_trajectory_seeds =
            j.at("source_trajectory_seeds").get<std::vector<std::uint64_t>>();
        ds.h = j.at("h").get<double>();
        ds.master_seed = j.at("master_seed").get<std::uint64_t>();
        ds.norm.z_mean = j.at("z_mean").get<std::array<double, kFeatureDim>>();
        ds.norm.z_std = j.at("z_std").get<std::array<double, kFeatureDim>>();
        ds.norm.y_mean = j.at("y_mean").get<std::array<double, kStateDim>>();
        ds.norm.y_std = j.at("y_std").get<std::array<double, kStateDim>>();
        ds.norm.z_constant =
            j.at("z_constant").get<std::array<bool, kFeatureDim>>();
        ds.norm.y_constant =
            j.at("y_constant").get<std::array<bool, kStateDim>>();
    } catch (const json::exception& e) {
        throw IoError("bad dataset manifest " + json_path.string() + ": " +
                      e.what());
    }

    BinaryReader r(read_file(std::filesystem::path(stem.string() + ".bin")));
    r.expect_magic(kDataMagic, stem.string() + ".bin");
    if (r.u32() != 1)
        throw IoError("unsupported dataset blob version: " + stem.string());
    const std::uint64_t n = r.u64();
    if (n != j.at("pair_count").get<std::uint64_t>())
        throw IoError("dataset manifest/blob pair count mismatch: " +
                      stem.string());

    std::vector<double> flat(n * (kFeatureDim + kStateDim));
    r.f64_span(flat);
    const std::uint64_t expect = r.u64();
    if (!r.at_end())
        throw IoError("trailing bytes in dataset blob: " + stem.string());
    if (checksum_doubles(flat) != expect ||
        expect != j.at("checksum").get<std::uint64_t>())
        throw IoError("dataset checksum mismatch: " + stem.string());

    ds.pairs.resize(n);
    std::size_t off = 0;
    for (auto& p : ds.pairs)
        for (double& v : p.z) v = flat[off++];
    for (auto& p : ds.pairs)
        for (double& v : p.y) v = flat[off++];
    return ds;
}

// ------------------------------------------------------------------- corpus

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir,
                 std::uint64_t master_seed) {
    std::filesystem::create_directories(dir / "train");
    std::filesystem::create_directories(dir / "test");

    json manifest;
    manifest["version"] = 1;
    manifest["master_seed"] = master_seed;

    auto dump_split = [&](const std::vector<Trajectory>& split,
                          const char* name) {
        json list = json::array();
        for (std::size_t i = 0; i < split.size(); ++i) {
            const Trajectory& t = split[i];
            const std::string rel =
                std::string(name) + "/" + index_name(i) + ".traj";
            save_trajectory(t, dir / rel);
            json entry;
            entry["id"] = t.id;
            entry["seed"] = t.seed;
            entry["steps"] = t.steps();
            entry["file"] = rel;
            list.push_back(entry);
        }
        manifest[name] = list;
    };
    dump_split(corpus.train, "train");
    dump_split(corpus.test, "test");
    if (!corpus.train.empty())
        manifest["h"] = corpus.train.front().h;
    else if (!corpus.test.empty())
        manifest["h"] = corpus.test.front().h;
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

Corpus load_corpus(const std::filesystem::path& dir) {
    json manifest;
    try {
        manifest = json::parse(read_file(dir / "manifest.json"));
    } catch (const json::exception& e) {
        throw IoError("bad corpus manifest in " + dir.string() + ": " + e.what());
    }
    if (manifest.value("version", 0) != 1)
        throw IoError("unsupported corpus manifest version in " + dir.string());

    Corpus corpus;
    auto load_split = [&](const char* name, std::vector<Trajectory>& out) {
        for (const auto& entry : manifest.at(name)) {
            Trajectory t =
                load_trajectory(dir / entry.at("file").get<std::string>());
            if (t.id != entry.at("id").get<std::uint32_t>() ||
                t.seed != entry.at("seed").get<std::uint64_t>() ||
                t.steps() != entry.at("steps").get<long>())
                throw IoError("corpus manifest does not match " +
                              entry.at("file").get<std::string>());
            out.push_back(std::move(t));
        }
    };
    try {
        load_split("train", corpus.train);
        load_split("test", corpus.test);
    } catch (const json::exception& e) {
        throw IoError("bad corpus manifest in " + dir.string() + ": " + e.what());
    }
    return corpus;
}

}  // namespace alucell
