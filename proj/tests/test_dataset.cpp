#include <doctest.h>

#include <cmath>

#include "alucell/dataset.hpp"
#include "alucell/errors.hpp"
#include "alucell/io.hpp"
#include "test_helpers.hpp"

using namespace alucell;
using testutil::rel_err;

namespace {

Trajectory synthetic_trajectory(long steps, double h) {
    Trajectory t;
    t.h = h;
    t.id = 7;
    t.seed = 99;
    Rng rng(steps);
    StateVec x{};
    for (int i = 0; i < kStateDim; ++i) x[i] = rng.uniform(100.0, 10000.0);
    t.states.push_back(x);
    for (long k = 0; k < steps; ++k) {
        InputVec u{};
        for (int i = 0; i < kInputDim; ++i) u[i] = rng.uniform(0.0, 10.0);
        t.inputs.push_back(u);
        for (int i = 0; i < kStateDim; ++i)
            x[i] += rng.uniform(-3.0, 3.0);
        t.states.push_back(x);
    }
    return t;
}

Corpus tiny_corpus(long n_train, long n_test, long steps,
                   std::uint64_t seed = 314) {
    const PlantParams p = PlantParams::load(
        testutil::repo_path("config/plant_default.json"));
    CorpusConfig cfg;
    cfg.n_train = n_train;
    cfg.n_test = n_test;
    cfg.steps = steps;
    cfg.h = 10.0;
    return build_corpus(cfg, ControllerConfig::defaults(),
                        AprbsConfig::defaults(), InitBox::defaults(), p, seed);
}

}  // namespace

TEST_CASE("initial state sampling: degenerate box is deterministic") {
    InitBox box;
    box.lo = {3000.0, 0.03, 0.11, 14000.0, 10000.0, 960.0, 820.0, 580.0};
    box.hi = box.lo;
    Rng r1(1), r2(2);
    const CellState a = sample_initial_state(box, r1);
    const CellState b = sample_initial_state(box, r2);
    CHECK(a.to_array() == b.to_array());
    CHECK(a.side_ledge_mass == 3000.0);
    CHECK(a.bath_temp == 960.0);
}

TEST_CASE("initial state sampling: ratio equations solved for the masses") {
    InitBox box;
    box.lo = {3000.0, 0.03, 0.11, 14000.0, 10000.0, 960.0, 820.0, 580.0};
    box.hi = box.lo;
    Rng rng(1);
    const CellState x = sample_initial_state(box, rng);
    // S = x4 / (1 - c2 - c3) = 14000 / 0.86
    CHECK(rel_err(x.alumina_mass, 488.37209302325581395) < 1e-14);
    CHECK(rel_err(x.fluoride_mass, 1790.6976744186046512) < 1e-14);
    const MassRatios c = mass_ratios(x);
    CHECK(rel_err(c.alumina, 0.03) < 1e-14);
    CHECK(rel_err(c.fluoride, 0.11) < 1e-14);
}

TEST_CASE("initial state sampling: stays inside the box") {
    const InitBox box = InitBox::defaults();
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const CellState x = sample_initial_state(box, rng);
        const auto coords = box_coords(x);
        for (int d = 0; d < 8; ++d) {
            CHECK(coords[d] >= box.lo[d] - 1e-12);
            CHECK(coords[d] <= box.hi[d] + 1e-12);
        }
        CHECK(x.bath_temp > x.ledge_temp);
        CHECK(x.ledge_temp > x.wall_temp);
        CHECK(x.alumina_mass > 0.0);
    }
}

TEST_CASE("to_pairs: forward difference targets") {
    SUBCASE("constant trajectory gives zero targets") {
        Trajectory t;
        t.h = 10.0;
        t.states.assign(4, StateVec{1, 2, 3, 4, 5, 6, 7, 8});
        t.inputs.assign(3, InputVec{1, 1, 1, 1, 1});
        const auto pairs = to_pairs(t);
        REQUIRE(pairs.size() == 3);
        for (const auto& p : pairs)
            for (double y : p.y) CHECK(y == 0.0);
    }

    SUBCASE("difference of 5 over h=10 is 0.5") {
        Trajectory t;
        t.h = 10.0;
        StateVec a{1, 2, 3, 4, 5, 6, 7, 8};
        StateVec b = a;
        b[2] += 5.0;
        t.states = {a, b};
        t.inputs = {InputVec{9, 8, 7, 6, 5}};
        const auto pairs = to_pairs(t);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].y[2] == 0.5);
        CHECK(pairs[0].z[2] == 3.0);
        CHECK(pairs[0].z[8] == 9.0);  // inputs appended after the state
        CHECK(pairs[0].z[12] == 5.0);
    }

    SUBCASE("5001 states give 5000 pairs") {
        const Trajectory t = synthetic_trajectory(5000, 10.0);
        CHECK(to_pairs(t).size() == 5000);
    }

    SUBCASE("discretization inverts: x_k + h*y_k recovers x_{k+1}") {
        const Trajectory t = synthetic_trajectory(500, 10.0);
        const auto pairs = to_pairs(t);
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            for (int i = 0; i < kStateDim; ++i) {
                const double rebuilt = t.states[k][i] + t.h * pairs[k].y[i];
                const double want = t.states[k + 1][i];
                const double tol =
                    1e-15 * (std::abs(want) + std::abs(want - t.states[k][i]));
                CHECK(std::abs(rebuilt - want) <= tol);
            }
        }
    }
}

TEST_CASE("normalizer: population statistics with constant-dimension guard") {
    std::vector<RegressionPair> pairs(2);
    pairs[0].z.fill(0.0);
    pairs[1].z.fill(0.0);
    pairs[0].z[3] = 0.0;
    pairs[1].z[3] = 2.0;
    pairs[0].y.fill(5.0);
    pairs[1].y.fill(5.0);
    pairs[1].y[1] = 9.0;

    const Normalizer nm = fit_normalizer(pairs);
    CHECK(nm.z_mean[3] == 1.0);
    CHECK(nm.z_std[3] == 1.0);  // population std of {0,2}
    CHECK_FALSE(nm.z_constant[3]);
    CHECK(nm.z_constant[0]);
    CHECK(nm.z_std[0] == 1.0);  // guarded
    CHECK(nm.y_constant[0]);
    CHECK(nm.y_mean[0] == 5.0);
    CHECK_FALSE(nm.y_constant[1]);

    CHECK_THROWS_AS(fit_normalizer({}), UsageError);
    CHECK_THROWS_AS(fit_normalizer(std::vector<RegressionPair>(1)), UsageError);
}

TEST_CASE("normalizer: matches an independent one-pass recomputation") {
    const Trajectory t = synthetic_trajectory(400, 10.0);
    const auto pairs = to_pairs(t);
    const Normalizer nm = fit_normalizer(pairs);

    // Welford's online algorithm as the independent route.
    for (int d = 0; d < kFeatureDim; ++d) {
        double mean = 0.0, m2 = 0.0;
        long n = 0;
        for (const auto& p : pairs) {
            ++n;
            const double delta = p.z[d] - mean;
            mean += delta / static_cast<double>(n);
            m2 += delta * (p.z[d] - mean);
        }
        const double stdev = std::sqrt(m2 / static_cast<double>(n));
        CHECK(rel_err(nm.z_mean[d], mean) < 1e-12);
        CHECK(rel_err(nm.z_std[d], stdev) < 1e-12);
    }
}

TEST_CASE("corpus: scaled length contract") {
    const Corpus c = tiny_corpus(1, 1, 10);
    REQUIRE(c.train.size() == 1);
    REQUIRE(c.test.size() == 1);
    CHECK(c.train[0].states.size() == 11);
    CHECK(c.train[0].inputs.size() == 10);
    CHECK(c.train[0].id == 0);
    CHECK(c.test[0].id == 1);
    CHECK(c.train[0].seed != c.test[0].seed);
}

TEST_CASE("corpus: reproducible and parallel-invariant") {
    const Corpus a = tiny_corpus(2, 2, 50, 11);
    const Corpus b = tiny_corpus(2, 2, 50, 11);
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i)
        CHECK(a.train[i].states == b.train[i].states);

    const PlantParams p = PlantParams::load(
        testutil::repo_path("config/plant_default.json"));
    CorpusConfig cfg;
    cfg.n_train = 2;
    cfg.n_test = 2;
    cfg.steps = 50;
    cfg.h = 10.0;
    const Corpus par =
        build_corpus(cfg, ControllerConfig::defaults(), AprbsConfig::defaults(),
                     InitBox::defaults(), p, 11, 4);
    for (std::size_t i = 0; i < a.train.size(); ++i)
        CHECK(a.train[i].states == par.train[i].states);
    for (std::size_t i = 0; i < a.test.size(); ++i)
        CHECK(a.test[i].states == par.test[i].states);
}

TEST_CASE("corpus: abort names the trajectory seed") {
    PlantParams p = testutil::fixture_params();
    p.k[7] = -50.0;  // runaway heating
    p.alpha = 1e6;
    CorpusConfig cfg;
    cfg.n_train = 1;
    cfg.n_test = 0;
    cfg.steps = 2000;
    cfg.h = 10.0;
    try {
        build_corpus(cfg, ControllerConfig::defaults(), AprbsConfig::defaults(),
                     InitBox::defaults(), p, 5);
        FAIL("expected SimulationError");
    } catch (const SimulationError& e) {
        CHECK(std::string(e.what()).find("seed") != std::string::npos);
    }
}

TEST_CASE("dataset: nested build and counts") {
    const Corpus c = tiny_corpus(3, 0, 20);
    const Dataset small = build_dataset("small", c.train, 2, 314);
    CHECK(small.pairs.size() == 2 * 20);
    CHECK(small.source_trajectory_ids == std::vector<std::uint32_t>{0, 1});
    const Dataset large = build_dataset("large", c.train, 3, 314);
    CHECK(large.pairs.size() == 3 * 20);
    // nested prefix: the small dataset is the head of the large one
    for (std::size_t i = 0; i < small.pairs.size(); ++i)
        CHECK(small.pairs[i].z == large.pairs[i].z);
    CHECK_THROWS_AS(build_dataset("big", c.train, 4, 314), ConfigError);
}

TEST_CASE("trajectory files: lossless round trip, corruption rejected") {
    testutil::ScratchDir dir("traj_io");
    const Trajectory t = synthetic_trajectory(64, 10.0);
    const auto file = dir.path / "t.traj";
    save_trajectory(t, file);

    const Trajectory r = load_trajectory(file);
    CHECK(r.states == t.states);
    CHECK(r.inputs == t.inputs);
    CHECK(r.h == t.h);
    CHECK(r.seed == t.seed);
    CHECK(r.id == t.id);

    // truncation -> error, not partial data
    std::string bytes = read_file(file);
    write_file_atomic(dir.path / "cut.traj", bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(load_trajectory(dir.path / "cut.traj"), IoError);

    // bit flip in the payload -> checksum mismatch
    bytes[100] = static_cast<char>(bytes[100] ^ 0x40);
    write_file_atomic(dir.path / "flip.traj", bytes);
    CHECK_THROWS_AS(load_trajectory(dir.path / "flip.traj"), IoError);
}

TEST_CASE("dataset files: lossless round trip and manifest cross-checks") {
    testutil::ScratchDir dir("dataset_io");
    const Corpus c = tiny_corpus(2, 0, 25);
    const Dataset ds = build_dataset("unit", c.train, 2, 314);
    const auto stem = dir.path / "dataset_unit";
    save_dataset(ds, stem);

    const Dataset r = load_dataset(stem);
    REQUIRE(r.pairs.size() == ds.pairs.size());
    for (std::size_t i = 0; i < r.pairs.size(); ++i) {
        CHECK(r.pairs[i].z == ds.pairs[i].z);
        CHECK(r.pairs[i].y == ds.pairs[i].y);
    }
    CHECK(r.norm.z_mean == ds.norm.z_mean);
    CHECK(r.norm.y_std == ds.norm.y_std);
    CHECK(r.name == "unit");

    // manifest pair count no longer matches the blob
    std::string manifest = read_file(stem.string() + ".json");
    const auto pos = manifest.find("\"pair_count\": 50");
    REQUIRE(pos != std::string::npos);
    manifest.replace(pos, 16, "\"pair_count\": 49");
    write_file_atomic(stem.string() + ".json", manifest);
    CHECK_THROWS_AS(load_dataset(stem), IoError);
}

TEST_CASE("corpus directory: byte-identical regeneration and load checks") {
    testutil::ScratchDir dir("corpus_io");
    const Corpus a = tiny_corpus(2, 1, 30, 21);
    save_corpus(a, dir.path / "corpus_a", 21);
    const Corpus b = tiny_corpus(2, 1, 30, 21);
    save_corpus(b, dir.path / "corpus_b", 21);

    for (const char* rel :
         {"manifest.json", "train/000.traj", "train/001.traj", "test/000.traj"}) {
        CHECK(read_file(dir.path / "corpus_a" / rel) ==
              read_file(dir.path / "corpus_b" / rel));
    }

    const Corpus loaded = load_corpus(dir.path / "corpus_a");
    REQUIRE(loaded.train.size() == 2);
    REQUIRE(loaded.test.size() == 1);
    CHECK(loaded.train[1].states == a.train[1].states);

    // manifest/file mismatch is rejected
    std::string manifest = read_file(dir.path / "corpus_a" / "manifest.json");
    const auto pos = manifest.find("\"steps\": 30");
    REQUIRE(pos != std::string::npos);
    manifest.replace(pos, 11, "\"steps\": 31");
    write_file_atomic(dir.path / "corpus_a" / "manifest.json", manifest);
    CHECK_THROWS_AS(load_corpus(dir.path / "corpus_a"), IoError);
}

TEST_CASE("corpus: paper-scale invocation" * doctest::skip(false)) {
    // 140 trajectories x 5000 steps; also exercises the shipped plant
    // defaults across the whole sampling box.
    const Corpus c = tiny_corpus(40, 100, 5000, 1);
    REQUIRE(c.train.size() == 40);
    REQUIRE(c.test.size() == 100);
    for (const auto& t : c.train) REQUIRE(t.states.size() == 5001);
    for (const auto& t : c.test) REQUIRE(t.states.size() == 5001);

    const Dataset small = build_dataset("small", c.train, 10, 1);
    const Dataset medium = build_dataset("medium", c.train, 20, 1);
    const Dataset large = build_dataset("large", c.train, 40, 1);
    CHECK(small.pairs.size() == 50000);
    CHECK(medium.pairs.size() == 100000);
    CHECK(large.pairs.size() == 200000);
    for (int d = 0; d < kFeatureDim; ++d) CHECK(large.norm.z_std[d] > 0.0);
}
