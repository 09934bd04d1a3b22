#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "alucell/control.hpp"
#include "alucell/plant.hpp"
#include "alucell/rng.hpp"
#include "alucell/state.hpp"
#include "alucell/trajectory.hpp"

namespace alucell {

// Initial-condition sampling box in the coordinates
// (x1, c_x2, c_x3, x4, x5, x6, x7, x8): mass ratios are sampled instead of
// the raw x2/x3 masses, and the masses are then solved from the ratios.
struct InitBox {
    std::array<double, 8> lo{};
    std::array<double, 8> hi{};

    static InitBox defaults();

    void validate() const;
};

// Draws each coordinate uniformly (fixed order x1, c2, c3, x4, x5...x8),
// then solves x2 = c2*S, x3 = c3*S with S = x4 / (1 - c2 - c3).
CellState sample_initial_state(const InitBox& box, Rng& rng);

struct CorpusConfig {
    long n_train = 40;
    long n_test = 100;
    long steps = 5000;
    double h = 10.0;

    void validate() const;
};

struct Corpus {
    std::vector<Trajectory> train;
    std::vector<Trajectory> test;
};

// Simulates n_train + n_test trajectories under the stochastic policy.
// Each trajectory owns RNG streams derived from the master seed and its
// global index, so regeneration is byte-identical and order-independent.
Corpus build_corpus(const CorpusConfig& cfg, const ControllerConfig& ctrl,
                    const AprbsConfig& aprbs, const InitBox& box,
                    const PlantParams& plant, std::uint64_t master_seed,
                    int workers = 1);

// One regression example: z = [x_k; u_k], y = (x_{k+1} - x_k) / h.
struct RegressionPair {
    std::array<double, kFeatureDim> z{};
    std::array<double, kStateDim> y{};
};

std::vector<RegressionPair> to_pairs(const Trajectory& traj);

// Per-dimension population statistics of z and y over the training pairs.
// Constant dimensions get std 1 and are flagged.
struct Normalizer {
    std::array<double, kFeatureDim> z_mean{};
    std::array<double, kFeatureDim> z_std{};
    std::array<double, kStateDim> y_mean{};
    std::array<double, kStateDim> y_std{};
    std::array<bool, kFeatureDim> z_constant{};
    std::array<bool, kStateDim> y_constant{};

    // Standard deviations of the eight state variables over the training
    // set (the first eight z dimensions); used by the forecast metrics.
    std::array<double, kStateDim> state_stds() const;
};

Normalizer fit_normalizer(const std::vector<RegressionPair>& pairs);

struct Dataset {
    std::string name;
    std::vector<RegressionPair> pairs;
    Normalizer norm;
    std::vector<std::uint32_t> source_trajectory_ids;
    std::vector<std::uint64_t> source_trajectory_seeds;
    double h = 0.0;
    std::uint64_t master_seed = 0;
};

// Flattens the first n_trajectories training trajectories into pairs and
// fits the normalizer.
Dataset build_dataset(const std::string& name,
                      const std::vector<Trajectory>& train, long n_trajectories,
                      std::uint64_t master_seed);

// --- persistence ---------------------------------------------------------
// .traj: magic + header + raw little-endian float64 blobs + checksum.
// Dataset: <stem>.bin (blobs) + <stem>.json (manifest and statistics).
// Corpus directory: manifest.json, train/NNN.traj, test/NNN.traj.

void save_trajectory(const Trajectory& traj, const std::filesystem::path& file);
Trajectory load_trajectory(const std::filesystem::path& file);

void save_dataset(const Dataset& ds, const std::filesystem::path& stem);
Dataset load_dataset(const std::filesystem::path& stem);

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir,
                 std::uint64_t master_seed);
Corpus load_corpus(const std::filesystem::path& dir);

}  // namespace alucell
