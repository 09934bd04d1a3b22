#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string>

#include "alucell/state.hpp"
#include "alucell/trajectory.hpp"

namespace alucell {

// Constants of the cell model.  The bundled default file holds synthetic
// placeholder values chosen so that trajectories started anywhere in the
// sampling box stay bounded with bath > ledge > wall temperature ordering;
// real cell parameters can be supplied through the same schema.
struct PlantParams {
    std::array<double, 19> k{};        // k0 .. k18
    double alpha = 0.0;                // bath thermal coefficient
    double beta = 0.0;                 // ledge thermal coefficient
    double critical_alumina_ratio = 0.0;

    // Strict JSON schema: exactly the keys k0..k18, alpha, beta, c_x2_crit,
    // all finite numbers.  Missing, extra, or nonfinite entries are errors.
    static PlantParams from_json_text(const std::string& text);
    static PlantParams load(const std::filesystem::path& file);
    std::string to_json_text() const;

    void validate() const;  // k0 > 0, all entries finite
};

// Intrinsic bath-mixture properties evaluated alongside the ODE.
struct BathProperties {
    double liquidus_temp = 0.0;     // g1, degC
    double conductivity = 0.0;      // g2, S*m
    double bubble_coverage = 0.0;   // g3, dimensionless
    double bubble_thickness = 0.0;  // g4, cm
    double bubble_voltage = 0.0;    // g5, V
    double alumina_ratio = 0.0;     // c_x2
    double fluoride_ratio = 0.0;    // c_x3
};

struct MassRatios {
    double alumina = 0.0;   // x2 / (x2 + x3 + x4)
    double fluoride = 0.0;  // x3 / (x2 + x3 + x4)
};

// Throws DomainError when the total bath mass x2+x3+x4 is not positive.
MassRatios mass_ratios(const CellState& x);

// Sampling-box coordinates (x1, c_x2, c_x3, x4, x5, x6, x7, x8): the state
// with the two mass ratios substituted for the raw x2, x3 masses.
std::array<double, 8> box_coords(const CellState& x);

BathProperties bath_properties(const CellState& x, const ControlInput& u,
                               const PlantParams& p);

// Full right-hand side of the cell ODE.  Throws DomainError /
// SingularityError on guarded denominators and SimulationError (with the
// offending component index) if any derivative comes out nonfinite.
StateDerivative rhs(const CellState& x, const ControlInput& u,
                    const PlantParams& p);

// Classical fixed-step 4-stage Runge-Kutta update, input held constant.
CellState rk4_step(const CellState& x, const ControlInput& u, double h,
                   const PlantParams& p);

// Input source for simulate(); called once per step with the current state.
using InputPolicy = std::function<ControlInput(const CellState&, long step)>;

// Integrates `steps` RK4 steps, recording every state and the inputs exactly
// as applied.  Throws SimulationError carrying the failing step index if the
// state goes nonfinite.
Trajectory simulate(const CellState& x0, const InputPolicy& policy,
                    long steps, double h, const PlantParams& p);

}  // namespace alucell
