#pragma once

#include <array>
#include <cstddef>

namespace alucell {

inline constexpr int kStateDim = 8;
inline constexpr int kInputDim = 5;
inline constexpr int kFeatureDim = kStateDim + kInputDim;  // NN input [x; u]

using StateVec = std::array<double, kStateDim>;
using InputVec = std::array<double, kInputDim>;
using StateDerivative = std::array<double, kStateDim>;  // state units per second

// Physical cell state.  Masses in kg, temperatures in degrees C.
struct CellState {
    double side_ledge_mass = 0.0;  // x1
    double alumina_mass = 0.0;     // x2, Al2O3
    double fluoride_mass = 0.0;    // x3, AlF3
    double cryolite_mass = 0.0;    // x4, Na3AlF6
    double metal_mass = 0.0;       // x5
    double bath_temp = 0.0;        // x6
    double ledge_temp = 0.0;       // x7
    double wall_temp = 0.0;        // x8

    StateVec to_array() const {
        return {side_ledge_mass, alumina_mass, fluoride_mass, cryolite_mass,
                metal_mass,      bath_temp,    ledge_temp,    wall_temp};
    }
    static CellState from_array(const StateVec& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
    }
};

// Control inputs.  Feeds and tapping in kg/s, current in kA, distance in cm.
struct ControlInput {
    double alumina_feed = 0.0;    // u1
    double line_current = 0.0;    // u2
    double fluoride_feed = 0.0;   // u3
    double metal_tap = 0.0;       // u4
    double anode_distance = 0.0;  // u5

    InputVec to_array() const {
        return {alumina_feed, line_current, fluoride_feed, metal_tap,
                anode_distance};
    }
    static ControlInput from_array(const InputVec& a) {
        return {a[0], a[1], a[2], a[3], a[4]};
    }
};

}  // namespace alucell
