#include "alucell/plant.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "alucell/errors.hpp"

namespace alucell {

namespace {

constexpr double kDenominatorFloor = 1e-12;

// Guarded division: denominators this close to zero are treated as model
// domain violations instead of silently producing inf.
double checked_div(double num, double den, const char* what) {
    if (std::abs(den) < kDenominatorFloor) {
        throw DomainError(std::string("near-zero denominator in ") + what);
    }
    return num / den;
}

const char* kParamKeys[] = {"k0",  "k1",  "k2",  "k3",  "k4",  "k5",  "k6",
                            "k7",  "k8",  "k9",  "k10", "k11", "k12", "k13",
                            "k14", "k15", "k16", "k17", "k18"};

}  // namespace

PlantParams PlantParams::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("plant params: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("plant params: expected a JSON object");

    PlantParams p;
    std::size_t consumed = 0;
    auto take = [&](const char* key) {
        auto it = j.find(key);
        if (it == j.end())
            throw ConfigError(std::string("plant params: missing key ") + key);
        if (!it->is_number())
            throw ConfigError(std::string("plant params: key ") + key +
                              " is not a number");
        ++consumed;
        return it->get<double>();
    };
    for (int i = 0; i < 19; ++i) p.k[i] = take(kParamKeys[i]);
    p.alpha = take("alpha");
    p.beta = take("beta");
    p.critical_alumina_ratio = take("c_x2_crit");
    if (consumed != j.size()) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            bool known = it.key() == "alpha" || it.key() == "beta" ||
                         it.key() == "c_x2_crit";
            for (int i = 0; i < 19 && !known; ++i)
                known = it.key() == kParamKeys[i];
            if (!known)
                throw ConfigError("plant params: unknown key " + it.key());
        }
    }
    p.validate();
    return p;
}

PlantParams PlantParams::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open plant params file " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string PlantParams::to_json_text() const {
    nlohmann::json j;
    for (int i = 0; i < 19; ++i) j[kParamKeys[i]] = k[i];
    j["alpha"] = alpha;
    j["beta"] = beta;
    j["c_x2_crit"] = critical_alumina_ratio;
    return j.dump(2) + "\n";
}

void PlantParams::validate() const {
    if (!(k[0] > 0.0)) throw ConfigError("plant params: k0 must be positive");
    for (int i = 0; i < 19; ++i) {
        if (!std::isfinite(k[i]))
            throw ConfigError(std::string("plant params: nonfinite ") +
                              kParamKeys[i]);
    }
    if (!std::isfinite(alpha) || !std::isfinite(beta) ||
        !std::isfinite(critical_alumina_ratio)) {
        throw ConfigError("plant params: nonfinite alpha/beta/c_x2_crit");
    }
}

MassRatios mass_ratios(const CellState& x) {
    const double total = x.alumina_mass + x.fluoride_mass + x.cryolite_mass;
    if (!(total > 0.0)) throw DomainError("total bath mass x2+x3+x4 must be > 0");
    return {x.alumina_mass / total, x.fluoride_mass / total};
}

std::array<double, 8> box_coords(const CellState& x) {
    const MassRatios c = mass_ratios(x);
    return {x.side_ledge_mass, c.alumina, c.fluoride, x.cryolite_mass,
            x.metal_mass,      x.bath_temp, x.ledge_temp, x.wall_temp};
}

BathProperties bath_properties(const CellState& x, const ControlInput& u,
                               const PlantParams& p) {
    const MassRatios c = mass_ratios(x);
    const double c2 = c.alumina;
    const double c3 = c.fluoride;
    if (c3 < 0.0) throw DomainError("negative fluoride mass ratio");

    BathProperties g;
    g.alumina_ratio = c2;
    g.fluoride_ratio = c3;

    const double liq_den = -23.0 * c2 * c3 - 17.0 * c3 * c3 + 9.36 * c3 + 1.0;
    g.liquidus_temp = 991.2 + 112.0 * c3 + 61.0 * std::pow(c3, 1.5) -
                      3265.5 * std::pow(c3, 2.2) -
                      checked_div(793.0 * c2, liq_den, "liquidus correction");

    g.conductivity = std::exp(2.496 -
                              checked_div(2068.4, 273.0 + x.bath_temp,
                                          "conductivity exponent") -
                              2.07 * c2);

    const double u1 = u.alumina_feed;
    const double dc = c2 - p.critical_alumina_ratio;
    g.bubble_coverage = 0.531 + 3.06e-18 * u1 * u1 * u1 -
                        2.51e-12 * u1 * u1 + 6.96e-7 * u1 -
                        checked_div(14.37 * dc - 0.431, 735.3 * dc + 1.0,
                                    "bubble coverage");

    g.bubble_thickness = (0.5517 + 3.8168e-6 * u.line_current) /
                         (1.0 + 8.271e-6 * u.line_current);

    const double cover_gap = 1.0 - g.bubble_coverage;
    if (std::abs(cover_gap) < kDenominatorFloor)
        throw SingularityError("bubble coverage reached 1");
    g.bubble_voltage = checked_div(
        3.8168e-6 * g.bubble_coverage * g.bubble_thickness * u.line_current,
        g.conductivity * cover_gap, "bubble voltage");

    for (double v : {g.liquidus_temp, g.conductivity, g.bubble_coverage,
                     g.bubble_thickness, g.bubble_voltage}) {
        if (!std::isfinite(v))
            throw DomainError("nonfinite bath property intermediate");
    }
    return g;
}

StateDerivative rhs(const CellState& x, const ControlInput& u,
                    const PlantParams& p) {
    const auto& k = p.k;
    const BathProperties g = bath_properties(x, u, p);
    const double g1 = g.liquidus_temp;

    // Freeze/melt exchange terms are computed once and shared between dx1
    // and dx4 so the side-ledge mass balance cancels exactly.
    const double freeze = checked_div(k[1] * (g1 - x.ledge_temp),
                                      x.side_ledge_mass * k[0], "ledge exchange");
    const double melt = k[2] * (x.bath_temp - g1);

    const double bath_mass = x.alumina_mass + x.fluoride_mass + x.cryolite_mass;
    const double superheat = x.bath_temp - g1;
    const double gradient = g1 - x.ledge_temp;

    const double side_loss_den = k[10] + k[11] * k[0] * x.side_ledge_mass;
    const double wall_loss_den = k[14] + k[15] * k[0] * x.side_ledge_mass;

    StateDerivative d{};
    d[0] = freeze - melt;
    d[1] = u.alumina_feed - k[3] * u.line_current;
    d[2] = u.fluoride_feed - k[4] * u.alumina_feed;
    d[3] = -freeze + melt + k[5] * u.alumina_feed;
    d[4] = k[6] * u.line_current - u.metal_tap;
    d[5] = checked_div(p.alpha, bath_mass, "bath heat capacity") *
           (u.line_current * g.bubble_voltage +
            checked_div(u.line_current * u.line_current * u.anode_distance,
                        2620.0 * g.conductivity, "ohmic heating") -
            k[7] * superheat * superheat +
            k[8] * superheat * gradient / (k[0] * x.side_ledge_mass) -
            checked_div(k[9] * (x.bath_temp - x.ledge_temp), side_loss_den,
                        "bath-ledge loss"));
    d[6] = checked_div(p.beta, x.side_ledge_mass, "ledge heat capacity") *
           (checked_div(k[9] * gradient, k[15] * k[0] * x.side_ledge_mass,
                        "ledge conduction") -
            k[12] * superheat * gradient +
            k[13] * gradient * gradient / (k[0] * x.side_ledge_mass) -
            checked_div(x.ledge_temp - x.wall_temp, wall_loss_den,
                        "ledge-wall loss"));
    d[7] = k[17] * k[9] *
           (checked_div(x.ledge_temp - x.wall_temp, wall_loss_den,
                        "wall gain") -
            checked_div(x.wall_temp - k[16], k[14] + k[18], "wall-ambient loss"));

    for (int i = 0; i < kStateDim; ++i) {
        if (!std::isfinite(d[i]))
            throw SimulationError("nonfinite state derivative", -1, i);
    }
    return d;
}

CellState rk4_step(const CellState& x, const ControlInput& u, double h,
                   const PlantParams& p) {
    if (!(h > 0.0)) throw UsageError("rk4_step: h must be positive");
    const StateVec x0 = x.to_array();

    auto shifted = [&](const StateDerivative& d, double scale) {
        StateVec y = x0;
        for (int i = 0; i < kStateDim; ++i) y[i] += scale * d[i];
        return CellState::from_array(y);
    };

    const StateDerivative s1 = rhs(x, u, p);
    const StateDerivative s2 = rhs(shifted(s1, 0.5 * h), u, p);
    const StateDerivative s3 = rhs(shifted(s2, 0.5 * h), u, p);
    const StateDerivative s4 = rhs(shifted(s3, h), u, p);

    StateVec y = x0;
    for (int i = 0; i < kStateDim; ++i)
        y[i] += (h / 6.0) * (s1[i] + 2.0 * s2[i] + 2.0 * s3[i] + s4[i]);
    return CellState::from_array(y);
}

Trajectory simulate(const CellState& x0, const InputPolicy& policy,
                    long steps, double h, const PlantParams& p) {
    if (steps < 1) throw UsageError("simulate: steps must be >= 1");
    if (!(h > 0.0)) throw UsageError("simulate: h must be positive");

    Trajectory traj;
    traj.h = h;
    traj.states.reserve(static_cast<std::size_t>(steps) + 1);
    traj.inputs.reserve(static_cast<std::size_t>(steps));
    traj.states.push_back(x0.to_array());

    CellState x = x0;
    for (long t = 0; t < steps; ++t) {
        const ControlInput u = policy(x, t);
        CellState next;
        try {
            next = rk4_step(x, u, h, p);
        } catch (const SimulationError& e) {
            throw SimulationError(
                std::string(e.what()) + " at step " + std::to_string(t) +
                    " (" + std::to_string(traj.states.size()) +
                    " states completed)",
                t, e.component);
        }
        const StateVec arr = next.to_array();
        for (int i = 0; i < kStateDim; ++i) {
            if (!std::isfinite(arr[i]))
                throw SimulationError("nonfinite state at step " +
                                          std::to_string(t) + " (" +
                                          std::to_string(traj.states.size()) +
                                          " states completed)",
                                      t, i);
        }
        traj.inputs.push_back(u.to_array());
        traj.states.push_back(arr);
        x = next;
    }
    return traj;
}

bool Trajectory::consistent() const {
    if (states.size() != inputs.size() + 1) return false;
    if (!(h > 0.0)) return false;
    for (const auto& s : states)
        for (double v : s)
            if (!std::isfinite(v)) return false;
    for (const auto& u : inputs)
        for (double v : u)
            if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace alucell
