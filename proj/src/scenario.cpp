#include "platoon/scenario.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace platoon {

void FormationCriteria::validate() const {
    if (!(eps_dp > 0)) throw ValidationError("criteria.eps_dp must be positive");
    if (!(eps_v > 0)) throw ValidationError("criteria.eps_v must be positive");
    if (hold_steps < 1) throw ValidationError("criteria.hold_steps must be at least 1");
}

cfm::ModelParams ScenarioConfig::model() const {
    cfm::ModelParams m = cfm;
    std::visit(
        [&](auto& p) {
            p.rho = bounds.rho;
            p.s0 = bounds.s0;
        },
        m);
    return m;
}

bool ScenarioConfig::operator==(const ScenarioConfig& o) const {
    return geometry == o.geometry && bounds == o.bounds && N == o.N && cfm == o.cfm &&
           controller == o.controller && criteria == o.criteria && init == o.init &&
           leader_outside == o.leader_outside && outputs == o.outputs;
}

namespace {

void check_band(const SpeedBand& band, const std::string& name) {
    if (!(band.lo <= band.hi)) throw ValidationError(name + " band must satisfy lo <= hi");
}

}  // namespace

void ScenarioConfig::validate() const {
    geometry.validate();
    bounds.validate();
    if (N < 2) throw ValidationError("N must be at least 2 (CAV plus one HDV)");
    std::visit([](const auto& p) { p.validate(); }, model());
    controller.validate();
    criteria.validate();
    check_band(init.cav_speed, "init.cav_speed");
    check_band(init.hdv_speed, "init.hdv_speed");
    check_band(init.gap_margin, "init.gap_margin");
    if (init.gap_margin.lo < 0) throw ValidationError("init.gap_margin must be non-negative");
    if (!init.vehicles.empty() && static_cast<int>(init.vehicles.size()) != N) {
        std::ostringstream os;
        os << "init.vehicles lists " << init.vehicles.size() << " vehicles but N = " << N;
        throw ValidationError(os.str());
    }
    if (outputs.downsample < 1) throw ValidationError("outputs.downsample must be at least 1");
    if (outputs.format != "csv" && outputs.format != "json")
        throw ValidationError("outputs.format must be csv or json");

    const auto fleet = initial_fleet(*this);
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        const auto& s = fleet[i];
        if (!std::isfinite(s.position) || !std::isfinite(s.speed))
            throw ValidationError("initial state of vehicle " + std::to_string(i + 1) + " is not finite");
        if (!(s.speed > bounds.v_min && s.speed < bounds.v_max)) {
            std::ostringstream os;
            os << "initial speed " << s.speed << " m/s of vehicle " << i + 1
               << " makes a speed bound active (needs v_min < v < v_max)";
            throw ValidationError(os.str());
        }
        if (i == 0) continue;
        const auto& lead = fleet[i - 1];
        if (!(lead.position > s.position))
            throw ValidationError("initial positions must strictly decrease with vehicle index");
        if (!rear_end_satisfied(lead, s, bounds)) {
            std::ostringstream os;
            os << "initial gap of vehicle " << i + 1 << " (" << headway(lead, s, bounds.veh_len)
               << " m) violates the rear-end constraint gap >= rho v + s0 = "
               << dynamic_spacing(s, bounds) << " m";
            throw ValidationError(os.str());
        }
    }
    if (fleet.front().position > geometry.control_exit())
        throw ValidationError("CAV starts beyond the control zone");
}

std::vector<VehicleState> initial_fleet(const ScenarioConfig& config) {
    if (!config.init.vehicles.empty()) {
        auto fleet = config.init.vehicles;
        for (auto& s : fleet) s.accel = 0.0;
        return fleet;
    }
    const auto& init = config.init;
    std::mt19937_64 rng(init.seed);
    auto draw = [&](const SpeedBand& band) {
        return band.lo == band.hi ? band.lo : std::uniform_real_distribution<double>(band.lo, band.hi)(rng);
    };
    std::vector<VehicleState> fleet(static_cast<std::size_t>(config.N));
    fleet[0].position = init.cav_position.value_or(config.geometry.control_entry());
    fleet[0].speed = draw(init.cav_speed);
    for (std::size_t i = 1; i < fleet.size(); ++i) fleet[i].speed = draw(init.hdv_speed);
    if (init.hdv_speed_order == SpeedOrder::Descending)
        std::sort(fleet.begin() + 1, fleet.end(),
                  [](const VehicleState& a, const VehicleState& b) { return a.speed > b.speed; });
    for (std::size_t i = 1; i < fleet.size(); ++i) {
        const double gap = dynamic_spacing(fleet[i].speed, config.bounds) + draw(init.gap_margin);
        fleet[i].position = fleet[i - 1].position - config.bounds.veh_len - gap;
    }
    return fleet;
}

std::vector<VehicleState> formed_platoon(const ScenarioConfig& config, double speed,
                                         double cav_position) {
    const double gap = cfm::equilibrium_gap(speed, config.model());
    std::vector<VehicleState> fleet(static_cast<std::size_t>(config.N));
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        fleet[i].speed = speed;
        fleet[i].position = cav_position - static_cast<double>(i) * (gap + config.bounds.veh_len);
    }
    return fleet;
}

}  // namespace platoon
