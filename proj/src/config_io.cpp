#include "platoon/config_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace platoon::io {

using nlohmann::json;

namespace {

// Reads one JSON object section, remembering its path for error messages and
// rejecting keys it was not asked about.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    void number(const std::string& key, double& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(field(key), "expected a number");
        out = v.get<double>();
    }

    void integer(const std::string& key, int& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
        out = v.get<int>();
    }

    void text(const std::string& key, std::string& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(field(key), "expected a string");
        out = v.get<std::string>();
    }

    void band(const std::string& key, SpeedBand& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (v.is_number()) {
            out.lo = out.hi = v.get<double>();
            return;
        }
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ConfigError(field(key), "expected a number or a [lo, hi] pair");
        out.lo = v[0].get<double>();
        out.hi = v[1].get<double>();
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown field");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json band_json(const SpeedBand& b) { return json::array({b.lo, b.hi}); }

}  // namespace

int seconds_to_steps(double seconds, double tau) {
    if (!(tau > 0)) throw ValidationError("tau must be positive");
    return static_cast<int>(std::lround(seconds / tau));
}

json parse_json_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream where;
        where << "line " << line << ", column " << col;
        throw ConfigError(where.str(), "malformed JSON");
    }
}

ScenarioConfig config_from_json(const json& j) {
    ScenarioConfig c;
    Section root(j, "");

    if (root.has("geometry")) {
        Section s(root.raw("geometry"), "geometry");
        s.number("L_b", c.geometry.buffer_len);
        s.number("L_c", c.geometry.control_len);
        s.finish();
    }
    if (root.has("bounds")) {
        Section s(root.raw("bounds"), "bounds");
        s.number("v_min", c.bounds.v_min);
        s.number("v_max", c.bounds.v_max);
        s.number("u_min", c.bounds.u_min);
        s.number("u_max", c.bounds.u_max);
        s.number("rho", c.bounds.rho);
        s.number("s0", c.bounds.s0);
        s.number("l_c", c.bounds.veh_len);
        s.finish();
    }
    root.integer("N", c.N);

    if (root.has("cfm")) {
        Section s(root.raw("cfm"), "cfm");
        std::string model = "ovm";
        s.text("model", model);
        if (model == "ovm") {
            cfm::OvmParams p;
            s.number("alpha", p.alpha);
            s.number("v_d", p.v_d);
            c.cfm = p;
        } else if (model == "idm") {
            cfm::IdmParams p;
            s.number("a", p.a);
            s.number("b", p.b);
            s.number("gamma", p.gamma);
            s.number("v_d", p.v_d);
            std::string form = "canonical";
            s.text("idm_gap_form", form);
            if (form == "canonical")
                p.gap_form = cfm::IdmGapForm::Canonical;
            else if (form == "printed")
                p.gap_form = cfm::IdmGapForm::Printed;
            else
                throw ConfigError(s.field("idm_gap_form"), "expected canonical or printed");
            c.cfm = p;
        } else {
            throw ConfigError(s.field("model"), "expected ovm or idm");
        }
        s.finish();
    }

    if (root.has("controller")) {
        Section s(root.raw("controller"), "controller");
        auto& k = c.controller;
        s.number("tau", k.tau);
        // Horizon defaults are fixed in seconds, so changing tau alone keeps
        // them fixed in time.
        double T_h = 65.0, T_p = 10.0, T_c = 2.0;
        s.number("T_h", T_h);
        s.number("T_p", T_p);
        s.number("T_c", T_c);
        k.T_h = seconds_to_steps(T_h, k.tau);
        k.T_p = seconds_to_steps(T_p, k.tau);
        k.T_c = seconds_to_steps(T_c, k.tau);
        s.number("w_r", k.w_r);
        if (s.has("Q")) {
            const auto& q = s.raw("Q");
            if (!q.is_array() || q.size() != 3 || !q[0].is_number() || !q[1].is_number() ||
                !q[2].is_number())
                throw ConfigError(s.field("Q"), "expected the diagonal [q_v, q_e1, q_e2]");
            k.q_v = q[0].get<double>();
            k.q_e1 = q[1].get<double>();
            k.q_e2 = q[2].get<double>();
        }
        s.number("slack_penalty", k.slack_penalty);
        s.number("feas_tol", k.solver.feas_tol);
        s.number("stat_tol", k.solver.stat_tol);
        s.integer("max_iter", k.solver.max_iter);
        s.finish();
    }

    if (root.has("criteria")) {
        Section s(root.raw("criteria"), "criteria");
        s.number("eps_dp", c.criteria.eps_dp);
        s.number("eps_v", c.criteria.eps_v);
        s.integer("hold_steps", c.criteria.hold_steps);
        s.finish();
    }

    if (root.has("init")) {
        Section s(root.raw("init"), "init");
        if (s.has("seed")) {
            const auto& v = s.raw("seed");
            if (!v.is_number_unsigned()) throw ConfigError(s.field("seed"), "expected a non-negative integer");
            c.init.seed = v.get<std::uint64_t>();
        }
        if (s.has("cav_position")) {
            double p = 0.0;
            s.number("cav_position", p);
            c.init.cav_position = p;
        }
        s.band("cav_speed", c.init.cav_speed);
        s.band("hdv_speed", c.init.hdv_speed);
        s.band("gap_margin", c.init.gap_margin);
        if (s.has("hdv_speed_order")) {
            std::string order;
            s.text("hdv_speed_order", order);
            if (order == "descending")
                c.init.hdv_speed_order = SpeedOrder::Descending;
            else if (order == "random")
                c.init.hdv_speed_order = SpeedOrder::Random;
            else
                throw ConfigError(s.field("hdv_speed_order"), "expected descending or random");
        }
        if (s.has("vehicles")) {
            const auto& arr = s.raw("vehicles");
            if (!arr.is_array()) throw ConfigError(s.field("vehicles"), "expected an array");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                Section v(arr[i], s.field("vehicles") + "[" + std::to_string(i) + "]");
                VehicleState st;
                if (!v.has("p") || !v.has("v")) throw ConfigError(v.field("p"), "each vehicle needs p and v");
                v.number("p", st.position);
                v.number("v", st.speed);
                v.finish();
                c.init.vehicles.push_back(st);
            }
        }
        s.finish();
    }

    if (root.has("leader_outside_zone")) {
        std::string mode;
        root.text("leader_outside_zone", mode);
        if (mode == "cruise")
            c.leader_outside = LeaderMode::Cruise;
        else if (mode == "cfm")
            c.leader_outside = LeaderMode::FreeRoadCfm;
        else
            throw ConfigError("leader_outside_zone", "expected cruise or cfm");
    }

    if (root.has("outputs")) {
        Section s(root.raw("outputs"), "outputs");
        s.text("dir", c.outputs.dir);
        s.text("format", c.outputs.format);
        s.integer("downsample", c.outputs.downsample);
        s.finish();
    }
    root.finish();
    return c;
}

json config_to_json(const ScenarioConfig& c) {
    json j;
    j["geometry"] = {{"L_b", c.geometry.buffer_len}, {"L_c", c.geometry.control_len}};
    j["bounds"] = {{"v_min", c.bounds.v_min}, {"v_max", c.bounds.v_max}, {"u_min", c.bounds.u_min},
                   {"u_max", c.bounds.u_max}, {"rho", c.bounds.rho},     {"s0", c.bounds.s0},
                   {"l_c", c.bounds.veh_len}};
    j["N"] = c.N;
    if (const auto* p = std::get_if<cfm::OvmParams>(&c.cfm)) {
        j["cfm"] = {{"model", "ovm"}, {"alpha", p->alpha}, {"v_d", p->v_d}};
    } else {
        const auto& q = std::get<cfm::IdmParams>(c.cfm);
        j["cfm"] = {{"model", "idm"},
                    {"a", q.a},
                    {"b", q.b},
                    {"gamma", q.gamma},
                    {"v_d", q.v_d},
                    {"idm_gap_form", q.gap_form == cfm::IdmGapForm::Canonical ? "canonical" : "printed"}};
    }
    const auto& k = c.controller;
    j["controller"] = {{"T_h", k.T_h * k.tau},
                       {"T_p", k.T_p * k.tau},
                       {"T_c", k.T_c * k.tau},
                       {"tau", k.tau},
                       {"w_r", k.w_r},
                       {"Q", json::array({k.q_v, k.q_e1, k.q_e2})},
                       {"slack_penalty", k.slack_penalty},
                       {"feas_tol", k.solver.feas_tol},
                       {"stat_tol", k.solver.stat_tol},
                       {"max_iter", k.solver.max_iter}};
    j["criteria"] = {{"eps_dp", c.criteria.eps_dp},
                     {"eps_v", c.criteria.eps_v},
                     {"hold_steps", c.criteria.hold_steps}};
    json init = {{"seed", c.init.seed},
                 {"cav_speed", band_json(c.init.cav_speed)},
                 {"hdv_speed", band_json(c.init.hdv_speed)},
                 {"gap_margin", band_json(c.init.gap_margin)},
                 {"hdv_speed_order",
                  c.init.hdv_speed_order == SpeedOrder::Descending ? "descending" : "random"}};
    if (c.init.cav_position) init["cav_position"] = *c.init.cav_position;
    if (!c.init.vehicles.empty()) {
        init["vehicles"] = json::array();
        for (const auto& v : c.init.vehicles) init["vehicles"].push_back({{"p", v.position}, {"v", v.speed}});
    }
    j["init"] = init;
    j["leader_outside_zone"] = c.leader_outside == LeaderMode::Cruise ? "cruise" : "cfm";
    j["outputs"] = {{"dir", c.outputs.dir}, {"format", c.outputs.format}, {"downsample", c.outputs.downsample}};
    return j;
}

ScenarioConfig load_config_text(const std::string& text) {
    const json j = text.find_first_not_of(" \t\r\n") == std::string::npos ? json::object()
                                                                           : parse_json_text(text);
    ScenarioConfig c = config_from_json(j);
    c.validate();
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), "cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_config_text(ss.str());
}

}  // namespace platoon::io
