#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "platoon/config_io.hpp"
#include "platoon/sim_engine.hpp"
#include "platoon/sweep.hpp"
#include "platoon/trace_io.hpp"

using namespace platoon;

namespace {

template <class F>
std::string error_of(F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("empty config gives the reference defaults") {
    const auto c = io::load_config_text("{}");
    CHECK(c.bounds.v_max == 30.0);
    CHECK(c.bounds.v_min == 10.0);
    CHECK(c.bounds.u_min == -3.0);
    CHECK(c.bounds.u_max == 2.0);
    CHECK(c.bounds.rho == 1.5);
    CHECK(c.bounds.s0 == 2.0);
    CHECK(c.bounds.veh_len == 5.0);
    CHECK(c.geometry.buffer_len == 500.0);
    CHECK(c.geometry.control_len == 1500.0);
    CHECK(c.controller.T_p == 100);
    CHECK(c.controller.T_c == 20);
    CHECK(c.controller.T_h == 650);
    CHECK(c.controller.tau == 0.1);
    CHECK(c.controller.w_r == 5.0);
    CHECK(c.controller.q_v == 0.2);
    CHECK(c.controller.q_e1 == 0.0);
    CHECK(c.N == 4);
    CHECK(std::holds_alternative<cfm::OvmParams>(c.cfm));
    CHECK(c == io::load_config_text(""));
}

TEST_CASE("model parameters") {
    const auto c = io::load_config_text(R"({"cfm": {"model": "idm", "a": 1.5, "idm_gap_form": "printed"}})");
    REQUIRE(std::holds_alternative<cfm::IdmParams>(c.cfm));
    const auto& p = std::get<cfm::IdmParams>(c.cfm);
    CHECK(p.a == 1.5);
    CHECK(p.b == 3.0);
    CHECK(p.gamma == 4.0);
    CHECK(p.gap_form == cfm::IdmGapForm::Printed);
}

TEST_CASE("invariant breaches") {
    const auto msg = error_of([] { io::load_config_text(R"({"controller": {"T_p": 2, "T_c": 3}})"); });
    CHECK(msg.find("T_c") != std::string::npos);
    CHECK_THROWS_AS(io::load_config_text(R"({"controller": {"T_p": 2, "T_c": 3}})"), ValidationError);

    const auto rear = error_of([] {
        io::load_config_text(R"({"N": 2, "init": {"vehicles": [{"p": 500, "v": 20}, {"p": 470, "v": 20}]}})");
    });
    CHECK(rear.find("rear-end") != std::string::npos);

    CHECK_THROWS_AS(io::load_config_text(R"({"N": 1})"), ValidationError);
    CHECK_THROWS_AS(io::load_config_text(R"({"init": {"cav_speed": [30, 30]}})"), ValidationError);
    CHECK_THROWS_AS(io::load_config_text(R"({"bounds": {"rho": -1}})"), ValidationError);
}

TEST_CASE("schema errors") {
    CHECK_THROWS_AS(io::load_config_text(R"({"bogus": 1})"), io::ConfigError);
    CHECK_THROWS_AS(io::load_config_text(R"({"controller": {"T_p": "ten"}})"), io::ConfigError);
    CHECK_THROWS_AS(io::load_config_text(R"({"cfm": {"model": "gipps"}})"), io::ConfigError);
    try {
        io::load_config_text("{\n  \"N\": 4,\n  oops\n}");
        FAIL("expected a parse error");
    } catch (const io::ConfigError& e) {
        CHECK(e.where().find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(io::load_config("/nonexistent/file.json"), io::ConfigError);
}

TEST_CASE("horizons are given in seconds") {
    CHECK(io::seconds_to_steps(10.0, 0.1) == 100);
    CHECK(io::seconds_to_steps(2.0, 0.1) == 20);
    CHECK(io::seconds_to_steps(0.3, 0.1) == 3);
    const auto c = io::load_config_text(R"({"controller": {"tau": 0.2, "T_p": 8, "T_c": 1}})");
    CHECK(c.controller.T_p == 40);
    CHECK(c.controller.T_c == 5);
    CHECK(c.controller.T_h == io::seconds_to_steps(65.0, 0.2));
}

TEST_CASE("round trip") {
    auto text = R"({
      "N": 6,
      "geometry": {"L_b": 400, "L_c": 1200},
      "bounds": {"rho": 1.2, "s0": 2.5},
      "cfm": {"model": "idm", "a": 1.8},
      "controller": {"T_p": 8, "T_c": 1.5, "w_r": 3.0, "Q": [0.3, 0.01, 0.02], "slack_penalty": 5000},
      "criteria": {"eps_dp": 0.8, "hold_steps": 15},
      "init": {"seed": 99, "cav_speed": [25, 27], "hdv_speed_order": "random"},
      "leader_outside_zone": "cfm",
      "outputs": {"format": "json", "downsample": 5}
    })";
    const auto a = io::load_config_text(text);
    const auto b = io::load_config_text(io::config_to_json(a).dump());
    CHECK(a == b);

    auto d = io::load_config_text("{}");
    d.init.vehicles = formed_platoon(d, 20.0, 500.0);
    CHECK(io::load_config_text(io::config_to_json(d).dump()) == d);
}

TEST_CASE("trace csv layout") {
    CHECK(io::trace_csv_header(3) ==
          "step,time,zone,mpc_active,u_star,rmse_dp,rmse_v,qp_status,qp_iterations,qp_objective,"
          "slack,active_constraints,scenario_fault,p_1,v_1,u_1,p_2,v_2,u_2,p_3,v_3,u_3,dp_2,dp_3");

    auto cfg = io::load_config_text(R"({"N": 3, "controller": {"T_h": 2.5}})");
    const auto t = sim::run(cfg);
    REQUIRE(t.rows.size() == 26);
    std::ostringstream all, thin;
    io::write_trace_csv(all, t);
    io::write_trace_csv(thin, t, 10);
    auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
    CHECK(lines(all.str()) == 27);
    CHECK(lines(thin.str()) == 1 + 3 + 1);  // steps 0, 10, 20 and the last one
    CHECK(thin.str().find("\n25,2.5,") != std::string::npos);

    const auto j = io::trace_json(t, 10);
    CHECK(j["rows"].size() == 4);
    CHECK(j["schema_version"] == io::kTraceSchemaVersion);
    const auto s = io::summary_json(t);
    CHECK(s["final_states"].size() == 3);
    CHECK(s["rows"] == 26);
}

TEST_CASE("sweeps") {
    sweep::SweepSpec spec;
    spec.parameter = "T_p";
    spec.values = {4.0, 8.0};
    spec.repetitions = 2;
    spec.base = io::load_config_text(R"({"cfm": {"model": "idm"}, "controller": {"T_h": 20}})");

    spec.threads = 1;
    const auto serial = sweep::run_sweep(spec);
    spec.threads = 4;
    const auto parallel = sweep::run_sweep(spec);
    REQUIRE(serial.size() == 4);
    std::ostringstream a, b;
    sweep::write_sweep_csv(a, spec.parameter, serial);
    sweep::write_sweep_csv(b, spec.parameter, parallel);
    CHECK(a.str() == b.str());

    // common random numbers: same seed across values of one repetition
    CHECK(serial[0].seed == serial[2].seed);
    CHECK(serial[0].seed != serial[1].seed);
    spec.common_random_numbers = false;
    const auto indep = sweep::run_sweep(spec);
    CHECK(indep[0].seed != indep[2].seed);

    spec.parameter = "gamma";
    CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("sweep parameters") {
    const auto base = io::load_config_text("{}");
    auto c = sweep::apply_parameter(base, "tau", 0.2);
    CHECK(c.controller.tau == 0.2);
    CHECK(c.controller.T_p == 50);
    CHECK(c.controller.T_c == 10);
    CHECK(c.controller.T_h == 325);
    CHECK(sweep::apply_parameter(base, "T_c", 1.5).controller.T_c == 15);
    CHECK(sweep::apply_parameter(base, "rho", 1.25).bounds.rho == 1.25);
    CHECK(sweep::apply_parameter(base, "N", 7.0).N == 7);
    CHECK_THROWS_AS(sweep::apply_parameter(base, "nope", 1.0), ValidationError);
}

TEST_CASE("sweep file") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "platoon_sweep_test";
    fs::create_directories(dir);
    std::ofstream(dir / "base.json") << R"({"N": 5})";
    std::ofstream(dir / "sweep.json") << R"({"parameter": "rho", "values": [1.0, 2.0], "base": "base.json"})";
    const auto spec = sweep::load_sweep(dir / "sweep.json");
    CHECK(spec.base.N == 5);
    CHECK(spec.values.size() == 2);
    std::ofstream(dir / "bad.json") << R"({"parameter": "rho", "values": [1.0], "extra": 1})";
    CHECK_THROWS_AS(sweep::load_sweep(dir / "bad.json"), io::ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("rank correlation") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    CHECK(sweep::spearman(x, std::vector<double>{10, 20, 30, 40, 50}) == doctest::Approx(1.0));
    CHECK(sweep::spearman(x, std::vector<double>{5, 4, 3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(sweep::spearman(x, std::vector<double>{1, 3, 2, 5, 4}) == doctest::Approx(0.8));
    CHECK(std::isnan(sweep::spearman(x, std::vector<double>{2, 2, 2, 2, 2})));
    // ties get average ranks
    CHECK(sweep::spearman(x, std::vector<double>{1, 2, 2, 3, 4}) == doctest::Approx(0.974679434).epsilon(1e-8));
}
