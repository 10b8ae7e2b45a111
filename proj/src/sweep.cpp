#include "platoon/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "platoon/config_io.hpp"
#include "platoon/sim_engine.hpp"

namespace platoon::sweep {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

bool known_parameter(const std::string& name) {
    return std::any_of(std::begin(kParameters), std::end(kParameters),
                       [&](const char* p) { return name == p; });
}

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

void SweepSpec::validate() const {
    if (!known_parameter(parameter))
        throw ValidationError("sweep parameter '" + parameter + "' is not one of T_p, T_c, tau, rho, N");
    if (values.empty()) throw ValidationError("sweep needs at least one value");
    if (repetitions < 1) throw ValidationError("sweep repetitions must be at least 1");
    if (threads < 0) throw ValidationError("sweep threads must be non-negative");
    for (double v : values) {
        if (!std::isfinite(v)) throw ValidationError("sweep values must be finite");
        const auto c = apply_parameter(base, parameter, v);
        c.controller.validate();
        c.bounds.validate();
        if (c.N < 2) throw ValidationError("swept N must be at least 2");
    }
}

ScenarioConfig apply_parameter(const ScenarioConfig& base, const std::string& name, double value) {
    ScenarioConfig c = base;
    auto& k = c.controller;
    if (name == "T_p") {
        k.T_p = io::seconds_to_steps(value, k.tau);
    } else if (name == "T_c") {
        k.T_c = io::seconds_to_steps(value, k.tau);
    } else if (name == "tau") {
        if (!(value > 0)) throw ValidationError("swept tau must be positive");
        const double old = k.tau;
        k.T_p = io::seconds_to_steps(k.T_p * old, value);
        k.T_c = io::seconds_to_steps(k.T_c * old, value);
        k.T_h = io::seconds_to_steps(k.T_h * old, value);
        k.tau = value;
    } else if (name == "rho") {
        c.bounds.rho = value;
    } else if (name == "N") {
        c.N = static_cast<int>(std::lround(value));
    } else {
        throw ValidationError("unknown sweep parameter '" + name + "'");
    }
    return c;
}

std::uint64_t derive_seed(std::uint64_t base, int value_index, int repetition, bool include_value) {
    std::uint64_t s = splitmix64(base);
    s = splitmix64(s ^ static_cast<std::uint64_t>(repetition));
    if (include_value) s = splitmix64(s ^ (static_cast<std::uint64_t>(value_index) << 32));
    return s;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    spec.validate();
    const int n_values = static_cast<int>(spec.values.size());
    const int total = n_values * spec.repetitions;
    std::vector<SweepRow> rows(static_cast<std::size_t>(total));

    auto run_one = [&](int job) {
        SweepRow& row = rows[static_cast<std::size_t>(job)];
        row.value_index = job / spec.repetitions;
        row.repetition = job % spec.repetitions;
        row.value = spec.values[static_cast<std::size_t>(row.value_index)];
        row.seed = derive_seed(spec.base.init.seed, row.value_index, row.repetition,
                               !spec.common_random_numbers);
        try {
            ScenarioConfig c = apply_parameter(spec.base, spec.parameter, row.value);
            c.init.seed = row.seed;
            const auto trace = sim::run(c);
            const auto& s = trace.summary;
            row.status = s.collision ? "collision" : "ok";
            row.formed = s.formation_time.has_value();
            row.formation_time = s.formation_time;
            row.hard_violations = s.violations.hard();
            row.rear_end_violations = s.violations.rear_end;
            row.speed_violations = s.violations.cav_speed + s.violations.hdv_speed;
            row.mean_abs_u = s.mean_abs_u;
        } catch (const std::exception& e) {
            row.status = std::string("error: ") + e.what();
        }
    };

    int threads = spec.threads > 0 ? spec.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, std::max(1, total));
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int job = next++; job < total; job = next++) run_one(job);
        });
    for (auto& th : pool) th.join();
    return rows;
}

SweepSpec load_sweep(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io::ConfigError(path.string(), "cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    const auto j = io::parse_json_text(ss.str());
    if (!j.is_object()) throw io::ConfigError("<root>", "expected an object");

    SweepSpec spec;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& key = it.key();
        const auto& v = it.value();
        if (key == "parameter") {
            if (!v.is_string()) throw io::ConfigError(key, "expected a string");
            spec.parameter = v.get<std::string>();
        } else if (key == "values") {
            if (!v.is_array()) throw io::ConfigError(key, "expected an array of numbers");
            for (const auto& x : v) {
                if (!x.is_number()) throw io::ConfigError(key, "expected an array of numbers");
                spec.values.push_back(x.get<double>());
            }
        } else if (key == "repetitions") {
            if (!v.is_number_integer()) throw io::ConfigError(key, "expected an integer");
            spec.repetitions = v.get<int>();
        } else if (key == "threads") {
            if (!v.is_number_integer()) throw io::ConfigError(key, "expected an integer");
            spec.threads = v.get<int>();
        } else if (key == "common_random_numbers") {
            if (!v.is_boolean()) throw io::ConfigError(key, "expected true or false");
            spec.common_random_numbers = v.get<bool>();
        } else if (key == "base") {
            if (v.is_string()) {
                auto base_path = std::filesystem::path(v.get<std::string>());
                if (base_path.is_relative()) base_path = path.parent_path() / base_path;
                spec.base = io::load_config(base_path);
            } else {
                spec.base = io::config_from_json(v);
                spec.base.validate();
            }
        } else {
            throw io::ConfigError(key, "unknown field");
        }
    }
    spec.validate();
    return spec;
}

void write_sweep_csv(std::ostream& out, const std::string& parameter, std::span<const SweepRow> rows) {
    out << "parameter,value_index,value,repetition,seed,status,formed,formation_time,"
           "hard_violations,rear_end_violations,speed_violations,mean_abs_u\n";
    char buf[64];
    for (const auto& r : rows) {
        std::string status = r.status;
        std::replace(status.begin(), status.end(), ',', ';');
        std::replace(status.begin(), status.end(), '\n', ' ');
        out << parameter << ',' << r.value_index << ',';
        std::snprintf(buf, sizeof buf, "%.12g", r.value);
        out << buf << ',' << r.repetition << ',' << r.seed << ',' << status << ','
            << (r.formed ? 1 : 0) << ',';
        if (r.formation_time) {
            std::snprintf(buf, sizeof buf, "%.12g", *r.formation_time);
            out << buf;
        }
        std::snprintf(buf, sizeof buf, "%.12g", r.mean_abs_u);
        out << ',' << r.hard_violations << ',' << r.rear_end_violations << ',' << r.speed_violations
            << ',' << buf << '\n';
    }
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0 || syy == 0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

std::vector<double> mean_formation_times(const SweepSpec& spec, std::span<const SweepRow> rows) {
    std::vector<double> sum(spec.values.size(), 0.0);
    std::vector<int> count(spec.values.size(), 0);
    for (const auto& r : rows) {
        if (!r.formation_time) continue;
        sum[static_cast<std::size_t>(r.value_index)] += *r.formation_time;
        ++count[static_cast<std::size_t>(r.value_index)];
    }
    std::vector<double> out(sum.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < out.size(); ++i)
        if (count[i]) out[i] = sum[i] / count[i];
    return out;
}

}  // namespace platoon::sweep
