#include "platoon/cfm.hpp"

#include <cmath>
#include <sstream>
#include <tuple>

namespace platoon::cfm {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Derivative of f is treated as zero below this magnitude when grading the
// rational-driving signs.
constexpr double kZeroDerivative = 1e-8;

}  // namespace

void OvmParams::validate() const {
    if (!(alpha > 0)) throw ValidationError("OVM alpha must be positive");
    if (!(v_d > 0)) throw ValidationError("OVM v_d must be positive");
    if (!(rho > 0) || !(s0 > 0)) throw ValidationError("OVM rho and s0 must be positive");
}

void IdmParams::validate() const {
    if (!(a > 0)) throw ValidationError("IDM a must be positive");
    if (!(b > 0)) throw ValidationError("IDM b must be positive");
    if (!(gamma >= 1)) throw ValidationError("IDM gamma must be >= 1");
    if (!(v_d > 0)) throw ValidationError("IDM v_d must be positive");
    if (!(rho > 0) || !(s0 > 0)) throw ValidationError("IDM rho and s0 must be positive");
}

std::string model_name(const ModelParams& params) {
    return std::holds_alternative<OvmParams>(params) ? "ovm" : "idm";
}

double ovm_accel(const CfmInput& in, const OvmParams& p) {
    const double s = p.rho * in.v + p.s0;
    const double delta = in.delta_p - s;
    const double v_opt = 0.5 * p.v_d * (std::tanh(delta) + std::tanh(s));
    return p.alpha * (v_opt - in.v);
}

double idm_desired_gap(const CfmInput& in, const IdmParams& p) {
    const double s = p.rho * in.v + p.s0;
    switch (p.gap_form) {
        case IdmGapForm::Canonical:
            // delta_v is leader minus follower, so closing in means delta_v < 0.
            return s - in.v * in.delta_v / (2.0 * std::sqrt(p.a * p.b));
        case IdmGapForm::Printed:
            return s + in.v * in.delta_v / (2.0 * p.a * p.b);
    }
    return s;
}

double idm_accel(const CfmInput& in, const IdmParams& p) {
    if (!(in.delta_p > 0)) {
        std::ostringstream os;
        os << "IDM undefined at non-positive gap " << in.delta_p << " m";
        throw ValidationError(os.str());
    }
    const double ratio = idm_desired_gap(in, p) / in.delta_p;
    return p.a * (1.0 - std::pow(in.v / p.v_d, p.gamma) - ratio * ratio);
}

double accel(const CfmInput& in, const ModelParams& params) {
    return std::visit(Overloaded{[&](const OvmParams& p) { return ovm_accel(in, p); },
                                 [&](const IdmParams& p) { return idm_accel(in, p); }},
                      params);
}

double free_road_accel(double v, const ModelParams& params) {
    return std::visit(
        Overloaded{[&](const OvmParams& p) {
                       const double s = p.rho * v + p.s0;
                       return p.alpha * (0.5 * p.v_d * (1.0 + std::tanh(s)) - v);
                   },
                   [&](const IdmParams& p) { return p.a * (1.0 - std::pow(v / p.v_d, p.gamma)); }},
        params);
}

double equilibrium_gap(double v, const ModelParams& params) {
    auto f = [&](double gap) { return accel({gap, 0.0, v}, params); };
    double lo = 1e-9;
    double hi = 1e6;
    if (!(f(lo) < 0.0 && f(hi) > 0.0)) {
        std::ostringstream os;
        os << model_name(params) << " has no equilibrium gap at v = " << v << " m/s";
        throw ValidationError(os.str());
    }
    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Partials partials(const CfmInput& at, const ModelParams& params, double h) {
    auto eval = [&](double dp, double dv, double v) {
        return accel({at.delta_p + dp, at.delta_v + dv, at.v + v}, params);
    };
    Partials d;
    d.d_gap = (eval(h, 0, 0) - eval(-h, 0, 0)) / (2 * h);
    d.d_rel = (eval(0, h, 0) - eval(0, -h, 0)) / (2 * h);
    d.d_speed = (eval(0, 0, h) - eval(0, 0, -h)) / (2 * h);
    return d;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::WeakPass: return "weak-pass";
        case Verdict::Fail: return "fail";
    }
    return "fail";
}

bool EligibilityReport::all_passed() const {
    for (const auto& p : probes)
        if (!p.passed()) return false;
    return !probes.empty();
}

std::pair<std::complex<double>, std::complex<double>> quadratic_roots(double b, double c) {
    const double disc = b * b - 4.0 * c;
    if (disc >= 0.0) {
        const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
        if (q == 0.0) return {0.0, 0.0};
        return {q, c / q};
    }
    const double re = -0.5 * b;
    const double im = 0.5 * std::sqrt(-disc);
    return {{re, im}, {re, -im}};
}

EligibilityReport check_eligibility(const ModelParams& params, const std::vector<CfmInput>& probes,
                                    double equilibrium_tol) {
    EligibilityReport report;
    report.model = model_name(params);
    for (const auto& probe : probes) {
        ProbeReport r;
        r.probe = probe;
        r.residual_accel = accel(probe, params);
        if (!(std::abs(r.residual_accel) < equilibrium_tol)) {
            std::ostringstream os;
            os << "probe (gap=" << probe.delta_p << ", dv=" << probe.delta_v << ", v=" << probe.v
               << ") is not an equilibrium: f = " << r.residual_accel;
            throw EligibilityError(os.str());
        }
        r.d = partials(probe, params);
        const auto& d = r.d;

        if (d.d_gap > 0 && d.d_speed < 0) {
            if (d.d_rel > kZeroDerivative)
                r.rational = Verdict::Pass;
            else if (std::abs(d.d_rel) <= kZeroDerivative)
                r.rational = Verdict::WeakPass;
        }

        std::tie(r.root1, r.root2) = quadratic_roots(d.d_rel - d.d_speed, d.d_gap);
        r.platoon = (r.root1.real() < 0 && r.root2.real() < 0) ? Verdict::Pass : Verdict::Fail;

        if (std::abs(d.d_speed) < kZeroDerivative)
            throw EligibilityError("df/dv vanishes at probe v = " + std::to_string(probe.v));
        r.string_margin = 0.5 * d.d_speed * d.d_speed - d.d_speed * d.d_rel - d.d_gap;
        r.string_expression = d.d_gap / std::pow(d.d_speed, 3) * r.string_margin;
        r.string = (r.string_margin > 0 && r.string_expression < 0) ? Verdict::Pass : Verdict::Fail;

        report.probes.push_back(r);
    }
    return report;
}

std::vector<CfmInput> equilibrium_probes(const ModelParams& params, double v_lo, double v_hi,
                                         int count) {
    std::vector<CfmInput> out;
    for (int i = 0; i < count; ++i) {
        const double v = count == 1 ? v_lo : v_lo + (v_hi - v_lo) * i / (count - 1);
        out.push_back({equilibrium_gap(v, params), 0.0, v});
    }
    return out;
}

}  // namespace platoon::cfm
