#pragma once

// Car-following models used to emulate human drivers, and a numerical checker
// for the rational-driving, platoon-stability and string-stability conditions
// an eligible model has to satisfy around its equilibria.

#include <complex>
#include <string>
#include <variant>
#include <vector>

#include "platoon/core_model.hpp"

namespace platoon::cfm {

struct CfmInput {
    double delta_p = 0.0;  ///< bumper-to-bumper gap [m]
    double delta_v = 0.0;  ///< predecessor speed minus own speed [m/s]
    double v = 0.0;        ///< own speed [m/s]
};

struct OvmParams {
    double alpha = 1.0;
    double v_d = 30.0;
    double rho = 1.5;
    double s0 = 2.0;

    void validate() const;
    bool operator==(const OvmParams&) const = default;
};

/// Which desired-gap expression the IDM uses.
///   Canonical: s + (v * (v - v_lead)) / (2 sqrt(a b))   (Treiber form)
///   Printed:   s + (v * delta_v) / (2 a b)              (literal alternative)
enum class IdmGapForm { Canonical, Printed };

struct IdmParams {
    double a = 2.0;
    double b = 3.0;
    double gamma = 4.0;
    double v_d = 30.0;
    double rho = 1.5;
    double s0 = 2.0;
    IdmGapForm gap_form = IdmGapForm::Canonical;

    void validate() const;
    bool operator==(const IdmParams&) const = default;
};

using ModelParams = std::variant<OvmParams, IdmParams>;

std::string model_name(const ModelParams& params);

/// u = alpha * (V(delta, s) - v), V = v_d/2 * (tanh(delta) + tanh(s)),
/// s = rho * v + s0, delta = gap - s. Unclamped.
double ovm_accel(const CfmInput& in, const OvmParams& p);

/// Desired dynamic gap used by the IDM interaction term.
double idm_desired_gap(const CfmInput& in, const IdmParams& p);

/// u = a * (1 - (v/v_d)^gamma - (gap*/gap)^2). Unclamped. Throws on gap <= 0.
double idm_accel(const CfmInput& in, const IdmParams& p);

double accel(const CfmInput& in, const ModelParams& params);

/// Acceleration of a vehicle with no predecessor in range.
double free_road_accel(double v, const ModelParams& params);

/// Gap at which a vehicle cruising at speed `v` behind an equally fast
/// predecessor has zero acceleration. Bisection to 1e-10 m.
double equilibrium_gap(double v, const ModelParams& params);

struct Partials {
    double d_gap = 0.0;    ///< df / d(delta_p)
    double d_rel = 0.0;    ///< df / d(delta_v)
    double d_speed = 0.0;  ///< df / dv
};

inline constexpr double kFiniteDifferenceStep = 1e-4;

/// Central-difference partial derivatives of the model at `at`.
Partials partials(const CfmInput& at, const ModelParams& params,
                  double h = kFiniteDifferenceStep);

enum class Verdict { Pass, WeakPass, Fail };
std::string to_string(Verdict v);

struct ProbeReport {
    CfmInput probe;
    double residual_accel = 0.0;
    Partials d;
    Verdict rational = Verdict::Fail;
    std::complex<double> root1, root2;
    Verdict platoon = Verdict::Fail;
    /// f_v^2/2 - f_dv * f_v - f_dp; string stable when positive.
    double string_margin = 0.0;
    /// f_dp / f_v^3 * string_margin, the form that must be negative.
    double string_expression = 0.0;
    Verdict string = Verdict::Fail;

    bool passed() const {
        return rational != Verdict::Fail && platoon != Verdict::Fail && string != Verdict::Fail;
    }
};

struct EligibilityReport {
    std::string model;
    std::vector<ProbeReport> probes;
    bool all_passed() const;
};

/// Thrown when a probe is not an equilibrium or f_v vanishes.
class EligibilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Roots of lambda^2 + b lambda + c.
std::pair<std::complex<double>, std::complex<double>> quadratic_roots(double b, double c);

EligibilityReport check_eligibility(const ModelParams& params,
                                    const std::vector<CfmInput>& probes,
                                    double equilibrium_tol = 1e-6);

/// Equilibrium probes at `count` speeds evenly spread over [v_lo, v_hi].
std::vector<CfmInput> equilibrium_probes(const ModelParams& params, double v_lo, double v_hi,
                                         int count);

}  // namespace platoon::cfm
