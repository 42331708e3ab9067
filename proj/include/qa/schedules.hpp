#pragma once

#include <map>
#include <optional>
#include <string>

namespace qa {

// --- Transverse-field <-> Trotter-bond coupling maps -----------------------
//
// The Suzuki-Trotter mapping of the transverse-field Ising model replaces the
// field Gamma by a ferromagnetic bond between adjacent Trotter slices,
//   gamma = (1/2) log coth(beta Gamma / M),
// strictly decreasing in Gamma. Both directions are evaluated through
// atanh/expm1 so they stay accurate when gamma is tiny or huge.

double trotter_coupling(double beta, int trotter_m, double gamma_field);
double inverse_trotter_coupling(double beta, int trotter_m, double trotter_gamma);

// --- Closed-form annealing schedules ----------------------------------------

// Certified boundary field schedule: Gamma(t) = (M/beta) atanh((t+2)^{-2/(R L1)}).
double corollary1_gamma(double t, int trotter_m, double beta, double r_steps, double l1);

// Boundary slice-temperature schedule T1(t) = R L1 / log(t+2).
double theorem3_T1(double t, double r_steps, double l1);

// Log-inverse temperature baseline T(t) = N / log(t+1); valid for t >= 1.
double geman_geman_T(double t, double n_size);

// Power-law slice temperature T1(t) = b/(t+2)^c and the equivalent field
// schedule Gamma(t) = (M/beta) exp(-2 (t+2)^c / b).
double tsallis_T1(double t, double b, double c);
double tsallis_gamma(double t, double b, double c, int trotter_m, double beta);

// Walker-chain boundary schedules: Gamma(t) = b/(t+1)^c, and the multi-flip
// variant Gamma(t) = -(1/(2 dt)) log(1 - 2 b (t+1)^{-1/N}).
double gfmc_gamma(double t, double b, double c);
double gfmc_g2_gamma(double t, double b, double dt, double n_spins);

enum class TimeToThresholdVariant { PimcT1, TsallisT2 };

// Order-of-magnitude step-count estimates for the control to reach delta:
//   t1 ~ exp((R L1 / 2) log(M / (beta delta)))     [power-law field decay]
//   t2 ~ exp(N log log(1/delta))                   [generalized acceptance]
struct TimeToThresholdParams {
    double r_l1 = 1.0;
    int trotter_m = 1;
    double beta = 1.0;
    double n_spins = 1.0;
};

double time_to_threshold(double delta, TimeToThresholdVariant variant,
                         const TimeToThresholdParams& params);

// --- Schedule records --------------------------------------------------------

enum class ScheduleKind {
    Corollary1,   // Gamma(t), params M, beta, R, L1
    PowerGamma,   // Gamma(t) = (M/beta)(t+2)^{-2/(R L1)}, params M, beta, R, L1
    LogInverseT,  // T(t) = N/log(t+1), params N
    TsallisT1,    // T1(t) = b/(t+2)^c, params b, c (optional q, R for the bound flag)
    TsallisGamma, // Gamma(t), params b, c, M, beta (optional q, R)
    GfmcPower,    // Gamma(t) = b/(t+1)^c, params b, c (optional N)
    GfmcG2,       // Gamma(t), params b, dt, N
    Constant,     // params value (+ optional control override)
};

enum class ScheduleControl { GammaField, SliceTemperature, Temperature };
enum class ScheduleDirection { Decreasing, Increasing, ConstantValue };

// A named t -> control-value map. Values are the theorem boundary (equality in
// the bound); `scale` < 1 drops below the certified region, which is how the
// non-convergence experiments are configured. Values that underflow 1e-300 are
// clamped there and flagged.
struct Schedule {
    ScheduleKind kind = ScheduleKind::Constant;
    std::map<std::string, double> params;
    double scale = 1.0;
    std::string id;  // label for traces/summaries; defaults to the kind name

    struct Eval {
        double value;
        bool clamped;
    };

    double value(double t) const { return evaluate(t).value; }
    Eval evaluate(double t) const;

    ScheduleControl control() const;
    ScheduleDirection direction() const;

    // Whether the parameters sit inside the exponent condition of the matching
    // convergence statement (c <= (q-1)/R, c <= 1/N, scale >= 1). nullopt when
    // the kind has no such condition or the needed params were not supplied.
    std::optional<bool> satisfies_theorem_bound() const;

    double param(const std::string& name) const;
    double param_or(const std::string& name, double fallback) const;

    std::string kind_name() const;
    std::string label() const { return id.empty() ? kind_name() : id; }

    std::string to_json() const;
    static Schedule from_json(const std::string& text);

    static constexpr double kFloor = 1e-300;
};

ScheduleKind schedule_kind_from_name(const std::string& name);

}  // namespace qa
