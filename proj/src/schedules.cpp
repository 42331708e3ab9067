#include "qa/schedules.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

#include "qa/errors.hpp"

namespace qa {

namespace {

// atanh(exp(-2x)) = (1/2) log coth(x), evaluated so that both the x->0
// (log-divergent) and x->inf (underflowing) ends keep full relative accuracy.
double atanh_exp_neg2(double x) {
    const double e = std::exp(-2.0 * x);
    if (e == 0.0) return 0.0;  // coth(x) rounds to 1; the true value underflows
    // Away from e -> 1 the direct form is fully accurate; near 1 (tiny x) the
    // log(1 - e) term is rebuilt from expm1 so nothing cancels.
    if (e < 0.5) return std::atanh(e);
    return 0.5 * (std::log1p(e) - std::log(-std::expm1(-2.0 * x)));
}

void require_positive(double v, const char* name) {
    if (!(v > 0.0)) throw std::domain_error(std::string("schedule: ") + name + " must be > 0");
}

void require_m(int trotter_m) {
    if (trotter_m < 1) throw std::invalid_argument("schedule: trotter_m must be >= 1");
}

}  // namespace

double trotter_coupling(double beta, int trotter_m, double gamma_field) {
    require_m(trotter_m);
    require_positive(beta, "beta");
    require_positive(gamma_field, "gamma_field");
    return atanh_exp_neg2(beta * gamma_field / trotter_m);
}

double inverse_trotter_coupling(double beta, int trotter_m, double trotter_gamma) {
    require_m(trotter_m);
    require_positive(beta, "beta");
    require_positive(trotter_gamma, "trotter_gamma");
    return trotter_m / beta * atanh_exp_neg2(trotter_gamma);
}

double corollary1_gamma(double t, int trotter_m, double beta, double r_steps, double l1) {
    require_m(trotter_m);
    require_positive(beta, "beta");
    require_positive(r_steps, "R");
    require_positive(l1, "L1");
    if (t < 0.0) throw std::domain_error("schedule: t must be >= 0");
    // (t+2)^{-2/(R L1)} < 1, so atanh is finite for every t >= 0.
    return trotter_m / beta * std::atanh(std::pow(t + 2.0, -2.0 / (r_steps * l1)));
}

double theorem3_T1(double t, double r_steps, double l1) {
    require_positive(r_steps, "R");
    require_positive(l1, "L1");
    if (t < 0.0) throw std::domain_error("schedule: t must be >= 0");
    return r_steps * l1 / std::log(t + 2.0);
}

double geman_geman_T(double t, double n_size) {
    require_positive(n_size, "N");
    if (t < 1.0) throw std::domain_error("schedule: log-inverse temperature needs t >= 1");
    return n_size / std::log(t + 1.0);
}

double tsallis_T1(double t, double b, double c) {
    require_positive(b, "b");
    require_positive(c, "c");
    if (t < 0.0) throw std::domain_error("schedule: t must be >= 0");
    return b * std::pow(t + 2.0, -c);
}

double tsallis_gamma(double t, double b, double c, int trotter_m, double beta) {
    require_m(trotter_m);
    require_positive(beta, "beta");
    require_positive(b, "b");
    require_positive(c, "c");
    if (t < 0.0) throw std::domain_error("schedule: t must be >= 0");
    return trotter_m / beta * std::exp(-2.0 * std::pow(t + 2.0, c) / b);
}

double gfmc_gamma(double t, double b, double c) {
    require_positive(b, "b");
    require_positive(c, "c");
    if (t < 0.0) throw std::domain_error("schedule: t must be >= 0");
    return b * std::pow(t + 1.0, -c);
}

double gfmc_g2_gamma(double t, double b, double dt, double n_spins) {
    require_positive(b, "b");
    require_positive(dt, "dt");
    require_positive(n_spins, "N");
    if (t < 0.0) throw std::domain_error("schedule: t must be >= 0");
    const double u = 2.0 * b * std::pow(t + 1.0, -1.0 / n_spins);
    if (u >= 1.0)
        throw std::domain_error("schedule: multi-flip field needs 2b(t+1)^{-1/N} < 1");
    return -std::log1p(-u) / (2.0 * dt);
}

double time_to_threshold(double delta, TimeToThresholdVariant variant,
                         const TimeToThresholdParams& params) {
    if (!(delta > 0.0) || !(delta < 1.0))
        throw std::domain_error("time_to_threshold: delta must lie in (0,1)");
    switch (variant) {
        case TimeToThresholdVariant::PimcT1: {
            require_m(params.trotter_m);
            require_positive(params.beta, "beta");
            require_positive(params.r_l1, "R*L1");
            return std::exp(0.5 * params.r_l1 *
                            std::log(params.trotter_m / (params.beta * delta)));
        }
        case TimeToThresholdVariant::TsallisT2: {
            require_positive(params.n_spins, "N");
            const double inner = std::log(1.0 / delta);
            // t2 = exp(N log log(1/delta)) needs log(1/delta) > 1; the
            // estimate is only meaningful for small thresholds anyway.
            if (inner <= 1.0)
                throw std::domain_error("time_to_threshold: delta must be < 1/e");
            return std::exp(params.n_spins * std::log(inner));
        }
    }
    throw std::logic_error("time_to_threshold: unknown variant");
}

// --- Schedule records --------------------------------------------------------

double Schedule::param(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end())
        throw ConfigError("schedule '" + label() + "': missing param \"" + name + "\"");
    return it->second;
}

double Schedule::param_or(const std::string& name, double fallback) const {
    auto it = params.find(name);
    return it == params.end() ? fallback : it->second;
}

Schedule::Eval Schedule::evaluate(double t) const {
    double v = 0.0;
    switch (kind) {
        case ScheduleKind::Corollary1:
            v = corollary1_gamma(t, static_cast<int>(param("M")), param("beta"), param("R"),
                                 param("L1"));
            break;
        case ScheduleKind::PowerGamma:
            v = static_cast<int>(param("M")) / param("beta") *
                std::pow(t + 2.0, -2.0 / (param("R") * param("L1")));
            break;
        case ScheduleKind::LogInverseT:
            v = geman_geman_T(t, param("N"));
            break;
        case ScheduleKind::TsallisT1:
            v = tsallis_T1(t, param("b"), param("c"));
            break;
        case ScheduleKind::TsallisGamma:
            v = tsallis_gamma(t, param("b"), param("c"), static_cast<int>(param("M")),
                              param("beta"));
            break;
        case ScheduleKind::GfmcPower:
            v = gfmc_gamma(t, param("b"), param("c"));
            break;
        case ScheduleKind::GfmcG2:
            v = gfmc_g2_gamma(t, param("b"), param("dt"), param("N"));
            break;
        case ScheduleKind::Constant:
            v = param("value");
            break;
    }
    v *= scale;
    if (v < kFloor) return {kFloor, true};
    return {v, false};
}

ScheduleControl Schedule::control() const {
    switch (kind) {
        case ScheduleKind::Corollary1:
        case ScheduleKind::PowerGamma:
        case ScheduleKind::TsallisGamma:
        case ScheduleKind::GfmcPower:
        case ScheduleKind::GfmcG2:
            return ScheduleControl::GammaField;
        case ScheduleKind::TsallisT1:
            return ScheduleControl::SliceTemperature;
        case ScheduleKind::LogInverseT:
            return ScheduleControl::Temperature;
        case ScheduleKind::Constant: {
            auto it = params.find("control");
            if (it != params.end()) {
                if (it->second == 1.0) return ScheduleControl::SliceTemperature;
                if (it->second == 2.0) return ScheduleControl::Temperature;
            }
            return ScheduleControl::GammaField;
        }
    }
    return ScheduleControl::GammaField;
}

ScheduleDirection Schedule::direction() const {
    return kind == ScheduleKind::Constant ? ScheduleDirection::ConstantValue
                                          : ScheduleDirection::Decreasing;
}

std::optional<bool> Schedule::satisfies_theorem_bound() const {
    switch (kind) {
        case ScheduleKind::Corollary1:
        case ScheduleKind::PowerGamma:
            // Parameterized directly on the theorem boundary; only scale can
            // push the field below it.
            return scale >= 1.0;
        case ScheduleKind::TsallisT1:
        case ScheduleKind::TsallisGamma: {
            auto q = params.find("q");
            auto r = params.find("R");
            if (q == params.end() || r == params.end()) return std::nullopt;
            if (!(q->second > 1.0) || !(r->second > 0.0)) return std::nullopt;
            return param("c") <= (q->second - 1.0) / r->second && scale >= 1.0;
        }
        case ScheduleKind::GfmcPower: {
            auto n = params.find("N");
            if (n == params.end()) return std::nullopt;
            return param("c") <= 1.0 / n->second;
        }
        case ScheduleKind::GfmcG2:
            // Exponent is pinned to 1/N by the functional form.
            return true;
        case ScheduleKind::LogInverseT:
        case ScheduleKind::Constant:
            return std::nullopt;
    }
    return std::nullopt;
}

std::string Schedule::kind_name() const {
    switch (kind) {
        case ScheduleKind::Corollary1: return "corollary1";
        case ScheduleKind::PowerGamma: return "power_gamma";
        case ScheduleKind::LogInverseT: return "log_inverse_T";
        case ScheduleKind::TsallisT1: return "tsallis_T1";
        case ScheduleKind::TsallisGamma: return "tsallis_gamma";
        case ScheduleKind::GfmcPower: return "gfmc_power";
        case ScheduleKind::GfmcG2: return "gfmc_g2";
        case ScheduleKind::Constant: return "constant";
    }
    return "constant";
}

ScheduleKind schedule_kind_from_name(const std::string& name) {
    if (name == "corollary1") return ScheduleKind::Corollary1;
    if (name == "power_gamma") return ScheduleKind::PowerGamma;
    if (name == "log_inverse_T") return ScheduleKind::LogInverseT;
    if (name == "tsallis_T1") return ScheduleKind::TsallisT1;
    if (name == "tsallis_gamma") return ScheduleKind::TsallisGamma;
    if (name == "gfmc_power") return ScheduleKind::GfmcPower;
    if (name == "gfmc_g2") return ScheduleKind::GfmcG2;
    if (name == "constant") return ScheduleKind::Constant;
    throw ConfigError("unknown schedule kind \"" + name + "\"");
}

std::string Schedule::to_json() const {
    nlohmann::json j;
    j["kind"] = kind_name();
    j["params"] = nlohmann::json::object();
    for (const auto& [k, v] : params) j["params"][k] = v;
    j["scale"] = scale;
    if (!id.empty()) j["id"] = id;
    return j.dump();
}

Schedule Schedule::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("schedule: bad JSON: ") + e.what());
    }
    if (!j.contains("kind") || !j["kind"].is_string())
        throw ConfigError("schedule: missing string field \"kind\"");
    Schedule s;
    s.kind = schedule_kind_from_name(j["kind"].get<std::string>());
    if (j.contains("params")) {
        if (!j["params"].is_object()) throw ConfigError("schedule: \"params\" must be an object");
        for (auto it = j["params"].begin(); it != j["params"].end(); ++it) {
            if (!it.value().is_number())
                throw ConfigError("schedule: param \"" + it.key() + "\" must be a number");
            s.params[it.key()] = it.value().get<double>();
        }
    }
    s.scale = j.value("scale", 1.0);
    if (!(s.scale > 0.0)) throw ConfigError("schedule: scale must be > 0");
    s.id = j.value("id", std::string{});
    // Evaluate once at t=1 so malformed parameter sets fail at load time.
    try {
        s.evaluate(1.0);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("schedule: parameters rejected: ") + e.what());
    }
    return s;
}

}  // namespace qa
