#include "qa/gfmc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

#include "qa/errors.hpp"

namespace qa {

namespace {

double gamma_at(const Schedule& schedule, double t) {
    if (schedule.control() != ScheduleControl::GammaField)
        throw ConfigError("gfmc: schedule must drive the transverse field");
    return schedule.value(t);
}

int hamming(const SpinConfig& a, const SpinConfig& b) {
    if (a.size() != b.size()) throw std::invalid_argument("hamming: size mismatch");
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

void format_g17(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

// Keep raw weights inside a safe dynamic range by folding a common factor
// into pop.log_scale. Relative weights (all any estimator uses) are unchanged.
void renormalize_if_needed(WalkerPopulation& pop) {
    double mean = 0.0;
    for (const auto& w : pop.walkers) mean += w.weight;
    mean /= static_cast<double>(pop.walkers.size());
    if (mean > 1e100 || (mean > 0.0 && mean < 1e-100)) {
        pop.log_scale += std::log(mean);
        for (auto& w : pop.walkers) w.weight /= mean;
    }
}

}  // namespace

double auto_reference_energy(const IsingInstance& instance, bool from_bruteforce, int cap) {
    if (from_bruteforce) return ground_states_bruteforce(instance, cap).e_min;
    // Midpoint of the coupling-sum envelope [-B, +B].
    const double b = instance.energy_bound();
    return 0.5 * (-b + b);
}

double auto_time_step(const IsingInstance& instance, double gamma0, double e_t) {
    const double span = instance.energy_bound() - e_t + instance.n_spins() * gamma0;
    if (!(span > 0.0)) throw ConfigError("auto_time_step: nonpositive envelope span");
    return 0.5 / span;
}

ResolvedGfmc resolve_gfmc(const IsingInstance& instance, const GfmcParams& params,
                          const Schedule& schedule) {
    if (params.n_walkers < 1) throw ConfigError("gfmc: n_walkers must be >= 1");
    ResolvedGfmc r{};
    r.e_t = params.e_t ? *params.e_t : auto_reference_energy(instance);
    r.dt = params.dt ? *params.dt : auto_time_step(instance, gamma_at(schedule, 0.0), r.e_t);
    if (!(r.dt > 0.0)) throw ConfigError("gfmc: dt must be > 0");
    return r;
}

// --- Linear Green's function ----------------------------------------------------

double g1_hat(const SpinConfig& y, const SpinConfig& x, double t, const IsingInstance& instance,
              const ResolvedGfmc& r, const Schedule& schedule) {
    const int d = hamming(y, x);
    if (d == 0) {
        const double diag = 1.0 - r.dt * (instance.energy(x) - r.e_t);
        if (diag < 0.0)
            throw ConfigError("g1_hat: negative diagonal at state index " +
                              std::to_string(index_of_state(x)) +
                              " (dt too large or E_T too low)");
        return diag;
    }
    if (d == 1) return r.dt * gamma_at(schedule, t);
    return 0.0;
}

double weight_w(const SpinConfig& x, double t, const IsingInstance& instance,
                const ResolvedGfmc& r, const Schedule& schedule) {
    return 1.0 - r.dt * (instance.energy(x) - r.e_t) +
           instance.n_spins() * r.dt * gamma_at(schedule, t);
}

G1Row g1_transition(const SpinConfig& x, double t, const IsingInstance& instance,
                    const ResolvedGfmc& r, const Schedule& schedule) {
    const double w = weight_w(x, t, instance, r, schedule);
    const double move = r.dt * gamma_at(schedule, t) / w;
    const double stay = 1.0 - instance.n_spins() * move;
    if (stay < 0.0)
        throw ConfigError("g1_transition: negative stay probability (dt too large)");
    return {stay, move};
}

std::vector<double> stationary_q1(double t, const IsingInstance& instance,
                                  const ResolvedGfmc& r, const Schedule& schedule, int cap) {
    const int n = instance.n_spins();
    if (n > cap) throw CapacityError("stationary_q1: state space too large", n, cap);
    const std::size_t dim = std::size_t{1} << n;
    const double gamma = gamma_at(schedule, t);

    std::vector<double> weight_form(dim);
    double sum_w = 0.0;
    double sum_e = 0.0;
    for (std::size_t x = 0; x < dim; ++x) {
        const double e0 = instance.energy(state_from_index(n, x));
        sum_e += e0;
        weight_form[x] = 1.0 - r.dt * (e0 - r.e_t) + n * r.dt * gamma;
        sum_w += weight_form[x];
    }
    // The simplified closed form divides out sum_x E0(x) = 0 (traceless
    // pairwise terms); make that assumption explicit.
    if (std::abs(sum_e) > 1e-9 * static_cast<double>(dim))
        throw ConfigError("stationary_q1: sum_x E0(x) != 0; simplified form inapplicable");

    const double denom = static_cast<double>(dim) * (1.0 + r.dt * r.e_t + n * r.dt * gamma);
    double worst = 0.0;
    for (std::size_t x = 0; x < dim; ++x) {
        weight_form[x] /= sum_w;
        const double e0 = instance.energy(state_from_index(n, x));
        const double simplified = 1.0 / static_cast<double>(dim) - r.dt * e0 / denom;
        worst = std::max(worst, std::abs(simplified - weight_form[x]));
    }
    if (worst > 1e-12)
        throw ConfigError("stationary_q1: closed forms disagree by " + std::to_string(worst));
    return weight_form;
}

// --- Exponential Green's function -------------------------------------------------

double g2_entry(int hamming_delta, int n_spins, double dt_gamma) {
    if (hamming_delta < 0 || hamming_delta > n_spins)
        throw std::invalid_argument("g2_entry: delta out of range");
    if (!(dt_gamma > 0.0)) {
        // Gamma -> 0 freezes the walk: stay probability 1, all moves 0.
        return hamming_delta == 0 ? 1.0 : 0.0;
    }
    const double th = std::tanh(dt_gamma);
    const double base = std::cosh(dt_gamma) / std::exp(dt_gamma);
    return std::pow(base, n_spins) * std::pow(th, hamming_delta);
}

double g2_transition(const SpinConfig& y, const SpinConfig& x, double t,
                     const ResolvedGfmc& r, const Schedule& schedule) {
    return g2_entry(hamming(y, x), static_cast<int>(x.size()),
                    r.dt * gamma_at(schedule, t));
}

double g2_weight(const SpinConfig& x, double t, const IsingInstance& instance,
                 const ResolvedGfmc& r, const Schedule& schedule) {
    const double gamma = gamma_at(schedule, t);
    return std::exp(r.dt * (instance.n_spins() * gamma - instance.energy(x)));
}

// --- Walker population --------------------------------------------------------------

WalkerPopulation init_population(const IsingInstance& instance, int n_walkers, Rng& rng) {
    if (n_walkers < 1) throw ConfigError("init_population: n_walkers must be >= 1");
    WalkerPopulation pop;
    pop.walkers.reserve(n_walkers);
    for (int i = 0; i < n_walkers; ++i) {
        SpinConfig c(instance.n_spins());
        for (auto& s : c) s = static_cast<std::int8_t>(rng.spin());
        pop.walkers.push_back({c, 1.0, instance.energy(c)});
    }
    return pop;
}

void step_population(WalkerPopulation& pop, double t, const IsingInstance& instance,
                     const GfmcParams& params, const ResolvedGfmc& r, const Schedule& schedule,
                     Rng& rng) {
    const int n = instance.n_spins();
    const double gamma = gamma_at(schedule, t);
    const double dt_gamma = r.dt * gamma;

    if (params.variant == GfmcVariant::G1) {
        for (auto& w : pop.walkers) {
            const double diag = 1.0 - r.dt * (w.energy - r.e_t);
            if (diag < 0.0)
                throw ConfigError("step_population: negative diagonal at state index " +
                                  std::to_string(index_of_state(w.config)));
            const double weight = diag + n * dt_gamma;
            w.weight *= weight;
            const double move_each = dt_gamma / weight;
            const double u = rng.uniform01();
            if (u >= 1.0 - n * move_each) {
                const int i = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n)));
                w.energy += instance.flip_delta(w.config, i);
                w.config[i] *= -1;
            }
        }
    } else {
        // Factorized G2 sampling: each spin flips independently with
        // probability tanh(dt Gamma)/(1 + tanh(dt Gamma)).
        const double th = std::tanh(dt_gamma);
        const double p_flip = th / (1.0 + th);
        for (auto& w : pop.walkers) {
            w.weight *= std::exp(r.dt * (n * gamma - w.energy));
            for (int i = 0; i < n; ++i) {
                if (rng.uniform01() < p_flip) {
                    w.energy += instance.flip_delta(w.config, i);
                    w.config[i] *= -1;
                }
            }
        }
    }

    if (params.control.kind == PopulationControlKind::SplitKill) {
        double mean = 0.0;
        for (const auto& w : pop.walkers) mean += w.weight;
        mean /= static_cast<double>(pop.walkers.size());
        std::vector<Walker> next;
        next.reserve(pop.walkers.size() + 8);
        for (auto& w : pop.walkers) {
            if (w.weight > params.control.split_factor * mean) {
                Walker half = w;
                half.weight *= 0.5;
                next.push_back(half);
                next.push_back(half);
            } else if (w.weight < params.control.kill_factor * mean) {
                const double target = params.control.kill_factor * mean;
                if (rng.uniform01() < w.weight / target) {
                    Walker kept = w;
                    kept.weight = target;  // survival weight, unbiased in expectation
                    next.push_back(kept);
                }
            } else {
                next.push_back(w);
            }
        }
        if (next.empty()) next.push_back(pop.walkers.front());  // never drop to zero walkers
        pop.walkers = std::move(next);
    }

    renormalize_if_needed(pop);
    ++pop.step;
}

std::vector<double> iterate_exact(std::vector<double> psi0, const IsingInstance& instance,
                                  const GfmcParams& params, const ResolvedGfmc& r,
                                  const Schedule& schedule, long long n_steps, int cap) {
    const int n = instance.n_spins();
    if (n > cap) throw CapacityError("iterate_exact: state space too large", n, cap);
    const std::size_t dim = std::size_t{1} << n;
    if (psi0.size() != dim) throw std::invalid_argument("iterate_exact: psi0 has wrong length");
    for (double v : psi0)
        if (v < 0.0 || !std::isfinite(v))
            throw std::invalid_argument("iterate_exact: psi0 must be entrywise non-negative");

    std::vector<double> e0(dim);
    for (std::size_t x = 0; x < dim; ++x) e0[x] = instance.energy(state_from_index(n, x));

    std::vector<double> psi = std::move(psi0);
    std::vector<double> next(dim);
    for (long long step = 0; step < n_steps; ++step) {
        const double t = static_cast<double>(step);
        const double gamma = gamma_at(schedule, t);
        if (params.variant == GfmcVariant::G1) {
            for (std::size_t y = 0; y < dim; ++y) {
                const double diag = 1.0 - r.dt * (e0[y] - r.e_t);
                if (diag < 0.0)
                    throw ConfigError("iterate_exact: negative diagonal at state index " +
                                      std::to_string(y));
                double acc = diag * psi[y];
                for (int i = 0; i < n; ++i) acc += r.dt * gamma * psi[y ^ (std::size_t{1} << i)];
                next[y] = acc;
            }
        } else {
            const double dt_gamma = r.dt * gamma;
            std::vector<double> tanh_pow(n + 1, 1.0);
            for (int d = 1; d <= n; ++d) tanh_pow[d] = tanh_pow[d - 1] * std::tanh(dt_gamma);
            const double base = std::pow(std::cosh(dt_gamma) / std::exp(dt_gamma), n);
            std::vector<double> weighted(dim);
            for (std::size_t x = 0; x < dim; ++x)
                weighted[x] = std::exp(r.dt * (n * gamma - e0[x])) * psi[x];
            for (std::size_t y = 0; y < dim; ++y) {
                double acc = 0.0;
                for (std::size_t x = 0; x < dim; ++x)
                    acc += tanh_pow[__builtin_popcountll(x ^ y)] * weighted[x];
                next[y] = base * acc;
            }
        }
        psi.swap(next);
    }
    return psi;
}

std::vector<std::pair<SpinConfig, double>> weighted_histogram(const WalkerPopulation& pop) {
    std::map<std::uint64_t, double> mass;
    double total = 0.0;
    int n = 0;
    for (const auto& w : pop.walkers) {
        mass[index_of_state(w.config)] += w.weight;
        total += w.weight;
        n = static_cast<int>(w.config.size());
    }
    std::vector<std::pair<SpinConfig, double>> hist;
    hist.reserve(mass.size());
    for (const auto& [idx, m] : mass) hist.emplace_back(state_from_index(n, idx), m / total);
    return hist;
}

GfmcAnswer extract_answer(const WalkerPopulation& pop, const IsingInstance& instance) {
    auto hist = weighted_histogram(pop);
    if (hist.empty()) throw std::invalid_argument("extract_answer: empty population");
    const auto* best = &hist.front();
    for (const auto& entry : hist)
        if (entry.second > best->second) best = &entry;
    return {best->first, instance.energy(best->first), best->second};
}

// --- Annealing driver ------------------------------------------------------------

const char* GfmcTrace::csv_header() {
    return "step,gamma,mean_weight,effective_population,best_energy,histogram_entropy";
}

void GfmcTrace::write_csv(std::ostream& out) const {
    out << csv_header() << "\n";
    std::string line;
    for (const auto& r : rows) {
        line.clear();
        line += std::to_string(r.step);
        line += ',';
        format_g17(line, r.gamma);
        line += ',';
        format_g17(line, r.mean_weight);
        line += ',';
        format_g17(line, r.effective_population);
        line += ',';
        format_g17(line, r.best_energy);
        line += ',';
        format_g17(line, r.histogram_entropy);
        line += '\n';
        out << line;
    }
}

GfmcTrace run_gfmc(const IsingInstance& instance, const GfmcParams& params,
                   const Schedule& schedule, long long horizon, std::uint64_t seed,
                   long long checkpoint_every) {
    if (horizon < 1) throw std::invalid_argument("run_gfmc: horizon must be >= 1");
    const ResolvedGfmc r = resolve_gfmc(instance, params, schedule);

    Rng rng(seed);
    WalkerPopulation pop = init_population(instance, params.n_walkers, rng);

    GfmcTrace trace;
    trace.final_best_energy = std::numeric_limits<double>::infinity();
    for (const auto& w : pop.walkers) {
        if (w.energy < trace.final_best_energy) {
            trace.final_best_energy = w.energy;
            trace.best_config = w.config;
            trace.best_energy_step = 0;
        }
    }

    const long long every =
        checkpoint_every > 0 ? checkpoint_every : std::max<long long>(1, horizon / 200);

    for (long long t = 0; t < horizon; ++t) {
        step_population(pop, static_cast<double>(t), instance, params, r, schedule, rng);
        for (const auto& w : pop.walkers) {
            if (w.energy < trace.final_best_energy) {
                trace.final_best_energy = w.energy;
                trace.best_config = w.config;
                trace.best_energy_step = t + 1;
            }
        }
        if ((t + 1) % every == 0 || t + 1 == horizon) {
            double sum_w = 0.0;
            double sum_w2 = 0.0;
            for (const auto& w : pop.walkers) {
                sum_w += w.weight;
                sum_w2 += w.weight * w.weight;
            }
            double entropy = 0.0;
            for (const auto& [config, p] : weighted_histogram(pop))
                if (p > 0.0) entropy -= p * std::log(p);
            const double log_mean =
                pop.log_scale + std::log(sum_w / static_cast<double>(pop.walkers.size()));
            trace.rows.push_back({t + 1, schedule.value(static_cast<double>(t)),
                                  std::exp(std::min(log_mean, 709.0)), sum_w * sum_w / sum_w2,
                                  trace.final_best_energy, entropy});
        }
    }

    trace.answer = extract_answer(pop, instance);
    trace.steps = horizon;
    return trace;
}

}  // namespace qa
