#include "qa/exact.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "qa/errors.hpp"

namespace qa {

namespace {

std::size_t dim_within_cap(const IsingInstance& instance, int cap, const char* who) {
    if (instance.n_spins() > cap)
        throw CapacityError(std::string(who) + ": state space too large", instance.n_spins(),
                            cap);
    return std::size_t{1} << instance.n_spins();
}

}  // namespace

std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n) {
    if (n < 1 || a.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("symmetric_eigenvalues: bad dimensions");
    auto at = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r) * n + c]; };

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
        if (off < 1e-26) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double sign = theta >= 0.0 ? 1.0 : -1.0;
                const double t = sign / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int r = 0; r < n; ++r) {
                    const double arp = at(r, p);
                    const double arq = at(r, q);
                    at(r, p) = c * arp - s * arq;
                    at(r, q) = s * arp + c * arq;
                }
                for (int r = 0; r < n; ++r) {
                    const double apr = at(p, r);
                    const double aqr = at(q, r);
                    at(p, r) = c * apr - s * aqr;
                    at(q, r) = s * apr + c * aqr;
                }
            }
        }
    }

    std::vector<double> eig(n);
    for (int r = 0; r < n; ++r) eig[r] = at(r, r);
    return eig;
}

std::vector<double> tfim_hamiltonian_dense(const IsingInstance& instance, double gamma_field,
                                           int cap) {
    const std::size_t dim = dim_within_cap(instance, cap, "tfim_hamiltonian_dense");
    std::vector<double> h(dim * dim, 0.0);
    for (std::size_t x = 0; x < dim; ++x) {
        h[x * dim + x] = instance.energy(state_from_index(instance.n_spins(), x));
        for (int i = 0; i < instance.n_spins(); ++i) {
            const std::size_t y = x ^ (std::size_t{1} << i);
            h[x * dim + y] = -gamma_field;
        }
    }
    return h;
}

double exact_partition_function(const IsingInstance& instance, double beta, double gamma_field,
                                int cap) {
    if (!(beta > 0.0)) throw std::domain_error("exact_partition_function: beta must be > 0");
    const std::size_t dim = dim_within_cap(instance, cap, "exact_partition_function");
    auto eig = symmetric_eigenvalues(tfim_hamiltonian_dense(instance, gamma_field, cap),
                                     static_cast<int>(dim));
    double z = 0.0;
    for (double lambda : eig) z += std::exp(-beta * lambda);
    return z;
}

double trotter_partition_function(const IsingInstance& instance, double beta,
                                  double gamma_field, int trotter_m, int cap) {
    if (!(beta > 0.0)) throw std::domain_error("trotter_partition_function: beta must be > 0");
    if (!(gamma_field > 0.0))
        throw std::domain_error("trotter_partition_function: gamma_field must be > 0");
    if (trotter_m < 1) throw std::invalid_argument("trotter_partition_function: M must be >= 1");
    const std::size_t dim = dim_within_cap(instance, cap, "trotter_partition_function");
    const int n = instance.n_spins();

    // Z_ST = C^{NM} Tr T^M with
    //   T(s, s') = exp((beta/M) (sum J s s + sum h s)) exp(gamma sum_i s_i s'_i),
    //   gamma = (1/2) log coth(beta Gamma / M), C^2 = (1/2) sinh(2 beta Gamma / M).
    const double x = beta * gamma_field / trotter_m;
    const double gamma_bond = 0.5 * (std::log1p(std::exp(-2.0 * x)) - std::log(-std::expm1(-2.0 * x)));

    std::vector<double> onsite(dim);
    std::vector<int> bond_overlap(dim * dim);
    for (std::size_t s = 0; s < dim; ++s) {
        onsite[s] = std::exp(-beta / trotter_m *
                             instance.energy(state_from_index(n, s)));
        for (std::size_t s2 = 0; s2 < dim; ++s2) {
            const int differing = __builtin_popcountll(s ^ s2);
            bond_overlap[s * dim + s2] = n - 2 * differing;  // sum_i s_i s'_i
        }
    }

    std::vector<double> transfer(dim * dim);
    for (std::size_t s = 0; s < dim; ++s)
        for (std::size_t s2 = 0; s2 < dim; ++s2)
            transfer[s * dim + s2] = onsite[s] * std::exp(gamma_bond * bond_overlap[s * dim + s2]);

    // power: result = T^M by repeated multiplication (M is small here).
    std::vector<double> power(transfer);
    std::vector<double> next(dim * dim);
    for (int step = 1; step < trotter_m; ++step) {
        for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t c = 0; c < dim; ++c) {
                double acc = 0.0;
                for (std::size_t k = 0; k < dim; ++k)
                    acc += power[r * dim + k] * transfer[k * dim + c];
                next[r * dim + c] = acc;
            }
        }
        power.swap(next);
    }

    double trace = 0.0;
    for (std::size_t r = 0; r < dim; ++r) trace += power[r * dim + r];

    const double log_prefactor =
        0.5 * static_cast<double>(n) * trotter_m * std::log(0.5 * std::sinh(2.0 * x));
    return std::exp(log_prefactor) * trace;
}

}  // namespace qa
