#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qa/rng.hpp"

namespace qa {

// A classical spin configuration; entries are exactly +-1.
using SpinConfig = std::vector<std::int8_t>;

// Classical Ising cost function
//   E0(s) = - sum_{i<j} J_ij s_i s_j - sum_i h_i s_i
// over N spins. Couplings are stored once per unordered pair (i < j); the
// adjacency lists used for O(degree) single-flip energy deltas are built at
// construction. Immutable afterwards, safe to share across threads.
class IsingInstance {
public:
    struct Coupling {
        int i;
        int j;  // i < j
        double value;
    };

    IsingInstance(int n_spins, std::vector<Coupling> couplings,
                  std::vector<double> fields = {});

    int n_spins() const { return n_spins_; }
    const std::vector<Coupling>& couplings() const { return couplings_; }
    const std::vector<double>& fields() const { return fields_; }
    bool has_fields() const { return has_fields_; }

    double energy(const SpinConfig& config) const;

    // Energy change of flipping spin i: 2 s_i (sum_j J_ij s_j + h_i).
    double flip_delta(const SpinConfig& config, int i) const;

    // sum_j |J_ij| + |h_i| for spin i; 2x this bounds any single-flip delta.
    double local_coupling_sum(int i) const;

    // E0 is bounded by +- (sum |J| + sum |h|).
    double energy_bound() const { return energy_bound_; }

    std::string to_json() const;
    static IsingInstance from_json(const std::string& text);
    static IsingInstance load(const std::string& path);
    void save(const std::string& path) const;

    bool operator==(const IsingInstance& other) const;

    // Per-spin adjacency: list of (neighbor index, J value).
    const std::vector<std::pair<int, double>>& adjacency(int i) const {
        return adjacency_[i];
    }

private:
    int n_spins_;
    std::vector<Coupling> couplings_;
    std::vector<double> fields_;
    bool has_fields_ = false;
    double energy_bound_ = 0.0;
    std::vector<std::vector<std::pair<int, double>>> adjacency_;
};

enum class MoveKind { SingleSpinFlip, AllToAll };

// Time-independent proposal distribution P(y,x): symmetric, zero on the
// diagonal, rows summing to one, and connecting the whole state space.
struct MoveSet {
    MoveKind kind = MoveKind::SingleSpinFlip;

    // P(y,x) for y != x reachable in one step; n is the spin count.
    double generation_probability(int n) const;
};

inline constexpr int kDefaultEnumerationCap = 20;

// All 2^n configurations in canonical order: state k has spin i equal to
// +1 when bit i of k is clear. This ordering is shared by every matrix and
// CSV this toolkit emits.
std::vector<SpinConfig> enumerate_states(int n, int cap = kDefaultEnumerationCap);

SpinConfig state_from_index(int n, std::uint64_t index);
std::uint64_t index_of_state(const SpinConfig& config);

// Single-step neighborhood {y | P(y,x) > 0}.
std::vector<SpinConfig> neighbors(const SpinConfig& config, const MoveSet& moves,
                                  int cap = kDefaultEnumerationCap);

struct GroundStates {
    double e_min;
    std::vector<SpinConfig> minimizers;
};

GroundStates ground_states_bruteforce(const IsingInstance& instance,
                                      int cap = kDefaultEnumerationCap);

enum class CouplingDist { PlusMinusJ, Gaussian };

// Fully connected instance with i.i.d. couplings; deterministic in the seed.
IsingInstance random_instance(int n, CouplingDist dist, std::uint64_t seed,
                              double sigma = 1.0);

}  // namespace qa
