#pragma once

#include <vector>

#include "qa/ising.hpp"

namespace qa {

// Eigenvalues of a dense symmetric matrix (row-major, n x n) by cyclic Jacobi
// rotations; the input copy is destroyed. Intended for the small spaces this
// project enumerates (n <= a few hundred).
std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n);

// Dense 2^N x 2^N transverse-field Hamiltonian: diagonal E0(x), off-diagonal
// -Gamma between configurations one spin flip apart.
std::vector<double> tfim_hamiltonian_dense(const IsingInstance& instance, double gamma_field,
                                           int cap = 10);

// Tr exp(-beta H) by full diagonalization.
double exact_partition_function(const IsingInstance& instance, double beta, double gamma_field,
                                int cap = 10);

// Replica-system partition function at Trotter number M, including the
// (1/2 sinh(2 beta Gamma / M))^{NM/2} prefactor, evaluated exactly with a
// transfer matrix over single-slice configurations. Approaches the quantum
// partition function as M grows.
double trotter_partition_function(const IsingInstance& instance, double beta,
                                  double gamma_field, int trotter_m, int cap = 10);

}  // namespace qa
