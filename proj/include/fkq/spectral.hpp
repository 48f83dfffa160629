#pragma once

#include "fkq/grid.hpp"
#include "fkq/model.hpp"

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace fkq {

/// Grid eigenpairs of H = -1/2 d^2 - tildeV with Dirichlet walls.
struct SpectralBasis {
    Grid grid;
    std::vector<double> lambdas;
    std::vector<std::vector<double>> psis;
    std::vector<std::vector<double>> dpsis;
    std::vector<std::vector<double>> thetas;
    std::vector<double> ell;
    std::vector<double> tildeV;
    std::vector<double> a;
    std::vector<double> a_prime;
    std::vector<double> V;
    double tildeA = 0.0, tildeE = 0.0, tilde_x0 = 0.0, beta = 0.0, gamma = 0.0;
    bool richardson = false;

    std::size_t K() const { return lambdas.size(); }
    std::size_t n() const { return grid.n(); }
};

struct SolveOptions {
    /// Combine the h and h/2 solutions as (4 fine - coarse)/3 and re-orthonormalize.
    bool richardson = true;
    double degeneracy_gap = 1e-9;
};

SpectralBasis solve_eigen(const ReducedSpec& reduced, std::size_t K, const SolveOptions& opt = {});

/// Raw 3-point eigenpairs only (no derived fields); exposed for tests.
void tridiagonal_eigenpairs(const std::vector<double>& tildeV, double h, std::size_t K,
                            std::vector<double>& lambdas, std::vector<std::vector<double>>& psis,
                            double degeneracy_gap = 1e-9);

/// Number of strict sign changes, skipping exact zeros.
int sign_changes(const std::vector<double>& f);

struct BoundEntry {
    std::size_t k = 0;
    bool applicable = true;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin() const { return rhs - lhs; }
    bool pass() const { return !applicable || lhs <= rhs; }
};

struct BoundReport {
    std::string name;
    std::vector<BoundEntry> entries;
    bool consistent = true; ///< false when the basis contradicts a proven identity
    std::string note;
    /// Named constants used to build the right-hand side.
    std::vector<std::pair<std::string, double>> constants;

    bool all_pass() const;
    double constant(const std::string& key) const;
};

/// lambda_k >= (E~^2 / (8 x~0 + 2))^{1/3} k^{1/3} whenever lambda_k > S0.
BoundReport check_growth_bound(const SpectralBasis& basis);
double growth_constant(double tilde_x0, double tildeE);

/// max |Psi_k| <= (e/pi)^{1/4} (lambda_k + A~)^{1/4}.
BoundReport check_sup_bound(const SpectralBasis& basis);

/// e^{R|x|} |Psi_k(x)| <= C1(R) e^{lambda_k t0(R)}.
BoundReport check_decay_bound(const SpectralBasis& basis, double R);

struct DecayConstants {
    double t0, x1, Gamma, C1;
};
DecayConstants decay_constants(double R, double tildeA, double tildeE, double tilde_x0);
/// log C1, finite even when C1 itself overflows.
double log_C1(double R, double tildeA, double tildeE, double tilde_x0);

/// |Psi_k'(x*)| <= A1 + A2 lambda_k for k >= k0, constants from the Wronskian argument.
BoundReport check_derivative_bound(const SpectralBasis& basis, std::size_t kmax);

} // namespace fkq
