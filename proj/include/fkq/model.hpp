#pragma once

#include "fkq/grid.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace fkq {

using RealFn = std::function<double(double)>;

/// A branching diffusion dX = dB - a(X)dt, birth rate b, death rate d, V = b - d.
struct ModelSpec {
    RealFn a;
    RealFn a_prime;
    RealFn V;
    /// Optional; when empty, b = max(V, 0) and d = max(-V, 0).
    RealFn b;
    RealFn d;

    double beta = 0.0;  ///< |ell(x)| <= gamma + beta |x|
    double gamma = 0.0;
    double E_const = 1.0; ///< V(x) <= -E |x| for |x| >= x0
    double x0 = 0.0;
    double M_upper = 0.0; ///< a' - a^2 <= M_upper

    std::string label = "custom";

    double birth(double x) const;
    double death(double x) const;
};

/// Girsanov-reduced problem sampled on a grid.
struct ReducedSpec {
    Grid grid;
    std::vector<double> tildeV;
    std::vector<double> ell;
    std::vector<double> a;
    std::vector<double> a_prime;
    std::vector<double> V;
    double tildeA = 0.0;
    double tildeE = 0.0;
    double tilde_x0 = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
};

/// ell(x) = int_0^x a by adaptive Simpson (absolute tolerance 1e-10).
double ell(const ModelSpec& spec, double x);

/// Adaptive Simpson on [lo, hi]; throws NumericalError past 60 levels.
double adaptive_simpson(const RealFn& f, double lo, double hi, double tol, int max_depth = 60);

ReducedSpec reduce(const ModelSpec& spec, const Grid& grid);

struct HypothesisCheck {
    std::string name;
    bool pass = true;
    double worst_x = 0.0;
    double worst_excess = 0.0; ///< largest violation (<= 0 when the check passes)
    std::string note;
};

struct AssumptionReport {
    std::vector<HypothesisCheck> checks;
    double A_V = 0.0; ///< sup of V over the grid

    bool all_pass() const;
    const HypothesisCheck& get(const std::string& name) const;
};

AssumptionReport validate_assumptions(const ModelSpec& spec, const Grid& grid);

/// Inputs for removing a state-dependent diffusion coefficient:
/// dY = sigma(Y) dB - a0(Y) dt.
struct SigmaInput {
    RealFn sigma, sigma_prime, sigma_second;
    RealFn a0, a0_prime;
    RealFn V;
    RealFn b, d; ///< optional
    double E_const = 1.0;
    double x0 = 0.0;
};

struct SigmaReduction {
    ModelSpec spec;     ///< unit-diffusion model in x = G(y)
    Grid grid;          ///< image of the y-domain
    std::shared_ptr<const std::vector<double>> y_nodes, G_nodes;
    RealFn G, G_inv;
};

/// G(y) = int_0^y du / sigma(u); a = (a0/sigma + sigma'/2) o G^-1, V_new = V o G^-1.
SigmaReduction reduce_sigma(const SigmaInput& in, const Grid& y_domain);

} // namespace fkq
