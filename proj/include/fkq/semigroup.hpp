#pragma once

#include "fkq/spectral.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace fkq {

struct KernelValue {
    double value = 0.0;
    double tail = 0.0;              ///< estimated size of the omitted modes
    bool truncation_warning = false;
    double warning_bound = 0.0;     ///< e^{A~ t}/sqrt(2 pi t) when the tail is not resolved
};

struct GapReport {
    std::vector<double> times;
    std::vector<double> sup_errors;
    std::vector<bool> saturated;
    std::vector<double> log_bound; ///< log(A D(kappa)) - (lambda_1 - lambda_0) t
    double fitted_rate = 0.0;
    double expected_rate = 0.0;
    double A = 0.0;
    double log_D = 0.0;
    double kappa = 0.0;
    double burn_in = 0.0;
    bool bound_holds = true;
    bool monotone_after_burn_in = true;
};

struct HeatResidual {
    double backward;        ///< |D_t p - L_x p|, generator acting on the initial point
    double forward;         ///< |D_t p - L*_y p|, adjoint acting on the final point
    double generator_in_y;  ///< |D_t p - L_y p|
    double adjoint_in_x;    ///< |D_t p - L*_x p|
};

/// Truncated eigenfunction series for the kernels of P_t and its conjugates.
class KernelEvaluator {
public:
    explicit KernelEvaluator(std::shared_ptr<const SpectralBasis> basis, double tail_tol = 1e-10);

    const SpectralBasis& basis() const { return *basis_; }
    std::shared_ptr<const SpectralBasis> basis_ptr() const { return basis_; }
    double tail_tol() const { return tail_tol_; }
    double lambda0() const { return basis_->lambdas[0]; }
    double gap() const { return basis_->lambdas[1] - basis_->lambdas[0]; }

    /// Omitted-mode estimate sum_{k>=K} e^{-lambda_k t} (e/pi)^{1/2} (lambda_k + A~)^{1/2},
    /// with lambda_k extrapolated from lambda_{K-1} at the k^{1/3} rate.
    double tail_bound(double t) const;

    KernelValue ptilde_eval(double t, double x, double y) const;
    double ptilde(double t, double x, double y) const { return ptilde_eval(t, x, y).value; }
    double p(double t, double x, double y) const;
    double r(double t, double x, double y) const;
    double q(double t, double x, double y) const;

    double ell_at(double x) const;
    double psi_at(std::size_t k, double x) const;
    double theta_at(std::size_t k, double x) const;

    /// <Theta_k, phi>_rho for every mode.
    std::vector<double> coefficients(std::span<const double> phi) const;
    /// sum_k e^{-lambda_k t} c_k Theta_k on the grid.
    std::vector<double> synthesize(std::span<const double> coeffs, double t) const;

    double apply_Pt(std::span<const double> phi, double t, double x) const;
    std::vector<double> apply_Pt_grid(std::span<const double> phi, double t) const;
    /// Largest exponential growth rate of phi that the wall region still resolves.
    double achievable_decay() const;
    bool growth_warning(double kappa) const { return kappa >= achievable_decay(); }

    std::vector<double> projection_Pi(std::span<const double> g) const;

    double mass(double t, double x) const;
    std::vector<double> mass_grid(double t) const;

    GapReport gap_decay(std::span<const double> g, double kappa, const std::vector<double>& times) const;
    /// log D(kappa) with the constants carried by the basis.
    double log_D(double kappa) const;

    HeatResidual heat_residual(double t, double x, double y, double dt, double dh) const;

private:
    std::vector<double> modes_at(std::span<const std::vector<double>> fields, double x) const;

    std::shared_ptr<const SpectralBasis> basis_;
    double tail_tol_;
    mutable std::mutex cache_mutex_;
    mutable std::map<double, double> tail_cache_;
};

/// Least-squares slope of log(values) against times, negated (a decay rate).
double fit_decay_rate(std::span<const double> times, std::span<const double> values);

} // namespace fkq
