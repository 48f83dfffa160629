#pragma once

#include "fkq/semigroup.hpp"

#include <span>
#include <string>
#include <vector>

namespace fkq {

/// nu = Theta_0 e^{-2 ell} / Z on the grid.
struct QsdMeasure {
    std::vector<double> density;
    double Z = 0.0;
};

QsdMeasure build_qsd(const SpectralBasis& basis);

struct FixedPointEntry {
    std::string label;
    double t = 0.0;
    double lhs = 0.0;        ///< int P_t phi dnu
    double rhs = 0.0;        ///< e^{-lambda_0 t} int phi dnu
    double sup_phi = 0.0;
    double ratio_error = 0.0; ///< |int P_t phi dnu / int P_t 1 dnu - int phi dnu|
    bool pass = false;
};

struct FixedPointReport {
    std::vector<FixedPointEntry> entries;
    double tolerance = 1e-6;
    bool all_pass() const;
};

struct TestFunction {
    std::string label;
    std::vector<double> values;
};

FixedPointReport check_qsd_fixed_point(const KernelEvaluator& ev, const QsdMeasure& nu, double t,
                                       const std::vector<TestFunction>& test_functions, double tolerance = 1e-6);

/// mu_t(y) proportional to int p(t, x, y) mu0(x) dx, renormalized.
std::vector<double> conditional_evolution(const KernelEvaluator& ev, std::span<const double> mu0, double t);

/// 1/2 trapezoid int |mu - nu|.
double tv_distance(const Grid& grid, std::span<const double> mu, std::span<const double> nu);

/// Narrow Gaussian of width 3h standing in for a point mass.
std::vector<double> point_mass(const Grid& grid, double x);

} // namespace fkq
