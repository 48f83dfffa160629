#pragma once

#include "fkq/model.hpp"

#include <functional>

namespace fkq::hermite {

/// V(y) = 1 - y^2/2, dY = sigma (dB - c dt), b = 1, d = y^2/2.
struct HermiteModel {
    double sigma = 1.0;
    double c = 0.0;
};

/// Physicists' Hermite polynomial by the three-term recurrence.
double hermite_poly(int k, double x);

/// Eigenpair of 1/2 d^2 - x^2/(2 sigma^2): lambda = (k + 1/2)/sigma.
struct ClosedEigen {
    double lambda;
    std::function<double(double)> psi;
};
ClosedEigen closed_eigen(const HermiteModel& m, int k);
double closed_psi(const HermiteModel& m, int k, double x);

/// The literal closed form 1 - c^2/2 - sigma/2.
double closed_lambda0_original(const HermiteModel& m);
/// sigma/2 + c^2/2 - 1: the rate with P_t Theta_0 = e^{-lambda_0 t} Theta_0.
double principal_decay_rate(const HermiteModel& m);

/// Closed forms in the original coordinate y.
double closed_qsd(const HermiteModel& m, double y);
double closed_theta0(const HermiteModel& m, double y);
double closed_mass_limit(const HermiteModel& m, double y);

struct QParams {
    double drift_rate;
    double diffusion;
    double invariant_variance;
};
QParams closed_q_params(const HermiteModel& m);

/// Unit-diffusion model in x = y/sigma: a = c, V = 1 - sigma^2 x^2/2.
ModelSpec reduced_model(const HermiteModel& m);

/// The original-coordinate description, ready for reduce_sigma.
SigmaInput original_input(const HermiteModel& m);

/// Zero-drift model whose potential is -x^2/(2 sigma^2) (the R-picture).
ModelSpec r_picture_model(const HermiteModel& m);

} // namespace fkq::hermite
