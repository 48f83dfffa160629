#pragma once

#include "fkq/rng.hpp"
#include "fkq/semigroup.hpp"
#include "fkq/stats.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace fkq {

/// Diffusion dY = dB + (Psi_0'/Psi_0)(Y) dt with a clamped, cubic-interpolated drift.
class QProcessModel {
public:
    /// Drift from the numerical principal eigenfunction.
    explicit QProcessModel(std::shared_ptr<const SpectralBasis> basis, double sde_clip = 50.0);
    /// Drift from an explicit function, sampled on the same grid.
    QProcessModel(std::shared_ptr<const SpectralBasis> basis, const std::function<double(double)>& drift,
                  double sde_clip = 50.0);

    double drift(double x) const;
    const std::vector<double>& drift_samples() const { return drift_; }
    double wall() const { return wall_; }
    double clip() const { return clip_; }
    const SpectralBasis& basis() const { return *basis_; }

private:
    std::shared_ptr<const SpectralBasis> basis_;
    std::vector<double> drift_;
    double clip_;
    double wall_;
};

struct QPath {
    std::vector<double> samples; ///< positions at multiples of the sampling interval
    std::size_t boundary_events = 0;
};

/// Euler-Maruyama path; positions recorded every `sample_every` time units.
QPath simulate_q(const QProcessModel& model, double x0, double T, double dt, Rng& rng, double sample_every = 1.0);

struct QLimitReport {
    double target = 0.0;              ///< Q_s(phi)(x)
    std::vector<double> t_values;
    std::vector<double> ratios;
    std::vector<double> errors;
    double fitted_rate = 0.0;
    double expected_rate = 0.0;
};

QLimitReport check_q_limit(const KernelEvaluator& ev, double x, double s, const std::vector<double>& t_values,
                           std::span<const double> phi);

struct OccupationConfig {
    double T = 1000.0;
    double dt = 5e-3;
    double burn_in = 50.0;
    double sample_every = 1.0;
    std::size_t replicas = 32;
    double x0 = 0.0;
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

struct OccupationReport {
    double ks = 0.0;            ///< against Psi_0^2 dx
    double ks_wrong = 0.0;      ///< against Psi_0 dx, normalized
    std::size_t samples = 0;
    std::size_t boundary_events = 0;
    double mean = 0.0;
    double variance = 0.0;
    std::vector<double> pooled; ///< post-burn-in samples
};

OccupationReport invariant_occupation_check(const QProcessModel& model, const OccupationConfig& cfg);

} // namespace fkq
