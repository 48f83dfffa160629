#pragma once

#include "fkq/model.hpp"
#include "fkq/qsd.hpp"
#include "fkq/rng.hpp"
#include "fkq/semigroup.hpp"
#include "fkq/stats.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace fkq {

/// One individual of the population; times are step indices on the dt lattice.
struct Individual {
    std::int64_t id = 0;
    std::optional<std::int64_t> parent;
    std::int64_t birth_step = 0;
    std::int64_t death_step = -1; ///< -1 while alive
    std::vector<double> trajectory; ///< trait at steps birth_step, birth_step + 1, ...

    bool alive_at(std::int64_t step) const
    {
        return birth_step <= step && (death_step < 0 || step < death_step);
    }
};

struct PopulationTree {
    std::vector<Individual> individuals;
    double T = 0.0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t replica = 0;
    std::int64_t steps = 0;
    bool truncated = false;
    bool trajectories_recorded = false;
    std::vector<std::int64_t> live_counts; ///< alive after each step, index 0 = start
    std::vector<std::int64_t> alive_ids;   ///< alive at T
    std::vector<double> final_traits;      ///< matching alive_ids

    std::size_t N_T() const { return alive_ids.size(); }
    double birth_time(const Individual& ind) const { return static_cast<double>(ind.birth_step) * dt; }
    double death_time(const Individual& ind) const
    {
        return ind.death_step < 0 ? std::numeric_limits<double>::infinity() : static_cast<double>(ind.death_step) * dt;
    }
    /// Count alive individuals at step s from the genealogy alone.
    std::int64_t reconstruct_alive(std::int64_t step) const;
    /// Trait of an individual's ancestral line at every step 0..steps.
    std::vector<double> ancestral_path(std::int64_t id) const;
};

struct SimulationOptions {
    std::size_t cap = 1000000; ///< individual-steps before the run is abandoned
    bool record_trajectories = true;
};

/// Euler-Maruyama diffusion; per step, death with probability 1 - e^{-d dt}, then
/// survivors branch with probability e^{b dt} - 1, rates averaged over the step.
PopulationTree simulate_population(const ModelSpec& spec, double x0, double T, double dt, Rng& rng,
                                   const SimulationOptions& opt = {});

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t reps = 0;
    std::size_t used = 0;
    std::size_t cap_hits = 0;
    double extinct_fraction = 0.0;
};

struct McConfig {
    std::uint64_t seed = 1;
    unsigned threads = 0; ///< 0 = hardware concurrency
    std::size_t cap = 1000000;
};

McEstimate estimate_linear_functional(const ModelSpec& spec, const std::function<double(double)>& phi, double x0,
                                      double T, double dt, std::size_t reps, const McConfig& cfg = {});

/// Several functionals from the same trees.
std::vector<McEstimate> estimate_linear_functionals(const ModelSpec& spec,
                                                    const std::vector<std::function<double(double)>>& phis,
                                                    double x0, double T, double dt, std::size_t reps,
                                                    const McConfig& cfg = {});

enum class PathQuadrature { Trapezoid, LeftEndpoint };

McEstimate feynman_kac_mc(const ModelSpec& spec, const std::function<double(double)>& phi, double x0, double T,
                          double dt, std::size_t reps, const McConfig& cfg = {},
                          PathQuadrature quad = PathQuadrature::Trapezoid);

/// Ratio sum phi(X^i_T) / N_T averaged over surviving trees.
McEstimate ratio_limit_mc(const ModelSpec& spec, const std::function<double(double)>& phi, double x0, double T,
                          double dt, std::size_t reps, const McConfig& cfg = {});

struct SpinePath {
    std::vector<double> times;
    std::vector<double> traits;
    double weight = 0.0;
    double root = 0.0;
};

/// Law of the root of each tree.
using RootSampler = std::function<double(Rng&)>;

/// One spine per surviving tree, picked uniformly among the alive individuals, weight N_T.
std::vector<SpinePath> sample_spines(const ModelSpec& spec, const RootSampler& root, double T, double dt,
                                     std::size_t reps, const McConfig& cfg = {}, std::size_t first_replica = 0);
std::vector<SpinePath> sample_spines(const ModelSpec& spec, double x0, double T, double dt, std::size_t reps,
                                     const McConfig& cfg = {});

/// Inverse-CDF sampler for a grid density.
RootSampler grid_sampler(const Grid& grid, std::span<const double> density);

struct ReversalConfig {
    double T = 2.0;
    double t_lag = 0.5;
    double dt = 1e-2;
    double small_lag = 0.05;
    double target_ess = 2e4;
    std::size_t batch = 20000;
    std::size_t max_trees = 2000000;
    double bin_lo = -4.0, bin_hi = 4.0;
    std::size_t bins = 16;
    McConfig mc;
};

struct ReversalReport {
    double ess = 0.0;
    std::size_t trees = 0;
    std::size_t spines = 0;
    bool inconclusive = false;
    double root_law_mass = 0.0;   ///< trapezoid mass of e^{lambda_0 T} m_T nu
    double marginal_tv = 0.0;     ///< reversed start vs nu
    double transition_tv = 0.0;   ///< one-lag conditional vs q(t_lag)
    double small_lag_variance = 0.0;
    double small_lag = 0.0;
    std::vector<double> edges;               ///< bin edges; the outermost sit at the grid walls
    std::vector<double> marginal_empirical;  ///< per bin
    std::vector<double> marginal_predicted;
    std::vector<std::vector<double>> joint_empirical;
    std::vector<std::vector<double>> joint_predicted;
};

ReversalReport reversed_spine_transition_check(const ModelSpec& spec, const KernelEvaluator& ev,
                                               const ReversalConfig& cfg);

/// The successive expressions of the reversed-spine density computation, each of which
/// should equal q(u, z, y).
struct ReversalChain {
    double line1, line2, line3, line4, q;
};
ReversalChain reversal_identity_chain(const KernelEvaluator& ev, double T, double u, double r, double z, double y);

} // namespace fkq
