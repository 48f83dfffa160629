// fkq: command-line front end. Every subcommand resolves its configuration first,
// computes all outputs in memory, then writes them with temp-file + rename.

#include "fkq/basis_io.hpp"
#include "fkq/branching.hpp"
#include "fkq/errors.hpp"
#include "fkq/hermite.hpp"
#include "fkq/model_io.hpp"
#include "fkq/qprocess.hpp"
#include "fkq/qsd.hpp"
#include "fkq/semigroup.hpp"
#include "fkq/spectral.hpp"
#include "fkq/validate.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unistd.h>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fkq;

namespace {

constexpr const char* kVersion = "1.0.0";

enum Exit : int {
    kOk = 0,
    kAssumption = 2,
    kNumerical = 3,
    kParse = 4,
    kParameter = 5,
    kUsage = 6,
    kIo = 7,
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string model_path;
    double sigma = 1.0;
    double c = 0.0;
    std::string picture = "x";
    double L = 12.0;
    std::size_t n = 12001;
    std::size_t K = 32;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::string out;
    bool no_cache = false;
};

struct Artifact {
    std::string name;
    std::string body;
};

std::string hex_sha256(const std::string& s)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_Digest(s.data(), s.size(), md, &len, EVP_sha256(), nullptr);
    std::string out;
    char buf[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        out += buf;
    }
    return out;
}

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string utc_now()
{
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_atomic(const fs::path& path, const std::string& body)
{
    const fs::path tmp = path.string() + ".tmp-" + std::to_string(::getpid());
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os)
            throw IoError("cannot write " + tmp.string());
        os << body;
        if (!os.flush())
            throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

/// CSV with two comment lines: schema tag and the resolved configuration.
class Csv {
public:
    Csv(const std::string& schema, const json& config, const std::vector<std::string>& columns)
    {
        os_ << "# schema: " << schema << "\n# config: " << config.dump() << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i)
            os_ << (i ? "," : "") << columns[i];
        os_ << "\n";
    }
    template <class... T>
    void row(const T&... cells)
    {
        bool first = true;
        ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
        os_ << "\n";
    }
    std::string str() const { return os_.str(); }

private:
    static std::string cell(double v) { return num(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(bool v) { return v ? "1" : "0"; }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }
    std::ostringstream os_;
};

std::string json_artifact(const std::string& schema, const json& config, const json& result)
{
    return json{{"schema", schema}, {"config", config}, {"result", result}}.dump(2) + "\n";
}

/// Shared state of one invocation.
class Run {
public:
    Run(const Common& c, std::string sub) : c_(c), sub_(std::move(sub)), start_(std::chrono::steady_clock::now()) {}

    /// Model, grid and hypothesis checks; throws before any output exists.
    void resolve(bool check_assumptions = true)
    {
        json mj;
        if (!c_.model_path.empty()) {
            std::ifstream in(c_.model_path);
            if (!in)
                throw ParseError("cannot open model file '" + c_.model_path + "'");
            try {
                in >> mj;
            } catch (const json::exception& e) {
                throw ParseError("model file '" + c_.model_path + "' is not valid JSON: " + e.what());
            }
            if (!mj.is_object())
                throw ParseError("model must be a JSON object");
        } else {
            mj = {{"kind", "builtin_hermite"}, {"sigma", c_.sigma}, {"c", c_.c}, {"picture", c_.picture}};
        }
        if (L_given)
            mj["L"] = c_.L;
        if (n_given)
            mj["n_grid"] = c_.n;
        model_ = std::make_unique<LoadedModel>(load_model(mj));
        if (c_.K < 2)
            throw DomainError("K must be at least 2");
        if (check_assumptions) {
            const auto rep = validate_assumptions(model_->spec, model_->grid);
            for (const auto& h : rep.checks)
                assumptions_[h.name] = {{"pass", h.pass}, {"worst_x", h.worst_x}, {"worst_excess", h.worst_excess}};
            if (!rep.all_pass()) {
                std::string failed;
                for (const auto& h : rep.checks)
                    if (!h.pass)
                        failed += " " + h.name + " (worst at x = " + num(h.worst_x) + ")";
                throw AssumptionError("model violates" + failed);
            }
        }
        config_ = {{"subcommand", sub_}, {"version", kVersion}, {"model", model_->source}, {"K", c_.K},
                   {"seed", c_.seed}};
        key_ = hex_sha256(model_->source.dump() + "|K=" + std::to_string(c_.K));
    }

    const LoadedModel& model() const { return *model_; }
    json& config() { return config_; }
    const json& assumptions() const { return assumptions_; }
    const Common& common() const { return c_; }

    fs::path out_dir() const { return c_.out; }
    fs::path basis_path() const { return out_dir() / "cache" / ("basis-" + key_.substr(0, 16) + ".bin"); }

    /// Loads the cached basis when one exists for this (model, grid, K).
    std::shared_ptr<const SpectralBasis> basis()
    {
        if (basis_)
            return basis_;
        if (!c_.no_cache && fs::exists(basis_path())) {
            basis_ = std::make_shared<SpectralBasis>(load_basis(basis_path().string(), key_));
            basis_source_ = "cache";
        } else {
            basis_ = std::make_shared<SpectralBasis>(solve_eigen(reduce(model_->spec, model_->grid), c_.K));
            basis_source_ = "solved";
        }
        return basis_;
    }
    const std::string& basis_source() const { return basis_source_; }
    const std::string& key() const { return key_; }

    void add(std::string name, std::string body) { artifacts_.push_back({std::move(name), std::move(body)}); }

    void write_all()
    {
        fs::create_directories(out_dir());
        for (const auto& a : artifacts_) {
            write_atomic(out_dir() / a.name, a.body);
            std::cout << "wrote " << (out_dir() / a.name).string() << "\n";
        }
        const json meta{{"subcommand", sub_},
                        {"timestamp_utc", utc_now()},
                        {"elapsed_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count()},
                        {"basis", basis_source_.empty() ? "none" : basis_source_},
                        {"artifacts", [&] {
                             json a = json::array();
                             for (const auto& x : artifacts_)
                                 a.push_back(x.name);
                             return a;
                         }()}};
        write_atomic(out_dir() / (sub_ + ".meta.json"), meta.dump(2) + "\n");
    }

    bool L_given = false, n_given = false;

private:
    Common c_;
    std::string sub_;
    std::chrono::steady_clock::time_point start_;
    std::unique_ptr<LoadedModel> model_;
    json config_;
    json assumptions_ = json::object();
    std::string key_;
    std::shared_ptr<const SpectralBasis> basis_;
    std::string basis_source_;
    std::vector<Artifact> artifacts_;
};

// ---------------------------------------------------------------------------

double closed_lambda(const LoadedModel& m, std::size_t k)
{
    const auto& h = *m.hermite;
    const double kk = static_cast<double>(k) + 0.5;
    if (m.source.value("picture", "x") == "r")
        return kk / h.sigma;
    return h.sigma * kk - 1.0 + 0.5 * h.c * h.c;
}

int cmd_spectrum(Run& run)
{
    run.resolve();
    const auto b = run.basis();
    const auto& m = run.model();
    const auto growth = check_growth_bound(*b);
    Csv csv("fkq.spectrum/1", run.config(),
            {"k", "lambda", "max_abs_psi", "sign_changes", "growth_margin", "closed_lambda", "relative_error"});
    for (std::size_t k = 0; k < b->K(); ++k) {
        double sup = 0.0;
        for (double v : b->psis[k])
            sup = std::max(sup, std::abs(v));
        std::string gm;
        for (const auto& e : growth.entries)
            if (e.k == k && e.applicable)
                gm = num(e.margin());
        std::string cl, rel;
        if (m.hermite) {
            const double v = closed_lambda(m, k);
            cl = num(v);
            rel = num(std::abs(b->lambdas[k] - v) / std::max(std::abs(v), 1e-300));
        }
        csv.row(k, b->lambdas[k], sup, sign_changes(b->psis[k]), gm, cl, rel);
    }
    run.add("spectrum.csv", csv.str());
    const json result{{"lambdas", b->lambdas},
                      {"assumptions", run.assumptions()},
                      {"constants",
                       {{"tildeA", b->tildeA}, {"tildeE", b->tildeE}, {"tilde_x0", b->tilde_x0}, {"beta", b->beta},
                        {"gamma", b->gamma}}},
                      {"basis_key", run.key()}};
    run.add("spectrum.json", json_artifact("fkq.spectrum/1", run.config(), result));
    run.write_all();
    if (run.basis_source() == "solved" && !run.common().no_cache) {
        fs::create_directories(run.basis_path().parent_path());
        const auto tmp = run.basis_path().string() + ".tmp-" + std::to_string(::getpid());
        save_basis(*b, run.key(), tmp);
        fs::rename(tmp, run.basis_path());
        std::cout << "wrote " << run.basis_path().string() << "\n";
    }
    return kOk;
}

struct KernelArgs {
    std::vector<double> t{1.0};
    std::vector<double> x{0.0};
    double y_min = -4.0, y_max = 4.0;
    std::size_t y_count = 81;
};

int cmd_kernel(Run& run, const KernelArgs& a)
{
    run.resolve();
    if (a.y_count < 2 || !(a.y_max > a.y_min))
        throw DomainError("need y_count >= 2 and y_max > y_min");
    for (double t : a.t)
        if (!(t > 0.0))
            throw DomainError("kernel times must be positive");
    const KernelEvaluator ev(run.basis());
    run.config()["kernel"] = {{"t", a.t}, {"x", a.x}, {"y_min", a.y_min}, {"y_max", a.y_max}, {"y_count", a.y_count}};
    Csv csv("fkq.kernel/1", run.config(), {"t", "x", "y", "ptilde", "p", "r", "q", "tail", "truncation_warning"});
    for (double t : a.t)
        for (double x : a.x)
            for (std::size_t j = 0; j < a.y_count; ++j) {
                const double y = a.y_min + (a.y_max - a.y_min) * static_cast<double>(j) / (a.y_count - 1.0);
                const auto kv = ev.ptilde_eval(t, x, y);
                csv.row(t, x, y, kv.value, ev.p(t, x, y), ev.r(t, x, y), ev.q(t, x, y), kv.tail,
                        kv.truncation_warning);
            }
    run.add("kernel.csv", csv.str());
    run.write_all();
    return kOk;
}

struct GapArgs {
    double kappa = 0.5;
    std::vector<double> t{1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
};

int cmd_gap(Run& run, const GapArgs& a)
{
    run.resolve();
    if (a.kappa < 0.0)
        throw DomainError("kappa must be non-negative");
    const KernelEvaluator ev(run.basis());
    const double kappa = a.kappa;
    const auto g = ev.basis().grid.sample([kappa](double x) { return std::exp(kappa * std::abs(x)); });
    const auto rep = ev.gap_decay(g, kappa, a.t);
    run.config()["gap"] = {{"kappa", kappa}, {"t", a.t}, {"g", "exp(kappa |x|)"}};
    Csv csv("fkq.gap/1", run.config(), {"t", "sup_error", "log_bound", "saturated"});
    for (std::size_t i = 0; i < rep.times.size(); ++i)
        csv.row(rep.times[i], rep.sup_errors[i], rep.log_bound[i], static_cast<bool>(rep.saturated[i]));
    run.add("gap.csv", csv.str());
    const json result{{"fitted_rate", rep.fitted_rate}, {"expected_rate", rep.expected_rate}, {"A", rep.A},
                      {"log_D", rep.log_D},           {"bound_holds", rep.bound_holds},
                      {"burn_in", rep.burn_in},       {"monotone_after_burn_in", rep.monotone_after_burn_in},
                      {"growth_warning", ev.growth_warning(kappa)}};
    run.add("gap.json", json_artifact("fkq.gap/1", run.config(), result));
    run.write_all();
    return kOk;
}

int cmd_qsd(Run& run, double t)
{
    run.resolve();
    if (!(t > 0.0))
        throw DomainError("t must be positive");
    const KernelEvaluator ev(run.basis());
    const auto& b = ev.basis();
    const auto nu = build_qsd(b);
    const auto& m = run.model();
    const bool closed = m.hermite && m.source.value("picture", "x") == "x";
    run.config()["qsd"] = {{"t", t}};
    Csv csv("fkq.qsd/1", run.config(), {"x", "density", "closed_density"});
    double worst = 0.0;
    for (std::size_t i = 0; i < b.n(); ++i) {
        if (closed) {
            const double s = m.hermite->sigma;
            const double cd = s * hermite::closed_qsd(*m.hermite, s * b.grid[i]);
            worst = std::max(worst, std::abs(nu.density[i] - cd));
            csv.row(b.grid[i], nu.density[i], cd);
        } else {
            csv.row(b.grid[i], nu.density[i], "");
        }
    }
    run.add("qsd.csv", csv.str());

    const auto& g = b.grid;
    std::vector<TestFunction> tfs{{"one", std::vector<double>(g.n(), 1.0)},
                                  {"tanh", g.sample([](double x) { return std::tanh(x); })},
                                  {"gauss", g.sample([](double x) { return std::exp(-x * x); })}};
    const auto fp = check_qsd_fixed_point(ev, nu, t, tfs);
    json entries = json::array();
    for (const auto& e : fp.entries)
        entries.push_back({{"phi", e.label}, {"lhs", e.lhs}, {"rhs", e.rhs}, {"pass", e.pass}});
    std::vector<double> xm(g.n()), x2(g.n());
    for (std::size_t i = 0; i < g.n(); ++i) {
        xm[i] = g[i] * nu.density[i];
        x2[i] = g[i] * g[i] * nu.density[i];
    }
    const double mean = g.integrate(xm);
    json result{{"Z", nu.Z},
                {"mass", g.integrate(nu.density)},
                {"mean", mean},
                {"variance", g.integrate(x2) - mean * mean},
                {"fixed_point", entries}};
    if (closed)
        result["closed_sup_error"] = worst;
    run.add("qsd.json", json_artifact("fkq.qsd/1", run.config(), result));
    run.write_all();
    return fp.all_pass() ? kOk : kNumerical;
}

struct BranchingArgs {
    double x0 = 0.0, T = 3.0, dt = 1e-2;
    std::size_t reps = 10000, cap = 1000000, tree_csv = 0;
};

int cmd_branching(Run& run, const BranchingArgs& a)
{
    run.resolve();
    if (!(a.T > 0.0) || !(a.dt > 0.0) || a.dt > a.T || a.reps < 2)
        throw DomainError("need T > 0, 0 < dt <= T and reps >= 2");
    const KernelEvaluator ev(run.basis());
    McConfig mc;
    mc.seed = run.common().seed;
    mc.threads = run.common().threads;
    mc.cap = a.cap;
    const std::vector<std::string> names{"one", "x", "x2"};
    const std::vector<std::function<double(double)>> phis{
        [](double) { return 1.0; }, [](double x) { return x; }, [](double x) { return x * x; }};
    const auto est = estimate_linear_functionals(run.model().spec, phis, a.x0, a.T, a.dt, a.reps, mc);
    run.config()["branching"] = {{"x0", a.x0}, {"T", a.T}, {"dt", a.dt}, {"reps", a.reps}, {"cap", a.cap}};
    Csv csv("fkq.branching/1", run.config(), {"functional", "mean", "stderr", "kernel", "z_score"});
    const auto& g = ev.basis().grid;
    json rows = json::array();
    for (std::size_t i = 0; i < phis.size(); ++i) {
        const double kernel = ev.apply_Pt(g.sample(phis[i]), a.T, a.x0);
        const double z = est[i].stderr_ > 0 ? (est[i].mean - kernel) / est[i].stderr_ : 0.0;
        csv.row(names[i], est[i].mean, est[i].stderr_, kernel, z);
        rows.push_back({{"functional", names[i]}, {"mean", est[i].mean}, {"stderr", est[i].stderr_},
                        {"kernel", kernel}, {"z_score", z}});
    }
    run.add("branching.csv", csv.str());
    if (a.tree_csv > 0) {
        // Same per-replica streams as the estimator, so rows describe the trees it used.
        Csv trees("fkq.branching_trees/1", run.config(),
                  {"replica", "N_T", "individuals", "truncated", "sum_x", "sum_x2"});
        for (std::size_t i = 0; i < std::min(a.tree_csv, a.reps); ++i) {
            Rng rng(mc.seed, i);
            const auto tree = simulate_population(run.model().spec, a.x0, a.T, a.dt, rng, {a.cap, false});
            double s1 = 0.0, s2 = 0.0;
            for (double x : tree.final_traits) {
                s1 += x;
                s2 += x * x;
            }
            trees.row(i, tree.N_T(), tree.individuals.size(), tree.truncated, s1, s2);
        }
        run.add("branching_trees.csv", trees.str());
    }
    const json result{{"estimates", rows},
                      {"reps", est[0].reps},
                      {"used", est[0].used},
                      {"cap_hits", est[0].cap_hits},
                      {"extinct_fraction", est[0].extinct_fraction}};
    run.add("branching.json", json_artifact("fkq.branching/1", run.config(), result));
    run.write_all();
    return kOk;
}

struct QArgs {
    double T = 1000.0, dt = 5e-3, burn_in = 50.0, sample_every = 1.0, x0 = 0.0;
    std::size_t replicas = 32, bins = 40;
};

int cmd_simulate_q(Run& run, const QArgs& a)
{
    run.resolve();
    if (!(a.T > a.burn_in) || !(a.dt > 0.0) || !(a.sample_every >= a.dt) || a.replicas < 1 || a.bins < 2)
        throw DomainError("need T > burn_in, dt > 0, sample_every >= dt, replicas >= 1, bins >= 2");
    const QProcessModel qm(run.basis());
    OccupationConfig cfg;
    cfg.T = a.T;
    cfg.dt = a.dt;
    cfg.burn_in = a.burn_in;
    cfg.sample_every = a.sample_every;
    cfg.replicas = a.replicas;
    cfg.x0 = a.x0;
    cfg.seed = run.common().seed;
    cfg.threads = run.common().threads;
    const auto rep = invariant_occupation_check(qm, cfg);
    run.config()["simulate_q"] = {{"T", a.T},           {"dt", a.dt},   {"burn_in", a.burn_in},
                                  {"sample_every", a.sample_every}, {"x0", a.x0}, {"replicas", a.replicas},
                                  {"bins", a.bins}};

    // Histogram on [-4, 4] against Psi_0^2 bin masses.
    const auto& b = qm.basis();
    std::vector<double> p2(b.n());
    for (std::size_t i = 0; i < b.n(); ++i)
        p2[i] = b.psis[0][i] * b.psis[0][i];
    const auto cdf = grid_cdf(b.grid, p2);
    const double lo = -4.0, hi = 4.0, w = (hi - lo) / static_cast<double>(a.bins);
    std::vector<double> counts(a.bins, 0.0);
    for (double x : rep.pooled)
        if (x >= lo && x < hi)
            counts[static_cast<std::size_t>((x - lo) / w)] += 1.0;
    Csv csv("fkq.occupation/1", run.config(), {"bin_lo", "bin_hi", "empirical", "target"});
    for (std::size_t k = 0; k < a.bins; ++k) {
        const double l = lo + w * static_cast<double>(k), r = l + w;
        csv.row(l, r, counts[k] / static_cast<double>(rep.pooled.size()), cdf(r) - cdf(l));
    }
    run.add("occupation.csv", csv.str());
    const json result{{"ks", rep.ks},           {"ks_wrong_measure", rep.ks_wrong},
                      {"samples", rep.samples}, {"boundary_events", rep.boundary_events},
                      {"mean", rep.mean},       {"variance", rep.variance}};
    run.add("occupation.json", json_artifact("fkq.occupation/1", run.config(), result));
    run.write_all();
    return kOk;
}

int cmd_spine_reversal(Run& run, ReversalConfig cfg)
{
    run.resolve();
    if (!(cfg.T > cfg.t_lag) || !(cfg.t_lag > 0.0) || !(cfg.dt > 0.0) || cfg.bins < 2)
        throw DomainError("need T > t_lag > 0, dt > 0, bins >= 2");
    const KernelEvaluator ev(run.basis());
    cfg.mc.seed = run.common().seed;
    cfg.mc.threads = run.common().threads;
    const auto rep = reversed_spine_transition_check(run.model().spec, ev, cfg);
    run.config()["spine_reversal"] = {{"T", cfg.T},         {"t_lag", cfg.t_lag},   {"dt", cfg.dt},
                                      {"small_lag", cfg.small_lag}, {"target_ess", cfg.target_ess},
                                      {"batch", cfg.batch}, {"max_trees", cfg.max_trees},
                                      {"bin_lo", cfg.bin_lo}, {"bin_hi", cfg.bin_hi}, {"bins", cfg.bins}};
    Csv csv("fkq.reversal_marginal/1", run.config(), {"bin", "lo", "hi", "empirical", "predicted"});
    const auto& e = rep.edges;
    for (std::size_t k = 0; k < rep.marginal_empirical.size(); ++k)
        csv.row(k, e[k], e[k + 1], rep.marginal_empirical[k], rep.marginal_predicted[k]);
    run.add("reversal_marginal.csv", csv.str());
    const json result{{"ess", rep.ess},
                      {"trees", rep.trees},
                      {"spines", rep.spines},
                      {"inconclusive", rep.inconclusive},
                      {"root_law_mass", rep.root_law_mass},
                      {"marginal_tv", rep.marginal_tv},
                      {"transition_tv", rep.transition_tv},
                      {"small_lag_variance", rep.small_lag_variance},
                      {"small_lag", rep.small_lag},
                      {"joint_empirical", rep.joint_empirical},
                      {"joint_predicted", rep.joint_predicted}};
    run.add("reversal.json", json_artifact("fkq.reversal/1", run.config(), result));
    run.write_all();
    return rep.inconclusive ? kNumerical : kOk;
}

int cmd_hermite_validate(Run& run, const Common& c)
{
    if (!(c.sigma > 0.0))
        throw DomainError("sigma must be positive");
    if (!c.model_path.empty())
        throw DomainError("hermite-validate uses --sigma and --c, not a model file");
    hermite::ValidationOptions opt;
    opt.L = c.L;
    opt.n = c.n;
    opt.K = c.K;
    if (opt.n % 2 == 0 || opt.n < 7 || !(opt.L > 0.0) || opt.K < 12)
        throw DomainError("need odd n >= 7, L > 0 and K >= 12");
    const auto rep = hermite::validate({c.sigma, c.c}, opt);
    run.config() = {{"subcommand", "hermite-validate"}, {"version", kVersion}, {"sigma", c.sigma}, {"c", c.c},
                    {"L", opt.L},                       {"n_grid", opt.n},     {"K", opt.K},      {"seed", c.seed}};
    json suites = json::array();
    for (const auto& s : rep.suites)
        suites.push_back({{"name", s.name},
                          {"pass", s.pass},
                          {"worst", s.worst},
                          {"tolerance", s.tolerance},
                          {"margin", s.margin()},
                          {"detail", s.detail}});
    const json result{{"all_pass", rep.all_pass()},
                      {"suites", suites},
                      {"numerical_lambda0", rep.numerical_lambda0},
                      {"literal_lambda0", rep.literal_lambda0},
                      {"decay_rate_closed", hermite::principal_decay_rate(rep.model)}};
    const auto body = json_artifact("fkq.hermite_validate/1", run.config(), result);
    std::cout << body;
    run.add("hermite_validate.json", body);
    run.write_all();
    return rep.all_pass() ? kOk : kNumerical;
}

std::string default_out()
{
    if (const char* env = std::getenv("FKQ_OUTPUT_DIR"); env && *env)
        return env;
    return "fkq_out";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Feynman-Kac semigroups, quasi-stationary laws and branching diffusions"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();

    Common c;
    c.out = default_out();
    auto* o_model = app.add_option("--model", c.model_path, "Model JSON file (default: builtin Hermite)");
    app.add_option("--sigma", c.sigma, "Hermite sigma for the builtin model")->capture_default_str();
    app.add_option("--c", c.c, "Hermite drift c for the builtin model")->capture_default_str();
    app.add_option("--picture", c.picture, "Builtin picture: x (drift c) or r (driftless)")
        ->check(CLI::IsMember({"x", "r"}))
        ->capture_default_str();
    auto* o_L = app.add_option("--L", c.L, "Half-width of the grid")->capture_default_str();
    auto* o_n = app.add_option("--n", c.n, "Grid node count (odd)")->capture_default_str();
    app.add_option("--K", c.K, "Number of eigenmodes")->capture_default_str();
    app.add_option("--seed", c.seed, "RNG seed")->capture_default_str();
    app.add_option("--threads", c.threads, "Worker threads, 0 = all cores")->capture_default_str();
    app.add_option("--out", c.out, "Output directory (env FKQ_OUTPUT_DIR)")->capture_default_str();
    app.add_flag("--no-cache", c.no_cache, "Neither read nor write the basis cache");
    o_model->excludes("--sigma")->excludes("--c")->excludes("--picture");

    auto* s_spectrum = app.add_subcommand("spectrum", "Eigenvalues to spectrum.csv and a cached basis");

    KernelArgs ka;
    auto* s_kernel = app.add_subcommand("kernel", "Kernels ptilde, p, r, q on a y grid");
    s_kernel->add_option("--t", ka.t, "Times")->capture_default_str();
    s_kernel->add_option("--x", ka.x, "Initial points")->capture_default_str();
    s_kernel->add_option("--y-min", ka.y_min)->capture_default_str();
    s_kernel->add_option("--y-max", ka.y_max)->capture_default_str();
    s_kernel->add_option("--y-count", ka.y_count)->capture_default_str();

    GapArgs ga;
    auto* s_gap = app.add_subcommand("gap", "Decay of e^{lambda_0 t} P_t g - Pi g for g = e^{kappa |x|}");
    s_gap->add_option("--kappa", ga.kappa)->capture_default_str();
    s_gap->add_option("--t", ga.t, "Times")->capture_default_str();

    double qsd_t = 1.0;
    auto* s_qsd = app.add_subcommand("qsd", "Quasi-stationary density and fixed-point check");
    s_qsd->add_option("--t", qsd_t, "Time for the fixed-point check")->capture_default_str();

    BranchingArgs ba;
    auto* s_br = app.add_subcommand("simulate-branching", "Monte Carlo of the branching diffusion");
    s_br->add_option("--x0", ba.x0)->capture_default_str();
    s_br->add_option("--T", ba.T)->capture_default_str();
    s_br->add_option("--dt", ba.dt)->capture_default_str();
    s_br->add_option("--reps", ba.reps)->capture_default_str();
    s_br->add_option("--cap", ba.cap, "Individual-steps per tree before abandoning it")->capture_default_str();
    s_br->add_option("--tree-csv", ba.tree_csv, "Write per-tree rows for the first N replicas")->capture_default_str();

    QArgs qa;
    auto* s_q = app.add_subcommand("simulate-q", "Q-process occupation measure");
    s_q->add_option("--T", qa.T)->capture_default_str();
    s_q->add_option("--dt", qa.dt)->capture_default_str();
    s_q->add_option("--burn-in", qa.burn_in)->capture_default_str();
    s_q->add_option("--sample-every", qa.sample_every)->capture_default_str();
    s_q->add_option("--x0", qa.x0)->capture_default_str();
    s_q->add_option("--replicas", qa.replicas)->capture_default_str();
    s_q->add_option("--bins", qa.bins)->capture_default_str();

    ReversalConfig rc;
    auto* s_rev = app.add_subcommand("spine-reversal", "Time-reversed spine statistics");
    s_rev->add_option("--T", rc.T)->capture_default_str();
    s_rev->add_option("--t-lag", rc.t_lag)->capture_default_str();
    s_rev->add_option("--dt", rc.dt)->capture_default_str();
    s_rev->add_option("--target-ess", rc.target_ess)->capture_default_str();
    s_rev->add_option("--max-trees", rc.max_trees)->capture_default_str();
    s_rev->add_option("--bins", rc.bins)->capture_default_str();

    auto* s_val = app.add_subcommand("hermite-validate", "Closed forms against the numerical pipeline");

    // The first bare word names the subcommand; report a typo before CLI11 does.
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a.rfind("-", 0) == 0) {
            const bool takes_value = a.find('=') == std::string::npos && a != "--no-cache" && a != "--help" &&
                                     a != "-h" && a != "--version";
            i += takes_value ? 1 : 0;
            continue;
        }
        if (!app.get_subcommand_no_throw(a)) {
            std::cerr << "fkq: unknown subcommand '" << a << "'\nRun with --help for more information.\n";
            return kUsage;
        }
        break;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ValidationError& e) {
        app.exit(e);
        return kParameter;
    } catch (const CLI::ConversionError& e) {
        app.exit(e);
        return kParameter;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    Run run(c, sub);
    run.L_given = o_L->count() > 0;
    run.n_given = o_n->count() > 0;
    try {
        if (s_spectrum->parsed())
            return cmd_spectrum(run);
        if (s_kernel->parsed())
            return cmd_kernel(run, ka);
        if (s_gap->parsed())
            return cmd_gap(run, ga);
        if (s_qsd->parsed())
            return cmd_qsd(run, qsd_t);
        if (s_br->parsed())
            return cmd_branching(run, ba);
        if (s_q->parsed())
            return cmd_simulate_q(run, qa);
        if (s_rev->parsed())
            return cmd_spine_reversal(run, rc);
        if (s_val->parsed())
            return cmd_hermite_validate(run, c);
    } catch (const AssumptionError& e) {
        std::cerr << "fkq: assumption failure: " << e.what() << "\n";
        return kAssumption;
    } catch (const ParseError& e) {
        std::cerr << "fkq: parse error: " << e.what() << "\n";
        return kParse;
    } catch (const DomainError& e) {
        std::cerr << "fkq: invalid parameter: " << e.what() << "\n";
        return kParameter;
    } catch (const NumericalError& e) {
        std::cerr << "fkq: numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const SampleError& e) {
        std::cerr << "fkq: numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "fkq: i/o error: " << e.what() << "\n";
        return kIo;
    } catch (const IoError& e) {
        std::cerr << "fkq: i/o error: " << e.what() << "\n";
        return kIo;
    }
    return kUsage;
}
