#include "fkq/model_io.hpp"

#include "fkq/errors.hpp"

#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/interpolators/makima.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>

namespace fkq {

namespace {

using json = nlohmann::json;

template <class T>
T get_or(const json& j, const char* key, T fallback)
{
    if (!j.contains(key))
        return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("field '") + key + "': " + e.what());
    }
}

std::vector<double> get_array(const json& j, const char* key)
{
    if (!j.contains(key))
        throw ParseError(std::string("missing array '") + key + "'");
    try {
        return j.at(key).get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("field '") + key + "': " + e.what());
    }
}

/// Cubic interpolant that stays constant outside the table.
RealFn makima_fn(const std::vector<double>& x, const std::vector<double>& y)
{
    using Interp = boost::math::interpolators::makima<std::vector<double>>;
    auto f = std::make_shared<Interp>(std::vector<double>(x), std::vector<double>(y));
    const double lo = x.front(), hi = x.back();
    return [f, lo, hi](double t) { return (*f)(std::clamp(t, lo, hi)); };
}

} // namespace

LoadedModel builtin_hermite(double sigma, double c, double L, std::size_t n, const std::string& picture)
{
    if (!(sigma > 0.0))
        throw DomainError("sigma must be positive");
    if (picture != "x" && picture != "r")
        throw ParseError("picture must be 'x' or 'r'");
    hermite::HermiteModel hm{sigma, c};
    const auto spec = picture == "x" ? hermite::reduced_model(hm) : hermite::r_picture_model(hm);
    LoadedModel m{"builtin_hermite", spec, Grid(L, n), hm, json::object()};
    m.source = {{"kind", "builtin_hermite"}, {"sigma", sigma}, {"c", c},           {"L", L},
                {"n_grid", n},            {"picture", picture}};
    return m;
}

LoadedModel load_model(const json& j)
{
    if (!j.is_object())
        throw ParseError("model must be a JSON object");
    const auto kind = get_or<std::string>(j, "kind", "");
    const double L = get_or<double>(j, "L", 12.0);
    const auto n = get_or<std::size_t>(j, "n_grid", 12001);
    if (!(L > 0.0) || n < 7 || n % 2 == 0)
        throw DomainError("L must be positive and n_grid odd and at least 7");

    if (kind == "builtin_hermite") {
        return builtin_hermite(get_or<double>(j, "sigma", 1.0), get_or<double>(j, "c", 0.0), L, n,
                               get_or<std::string>(j, "picture", "x"));
    }
    if (kind != "custom_tabulated")
        throw ParseError("unknown model kind '" + kind + "'");

    const auto x = get_array(j, "x");
    const auto a = get_array(j, "a");
    const auto ap = get_array(j, "a_prime");
    const auto V = get_array(j, "V");
    if (x.size() < 4 || a.size() != x.size() || ap.size() != x.size() || V.size() != x.size())
        throw ParseError("tabulated arrays must share a length of at least 4");
    if (!std::is_sorted(x.begin(), x.end()) || std::adjacent_find(x.begin(), x.end()) != x.end())
        throw ParseError("x must be strictly increasing");
    if (x.front() > -L || x.back() < L)
        throw DomainError("table does not cover the grid [-L, L]");

    LoadedModel m{"custom_tabulated", {}, Grid(L, n), std::nullopt, j};
    using Hermite = boost::math::interpolators::cubic_hermite<std::vector<double>>;
    auto ah = std::make_shared<Hermite>(std::vector<double>(x), std::vector<double>(a), std::vector<double>(ap));
    const double lo = x.front(), hi = x.back();
    m.spec.a = [ah, lo, hi](double t) { return (*ah)(std::clamp(t, lo, hi)); };
    m.spec.a_prime = [ah, lo, hi](double t) { return ah->prime(std::clamp(t, lo, hi)); };
    m.spec.V = makima_fn(x, V);
    if (j.contains("b"))
        m.spec.b = makima_fn(x, get_array(j, "b"));
    if (j.contains("d"))
        m.spec.d = makima_fn(x, get_array(j, "d"));

    double maxA = 0.0;
    for (double v : a)
        maxA = std::max(maxA, std::abs(v));
    double maxM = -1e300;
    for (std::size_t i = 0; i < x.size(); ++i)
        maxM = std::max(maxM, ap[i] - a[i] * a[i]);
    m.spec.beta = get_or<double>(j, "beta", maxA);
    m.spec.gamma = get_or<double>(j, "gamma", 0.0);
    m.spec.E_const = get_or<double>(j, "E", 1.0);
    m.spec.x0 = get_or<double>(j, "x0", 0.0);
    m.spec.M_upper = get_or<double>(j, "M_upper", maxM);
    m.spec.label = get_or<std::string>(j, "label", "custom");
    // Record the resolved defaults so the source reproduces the model on its own.
    m.source["L"] = L;
    m.source["n_grid"] = n;
    m.source["beta"] = m.spec.beta;
    m.source["gamma"] = m.spec.gamma;
    m.source["E"] = m.spec.E_const;
    m.source["x0"] = m.spec.x0;
    m.source["M_upper"] = m.spec.M_upper;
    m.source["label"] = m.spec.label;
    return m;
}

LoadedModel load_model_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open model file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("model file '" + path + "' is not valid JSON: " + e.what());
    }
    return load_model(j);
}

} // namespace fkq
