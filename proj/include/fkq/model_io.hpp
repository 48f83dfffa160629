#pragma once

#include "fkq/hermite.hpp"
#include "fkq/model.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace fkq {

/// A model file resolved into a spec and its computational grid.
struct LoadedModel {
    std::string kind; ///< "builtin_hermite" or "custom_tabulated"
    ModelSpec spec;
    Grid grid;
    std::optional<hermite::HermiteModel> hermite;
    nlohmann::json source;
};

/// Throws ParseError on malformed input, DomainError on invalid values.
LoadedModel load_model(const nlohmann::json& j);
LoadedModel load_model_file(const std::string& path);

/// Built-in model in the unit-diffusion coordinate. Picture "x" keeps the drift c and
/// V = 1 - sigma^2 x^2 / 2; picture "r" is the driftless 1/2 d^2 - x^2 / (2 sigma^2).
LoadedModel builtin_hermite(double sigma, double c, double L = 12.0, std::size_t n = 12001,
                            const std::string& picture = "x");

} // namespace fkq
