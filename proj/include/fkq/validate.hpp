#pragma once

#include "fkq/hermite.hpp"

#include <string>
#include <vector>

namespace fkq::hermite {

/// One oracle-vs-numeric comparison.
struct SuiteResult {
    std::string name;
    bool pass = false;
    double worst = 0.0;     ///< largest observed error
    double tolerance = 0.0;
    std::string detail;

    double margin() const { return tolerance - worst; }
};

struct ValidationReport {
    HermiteModel model;
    std::vector<SuiteResult> suites;
    /// Literal closed form 1 - c^2/2 - sigma/2 next to the numerical decay rate.
    double literal_lambda0 = 0.0;
    double numerical_lambda0 = 0.0;

    bool all_pass() const;
};

struct ValidationOptions {
    double L = 12.0;
    std::size_t n = 12001;
    std::size_t K = 32;
};

/// Closed forms against the numerical pipeline for one (sigma, c).
ValidationReport validate(const HermiteModel& m, const ValidationOptions& opt = {});

} // namespace fkq::hermite
