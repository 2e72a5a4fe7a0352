#pragma once

#include "metamob/metrics.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace metamob {

ModelSpec parse_method(const std::string& name);

/// Flat key-value grid file with comma-separated array values, e.g.
///   scenario = null
///   K = 5, 10
///   N = 200, 500, 1000
///   tau0 = 0, 5, 10
///   tau1 = 0
///   corr = none, b0_nonsplitter
///   tau_gamma = 5
/// The grid is the cartesian product over all keys.
struct ScenarioGrid {
    std::vector<ScenarioConfig> cells;
    std::vector<std::string> cell_labels; // stable ids used in outputs
};

/// Parses the grid; unless allow_custom, values are checked against the
/// default simulation domains (K in {5,10}, N in {200,500,1000,2000},
/// tau0 in {0,5,10}, tau1 in {0,2.5,5,10}).
ScenarioGrid parse_scenario_grid(std::istream& in, bool allow_custom);
ScenarioGrid parse_scenario_grid_file(const std::string& path, bool allow_custom);

/// One CSV row per (cell x method) aggregate; header written by the caller.
extern const char* kResultsCsvHeader;
std::string results_csv_row(const std::string& cell_label,
                            const ScenarioAggregate& agg);

/// Reader for the rows written by results_csv_row (used by `report`).
struct ResultRow {
    std::string cell_label;
    std::string scenario, corr, method;
    int K = 0, N = 0;
    double tau0 = 0, tau1 = 0, tau_gamma = 0;
    std::map<std::string, double> metrics;
};
std::vector<ResultRow> read_results_csv(std::istream& in);

} // namespace metamob
