#pragma once

#include <vector>

#include "run_config.hpp"

namespace tlnmem::cli {

// Each command reads its inputs from the config, writes results.json plus
// its artifacts into the output directory, and returns the process exit
// code: 0 success, 1 usage, 2 domain error, 3 numerical failure.
int cmd_learn(const RunConfig& cfg);
int cmd_infer(const RunConfig& cfg);
int cmd_certify(const RunConfig& cfg);
int cmd_benchmark(const RunConfig& cfg);
int cmd_plot(const RunConfig& cfg);

// Order statistics used for the report tables; linear interpolation between
// ranks, matching the conventional spreadsheet definition.
double quantile(std::vector<double> values, double q);

}  // namespace tlnmem::cli
