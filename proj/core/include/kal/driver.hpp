#ifndef KAL_DRIVER_HPP
#define KAL_DRIVER_HPP

#include <filesystem>
#include <vector>

#include "kal/config.hpp"

namespace kal {

/// Execute one ensemble run and write the artifact directory:
/// moments.csv, correlations.csv, residuals.csv, selfsim.csv and meta.json.
/// Identical (config, seed) pairs reproduce byte-identical CSVs.
/// Returns the output directory.
std::filesystem::path cli_run(const RunConfig& config);

/// Run the base config at each N0 with Lambda = N0 and aggregate sweep.csv
/// joining the simulation observables against the limit-model oracles
/// (Maxwell kernels: analytic moment laws; otherwise the largest-N0 run
/// serves as the self-convergence reference).
std::filesystem::path cli_sweep(const RunConfig& base, const std::vector<int>& n0_list);

/// Write the analytic oracle curves for a config: oracle_moments.csv (t,n,E)
/// and, for Maxwell kernels, oracle_deathchain.csv (t,N,p).
std::filesystem::path cli_oracle(const RunConfig& config);

/// Aggregate the CSV artifacts of a run directory into one tidy long-format
/// table plotdata.csv (source, t, series, value, stderr).
std::filesystem::path cli_plotdata(const std::filesystem::path& run_dir);

}  // namespace kal

#endif
