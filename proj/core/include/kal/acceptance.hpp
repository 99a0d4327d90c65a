#ifndef KAL_ACCEPTANCE_HPP
#define KAL_ACCEPTANCE_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace kal {

/// The verification suite: every criterion runs at its pinned scale and
/// tolerance. Scales are not configurable; only the seed, the scratch
/// directory and the omega-quadrature sample count can be overridden.
struct AcceptanceOptions {
  std::uint64_t seed = 20240817;
  std::filesystem::path out_dir = "verify_out";
  int bbgky_omega_samples = 4;  // config-tunable quadrature depth
};

struct CriterionResult {
  int index = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  std::string details;
};

struct AcceptanceReport {
  std::vector<CriterionResult> results;
  bool all_pass() const {
    for (const auto& r : results)
      if (!r.pass) return false;
    return !results.empty();
  }
};

/// Run all criteria, printing one pass/fail line each to `log` (may be null).
/// Also writes <out_dir>/verify_report.json.
AcceptanceReport run_acceptance(const AcceptanceOptions& options, std::ostream* log);

}  // namespace kal

#endif
