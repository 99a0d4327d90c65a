#include "kal/driver.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kal/ensemble.hpp"
#include "kal/errors.hpp"
#include "kal/io.hpp"
#include "kal/limit_models.hpp"
#include "kal/selfsim.hpp"
#include "kal/version.hpp"

namespace kal {

using nlohmann::json;

namespace {

void write_moments_csv(const std::filesystem::path& path, const EnsembleResult& ens) {
  CsvWriter csv(path, {"t", "N_mean", "N_stderr", "E_mean", "E_stderr", "px", "py", "pz"});
  for (std::size_t s = 0; s < ens.snapshot_count(); ++s) {
    const MomentSummary mom = ensemble_moments(ens, s);
    csv.field(ens.snapshot_times()[s])
        .field(mom.n_mean)
        .field(mom.n_stderr)
        .field(mom.energy_mean)
        .field(mom.energy_stderr)
        .field(mom.momentum_mean.x)
        .field(mom.momentum_mean.y)
        .field(mom.momentum_mean.z);
    csv.end_row();
  }
  csv.close();
}

void write_correlations_csv(const std::filesystem::path& path, const EnsembleResult& ens,
                            const std::vector<TensorTestFunction>& observables) {
  CsvWriter csv(path, {"t", "ell", "testfn_id", "value", "stderr"});
  for (const auto& obs : observables) {
    for (double t : ens.snapshot_times()) {
      const EmpiricalCorrelation c = estimate_correlation(ens, obs, t);
      csv.field(t).field(c.ell).field(c.testfn_id).field(c.value).field(c.stderr_);
      csv.end_row();
    }
  }
  csv.close();
}

std::vector<std::string> write_residuals_csv(const std::filesystem::path& path,
                                             const EnsembleResult& ens,
                                             const std::vector<TensorTestFunction>& observables,
                                             const ResidualOptions& options) {
  CsvWriter csv(path, {"t", "ell", "testfn_id", "residual", "stderr"});
  std::vector<std::string> warnings;
  const auto& times = ens.snapshot_times();
  for (const auto& obs : observables) {
    const auto rows = bbgky_residual_batch(ens, obs, times, options);
    for (const auto& row : rows) {
      csv.field(row.t).field(row.ell).field(row.testfn_id).field(row.residual)
          .field(row.stderr_total);
      csv.end_row();
      if (!row.warning.empty() &&
          (warnings.empty() || warnings.back() != obs.id() + ": " + row.warning))
        warnings.push_back(obs.id() + ": " + row.warning);
    }
  }
  csv.close();
  return warnings;
}

void write_selfsim_csv(const std::filesystem::path& path, const EnsembleResult& ens) {
  CsvWriter csv(path, {"t", "tau", "n_f", "ux", "uy", "uz", "T_f", "dev_mass", "dev_px",
                       "dev_py", "dev_pz", "dev_energy"});
  const ConservedReport rep = conserved_check(ens, ens.snapshot_times(), /*split_sample=*/false);
  for (const auto& row : rep.rows) {
    csv.field(row.t)
        .field(row.tau)
        .field(row.frame.n_f)
        .field(row.frame.u_f.x)
        .field(row.frame.u_f.y)
        .field(row.frame.u_f.z)
        .field(row.frame.t_f)
        .field(row.dev_mass)
        .field(row.dev_momentum.x)
        .field(row.dev_momentum.y)
        .field(row.dev_momentum.z)
        .field(row.dev_energy);
    csv.end_row();
  }
  csv.close();
}

void write_selfsim_hist_csv(const std::filesystem::path& path, const EnsembleResult& ens) {
  // exploratory shape-stability output; carries no acceptance threshold
  CsvWriter csv(path, {"t", "tau", "bin_lo", "bin_hi", "density"});
  for (double t : ens.snapshot_times()) {
    SpeedHistogram hist;
    try {
      hist = rescaled_speed_histogram(ens, t);
    } catch (const DomainError&) {
      continue;  // fully annihilated snapshots have no frame
    }
    for (std::size_t b = 0; b + 1 < hist.edges.size(); ++b) {
      csv.field(hist.t)
          .field(hist.tau)
          .field(hist.edges[b])
          .field(hist.edges[b + 1])
          .field(hist.density[b]);
      csv.end_row();
    }
  }
  csv.close();
}

json split_sample_summary(const EnsembleResult& ens) {
  json rows = json::array();
  if (ens.realization_count() < 4) return rows;
  const ConservedReport rep = conserved_check(ens, ens.snapshot_times(), /*split_sample=*/true);
  for (const auto& row : rep.rows) {
    json r;
    r["t"] = row.t;
    r["dev_mass"] = row.dev_mass;
    r["dev_energy"] = row.dev_energy;
    r["dev_p"] = {row.dev_momentum.x, row.dev_momentum.y, row.dev_momentum.z};
    if (row.se_mass) r["se_mass"] = *row.se_mass;
    if (row.se_energy) r["se_energy"] = *row.se_energy;
    if (row.se_momentum)
      r["se_p"] = {row.se_momentum->x, row.se_momentum->y, row.se_momentum->z};
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_meta(const std::filesystem::path& path, const RunConfig& cfg,
                const EnsembleResult& ens, const std::vector<std::string>& warnings,
                const std::vector<std::string>& files) {
  json meta;
  meta["version"] = kVersion;
  meta["config"] = cfg.to_json();
  meta["seed"] = cfg.seed;
  meta["events"]["elastic"] = ens.total_events(Event::Kind::elastic);
  meta["events"]["annihilation"] = ens.total_events(Event::Kind::annihilation);
  meta["events"]["null"] = ens.total_events(Event::Kind::null_event);
  meta["warnings"] = warnings;
  meta["files"] = files;
  meta["velocities_file_backed"] = ens.file_backed();
  if (cfg.selfsim_split_sample) meta["selfsim_split_sample"] = split_sample_summary(ens);
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << meta.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

std::filesystem::path cli_run(const RunConfig& config) {
  config.validate();
  const std::filesystem::path dir(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "'");

  const EnsembleResult ens = run_ensemble(config);

  ResidualOptions ropt;
  ropt.omega_samples = config.estimators.omega_samples;
  ropt.max_quadrature_dt = config.estimators.max_quadrature_dt;

  write_moments_csv(dir / "moments.csv", ens);
  write_correlations_csv(dir / "correlations.csv", ens, config.observables);
  const auto warnings =
      write_residuals_csv(dir / "residuals.csv", ens, config.residual_observables, ropt);
  write_selfsim_csv(dir / "selfsim.csv", ens);
  write_selfsim_hist_csv(dir / "selfsim_hist.csv", ens);
  write_meta(dir / "meta.json", config, ens, warnings,
             {"moments.csv", "correlations.csv", "residuals.csv", "selfsim.csv",
              "selfsim_hist.csv"});
  return dir;
}

std::filesystem::path cli_sweep(const RunConfig& base, const std::vector<int>& n0_list) {
  if (n0_list.empty()) throw ConfigError("sweep: empty N0 list");
  for (int n0 : n0_list)
    if (n0 <= 0 || n0 % 2 != 0) throw ConfigError("sweep: every N0 must be even and positive");

  const std::filesystem::path dir(base.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "'");

  struct SweepPoint {
    int n0;
    double t;
    std::string observable;
    double value;
    std::optional<double> stderr_;
  };
  std::vector<SweepPoint> points;
  std::vector<double> defect_values;

  const bool maxwell = base.kernel_family == KernelFamily::maxwell;
  const UnaryTestFunction gauss = UnaryTestFunction::gaussian(1.0);

  std::vector<int> sorted = n0_list;
  std::sort(sorted.begin(), sorted.end());

  for (int n0 : n0_list) {
    RunConfig cfg = base;
    cfg.n0 = n0;
    cfg.lambda = static_cast<double>(n0);  // thermodynamic-limit path N0/Lambda = 1
    cfg.output_dir = (dir / ("n0_" + std::to_string(n0))).string();
    cfg.resolve();
    const EnsembleResult ens = run_ensemble(cfg);
    const double eps = ens.epsilon();
    for (double t : ens.snapshot_times()) {
      const std::size_t s = ens.snapshot_index(t);
      const MomentSummary mom = ensemble_moments(ens, s);
      points.push_back({n0, t, "mass", eps * mom.n_mean,
                        mom.n_stderr ? std::optional<double>(eps * *mom.n_stderr) : std::nullopt});
      points.push_back({n0, t, "energy", eps * mom.energy_mean,
                        mom.energy_stderr ? std::optional<double>(eps * *mom.energy_stderr)
                                          : std::nullopt});
      const ChaosDefect defect = chaos_defect(ens, gauss, gauss, t);
      points.push_back({n0, t, "chaos_defect_gauss", defect.value, defect.stderr_});
    }
  }

  // Oracle join: Maxwell moments in closed form; the chaos defect vanishes in
  // the limit; anything else uses the largest-N0 run as reference.
  CsvWriter csv(dir / "sweep.csv",
                {"N0", "t", "observable_id", "value", "stderr", "oracle_value", "abs_error"});
  const double e0 = base.init.energy_per_particle();
  auto oracle_value = [&](const SweepPoint& p) -> std::optional<double> {
    if (p.observable == "chaos_defect_gauss") return 0.0;
    if (maxwell) {
      const double denom = 1.0 + base.alpha * p.t;
      if (p.observable == "mass") return 1.0 / denom;
      if (p.observable == "energy") return e0 / denom;
    }
    // Self-convergence reference: the same observable at the largest N0.
    const int ref_n0 = sorted.back();
    if (p.n0 == ref_n0) return std::nullopt;
    for (const auto& q : points)
      if (q.n0 == ref_n0 && q.t == p.t && q.observable == p.observable) return q.value;
    return std::nullopt;
  };
  for (const auto& p : points) {
    const std::optional<double> oracle = oracle_value(p);
    csv.field(p.n0).field(p.t).field(p.observable).field(p.value).field(p.stderr_);
    if (oracle) {
      csv.field(*oracle).field(std::abs(p.value - *oracle));
    } else {
      csv.field(std::string()).field(std::string());
    }
    csv.end_row();
  }
  csv.close();

  json meta;
  meta["version"] = kVersion;
  meta["base_config"] = base.to_json();
  meta["n0_list"] = n0_list;
  meta["oracle"] = maxwell ? "maxwell_moment_ode" : "self_convergence_largest_n0";
  std::ofstream out(dir / "sweep_meta.json");
  out << meta.dump(2) << '\n';
  if (!out) throw IoError("write failed for sweep_meta.json");
  return dir;
}

std::filesystem::path cli_oracle(const RunConfig& config) {
  const std::filesystem::path dir(config.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "'");

  const std::vector<double> times = config.snapshot_times();
  const double n0 = static_cast<double>(config.n0) * config.epsilon();
  const double e0 = n0 * config.init.energy_per_particle();
  const OracleCurve curve = maxwell_moment_ode(n0, e0, config.alpha, times);
  CsvWriter mom(dir / "oracle_moments.csv", {"t", "n", "E"});
  for (std::size_t i = 0; i < times.size(); ++i) {
    mom.field(times[i]).field(curve.n[i]).field(curve.energy[i]);
    mom.end_row();
  }
  mom.close();

  if (config.kernel_family == KernelFamily::maxwell) {
    const DeathChainDistribution chain =
        death_chain_evolve(config.n0, config.alpha, config.lambda, times);
    CsvWriter dc(dir / "oracle_deathchain.csv", {"t", "N", "p"});
    for (std::size_t i = 0; i < times.size(); ++i)
      for (std::size_t s = 0; s < chain.support.size(); ++s) {
        dc.field(times[i]).field(chain.support[s]).field(chain.p[i][s]);
        dc.end_row();
      }
    dc.close();
  }
  return dir;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::filesystem::path cli_plotdata(const std::filesystem::path& run_dir) {
  if (!std::filesystem::is_directory(run_dir))
    throw IoError("plotdata: '" + run_dir.string() + "' is not a directory");
  const std::filesystem::path out_path = run_dir / "plotdata.csv";
  CsvWriter csv(out_path, {"source", "t", "series", "value", "stderr"});

  // (file, t-column, series-name-or-column, value columns, stderr column)
  struct ValueColumn {
    std::string column;
    std::string stderr_column;  // empty if none
  };
  struct Source {
    std::string file;
    std::string t_column;
    std::string key_column;  // when set, series = key column value + ":" + value column
    std::vector<ValueColumn> values;
  };
  const std::vector<Source> sources = {
      {"moments.csv", "t", "", {{"N_mean", "N_stderr"}, {"E_mean", "E_stderr"}, {"px", ""}, {"py", ""}, {"pz", ""}}},
      {"correlations.csv", "t", "testfn_id", {{"value", "stderr"}}},
      {"residuals.csv", "t", "testfn_id", {{"residual", "stderr"}}},
      {"selfsim.csv", "t", "", {{"tau", ""}, {"n_f", ""}, {"T_f", ""}, {"dev_mass", ""}, {"dev_energy", ""}}},
      {"sweep.csv", "t", "observable_id", {{"value", "stderr"}, {"abs_error", ""}}},
  };

  for (const auto& src : sources) {
    const std::filesystem::path path = run_dir / src.file;
    std::ifstream in(path);
    if (!in) continue;  // source not produced by this run
    std::string line;
    if (!std::getline(in, line)) continue;
    const std::vector<std::string> header = split_csv_line(line);
    auto col_index = [&](const std::string& name) -> int {
      for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
      return -1;
    };
    const int t_col = col_index(src.t_column);
    const int key_col = src.key_column.empty() ? -1 : col_index(src.key_column);
    if (t_col < 0) continue;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const std::vector<std::string> cells = split_csv_line(line);
      for (const auto& vc : src.values) {
        const int v_col = col_index(vc.column);
        if (v_col < 0 || static_cast<std::size_t>(v_col) >= cells.size()) continue;
        if (cells[static_cast<std::size_t>(v_col)].empty()) continue;
        std::string series = vc.column;
        if (key_col >= 0 && static_cast<std::size_t>(key_col) < cells.size())
          series = cells[static_cast<std::size_t>(key_col)] + ":" + vc.column;
        std::string se;
        if (!vc.stderr_column.empty()) {
          const int se_col = col_index(vc.stderr_column);
          if (se_col >= 0 && static_cast<std::size_t>(se_col) < cells.size())
            se = cells[static_cast<std::size_t>(se_col)];
        }
        csv.field(src.file)
            .field(cells[static_cast<std::size_t>(t_col)])
            .field(series)
            .field(cells[static_cast<std::size_t>(v_col)])
            .field(se);
        csv.end_row();
      }
    }
  }
  csv.close();
  return out_path;
}

}  // namespace kal
