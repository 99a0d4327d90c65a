#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kal/acceptance.hpp"
#include "kal/config.hpp"
#include "kal/driver.hpp"
#include "kal/errors.hpp"
#include "kal/version.hpp"

namespace {

std::vector<int> parse_n0_list(const std::string& csv) {
  std::vector<int> out;
  std::istringstream in(csv);
  std::string token;
  while (std::getline(in, token, ',')) {
    if (token.empty()) continue;
    out.push_back(std::stoi(token));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kal -- event-driven simulator of the annihilating Kac particle system"};
  app.set_version_flag("--version", kal::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string sweep_n0 = "50,100,200,400";
  std::string plot_dir;
  std::string verify_config;

  CLI::App* run = app.add_subcommand("run", "simulate one ensemble and write CSV artifacts");
  run->add_option("config", config_path, "JSON config file")->required();

  CLI::App* sweep = app.add_subcommand("sweep", "thermodynamic-limit sweep over N0 (Lambda=N0)");
  sweep->add_option("config", config_path, "JSON base config file")->required();
  sweep->add_option("--n0", sweep_n0, "comma-separated even N0 list")->capture_default_str();

  CLI::App* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_option("config", verify_config,
                     "optional config: seed/output_dir/omega_samples override the defaults");

  CLI::App* oracle = app.add_subcommand("oracle", "write limit-model oracle curves");
  oracle->add_option("config", config_path, "JSON config file")->required();

  CLI::App* plotdata = app.add_subcommand("plotdata", "aggregate run CSVs into a tidy table");
  plotdata->add_option("dir", plot_dir, "run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto dir = kal::cli_run(kal::RunConfig::load(config_path));
      std::cout << "artifacts written to " << dir.string() << std::endl;
      return static_cast<int>(kal::ExitCode::ok);
    }
    if (sweep->parsed()) {
      const auto dir = kal::cli_sweep(kal::RunConfig::load(config_path), parse_n0_list(sweep_n0));
      std::cout << "sweep written to " << dir.string() << std::endl;
      return static_cast<int>(kal::ExitCode::ok);
    }
    if (verify->parsed()) {
      kal::AcceptanceOptions opt;
      if (!verify_config.empty()) {
        const kal::RunConfig cfg = kal::RunConfig::load(verify_config);
        opt.seed = cfg.seed;
        opt.out_dir = cfg.output_dir;
        opt.bbgky_omega_samples = cfg.estimators.omega_samples;
      }
      const kal::AcceptanceReport report = kal::run_acceptance(opt, &std::cout);
      if (!report.all_pass()) return static_cast<int>(kal::ExitCode::verification_failure);
      return static_cast<int>(kal::ExitCode::ok);
    }
    if (oracle->parsed()) {
      const auto dir = kal::cli_oracle(kal::RunConfig::load(config_path));
      std::cout << "oracle curves written to " << dir.string() << std::endl;
      return static_cast<int>(kal::ExitCode::ok);
    }
    if (plotdata->parsed()) {
      const auto path = kal::cli_plotdata(plot_dir);
      std::cout << "tidy table written to " << path.string() << std::endl;
      return static_cast<int>(kal::ExitCode::ok);
    }
  } catch (const kal::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return static_cast<int>(kal::ExitCode::config_error);
  } catch (const kal::IoError& e) {
    std::cerr << "io error: " << e.what() << std::endl;
    return static_cast<int>(kal::ExitCode::io_error);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return static_cast<int>(kal::ExitCode::config_error);
  }
  return static_cast<int>(kal::ExitCode::ok);
}
