#include "kal/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "kal/errors.hpp"

namespace kal {

using nlohmann::json;

Vec3 InitSpec::sample(RngStream& rng) const {
  switch (type) {
    case Type::maxwellian:
      return rng.normal3(std::sqrt(t0));
    case Type::bimodal: {
      Vec3 v = rng.normal3(std::sqrt(t0));
      v.x += rng.uniform() < 0.5 ? offset : -offset;
      return v;
    }
    case Type::ball: {
      // Uniform in the ball: uniform direction, radius ~ R U^{1/3}.
      const Vec3 dir = rng.unit_vector();
      return std::cbrt(rng.uniform()) * radius * dir;
    }
  }
  return {};
}

double InitSpec::energy_per_particle() const {
  switch (type) {
    case Type::maxwellian:
      return 3.0 * t0;
    case Type::bimodal:
      return 3.0 * t0 + offset * offset;
    case Type::ball:
      return 3.0 * radius * radius / 5.0;
  }
  return 0.0;
}

namespace {

InitSpec init_from_json(const json& j) {
  InitSpec init;
  const std::string type = j.value("type", std::string("maxwellian"));
  if (type == "maxwellian") {
    init.type = InitSpec::Type::maxwellian;
    init.t0 = j.value("T0", 1.0);
    if (!(init.t0 > 0.0)) throw ConfigError("init.T0 must be positive");
  } else if (type == "bimodal") {
    init.type = InitSpec::Type::bimodal;
    init.t0 = j.value("T0", 1.0);
    init.offset = j.value("offset", 1.0);
    if (!(init.t0 > 0.0)) throw ConfigError("init.T0 must be positive");
    if (!(init.offset >= 0.0)) throw ConfigError("init.offset must be nonnegative");
  } else if (type == "ball") {
    init.type = InitSpec::Type::ball;
    init.radius = j.value("R", 1.0);
    if (!(init.radius > 0.0)) throw ConfigError("init.R must be positive");
  } else {
    throw ConfigError("unknown init.type '" + type + "'");
  }
  return init;
}

json init_to_json(const InitSpec& init) {
  json j;
  switch (init.type) {
    case InitSpec::Type::maxwellian:
      j["type"] = "maxwellian";
      j["T0"] = init.t0;
      break;
    case InitSpec::Type::bimodal:
      j["type"] = "bimodal";
      j["T0"] = init.t0;
      j["offset"] = init.offset;
      break;
    case InitSpec::Type::ball:
      j["type"] = "ball";
      j["R"] = init.radius;
      break;
  }
  return j;
}

Vec3 vec_from_json(const json& j, const char* key) {
  if (!j.is_array() || j.size() != 3)
    throw ConfigError(std::string(key) + ": expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

UnaryTestFunction unary_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") return UnaryTestFunction::constant(j.value("value", 1.0));
  if (kind == "gaussian") {
    Vec3 c{};
    if (j.contains("c")) c = vec_from_json(j.at("c"), "c");
    return UnaryTestFunction::gaussian(j.value("a", 1.0), c);
  }
  if (kind == "fourier") return UnaryTestFunction::fourier(vec_from_json(j.at("k"), "k"));
  if (kind == "ball")
    return UnaryTestFunction::ball_indicator_smooth(j.value("R", 1.0), j.value("width", 0.25));
  if (kind == "energy") {
    const double r = j.value("r", std::numeric_limits<double>::infinity());
    return UnaryTestFunction::truncated_energy(r);
  }
  throw ConfigError("unknown test function kind '" + kind + "'");
}

}  // namespace

TensorTestFunction test_function_from_json(const json& j) {
  const std::string id = j.at("id").get<std::string>();
  std::vector<UnaryTestFunction> factors;
  if (j.contains("factors")) {
    for (const auto& f : j.at("factors")) factors.push_back(unary_from_json(f));
  } else {
    factors.push_back(unary_from_json(j));
  }
  if (factors.size() > 3)
    throw ConfigError("test function '" + id + "': arity > 3 is not supported");
  return TensorTestFunction(id, std::move(factors));
}

json test_function_to_json(const TensorTestFunction& fn) {
  json factors = json::array();
  for (const auto& f : fn.factors()) factors.push_back(f.describe());
  json j;
  j["id"] = fn.id();
  j["ell"] = fn.ell();
  j["factors"] = factors;
  return j;
}

CollisionKernel RunConfig::make_kernel() const {
  switch (kernel_family) {
    case KernelFamily::maxwell:
      return CollisionKernel::maxwell();
    case KernelFamily::hard_sphere:
      return CollisionKernel::hard_sphere();
    case KernelFamily::bounded_custom: {
      if (kernel_table_path.empty())
        throw ConfigError("kernel.table_path is required for bounded_custom kernels");
      return CollisionKernel::bounded_custom(SigmaTable::load_csv(kernel_table_path),
                                             kernel_gamma, kernel_c_b);
    }
  }
  throw ConfigError("invalid kernel family");
}

std::vector<double> RunConfig::snapshot_times() const {
  const int count = snapshot_count;
  std::vector<double> times(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    times[static_cast<std::size_t>(i)] = t_end * static_cast<double>(i) / (count - 1);
  times.back() = t_end;
  return times;
}

void RunConfig::resolve() {
  if (lambda == 0.0) lambda = static_cast<double>(n0);
  if (snapshot_count == 0)
    snapshot_count = std::max(2, static_cast<int>(std::lround(32.0 * t_end)) + 1);
  if (observables.empty()) {
    const auto one = UnaryTestFunction::constant(1.0);
    const auto en = UnaryTestFunction::truncated_energy(std::numeric_limits<double>::infinity());
    const auto ga = UnaryTestFunction::gaussian(1.0);
    observables.emplace_back("mass1", std::vector<UnaryTestFunction>{one});
    observables.emplace_back("energy1", std::vector<UnaryTestFunction>{en});
    observables.emplace_back("gauss1", std::vector<UnaryTestFunction>{ga});
    observables.emplace_back("mass2", std::vector<UnaryTestFunction>{one, one});
    observables.emplace_back("energy2", std::vector<UnaryTestFunction>{en, one});
    observables.emplace_back("gauss2", std::vector<UnaryTestFunction>{ga, ga});
    observables.emplace_back("mass3", std::vector<UnaryTestFunction>{one, one, one});
    observables.emplace_back("energy3", std::vector<UnaryTestFunction>{en, one, one});
  }
  if (residual_observables.empty()) {
    residual_observables.emplace_back(
        "res_mass1", std::vector<UnaryTestFunction>{UnaryTestFunction::constant(1.0)});
    residual_observables.emplace_back(
        "res_gauss1", std::vector<UnaryTestFunction>{UnaryTestFunction::gaussian(1.0)});
  }
}

void RunConfig::validate() const {
  if (n0 <= 0 || n0 % 2 != 0) throw ConfigError("N0 must be even and positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (snapshot_count < 2) throw ConfigError("snapshot_count must be at least 2");
  if (ensemble_m < 1) throw ConfigError("ensemble must be at least 1");
  if (estimators.omega_samples < 1) throw ConfigError("estimators.omega_samples must be >= 1");
  if (!(estimators.max_quadrature_dt > 0.0))
    throw ConfigError("estimators.max_quadrature_dt must be positive");
  if (kernel_family == KernelFamily::bounded_custom && kernel_table_path.empty())
    throw ConfigError("kernel.table_path is required for bounded_custom kernels");
  if (!(kernel_gamma >= 0.0 && kernel_gamma <= 1.0)) throw ConfigError("kernel.gamma must lie in [0,1]");
  if (!(kernel_c_b > 0.0)) throw ConfigError("kernel.c_b must be positive");
  for (const auto& obs : observables)
    if (obs.ell() > 3) throw ConfigError("observable '" + obs.id() + "': arity > 3 unsupported");
  for (const auto& res : residual_observables)
    if (res.ell() > 3)
      throw ConfigError("residual '" + res.id() + "': arity > 3 unsupported");
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig cfg;
  if (j.contains("kernel")) {
    const json& k = j.at("kernel");
    cfg.kernel_family = kernel_family_from_string(k.value("family", std::string("maxwell")));
    cfg.kernel_gamma = k.value("gamma", cfg.kernel_family == KernelFamily::hard_sphere ? 1.0 : 0.0);
    cfg.kernel_c_b = k.value("c_b", 1.0);
    cfg.kernel_table_path = k.value("table_path", std::string());
  }
  cfg.alpha = j.value("alpha", 0.5);
  cfg.n0 = j.value("N0", 100);
  cfg.lambda = j.value("lambda", 0.0);
  cfg.t_end = j.value("t_end", 1.0);
  cfg.snapshot_count = j.value("snapshot_count", 0);
  cfg.ensemble_m = j.value("ensemble", 100);
  cfg.seed = j.value("seed", std::uint64_t{20240101});
  if (j.contains("init")) cfg.init = init_from_json(j.at("init"));
  cfg.mode = scheduling_mode_from_string(j.value("mode", std::string("exact")));
  if (j.contains("observables"))
    for (const auto& o : j.at("observables")) cfg.observables.push_back(test_function_from_json(o));
  if (j.contains("residuals"))
    for (const auto& o : j.at("residuals"))
      cfg.residual_observables.push_back(test_function_from_json(o));
  if (j.contains("estimators")) {
    const json& e = j.at("estimators");
    cfg.estimators.omega_samples = e.value("omega_samples", 64);
    cfg.estimators.max_quadrature_dt = e.value("max_quadrature_dt", 1.0 / 16.0);
  }
  if (j.contains("selfsim")) cfg.selfsim_split_sample = j.at("selfsim").value("split_sample", true);
  cfg.memory_cap_bytes = j.value("memory_cap_bytes", std::uint64_t{2ULL << 30});
  cfg.output_dir = j.value("output_dir", std::string("out"));
  cfg.resolve();
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json j;
  j["kernel"]["family"] = to_string(kernel_family);
  j["kernel"]["gamma"] = kernel_gamma;
  j["kernel"]["c_b"] = kernel_c_b;
  if (!kernel_table_path.empty()) j["kernel"]["table_path"] = kernel_table_path;
  j["alpha"] = alpha;
  j["N0"] = n0;
  j["lambda"] = lambda;
  j["t_end"] = t_end;
  j["snapshot_count"] = snapshot_count;
  j["ensemble"] = ensemble_m;
  j["seed"] = seed;
  j["init"] = init_to_json(init);
  j["mode"] = to_string(mode);
  json obs = json::array();
  for (const auto& o : observables) obs.push_back(test_function_to_json(o));
  j["observables"] = obs;
  json res = json::array();
  for (const auto& o : residual_observables) res.push_back(test_function_to_json(o));
  j["residuals"] = res;
  j["estimators"]["omega_samples"] = estimators.omega_samples;
  j["estimators"]["max_quadrature_dt"] = estimators.max_quadrature_dt;
  j["selfsim"]["split_sample"] = selfsim_split_sample;
  j["memory_cap_bytes"] = memory_cap_bytes;
  j["output_dir"] = output_dir;
  return j;
}

}  // namespace kal
