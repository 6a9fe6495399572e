#include "wmlmc/config.hpp"

#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string_view>

namespace wmlmc {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config error at " + (path.empty() ? "$" : path) + ": " + what);
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<std::string_view> allowed) {
  require_object(j, path);
  for (const auto& item : j.items()) {
    bool known = false;
    for (auto k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) fail(path + "." + item.key(), "unknown key");
  }
}

double get_number(const json& j, const std::string& path, const char* key,
                  std::optional<double> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(path + "." + key, "missing required key");
  }
  const auto& v = j.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

long long get_integer(const json& j, const std::string& path, const char* key,
                      std::optional<long long> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(path + "." + key, "missing required key");
  }
  const auto& v = j.at(key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<long long>();
}

std::string get_string(const json& j, const std::string& path, const char* key,
                       std::optional<std::string> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(path + "." + key, "missing required key");
  }
  const auto& v = j.at(key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

bool get_bool(const json& j, const std::string& path, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

ModelSpec parse_model(const json& j) {
  const std::string path = "model";
  check_keys(j, path, {"family", "params", "s0", "horizon", "rate"});
  const std::string family = get_string(j, path, "family");

  ModelSpec model;
  json params = j.contains("params") ? j.at("params") : json::object();
  if (family == "gbm") {
    check_keys(params, path + ".params", {"mu", "vol"});
    model = ModelSpec::gbm(get_number(params, path + ".params", "mu", 0.05),
                           get_number(params, path + ".params", "vol", 0.2));
  } else if (family == "igbm" || family == "cir") {
    check_keys(params, path + ".params", {"kappa", "mean", "vol"});
    const double kappa = get_number(params, path + ".params", "kappa", 2.0);
    const double mean = get_number(params, path + ".params", "mean", 100.0);
    const double vol = get_number(params, path + ".params", "vol", 0.2);
    model = family == "igbm" ? ModelSpec::igbm(kappa, mean, vol)
                             : ModelSpec::cir(kappa, mean, vol);
  } else {
    fail(path + ".family", "expected one of gbm, igbm, cir");
  }
  model.s0 = get_number(j, path, "s0", 100.0);
  model.horizon = get_number(j, path, "horizon", 1.0);
  model.rate = get_number(j, path, "rate", 0.05);
  if (!(model.horizon > 0.0)) fail(path + ".horizon", "must be positive");
  return model;
}

SchemeSpec parse_scheme(const json& j) {
  const std::string path = "scheme";
  check_keys(j, path, {"kind", "M", "J0", "antithetic"});
  SchemeSpec scheme;
  const std::string kind = get_string(j, path, "kind");
  if (kind == "euler")
    scheme.kind = SchemeKind::EulerMaruyama;
  else if (kind == "milstein")
    scheme.kind = SchemeKind::Milstein;
  else
    fail(path + ".kind", "expected euler or milstein");
  scheme.refinement = static_cast<int>(get_integer(j, path, "M", 2));
  scheme.base_steps = static_cast<int>(get_integer(j, path, "J0", 1));
  scheme.antithetic = get_bool(j, path, "antithetic", false);
  if (scheme.refinement < 2) fail(path + ".M", "must be at least 2");
  if (scheme.base_steps < 1) fail(path + ".J0", "must be at least 1");
  return scheme;
}

PayoffSpec parse_payoff(const json& j) {
  const std::string path = "payoff";
  check_keys(j, path, {"kind", "strike"});
  PayoffSpec payoff;
  const std::string kind = get_string(j, path, "kind");
  if (kind == "call")
    payoff.kind = PayoffKind::Call;
  else if (kind == "asian")
    payoff.kind = PayoffKind::Asian;
  else if (kind == "digital")
    payoff.kind = PayoffKind::Digital;
  else
    fail(path + ".kind", "expected call, asian or digital");
  payoff.strike = get_number(j, path, "strike");
  if (!(payoff.strike > 0.0)) fail(path + ".strike", "must be positive");
  return payoff;
}

void parse_run(const json& j, RunConfig& run) {
  const std::string path = "run";
  check_keys(j, path,
             {"target_mse", "pilot_n", "seed", "method", "max_level", "error_split",
              "threads", "initial_levels"});
  run.target_mse = get_number(j, path, "target_mse");
  if (!(run.target_mse > 0.0)) fail(path + ".target_mse", "must be positive");
  run.pilot_n = static_cast<int>(get_integer(j, path, "pilot_n", 20));
  if (run.pilot_n < 2) fail(path + ".pilot_n", "must be at least 2");
  run.seed = static_cast<std::uint64_t>(get_integer(j, path, "seed", 1));
  const std::string method = get_string(j, path, "method", "wmlmc");
  if (method == "mlmc")
    run.method = Method::MLMC;
  else if (method == "wmlmc")
    run.method = Method::WMLMC;
  else if (method == "single")
    run.method = Method::SingleLevel;
  else
    fail(path + ".method", "expected mlmc, wmlmc or single");
  run.max_level = static_cast<int>(get_integer(j, path, "max_level", 14));
  if (run.max_level < 0) fail(path + ".max_level", "must be nonnegative");
  run.error_split = get_number(j, path, "error_split", 0.5);
  if (!(run.error_split > 0.0 && run.error_split < 1.0))
    fail(path + ".error_split", "must lie strictly between 0 and 1");
  run.threads = static_cast<int>(get_integer(j, path, "threads", 1));
  if (run.threads < 1) fail(path + ".threads", "must be at least 1");
  run.initial_levels = static_cast<int>(get_integer(j, path, "initial_levels", 3));
  if (run.initial_levels < 1) fail(path + ".initial_levels", "must be at least 1");
}

OutputConfig parse_output(const json& j) {
  const std::string path = "output";
  check_keys(j, path, {"path", "format"});
  OutputConfig out;
  out.path = get_string(j, path, "path", "");
  out.format = get_string(j, path, "format", "both");
  if (out.format != "json" && out.format != "csv" && out.format != "both")
    fail(path + ".format", "expected json, csv or both");
  return out;
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
  check_keys(j, "", {"model", "scheme", "payoff", "run", "output"});
  for (const char* key : {"model", "scheme", "payoff", "run"})
    if (!j.contains(key)) fail(key, "missing required section");

  ExperimentConfig cfg;
  cfg.run.model = parse_model(j.at("model"));
  cfg.run.scheme = parse_scheme(j.at("scheme"));
  cfg.run.payoff = parse_payoff(j.at("payoff"));
  parse_run(j.at("run"), cfg.run);
  if (j.contains("output")) cfg.output = parse_output(j.at("output"));
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw ConfigError(path + ":" + std::to_string(line) + ": " + e.what());
  }
  return parse_experiment_config(j);
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg) {
  const auto& r = cfg.run;
  const char* family = r.model.family == ModelFamily::GBM    ? "gbm"
                       : r.model.family == ModelFamily::IGBM ? "igbm"
                                                             : "cir";
  json params = r.model.family == ModelFamily::GBM
                    ? json{{"mu", r.model.mu}, {"vol", r.model.vol}}
                    : json{{"kappa", r.model.kappa},
                           {"mean", r.model.mean_level},
                           {"vol", r.model.vol}};
  const char* method = r.method == Method::MLMC    ? "mlmc"
                       : r.method == Method::WMLMC ? "wmlmc"
                                                   : "single";
  const char* payoff = r.payoff.kind == PayoffKind::Call    ? "call"
                       : r.payoff.kind == PayoffKind::Asian ? "asian"
                                                            : "digital";
  return json{
      {"model",
       {{"family", family},
        {"params", params},
        {"s0", r.model.s0},
        {"horizon", r.model.horizon},
        {"rate", r.model.rate}}},
      {"scheme",
       {{"kind", r.scheme.kind == SchemeKind::EulerMaruyama ? "euler" : "milstein"},
        {"M", r.scheme.refinement},
        {"J0", r.scheme.base_steps},
        {"antithetic", r.scheme.antithetic}}},
      {"payoff", {{"kind", payoff}, {"strike", r.payoff.strike}}},
      {"run",
       {{"target_mse", r.target_mse},
        {"pilot_n", r.pilot_n},
        {"seed", r.seed},
        {"method", method},
        {"max_level", r.max_level},
        {"error_split", r.error_split},
        {"threads", r.threads},
        {"initial_levels", r.initial_levels}}},
      {"output", {{"path", cfg.output.path}, {"format", cfg.output.format}}}};
}

}  // namespace wmlmc
