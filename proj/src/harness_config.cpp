#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include "lowcon/error.hpp"
#include "lowcon/harness.hpp"

namespace lowcon::harness {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); }

template <typename T, typename Parse>
std::vector<T> one_or_many(const json& v, const char* key, Parse parse) {
  std::vector<T> out;
  try {
    if (v.is_string()) {
      out.push_back(parse(v.get<std::string>()));
    } else if (v.is_array()) {
      for (const auto& e : v) out.push_back(parse(e.get<std::string>()));
    } else {
      config_error(std::string(key) + " must be a string or an array of strings");
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    config_error(std::string(key) + ": " + e.what());
  } catch (const json::exception& e) {
    config_error(std::string(key) + ": " + e.what());
  }
  if (out.empty()) config_error(std::string(key) + " must not be empty");
  return out;
}

Mode parse_mode(const std::string& s) {
  if (s == "simulate") return Mode::Simulate;
  if (s == "realdata") return Mode::Realdata;
  if (s == "toy") return Mode::Toy;
  if (s == "diagnose") return Mode::Diagnose;
  config_error("unknown mode '" + s + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (replicates < 1) config_error("replicates must be >= 1");
  if (!(theta >= 0.0 && theta < 50.0)) config_error("theta must lie in [0, 50)");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) config_error("sigma2 must be finite and nonnegative");
  if (!(slev_alpha > 0.0 && slev_alpha <= 1.0)) config_error("slev_alpha must lie in (0, 1]");
  if (threads < 1) config_error("threads must be >= 1");
  if (methods.empty()) config_error("methods must not be empty");
  if (r_list.empty()) config_error("r_list must not be empty");
  if (!(toy_x_df >= 0.0)) config_error("toy_x_df must be nonnegative");
  const Index dim = mode == Mode::Toy ? 1 : p;
  if (dim < 1) config_error("p must be >= 1");
  if (mode != Mode::Realdata && n < 2) config_error("n must be >= 2");
  // Real-data runs take n and p from the dataset; run_emse re-validates.
  const bool sized = mode != Mode::Realdata || p_from_data;
  for (Index r : r_list) {
    if (r < 1) config_error("every r must be positive");
    if (!sized) continue;
    if (r <= dim) config_error("every r must exceed p (got r = " + std::to_string(r) + ")");
    if (mode != Mode::Realdata && r >= n) config_error("every r must be below n (got r = " + std::to_string(r) + ")");
    for (samplers::Method m : methods)
      if (m == samplers::Method::Iboss && r < 2 * dim) config_error("IBOSS needs r >= 2p");
  }
  if (mode == Mode::Simulate || mode == Mode::Diagnose) {
    for (datagen::MisspecKind h : misspec) {
      const bool needs8 = h == datagen::MisspecKind::H3 || h == datagen::MisspecKind::H4;
      if ((needs8 && p < 8) || (h != datagen::MisspecKind::H1 && p < 3))
        config_error(std::string(datagen::to_string(h)) + " needs a larger p");
    }
  }
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) config_error("config must be a JSON object");
  static const std::set<std::string> known{"mode",      "dist",       "misspec",     "n",
                                           "p",         "r_list",     "theta",       "sigma2",
                                           "replicates", "seed",      "methods",     "slev_alpha",
                                           "output_path", "record_runtime", "threads", "intercept",
                                           "toy_x_df"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) config_error("unknown key '" + key + "'");

  ExperimentConfig c;
  try {
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("dist"))
      c.dist = one_or_many<datagen::Distribution>(j.at("dist"), "dist",
                                                  [](const std::string& s) { return datagen::parse_distribution(s); });
    if (j.contains("misspec"))
      c.misspec = one_or_many<datagen::MisspecKind>(j.at("misspec"), "misspec",
                                                   [](const std::string& s) { return datagen::parse_misspec(s); });
    if (j.contains("methods"))
      c.methods = one_or_many<samplers::Method>(j.at("methods"), "methods",
                                               [](const std::string& s) { return samplers::parse_method(s); });
    if (j.contains("n")) c.n = j.at("n").get<Index>();
    if (j.contains("p")) c.p = j.at("p").get<Index>();
    if (j.contains("r_list")) c.r_list = j.at("r_list").get<std::vector<Index>>();
    if (j.contains("theta")) c.theta = j.at("theta").get<double>();
    if (j.contains("sigma2")) c.sigma2 = j.at("sigma2").get<double>();
    if (j.contains("replicates")) c.replicates = j.at("replicates").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("slev_alpha")) c.slev_alpha = j.at("slev_alpha").get<double>();
    if (j.contains("output_path")) c.output_path = j.at("output_path").get<std::string>();
    if (j.contains("record_runtime")) c.record_runtime = j.at("record_runtime").get<bool>();
    if (j.contains("threads")) c.threads = j.at("threads").get<int>();
    if (j.contains("intercept")) c.intercept = j.at("intercept").get<bool>();
    if (j.contains("toy_x_df")) c.toy_x_df = j.at("toy_x_df").get<double>();
  } catch (const json::exception& e) {
    config_error(e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    config_error("malformed JSON in '" + path + "': " + e.what());
  }
  return parse_config(j);
}

}  // namespace lowcon::harness
