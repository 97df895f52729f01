// Command-line front end for the lowcon experiment harness.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lowcon/designs.hpp"
#include "lowcon/error.hpp"
#include "lowcon/harness.hpp"
#include "lowcon/linalg.hpp"

namespace fs = std::filesystem;
using namespace lowcon;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumerical = 4 };

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidArgument:
    case ErrorKind::InfeasibleDesign:
    case ErrorKind::DimensionTooSmall:
      return kConfig;
    case ErrorKind::FileNotFound:
    case ErrorKind::ColumnMissing:
    case ErrorKind::EmptyAfterFiltering:
    case ErrorKind::ConstantColumn:
    case ErrorKind::DegenerateBox:
    case ErrorKind::DegenerateSample:
      return kData;
    default:
      return kNumerical;
  }
}

// LOWCON_OUTPUT_DIR replaces the directory part of the output path.
std::string resolve_output(const std::string& path) {
  if (path.empty()) return path;
  const char* dir = std::getenv("LOWCON_OUTPUT_DIR");
  if (dir == nullptr || *dir == '\0') return path;
  fs::create_directories(dir);
  return (fs::path(dir) / fs::path(path).filename()).string();
}

template <class Writer>
void emit(const std::string& path, Writer&& write) {
  const std::string target = resolve_output(path);
  if (target.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(target);
  if (!out) throw Error(ErrorKind::ConfigError, "cannot write " + target);
  write(out);
}

bool any_failed(const auto& rows) {
  for (const auto& row : rows)
    if (row.failed) return true;
  return false;
}

void report_failures(const auto& rows) {
  for (const auto& row : rows)
    if (row.failed) std::cerr << "cell " << row.method << " r=" << row.r << " failed after retries\n";
}

std::vector<std::string> split_names(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream s(list);
  for (std::string item; std::getline(s, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LowCon subsampling experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  auto* simulate = app.add_subcommand("simulate", "run the simulation grid");
  simulate->add_option("--config", config_path, "JSON config")->required();
  simulate->add_option("--out", out_path, "output CSV (default: config output_path or stdout)");

  std::string data_path;
  std::string response;
  std::string predictors;
  auto* emse = app.add_subcommand("emse", "empirical MSE on a CSV dataset");
  emse->add_option("--config", config_path, "JSON config")->required();
  emse->add_option("--data", data_path, "input CSV")->required();
  emse->add_option("--response", response, "response column")->required();
  emse->add_option("--predictors", predictors, "comma-separated predictor columns")->required();
  emse->add_option("--out", out_path, "output CSV");

  Index toy_r = 10;
  std::uint64_t seed = 1;
  int toy_replicates = 100;
  Index toy_n = 1000;
  auto* toy = app.add_subcommand("toy", "toy partial-linear example");
  toy->add_option("--r", toy_r, "subsample size")->required();
  toy->add_option("--seed", seed, "master seed")->required();
  toy->add_option("--replicates", toy_replicates, "replicates per cell")->capture_default_str();
  toy->add_option("--n", toy_n, "full sample size")->capture_default_str();
  toy->add_option("--out", out_path, "output CSV");

  double alpha = 0.0;
  double sigma2 = 1.0;
  auto* diag = app.add_subcommand("diagnose", "theory diagnostics per method");
  diag->add_option("--config", config_path, "JSON config")->required();
  diag->add_option("--alpha", alpha, "misspecification bound")->required();
  diag->add_option("--sigma2", sigma2, "noise variance")->required();
  diag->add_option("--out", out_path, "output JSON");

  Index olhd_r = 0;
  Index olhd_p = 0;
  auto* olhd = app.add_subcommand("olhd", "print an orthogonal Latin hypercube");
  olhd->add_option("--r", olhd_r, "runs")->required();
  olhd->add_option("--p", olhd_p, "factors")->required();
  olhd->add_option("--seed", seed, "seed")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*simulate) {
      auto config = harness::load_config(config_path);
      if (out_path.empty()) out_path = config.output_path;
      const auto rows = config.mode == harness::Mode::Toy ? harness::run_toy(config) : harness::run_simulation(config);
      emit(out_path, [&](std::ostream& os) { harness::write_results_csv(rows, os); });
      report_failures(rows);
      return any_failed(rows) ? kNumerical : kOk;
    }
    if (*emse) {
      auto config = harness::load_config(config_path);
      if (out_path.empty()) out_path = config.output_path;
      const auto data = harness::ingest_csv(data_path, response, split_names(predictors));
      if (data.dropped_rows > 0) std::cerr << "dropped " << data.dropped_rows << " incomplete rows\n";
      const auto report = harness::run_emse(data, config);
      emit(out_path, [&](std::ostream& os) { harness::write_emse_csv(report.rows, os); });
      report_failures(report.rows);
      return any_failed(report.rows) ? kNumerical : kOk;
    }
    if (*toy) {
      harness::ExperimentConfig config;
      config.mode = harness::Mode::Toy;
      config.n = toy_n;
      config.r_list = {toy_r};
      config.seed = seed;
      config.replicates = toy_replicates;
      config.methods = {samplers::Method::Unif, samplers::Method::Blev, samplers::Method::Lowcon};
      const auto rows = harness::run_toy(config);
      emit(out_path, [&](std::ostream& os) { harness::write_results_csv(rows, os); });
      report_failures(rows);
      return any_failed(rows) ? kNumerical : kOk;
    }
    if (*diag) {
      auto config = harness::load_config(config_path);
      const auto report = harness::diagnose(config, alpha, sigma2);
      emit(out_path, [&](std::ostream& os) { os << harness::to_json(report).dump(2) << '\n'; });
      return kOk;
    }
    if (*olhd) {
      Rng rng(seed);
      const auto design = designs::generate_olhd(olhd_r, olhd_p, rng);
      for (Index i = 0; i < design.points.rows(); ++i) {
        for (Index j = 0; j < design.points.cols(); ++j)
          std::printf(j ? ",%.17g" : "%.17g", design.points(i, j));
        std::printf("\n");
      }
      std::printf("kappa=%.17g\n", design.kappa);
      return kOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
