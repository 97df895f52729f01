#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lowcon/datagen.hpp"
#include "lowcon/samplers.hpp"
#include "lowcon/types.hpp"

namespace lowcon::harness {

enum class Mode { Simulate, Realdata, Toy, Diagnose };

struct ExperimentConfig {
  Mode mode = Mode::Simulate;
  std::vector<datagen::Distribution> dist{datagen::Distribution::D1};
  std::vector<datagen::MisspecKind> misspec{datagen::MisspecKind::H1};
  Index n = 10000;
  Index p = 10;
  std::vector<Index> r_list{20, 40, 60, 80, 100};
  double theta = 1.0;
  double sigma2 = 1.0;
  int replicates = 100;
  std::uint64_t seed = 1;
  std::vector<samplers::Method> methods{samplers::Method::Unif,   samplers::Method::Blev,
                                        samplers::Method::Slev,   samplers::Method::Levunw,
                                        samplers::Method::Iboss,  samplers::Method::Lowcon};
  double slev_alpha = 0.9;
  std::string output_path;
  // Extensions beyond the core grid.
  bool record_runtime = false;  // wall-clock timings break byte-identical output
  int threads = 1;
  bool intercept = true;  // realdata: ones column appended after subsampling
  double toy_x_df = 5.0;
  // Set by run_emse once p is known from the dataset.
  bool p_from_data = false;

  void validate() const;
};

/// Parses the flat JSON object; unknown keys and bad values throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Hidden response vector. Values are released one index at a time and
/// every release is counted.
class ResponseOracle {
 public:
  explicit ResponseOracle(const Vector& y) : y_(&y) {}

  double reveal(Index i);
  Vector reveal(const std::vector<Index>& indices);
  Index reads() const { return reads_; }

 private:
  const Vector* y_;
  Index reads_ = 0;
};

struct ResultRow {
  std::string method;
  std::string dist;
  std::string misspec;
  Index n = 0;
  Index p = 0;
  Index r = 0;
  double theta = 0.0;
  int replicate_count = 0;
  double mse = 0.0;
  double log_mse = 0.0;
  double median_kappa = 0.0;
  double mean_runtime_ms = 0.0;

  // Not written to CSV.
  bool failed = false;
  std::vector<Index> response_reads;  // per replicate
};

struct RunOptions {
  // Execution order of replicate indices; empty means natural order.
  std::vector<int> replicate_order;
};

/// Simulation grid over dist x misspec x r x method. Every replicate draws a
/// fresh X (with fresh calibration) from a seed derived from the master seed
/// and the replicate index, so all methods see the same data.
std::vector<ResultRow> run_simulation(const ExperimentConfig& config, const RunOptions& options = {});

/// Toy partial-linear model y = x + sin(x^2)/2 + eps, fitted without the
/// nonlinear term (single slope, no intercept).
std::vector<ResultRow> run_toy(const ExperimentConfig& config, const RunOptions& options = {});

void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out);
std::string results_csv(const std::vector<ResultRow>& rows);

struct Dataset {
  std::string name;
  Matrix x_raw;
  std::optional<Vector> y;
  std::vector<std::string> column_names;
  bool has_intercept = true;
  Index dropped_rows = 0;
};

/// Reads a headered CSV; rows with a missing or non-numeric value in any
/// selected column are dropped and counted.
Dataset ingest_csv(const std::string& path, const std::string& response_column,
                   const std::vector<std::string>& predictor_columns);

/// Writes predictors (and response, when present) with round-trip precision.
void write_dataset_csv(const Dataset& data, const std::string& response_column, std::ostream& out);

struct EmseRow {
  std::string method;
  std::string dataset;
  Index n = 0;
  Index p = 0;
  Index r = 0;
  double theta = 0.0;
  int replicate_count = 0;
  double emse_ols = 0.0;
  double emse_m = 0.0;
  double median_kappa = 0.0;
  double mean_runtime_ms = 0.0;
  bool failed = false;
  std::vector<Index> response_reads;
};

struct EmseReport {
  Vector beta_ols;
  Vector beta_m;
  std::vector<EmseRow> rows;
};

/// Empirical MSE against full-sample OLS and Huber-M surrogates.
EmseReport run_emse(const Dataset& data, const ExperimentConfig& config, const RunOptions& options = {});

void write_emse_csv(const std::vector<EmseRow>& rows, std::ostream& out);

struct DiagnoseEntry {
  std::string method;
  int replicate = 0;
  double kappa = 0.0;
  double worst_case_mse = 0.0;
  // LowCon only.
  std::optional<double> s1_perturbation;
  std::optional<double> sp_design;
  std::optional<bool> assumption_holds;
  std::optional<double> kappa_bound_slack;
  std::optional<double> trace_bound_slack;
};

struct DiagnoseReport {
  std::vector<DiagnoseEntry> entries;
  std::vector<std::pair<std::string, double>> median_kappa;  // per method
};

/// Diagnostics for each method's subsample on `replicates` predictor sets drawn
/// from the first dist and r of the config. Responses are never generated.
DiagnoseReport diagnose(const ExperimentConfig& config, double alpha, double sigma2);

nlohmann::json to_json(const DiagnoseReport& report);

}  // namespace lowcon::harness
