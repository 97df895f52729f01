#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "gen.hpp"
#include "lowcon/error.hpp"
#include "lowcon/harness.hpp"

using namespace lowcon;
using namespace lowcon::harness;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "lowcon_harness_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.n = 400;
  c.p = 10;
  c.r_list = {20, 40};
  c.replicates = 4;
  c.seed = 2024;
  return c;
}

template <class F>
void check_kind(F&& f, ErrorKind kind) {
  try {
    f();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == kind);
  }
}

}  // namespace

TEST_CASE("parse_config defaults and overrides") {
  const auto c = parse_config(json::object());
  CHECK(c.n == 10000);
  CHECK(c.p == 10);
  CHECK(c.replicates == 100);
  CHECK(c.methods.size() == 6);
  CHECK(c.theta == 1.0);
  CHECK(c.slev_alpha == 0.9);

  const auto d = parse_config(json{{"mode", "simulate"},
                                   {"dist", json::array({"D1", "D3"})},
                                   {"misspec", "H5"},
                                   {"n", 500},
                                   {"p", 10},
                                   {"r_list", {20, 30}},
                                   {"methods", json::array({"UNIF", "LOWCON"})},
                                   {"seed", 9}});
  CHECK(d.dist.size() == 2);
  CHECK(d.misspec.front() == datagen::MisspecKind::H5);
  CHECK(d.methods == std::vector<samplers::Method>{samplers::Method::Unif, samplers::Method::Lowcon});
  CHECK(d.seed == 9);
}

TEST_CASE("parse_config rejects bad input") {
  check_kind([] { parse_config(json{{"replicas", 3}}); }, ErrorKind::ConfigError);
  check_kind([] { parse_config(json{{"replicates", 0}}); }, ErrorKind::ConfigError);
  check_kind([] { parse_config(json{{"theta", 50}}); }, ErrorKind::ConfigError);
  check_kind([] { parse_config(json{{"r_list", {10}}}); }, ErrorKind::ConfigError);
  check_kind([] { parse_config(json{{"n", 100}, {"r_list", {100}}}); }, ErrorKind::ConfigError);
  check_kind([] { parse_config(json{{"methods", "RIDGE"}}); }, ErrorKind::ConfigError);
  check_kind([] { parse_config(json{{"p", 5}, {"misspec", "H3"}, {"r_list", {20}}}); }, ErrorKind::ConfigError);
  check_kind([] { parse_config(json{{"n", "many"}}); }, ErrorKind::ConfigError);
  check_kind([] { parse_config(json::array()); }, ErrorKind::ConfigError);
}

TEST_CASE("load_config reads files") {
  const auto good = scratch("good.json");
  write_file(good, R"({"n": 300, "r_list": [20], "replicates": 2})");
  CHECK(load_config(good.string()).n == 300);
  const auto bad = scratch("bad.json");
  write_file(bad, "{ not json");
  check_kind([&] { load_config(bad.string()); }, ErrorKind::ConfigError);
  check_kind([] { load_config("/nonexistent/lowcon.json"); }, ErrorKind::ConfigError);
}

TEST_CASE("ResponseOracle counts reads") {
  Vector y(4);
  y << 1, 2, 3, 4;
  ResponseOracle oracle(y);
  CHECK(oracle.reads() == 0);
  CHECK(oracle.reveal(2) == 3.0);
  CHECK(oracle.reveal(std::vector<Index>{0, 0, 3}) == Eigen::Vector3d(1, 1, 4));
  CHECK(oracle.reads() == 4);
  CHECK_THROWS_AS(oracle.reveal(4), Error);
}

TEST_CASE("noiseless correct model gives zero MSE") {
  auto c = small_config();
  c.sigma2 = 0.0;
  for (const auto& row : run_simulation(c)) {
    CHECK_FALSE(row.failed);
    CHECK(row.mse <= 1e-16);
  }
}

TEST_CASE("simulation output is byte-identical across runs, orders and threads") {
  auto c = small_config();
  c.dist = {datagen::Distribution::D1, datagen::Distribution::D3};
  c.misspec = {datagen::MisspecKind::H1, datagen::MisspecKind::H5};
  const std::string first = results_csv(run_simulation(c));
  CHECK(results_csv(run_simulation(c)) == first);

  RunOptions reversed;
  reversed.replicate_order = {3, 1, 0, 2};
  CHECK(results_csv(run_simulation(c, reversed)) == first);

  c.threads = 3;
  CHECK(results_csv(run_simulation(c)) == first);

  c.threads = 1;
  c.seed += 1;
  CHECK(results_csv(run_simulation(c)) != first);
}

TEST_CASE("result rows: sorting, logs and response reads") {
  auto c = small_config();
  c.misspec = {datagen::MisspecKind::H2};
  const auto rows = run_simulation(c);
  REQUIRE(rows.size() == 12);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto a = samplers::parse_method(rows[k - 1].method);
    const auto b = samplers::parse_method(rows[k].method);
    CHECK((a < b || (a == b && rows[k - 1].r < rows[k].r)));
  }
  for (const auto& row : rows) {
    CHECK(row.mse >= 0.0);
    CHECK(row.log_mse == std::log(row.mse));
    CHECK(row.replicate_count == 4);
    CHECK(row.median_kappa >= 1.0);
    REQUIRE(row.response_reads.size() == 4);
    for (Index reads : row.response_reads) CHECK(reads == row.r);
  }
  const std::string csv = results_csv(rows);
  CHECK(csv.rfind("method,dist,misspec,n,p,r,theta,replicate_count,mse,log_mse,median_kappa,mean_runtime_ms\n", 0) ==
        0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
}

TEST_CASE("runtime recording is opt-in") {
  auto c = small_config();
  c.methods = {samplers::Method::Lowcon};
  for (const auto& row : run_simulation(c)) CHECK(row.mean_runtime_ms == 0.0);
  c.record_runtime = true;
  for (const auto& row : run_simulation(c)) CHECK(row.mean_runtime_ms > 0.0);
}

TEST_CASE("toy grid runs with a single slope") {
  ExperimentConfig c;
  c.mode = Mode::Toy;
  c.n = 1000;
  c.r_list = {10, 30};
  c.replicates = 20;
  c.methods = {samplers::Method::Unif, samplers::Method::Blev, samplers::Method::Lowcon};
  const auto rows = run_toy(c);
  REQUIRE(rows.size() == 6);
  for (const auto& row : rows) {
    CHECK(row.p == 1);
    CHECK(row.dist == "TOY");
    CHECK(std::isfinite(row.mse));
    CHECK(row.median_kappa == 1.0);
  }
}

TEST_CASE("ingest_csv examples") {
  const auto three = scratch("three.csv");
  write_file(three, "a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
  auto d = ingest_csv(three.string(), "y", {"b", "a"});
  CHECK(d.x_raw.rows() == 3);
  CHECK(d.x_raw(0, 0) == 2.0);
  CHECK(d.x_raw(2, 1) == 7.0);
  CHECK((*d.y)(1) == 6.0);
  CHECK(d.column_names == std::vector<std::string>{"b", "a"});
  CHECK(d.dropped_rows == 0);
  CHECK(d.name == "three");

  const auto na = scratch("na.csv");
  write_file(na, "a,\"b, quoted\",y\n1,2,3\nNA,5,6\n7,8,9\n10,11,\n");
  d = ingest_csv(na.string(), "y", {"a", "b, quoted"});
  CHECK(d.x_raw.rows() == 2);
  CHECK(d.dropped_rows == 2);

  check_kind([] { ingest_csv("/nonexistent/data.csv", "y", {"a"}); }, ErrorKind::FileNotFound);
  check_kind([&] { ingest_csv(three.string(), "y", {"zzz"}); }, ErrorKind::ColumnMissing);
  const auto empty = scratch("empty.csv");
  write_file(empty, "a,y\nx,1\n,2\n");
  check_kind([&] { ingest_csv(empty.string(), "y", {"a"}); }, ErrorKind::EmptyAfterFiltering);
}

TEST_CASE("dataset CSV round trip is bit-exact") {
  Rng rng(1);
  Dataset d;
  d.x_raw = testgen::gaussian(rng, 200, 4, 1e3);
  d.x_raw(0, 0) = 1e-300;
  d.x_raw(1, 1) = -0.1;
  d.y = testgen::gaussian_vector(rng, 200);
  d.column_names = {"w", "x", "y1", "z"};
  const auto path = scratch("round.csv");
  {
    std::ofstream out(path);
    write_dataset_csv(d, "resp", out);
  }
  const auto back = ingest_csv(path.string(), "resp", d.column_names);
  CHECK(back.x_raw == d.x_raw);
  CHECK(*back.y == *d.y);
}

TEST_CASE("EMSE with r = n is zero for UNIF") {
  Rng rng(2);
  Dataset d;
  d.name = "full";
  d.x_raw = testgen::gaussian(rng, 60, 3);
  d.y = testgen::gaussian_vector(rng, 60);
  d.column_names = {"a", "b", "c"};
  ExperimentConfig c;
  c.r_list = {60};
  c.replicates = 3;
  c.methods = {samplers::Method::Unif};
  const auto report = run_emse(d, c);
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].emse_ols <= 1e-16);
  CHECK(report.beta_ols.size() == 4);  // intercept + 3
  for (Index reads : report.rows[0].response_reads) CHECK(reads == 60);
}

TEST_CASE("EMSE shrinks with r on planted linear data") {
  const Index n = 3000;
  Vector beta(3);
  beta << 1.0, -2.0, 0.5;
  // Fresh data and noise per seed, so deterministic IBOSS also varies.
  auto planted = [&](std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.name = "planted";
    d.x_raw = testgen::gaussian(rng, n, 3, 2.0);
    d.y = (d.x_raw * beta).array() + 4.0;
    *d.y += testgen::gaussian_vector(rng, n, 0.01);
    d.column_names = {"a", "b", "c"};
    return d;
  };
  ExperimentConfig c;
  c.r_list = {10, 40, 160, 640};
  c.replicates = 20;
  const std::size_t n_m = c.methods.size();
  const std::size_t n_r = c.r_list.size();
  // emse[method][r] across master seeds; the median over seeds must fall with r.
  std::vector<std::vector<std::vector<double>>> emse(n_m, std::vector<std::vector<double>>(n_r));
  EmseReport report;
  for (std::uint64_t seed = 1; seed <= 7; ++seed) {
    c.seed = seed;
    report = run_emse(planted(seed), c);
    CHECK(std::abs(report.beta_ols(0) - 4.0) < 1e-2);
    for (std::size_t ri = 0; ri < n_r; ++ri)
      for (std::size_t mi = 0; mi < n_m; ++mi) emse[mi][ri].push_back(report.rows[ri * n_m + mi].emse_ols);
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  for (std::size_t mi = 0; mi < n_m; ++mi) {
    INFO("method " << report.rows[mi].method);
    for (std::size_t ri = 1; ri < n_r; ++ri) CHECK(median(emse[mi][ri]) < median(emse[mi][ri - 1]));
    CHECK(median(emse[mi][n_r - 1]) < 1e-5);
  }
  std::ostringstream csv;
  write_emse_csv(report.rows, csv);
  CHECK(csv.str().rfind("method,dataset,n,p,r,theta,replicate_count,emse_ols,emse_m", 0) == 0);
}

TEST_CASE("diagnose reports") {
  ExperimentConfig c;
  c.mode = Mode::Diagnose;
  c.n = 10000;
  c.p = 5;
  c.r_list = {40};
  c.replicates = 3;
  const auto report = diagnose(c, 0.5, 1.0);
  CHECK(report.entries.size() == 18);
  for (const auto& e : report.entries) {
    CHECK(std::isfinite(e.kappa));
    CHECK(std::isfinite(e.worst_case_mse));
    CHECK(e.worst_case_mse > 0.0);
    if (e.method == "LOWCON") {
      REQUIRE(e.assumption_holds.has_value());
      CHECK(*e.assumption_holds);
      CHECK(*e.kappa_bound_slack >= 0.0);
      CHECK(*e.trace_bound_slack >= 0.0);
      CHECK(std::isfinite(*e.s1_perturbation));
    } else {
      CHECK_FALSE(e.assumption_holds.has_value());
    }
  }
  const json j = to_json(report);
  CHECK(j.at("entries").size() == 18);
  CHECK(j.at("median_kappa").contains("LOWCON"));
}

TEST_CASE("diagnose: LowCon has the smaller median kappa on D3") {
  ExperimentConfig c;
  c.mode = Mode::Diagnose;
  c.dist = {datagen::Distribution::D3};
  c.n = 5000;
  c.p = 10;
  c.r_list = {40};
  c.replicates = 15;
  c.methods = {samplers::Method::Unif, samplers::Method::Lowcon};
  const auto report = diagnose(c, 1.0, 1.0);
  REQUIRE(report.median_kappa.size() == 2);
  CHECK(report.median_kappa[1].second < report.median_kappa[0].second);
}
