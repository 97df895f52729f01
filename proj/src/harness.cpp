#include "lowcon/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "lowcon/error.hpp"
#include "lowcon/estimators.hpp"
#include "lowcon/linalg.hpp"

namespace lowcon::harness {
namespace {

constexpr int kMaxRetries = 5;

struct Problem {
  Matrix predictors;
  Matrix model;  // predictors, plus the intercept column when one is used
  Vector y;      // hidden; only read through a ResponseOracle
};

struct Draw {
  Vector beta;
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double runtime_ms = 0.0;
  Index reads = 0;
  bool failed = true;
};

using ProblemSource = std::function<const Problem&(int attempt)>;

// Selects, checks the subsample rank from predictors alone, then reveals
// the selected responses and fits. Rank-deficient draws are retried on a
// fresh problem/seed before any response is read.
Draw draw_and_fit(const ProblemSource& problem_for, samplers::Method method, Index r, std::uint64_t seed,
                  const samplers::SamplerParams& params, bool timing) {
  Draw out;
  for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
    const Problem& problem = problem_for(attempt);
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(attempt)}));
    samplers::SubsampleSelection sel;
    const auto start = std::chrono::steady_clock::now();
    try {
      sel = samplers::select(method, problem.predictors, problem.model, r, rng, params);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::RankDeficient) continue;
      throw;
    }
    const auto stop = std::chrono::steady_clock::now();

    const Matrix x_sub = samplers::take_rows(problem.model, sel.indices);
    const Matrix weighted = sel.weights ? Matrix(sel.weights->array().sqrt().matrix().asDiagonal() * x_sub) : x_sub;
    if (linalg::is_rank_deficient(linalg::singular_values(weighted), weighted.rows(), weighted.cols())) continue;

    ResponseOracle oracle(problem.y);
    const Vector y_sub = oracle.reveal(sel.indices);
    const estimators::FitResult fit = estimators::fit_sls(x_sub, y_sub, sel.weights);
    out.beta = fit.beta;
    out.kappa = sel.diagnostics.kappa_sub;
    out.reads = oracle.reads();
    out.runtime_ms = timing ? std::chrono::duration<double, std::milli>(stop - start).count() : 0.0;
    out.failed = false;
    return out;
  }
  return out;
}

// Runs fn(task) for every task index, in `order` when given, on `threads`
// workers. Results must be written to per-task slots by fn.
void parallel_for(std::size_t count, int threads, const std::vector<int>& order,
                  const std::function<void(std::size_t)>& fn) {
  std::vector<std::size_t> schedule(count);
  for (std::size_t k = 0; k < count; ++k) schedule[k] = k;
  if (!order.empty()) {
    if (order.size() != count) throw Error(ErrorKind::InvalidArgument, "replicate order has the wrong length");
    for (std::size_t k = 0; k < count; ++k) schedule[k] = static_cast<std::size_t>(order[k]);
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        fn(schedule[k]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

double median(std::vector<double> v) {
  std::erase_if(v, [](double x) { return std::isnan(x); });
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Expands replicate execution order (over replicates) to a task order over
// (group, replicate) pairs.
std::vector<int> task_order(const RunOptions& options, std::size_t groups, int replicates) {
  if (options.replicate_order.empty()) return {};
  if (options.replicate_order.size() != static_cast<std::size_t>(replicates))
    throw Error(ErrorKind::InvalidArgument, "replicate_order must list every replicate once");
  std::vector<int> order;
  for (std::size_t g = 0; g < groups; ++g)
    for (int i : options.replicate_order) order.push_back(static_cast<int>(g) * replicates + i);
  return order;
}

struct Group {
  std::string dist;
  std::string misspec;
  std::uint64_t tag;
};

using ProblemFactory = std::function<Problem(const Group&, int replicate, int attempt)>;

// Shared engine for the simulation and toy grids: every (group, replicate)
// task builds its problem once and evaluates every (r, method) cell on it.
std::vector<ResultRow> run_grid(const ExperimentConfig& config, const std::vector<Group>& groups, Index n, Index p,
                                const Vector& beta_true, const ProblemFactory& make_problem,
                                const RunOptions& options) {
  const std::size_t n_r = config.r_list.size();
  const std::size_t n_m = config.methods.size();
  const auto reps = static_cast<std::size_t>(config.replicates);
  // slots[g][ri][mi][rep]
  std::vector<Draw> slots(groups.size() * n_r * n_m * reps);
  auto slot = [&](std::size_t g, std::size_t ri, std::size_t mi, std::size_t rep) -> Draw& {
    return slots[((g * n_r + ri) * n_m + mi) * reps + rep];
  };
  std::vector<double> errors(slots.size(), std::numeric_limits<double>::quiet_NaN());

  samplers::SamplerParams params;
  params.slev_alpha = config.slev_alpha;
  params.lowcon.theta = config.theta;

  parallel_for(groups.size() * reps, config.threads, task_order(options, groups.size(), config.replicates),
               [&](std::size_t task) {
                 const std::size_t g = task / reps;
                 const std::size_t rep = task % reps;
                 std::vector<std::optional<Problem>> cache(kMaxRetries + 1);
                 const ProblemSource source = [&](int attempt) -> const Problem& {
                   auto& entry = cache[static_cast<std::size_t>(attempt)];
                   if (!entry) entry = make_problem(groups[g], static_cast<int>(rep), attempt);
                   return *entry;
                 };
                 for (std::size_t ri = 0; ri < n_r; ++ri)
                   for (std::size_t mi = 0; mi < n_m; ++mi) {
                     const auto method = config.methods[mi];
                     const std::uint64_t seed =
                         derive_seed(config.seed, {2, groups[g].tag, rep, static_cast<std::uint64_t>(method),
                                                   static_cast<std::uint64_t>(config.r_list[ri])});
                     Draw d = draw_and_fit(source, method, config.r_list[ri], seed, params, config.record_runtime);
                     const std::size_t idx = ((g * n_r + ri) * n_m + mi) * reps + rep;
                     if (!d.failed) errors[idx] = (d.beta - beta_true).squaredNorm();
                     slot(g, ri, mi, rep) = std::move(d);
                   }
               });

  std::vector<ResultRow> rows;
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (std::size_t ri = 0; ri < n_r; ++ri)
      for (std::size_t mi = 0; mi < n_m; ++mi) {
        ResultRow row;
        row.method = std::string(samplers::method_name(config.methods[mi]));
        row.dist = groups[g].dist;
        row.misspec = groups[g].misspec;
        row.n = n;
        row.p = p;
        row.r = config.r_list[ri];
        row.theta = config.theta;
        row.replicate_count = config.replicates;
        double sum = 0.0;
        double runtime = 0.0;
        std::vector<double> kappas;
        for (std::size_t rep = 0; rep < reps; ++rep) {
          const Draw& d = slot(g, ri, mi, rep);
          row.response_reads.push_back(d.reads);
          if (d.failed) {
            row.failed = true;
            continue;
          }
          sum += errors[((g * n_r + ri) * n_m + mi) * reps + rep];
          runtime += d.runtime_ms;
          kappas.push_back(d.kappa);
        }
        row.mse = row.failed ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(reps);
        row.log_mse = std::log(row.mse);
        row.median_kappa = median(kappas);
        row.mean_runtime_ms = kappas.empty() ? 0.0 : runtime / static_cast<double>(kappas.size());
        rows.push_back(std::move(row));
      }

  auto method_rank = [](const std::string& name) { return static_cast<int>(samplers::parse_method(name)); };
  std::stable_sort(rows.begin(), rows.end(), [&](const ResultRow& a, const ResultRow& b) {
    const int ma = method_rank(a.method);
    const int mb = method_rank(b.method);
    if (ma != mb) return ma < mb;
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.misspec != b.misspec) return a.misspec < b.misspec;
    return a.r < b.r;
  });
  return rows;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double ResponseOracle::reveal(Index i) {
  if (i < 0 || i >= y_->size()) throw Error(ErrorKind::InvalidArgument, "response index out of range");
  ++reads_;
  return (*y_)(i);
}

Vector ResponseOracle::reveal(const std::vector<Index>& indices) {
  Vector out(static_cast<Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) out(static_cast<Index>(k)) = reveal(indices[k]);
  return out;
}

std::vector<ResultRow> run_simulation(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  std::vector<Group> groups;
  for (auto d : config.dist)
    for (auto h : config.misspec)
      groups.push_back({std::string(datagen::to_string(d)), std::string(datagen::to_string(h)),
                        static_cast<std::uint64_t>(d) * 16 + static_cast<std::uint64_t>(h)});

  const Vector beta = datagen::beta0(config.p);
  const ProblemFactory make = [&](const Group& g, int replicate, int attempt) {
    Rng rng(derive_seed(config.seed, {1, g.tag, static_cast<std::uint64_t>(replicate),
                                      static_cast<std::uint64_t>(attempt)}));
    Problem pr;
    pr.predictors = datagen::gen_predictors(datagen::parse_distribution(g.dist), config.n, config.p, rng);
    const auto term = datagen::calibrated(datagen::parse_misspec(g.misspec), pr.predictors);
    pr.y = datagen::gen_response(pr.predictors, beta, term, config.sigma2, rng);
    pr.model = pr.predictors;
    return pr;
  };
  return run_grid(config, groups, config.n, config.p, beta, make, options);
}

std::vector<ResultRow> run_toy(const ExperimentConfig& config, const RunOptions& options) {
  ExperimentConfig toy = config;
  toy.mode = Mode::Toy;
  toy.validate();
  const std::vector<Group> groups{{"TOY", "SIN", 99}};
  const datagen::ToyOptions opts{toy.toy_x_df, 1.0};
  const ProblemFactory make = [&](const Group& g, int replicate, int attempt) {
    Rng rng(derive_seed(toy.seed, {1, g.tag, static_cast<std::uint64_t>(replicate),
                                   static_cast<std::uint64_t>(attempt)}));
    auto [x, y] = datagen::toy_example(toy.n, rng, opts);
    Problem pr;
    pr.predictors = Matrix(x);
    pr.model = pr.predictors;
    pr.y = std::move(y);
    return pr;
  };
  return run_grid(toy, groups, toy.n, 1, Vector::Ones(1), make, options);
}

void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << "method,dist,misspec,n,p,r,theta,replicate_count,mse,log_mse,median_kappa,mean_runtime_ms\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.dist << ',' << r.misspec << ',' << r.n << ',' << r.p << ',' << r.r << ','
        << format_double(r.theta) << ',' << r.replicate_count << ',' << format_double(r.mse) << ','
        << format_double(r.log_mse) << ',' << format_double(r.median_kappa) << ','
        << format_double(r.mean_runtime_ms) << '\n';
  }
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream s;
  write_results_csv(rows, s);
  return s.str();
}

EmseReport run_emse(const Dataset& data, const ExperimentConfig& config, const RunOptions& options) {
  if (!data.y) throw Error(ErrorKind::InvalidArgument, "dataset has no response column");
  const Index n = data.x_raw.rows();
  const Index p = data.x_raw.cols();
  ExperimentConfig cfg = config;
  cfg.mode = Mode::Realdata;
  cfg.p = p;
  cfg.n = n;
  cfg.p_from_data = true;
  cfg.validate();
  const bool intercept = data.has_intercept && cfg.intercept;
  for (Index r : cfg.r_list) {
    if (r > n) throw Error(ErrorKind::ConfigError, "r = " + std::to_string(r) + " exceeds the dataset size");
    if (intercept && r <= p + 1) throw Error(ErrorKind::ConfigError, "r must exceed p + 1 with an intercept");
  }

  Problem problem;
  problem.predictors = data.x_raw;
  if (intercept) {
    problem.model.resize(n, p + 1);
    problem.model.col(0).setOnes();
    problem.model.rightCols(p) = data.x_raw;
  } else {
    problem.model = data.x_raw;
  }
  problem.y = *data.y;

  EmseReport report;
  report.beta_ols = linalg::least_squares(problem.model, problem.y);
  report.beta_m = estimators::fit_huber_m(problem.model, problem.y).beta;

  samplers::SamplerParams params;
  params.slev_alpha = cfg.slev_alpha;
  params.lowcon.theta = cfg.theta;

  const std::size_t n_r = cfg.r_list.size();
  const std::size_t n_m = cfg.methods.size();
  const auto reps = static_cast<std::size_t>(cfg.replicates);
  std::vector<Draw> slots(n_r * n_m * reps);
  const ProblemSource source = [&](int) -> const Problem& { return problem; };

  parallel_for(reps, cfg.threads, options.replicate_order, [&](std::size_t rep) {
    for (std::size_t ri = 0; ri < n_r; ++ri)
      for (std::size_t mi = 0; mi < n_m; ++mi) {
        const auto method = cfg.methods[mi];
        const std::uint64_t seed = derive_seed(cfg.seed, {3, rep, static_cast<std::uint64_t>(method),
                                                          static_cast<std::uint64_t>(cfg.r_list[ri])});
        slots[(ri * n_m + mi) * reps + rep] =
            draw_and_fit(source, method, cfg.r_list[ri], seed, params, cfg.record_runtime);
      }
  });

  for (std::size_t ri = 0; ri < n_r; ++ri)
    for (std::size_t mi = 0; mi < n_m; ++mi) {
      EmseRow row;
      row.method = std::string(samplers::method_name(cfg.methods[mi]));
      row.dataset = data.name;
      row.n = n;
      row.p = p;
      row.r = cfg.r_list[ri];
      row.theta = cfg.theta;
      row.replicate_count = cfg.replicates;
      double ols = 0.0;
      double m = 0.0;
      double runtime = 0.0;
      std::vector<double> kappas;
      for (std::size_t rep = 0; rep < reps; ++rep) {
        const Draw& d = slots[(ri * n_m + mi) * reps + rep];
        row.response_reads.push_back(d.reads);
        if (d.failed) {
          row.failed = true;
          continue;
        }
        ols += (d.beta - report.beta_ols).squaredNorm();
        m += (d.beta - report.beta_m).squaredNorm();
        runtime += d.runtime_ms;
        kappas.push_back(d.kappa);
      }
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.emse_ols = row.failed ? nan : ols / static_cast<double>(reps);
      row.emse_m = row.failed ? nan : m / static_cast<double>(reps);
      row.median_kappa = median(kappas);
      row.mean_runtime_ms = kappas.empty() ? 0.0 : runtime / static_cast<double>(kappas.size());
      report.rows.push_back(std::move(row));
    }
  return report;
}

void write_emse_csv(const std::vector<EmseRow>& rows, std::ostream& out) {
  out << "method,dataset,n,p,r,theta,replicate_count,emse_ols,emse_m,median_kappa,mean_runtime_ms\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.dataset << ',' << r.n << ',' << r.p << ',' << r.r << ',' << format_double(r.theta)
        << ',' << r.replicate_count << ',' << format_double(r.emse_ols) << ',' << format_double(r.emse_m) << ','
        << format_double(r.median_kappa) << ',' << format_double(r.mean_runtime_ms) << '\n';
  }
}

DiagnoseReport diagnose(const ExperimentConfig& config, double alpha, double sigma2) {
  config.validate();
  if (!(alpha > 0.0)) throw Error(ErrorKind::ConfigError, "alpha must be positive");
  if (!(sigma2 >= 0.0)) throw Error(ErrorKind::ConfigError, "sigma2 must be nonnegative");
  const auto dist = config.dist.front();
  const Index r = config.r_list.front();

  samplers::SamplerParams params;
  params.slev_alpha = config.slev_alpha;
  params.lowcon.theta = config.theta;

  DiagnoseReport report;
  std::vector<std::vector<double>> kappas(config.methods.size());
  for (int rep = 0; rep < config.replicates; ++rep) {
    Rng data_rng(derive_seed(config.seed, {4, static_cast<std::uint64_t>(rep)}));
    const Matrix x = datagen::gen_predictors(dist, config.n, config.p, data_rng);

    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
      const auto method = config.methods[mi];
      Rng rng(derive_seed(config.seed, {5, static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(method)}));
      DiagnoseEntry e;
      e.method = std::string(samplers::method_name(method));
      e.replicate = rep;
      std::vector<Index> indices;
      if (method == samplers::Method::Lowcon) {
        const auto trace = samplers::lowcon_trace(x, r, rng, params.lowcon);
        indices = trace.selection.indices;
        const Matrix perturbation = trace.scaled_selected - trace.design.points;
        const double sp_l = linalg::singular_values(trace.design.points).smallest();
        const double s1_d = linalg::singular_values(perturbation).largest();
        e.sp_design = sp_l;
        e.s1_perturbation = s1_d;
        e.assumption_holds = sp_l > s1_d;
        if (*e.assumption_holds) {
          const auto s = linalg::singular_values(trace.scaled_selected);
          e.kappa_bound_slack = estimators::weyl_kappa_bound(trace.design.points, perturbation) -
                                linalg::condition_number_info(trace.scaled_selected);
          e.trace_bound_slack = estimators::trace_inv_bound(trace.design.points, perturbation) -
                                linalg::trace_inverse_gram(s);
        }
      } else {
        indices = samplers::select(method, x, x, r, rng, params).indices;
      }
      const Matrix x_sub = samplers::take_rows(x, indices);
      e.kappa = linalg::condition_number_info(x_sub);
      try {
        e.worst_case_mse = estimators::worst_case_mse(x_sub, sigma2, alpha).bound;
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::RankDeficient) throw;
        e.worst_case_mse = std::numeric_limits<double>::infinity();
      }
      kappas[mi].push_back(e.kappa);
      report.entries.push_back(std::move(e));
    }
  }
  for (std::size_t mi = 0; mi < config.methods.size(); ++mi)
    report.median_kappa.emplace_back(std::string(samplers::method_name(config.methods[mi])), median(kappas[mi]));
  return report;
}

nlohmann::json to_json(const DiagnoseReport& report) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json entries = json::array();
  for (const auto& e : report.entries) {
    json j{{"method", e.method},
           {"replicate", e.replicate},
           {"kappa", std::isfinite(e.kappa) ? json(e.kappa) : json(nullptr)},
           {"worst_case_mse", std::isfinite(e.worst_case_mse) ? json(e.worst_case_mse) : json(nullptr)}};
    if (e.assumption_holds) {
      j["s1_perturbation"] = opt(e.s1_perturbation);
      j["sp_design"] = opt(e.sp_design);
      j["assumption_holds"] = *e.assumption_holds;
      j["kappa_bound_slack"] = opt(e.kappa_bound_slack);
      j["trace_bound_slack"] = opt(e.trace_bound_slack);
    }
    entries.push_back(std::move(j));
  }
  json medians = json::object();
  for (const auto& [m, k] : report.median_kappa) medians[m] = std::isfinite(k) ? json(k) : json(nullptr);
  return json{{"entries", entries}, {"median_kappa", medians}};
}

}  // namespace lowcon::harness
