#include "streamglm/simgen.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "streamglm/baselines.hpp"
#include "streamglm/errors.hpp"
#include "streamglm/euipw.hpp"
#include "streamglm/updater.hpp"

namespace streamglm {

namespace {

Eigen::VectorXd make_vector(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double value : values) v[i++] = value;
  return v;
}

// Covariates for the two homogeneous designs: x1,x2 ~ U(0,1), x3,x4 ~ N(0,1).
void draw_covariates_4d(Eigen::MatrixXd& x, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < x.rows(); ++i) {
    x(i, 0) = unif(rng);
    x(i, 1) = unif(rng);
    x(i, 2) = normal(rng);
    x(i, 3) = normal(rng);
  }
}

void apply_missingness(Batch& batch, const Eigen::VectorXd& alpha0, Rng& rng,
                       bool force_observe) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Index n = batch.n();
  batch.observed.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double pi = logistic(batch.x.row(i).dot(alpha0));
    const bool seen = force_observe || unif(rng) < pi;
    batch.observed[i] = seen ? 1 : 0;
    if (!seen) batch.y[i] = std::numeric_limits<double>::quiet_NaN();
  }
}

struct RepOutcome {
  struct Fit {
    bool ok{false};
    Eigen::VectorXd beta;
    double seconds{0.0};
  };
  std::vector<Fit> fits;                    // aligned with estimator names
  std::vector<int> covered;                 // per-coordinate indicators
  int wald_rejected{-1};                    // -1 = unavailable
  std::vector<TrajectoryPoint> trajectory;  // replication 0 only
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

Design design_from_name(const std::string& name) {
  if (name == "linear_4d") return Design::linear_4d;
  if (name == "logistic_4d") return Design::logistic_4d;
  if (name == "hetero_logistic") return Design::hetero_logistic;
  throw InvalidInputError("unknown design: " + name);
}

const char* design_name(Design design) {
  switch (design) {
    case Design::linear_4d: return "linear_4d";
    case Design::logistic_4d: return "logistic_4d";
    default: return "hetero_logistic";
  }
}

Eigen::VectorXd design_beta0(Design design) {
  switch (design) {
    case Design::linear_4d: return make_vector({2.0, 1.5, 1.0, 0.5});
    case Design::logistic_4d: return make_vector({0.5, 0.5, 1.0, 1.0});
    default: return make_vector({0.5, 0.5});
  }
}

Eigen::VectorXd design_alpha0(Design design) {
  switch (design) {
    case Design::linear_4d:
    case Design::logistic_4d: return make_vector({0.5, 1.0, 1.5, 0.5});
    default: return make_vector({0.5, 1.0});
  }
}

Index design_p(Design design) { return design == Design::hetero_logistic ? 2 : 4; }
Index design_q(Design design) { return design == Design::hetero_logistic ? 2 : 0; }

Family design_family(Design design) {
  return design == Design::linear_4d ? Family::gaussian_identity() : Family::bernoulli_logit();
}

Batch gen_linear_batch(Index n, Rng& rng, bool force_observe) {
  if (n < 1) throw InvalidInputError("gen_linear_batch: n must be >= 1");
  const Eigen::VectorXd beta0 = design_beta0(Design::linear_4d);
  const Eigen::VectorXd alpha0 = design_alpha0(Design::linear_4d);
  Batch batch;
  batch.x.resize(n, 4);
  draw_covariates_4d(batch.x, rng);
  std::normal_distribution<double> noise(0.0, 1.0);
  batch.y = batch.x * beta0;
  for (Index i = 0; i < n; ++i) batch.y[i] += noise(rng);
  apply_missingness(batch, alpha0, rng, force_observe);
  return batch;
}

Batch gen_logistic_batch(Index n, Rng& rng, bool force_observe) {
  if (n < 1) throw InvalidInputError("gen_logistic_batch: n must be >= 1");
  const Eigen::VectorXd beta0 = design_beta0(Design::logistic_4d);
  const Eigen::VectorXd alpha0 = design_alpha0(Design::logistic_4d);
  Batch batch;
  batch.x.resize(n, 4);
  draw_covariates_4d(batch.x, rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  batch.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    batch.y[i] = unif(rng) < logistic(batch.x.row(i).dot(beta0)) ? 1.0 : 0.0;
  }
  apply_missingness(batch, alpha0, rng, force_observe);
  return batch;
}

Batch gen_hetero_batch(Index n, Rng& rng, Eigen::VectorXd* gamma_out, bool force_observe,
                       const std::optional<Eigen::VectorXd>& gamma_fixed) {
  if (n < 1) throw InvalidInputError("gen_hetero_batch: n must be >= 1");
  const Eigen::VectorXd beta0 = design_beta0(Design::hetero_logistic);
  const Eigen::VectorXd alpha0 = design_alpha0(Design::hetero_logistic);

  // The batch nuisance draw comes first so it is a function of (rep, batch)
  // seeds alone, independent of the batch size.
  Eigen::VectorXd gamma(2);
  {
    std::uniform_real_distribution<double> g1(-1.0, 1.0);
    std::uniform_real_distribution<double> g2(-2.0, 2.0);
    gamma[0] = g1(rng);
    gamma[1] = g2(rng);
  }
  if (gamma_fixed) gamma = *gamma_fixed;
  if (gamma_out) *gamma_out = gamma;

  Batch batch;
  batch.x.resize(n, 2);
  batch.z.resize(n, 2);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    batch.x(i, 0) = unif(rng);
    batch.x(i, 1) = unif(rng);
    batch.z(i, 0) = batch.x(i, 0) - 0.3 + normal(rng);
    batch.z(i, 1) = batch.x(i, 1) - 0.3 + normal(rng);
  }
  batch.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double eta = batch.x.row(i).dot(beta0) + batch.z.row(i).dot(gamma);
    batch.y[i] = unif(rng) < logistic(eta) ? 1.0 : 0.0;
  }
  apply_missingness(batch, alpha0, rng, force_observe);
  return batch;
}

Rng make_batch_rng(std::uint64_t master_seed, int replication, int batch_index) {
  const std::uint64_t rep_seed =
      derive_seed(master_seed, static_cast<std::uint64_t>(replication));
  return Rng(derive_seed(rep_seed, static_cast<std::uint64_t>(batch_index)));
}

Batch gen_design_batch(Design design, Index n, Rng& rng) {
  switch (design) {
    case Design::linear_4d: return gen_linear_batch(n, rng);
    case Design::logistic_4d: return gen_logistic_batch(n, rng);
    default: return gen_hetero_batch(n, rng);
  }
}

namespace {

std::vector<std::string> default_estimators(Design design) {
  if (design == Design::hetero_logistic) return {"oracle", "euipw", "average", "naive"};
  return {"oracle", "uipw", "average", "naive"};
}

RepOutcome run_replication(const DesignSpec& spec, const RunOptions& options,
                           const std::vector<std::string>& estimators, int rep) {
  const Design design = spec.design;
  const Family family = design_family(design);
  const Index p = design_p(design);
  const Eigen::VectorXd beta0 = design_beta0(design);
  const double level = 0.95;

  std::vector<Batch> batches;
  batches.reserve(static_cast<std::size_t>(spec.k_batches));
  for (int j = 0; j < spec.k_batches; ++j) {
    Rng rng = make_batch_rng(spec.seed, rep, j);
    batches.push_back(gen_design_batch(design, spec.n_k, rng));
  }

  RepOutcome outcome;
  outcome.fits.resize(estimators.size());
  const bool record_traj = options.record_trajectory && rep == 0;

  for (std::size_t e = 0; e < estimators.size(); ++e) {
    const std::string& name = estimators[e];
    auto& fit = outcome.fits[e];
    const auto start = Clock::now();
    try {
      if (name == "uipw") {
        UipwState state = UipwState::initial(family, p);
        int k = 0;
        for (const Batch& batch : batches) {
          state = ingest(state, batch);
          ++k;
          if (record_traj) {
            TrajectoryPoint pt;
            pt.k = k;
            pt.n_seen = state.n_total;
            pt.beta = state.beta_hat;
            try {
              const CovarianceEstimate cov = sigma_hat(state, batch, options.variance);
              const ConfidenceRegion region =
                  confidence_region(state.beta_hat, cov, state.n_total, level);
              pt.band_lo = region.band_lo;
              pt.band_hi = region.band_hi;
            } catch (const std::exception&) {
              pt.band_lo = Eigen::VectorXd::Constant(p, std::nan(""));
              pt.band_hi = Eigen::VectorXd::Constant(p, std::nan(""));
            }
            outcome.trajectory.push_back(std::move(pt));
          }
        }
        fit.beta = state.beta_hat;
        fit.ok = true;
        fit.seconds = seconds_since(start);
        // Inference summaries at the final state (not timed with the fit).
        const CovarianceEstimate cov = sigma_hat(state, batches.back(), options.variance);
        const ConfidenceRegion region =
            confidence_region(state.beta_hat, cov, state.n_total, level);
        outcome.covered.resize(static_cast<std::size_t>(p));
        for (Index t = 0; t < p; ++t) {
          outcome.covered[static_cast<std::size_t>(t)] =
              (beta0[t] >= region.band_lo[t] && beta0[t] <= region.band_hi[t]) ? 1 : 0;
        }
        const auto [stat, p_value] = wald_test(state.beta_hat, cov, state.n_total, beta0);
        (void)stat;
        outcome.wald_rejected = p_value < 0.05 ? 1 : 0;
      } else if (name == "euipw") {
        HeteroState state = HeteroState::initial(family, p, design_q(design));
        int k = 0;
        for (const Batch& batch : batches) {
          state = ingest_hetero(state, batch);
          ++k;
          if (record_traj) {
            TrajectoryPoint pt;
            pt.k = k;
            pt.n_seen = state.n_total;
            pt.beta = state.beta_hat;
            try {
              const CovarianceEstimate cov = sigma_hat(state, batch, options.variance);
              const ConfidenceRegion region =
                  confidence_region(state.beta_hat, cov, state.n_total, level);
              pt.band_lo = region.band_lo;
              pt.band_hi = region.band_hi;
            } catch (const std::exception&) {
              pt.band_lo = Eigen::VectorXd::Constant(p, std::nan(""));
              pt.band_hi = Eigen::VectorXd::Constant(p, std::nan(""));
            }
            outcome.trajectory.push_back(std::move(pt));
          }
        }
        fit.beta = state.beta_hat;
        fit.ok = true;
        fit.seconds = seconds_since(start);
        const CovarianceEstimate cov = sigma_hat(state, batches.back(), options.variance);
        const ConfidenceRegion region =
            confidence_region(state.beta_hat, cov, state.n_total, level);
        outcome.covered.resize(static_cast<std::size_t>(p));
        for (Index t = 0; t < p; ++t) {
          outcome.covered[static_cast<std::size_t>(t)] =
              (beta0[t] >= region.band_lo[t] && beta0[t] <= region.band_hi[t]) ? 1 : 0;
        }
        const auto [stat, p_value] = wald_test(state.beta_hat, cov, state.n_total, beta0);
        (void)stat;
        outcome.wald_rejected = p_value < 0.05 ? 1 : 0;
      } else if (name == "oracle") {
        fit.beta = design == Design::hetero_logistic ? oracle_fit_hetero(family, batches)
                                                     : oracle_fit(family, batches);
        fit.ok = true;
        fit.seconds = seconds_since(start);
      } else if (name == "average") {
        fit.beta = design == Design::hetero_logistic ? average_fit_hetero(family, batches)
                                                     : average_fit(family, batches);
        fit.ok = true;
        fit.seconds = seconds_since(start);
      } else if (name == "naive") {
        fit.beta = design == Design::hetero_logistic ? naive_fit_hetero(family, batches.back())
                                                     : naive_fit(family, batches.back());
        fit.ok = true;
        fit.seconds = seconds_since(start);
      } else {
        throw InvalidInputError("unknown estimator: " + name);
      }
    } catch (const std::exception&) {
      fit.ok = false;
      fit.seconds = seconds_since(start);
    }
  }
  return outcome;
}

}  // namespace

ExperimentReport run_experiment(const DesignSpec& spec, const RunOptions& options) {
  if (spec.k_batches < 1 || spec.n_k < 1 || spec.replications < 1) {
    throw InvalidInputError("run_experiment: K, n_k, replications must be positive");
  }
  std::vector<std::string> estimators =
      options.estimators.empty() ? default_estimators(spec.design) : options.estimators;
  for (const std::string& name : estimators) {
    const bool hetero = spec.design == Design::hetero_logistic;
    if (name == "uipw" && hetero) throw InvalidInputError("uipw does not fit the hetero design");
    if (name == "euipw" && !hetero) throw InvalidInputError("euipw needs the hetero design");
    if (name != "uipw" && name != "euipw" && name != "oracle" && name != "average" &&
        name != "naive") {
      throw InvalidInputError("unknown estimator: " + name);
    }
  }

  const int reps = spec.replications;
  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(reps));
  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    for (int rep = 0; rep < reps; ++rep) {
      outcomes[static_cast<std::size_t>(rep)] = run_replication(spec, options, estimators, rep);
    }
  } else {
    std::atomic<int> next{0};
    auto worker = [&]() {
      while (true) {
        const int rep = next.fetch_add(1);
        if (rep >= reps) break;
        outcomes[static_cast<std::size_t>(rep)] = run_replication(spec, options, estimators, rep);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Deterministic reduction in replication order.
  const Eigen::VectorXd beta0 = design_beta0(spec.design);
  ExperimentReport report;
  report.spec = spec;
  report.variance_source = options.variance;
  report.jobs = jobs;
  report.hardware = hardware_description();
  report.build = build_description();
  for (std::size_t e = 0; e < estimators.size(); ++e) {
    EstimatorResult result;
    result.name = estimators[e];
    double sse = 0.0;
    double seconds = 0.0;
    for (const RepOutcome& outcome : outcomes) {
      const auto& fit = outcome.fits[e];
      seconds += fit.seconds;
      if (!fit.ok) {
        ++result.failures;
        continue;
      }
      sse += (fit.beta - beta0).squaredNorm();
      ++result.reps_used;
    }
    result.mse = result.reps_used > 0 ? sse / result.reps_used : std::nan("");
    result.mean_seconds = seconds / reps;
    if (result.name == "uipw" || result.name == "euipw") {
      const Index p = beta0.size();
      std::vector<double> cover(static_cast<std::size_t>(p), 0.0);
      int with_inference = 0;
      int rejections = 0;
      for (const RepOutcome& outcome : outcomes) {
        if (outcome.wald_rejected < 0) continue;
        ++with_inference;
        rejections += outcome.wald_rejected;
        for (Index t = 0; t < p; ++t) {
          cover[static_cast<std::size_t>(t)] += outcome.covered[static_cast<std::size_t>(t)];
        }
      }
      if (with_inference > 0) {
        for (double& c : cover) c /= with_inference;
        result.coverage = std::move(cover);
        result.wald_rejection_rate = static_cast<double>(rejections) / with_inference;
      }
    }
    report.results.push_back(std::move(result));
  }
  if (options.record_trajectory && !outcomes.empty()) {
    report.trajectory = outcomes.front().trajectory;
  }
  return report;
}

}  // namespace streamglm
