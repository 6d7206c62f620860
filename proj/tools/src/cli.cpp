#include "streamglm_cli/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "streamglm/classify.hpp"
#include "streamglm/csv.hpp"
#include "streamglm/errors.hpp"
#include "streamglm/euipw.hpp"
#include "streamglm/simgen.hpp"
#include "streamglm/snapshot.hpp"
#include "streamglm/updater.hpp"

namespace streamglm {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitHard = 1;
constexpr int kExitPartialFailures = 2;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;

std::string format_g17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("STREAMGLM_SEED")) {
    char* end = nullptr;
    const std::uint64_t value = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0') return value;
    throw InvalidInputError("STREAMGLM_SEED is not a valid integer");
  }
  return 1;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(csv);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

struct SimulateArgs {
  std::string design;
  int k_batches{0};
  long long n_k{0};
  int reps{0};
  std::uint64_t seed{0};
  bool seed_given{false};
  long long n_total_override{-1};
  std::string out_dir;
  std::string estimators;
  std::string variance{"batch"};
  int jobs{0};
  bool trajectories{false};
  bool timing{false};
};

int run_simulate(const SimulateArgs& args) {
  DesignSpec spec;
  spec.design = design_from_name(args.design);
  spec.k_batches = args.k_batches;
  spec.n_k = static_cast<Index>(args.n_k);
  spec.replications = args.reps;
  spec.seed = args.seed_given ? args.seed : default_seed();
  if (args.n_total_override >= 0 &&
      args.n_total_override != static_cast<long long>(spec.k_batches) * args.n_k) {
    std::cerr << "simulate: --N-K " << args.n_total_override << " is inconsistent with K*n_k = "
              << static_cast<long long>(spec.k_batches) * args.n_k << "\n";
    return kExitUsage;
  }

  RunOptions options;
  options.estimators = split_list(args.estimators);
  options.variance = variance_source_from_name(args.variance);
  options.jobs = args.jobs > 0 ? args.jobs
                               : static_cast<int>(std::thread::hardware_concurrency());
  options.record_trajectory = args.trajectories;

  const ExperimentReport report = run_experiment(spec, options);

  std::filesystem::create_directories(args.out_dir);
  write_file(args.out_dir + "/report.json", report_to_json(report));
  write_file(args.out_dir + "/table.csv", report_to_table_csv(report, args.timing));

  for (const EstimatorResult& r : report.results) {
    if (r.failures > 0.05 * spec.replications) return kExitPartialFailures;
  }
  return kExitOk;
}

struct FitStreamArgs {
  std::string input{"-"};
  std::string family;
  long long p{0};
  long long z_cols{0};
  long long batch_size{0};
  bool batch_col{false};
  std::string snapshot_path;
  std::string resume_path;
  std::string estimates_path{"estimates.csv"};
  double known_propensity{-1.0};
  bool known_propensity_given{false};
  std::string variance{"batch"};
  double level{0.95};
};

void append_estimates_line(std::ostream& out, std::int64_t k, std::int64_t n_seen,
                           const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                           const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  out << k << ',' << n_seen;
  for (Eigen::Index t = 0; t < alpha.size(); ++t) out << ',' << format_g17(alpha[t]);
  for (Eigen::Index t = 0; t < beta.size(); ++t) out << ',' << format_g17(beta[t]);
  for (Eigen::Index t = 0; t < lo.size(); ++t) out << ',' << format_g17(lo[t]);
  for (Eigen::Index t = 0; t < hi.size(); ++t) out << ',' << format_g17(hi[t]);
  out << "\n";
}

int run_fit_stream(const FitStreamArgs& args) {
  if ((args.batch_size > 0) == args.batch_col) {
    std::cerr << "fit-stream: exactly one of --batch-size and --batch-col is required\n";
    return kExitUsage;
  }
  const Family family = Family::from_name(args.family);
  const Index p = static_cast<Index>(args.p);
  const Index q = static_cast<Index>(args.z_cols);
  const VarianceSource variance = variance_source_from_name(args.variance);
  const bool hetero = q > 0;

  std::optional<UipwState> uipw;
  std::optional<HeteroState> euipw;
  if (!args.resume_path.empty()) {
    if (args.known_propensity_given) {
      std::cerr << "fit-stream: --known-propensity cannot be combined with --resume\n";
      return kExitUsage;
    }
    std::ifstream in(args.resume_path);
    if (!in) {
      std::cerr << "fit-stream: cannot read snapshot " << args.resume_path << "\n";
      return kExitHard;
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    const Snapshot snap = load_snapshot(buffer.str());
    if (hetero != (snap.kind == "euipw")) {
      std::cerr << "fit-stream: snapshot kind " << snap.kind << " does not match --z-cols "
                << q << "\n";
      return kExitUsage;
    }
    if (hetero) {
      euipw = snap.euipw;
    } else {
      uipw = snap.uipw;
    }
    const Family snap_family = hetero ? euipw->family : uipw->family;
    const Index snap_p = hetero ? euipw->dim() : uipw->dim();
    const Index snap_q = hetero ? euipw->nuisance_dim() : 0;
    if (snap_family.kind() != family.kind() || snap_p != p || snap_q != q) {
      std::cerr << "fit-stream: snapshot family/dimensions do not match the flags\n";
      return kExitUsage;
    }
  } else {
    PropensityState prop = PropensityState::initial(p);
    if (args.known_propensity_given) prop = PropensityState::known(p, args.known_propensity);
    if (hetero) {
      euipw = HeteroState::with_propensity(family, std::move(prop), q);
    } else {
      uipw = UipwState::with_propensity(family, std::move(prop));
    }
  }

  std::ifstream file_in;
  std::istream* in = &std::cin;
  if (args.input != "-") {
    file_in.open(args.input);
    if (!file_in) {
      std::cerr << "fit-stream: cannot read input " << args.input << "\n";
      return kExitHard;
    }
    in = &file_in;
  }

  const bool fresh_estimates = [&] {
    std::error_code ec;
    return !std::filesystem::exists(args.estimates_path, ec) ||
           std::filesystem::file_size(args.estimates_path, ec) == 0;
  }();
  std::ofstream estimates(args.estimates_path, std::ios::app);
  if (!estimates) {
    std::cerr << "fit-stream: cannot open estimates file " << args.estimates_path << "\n";
    return kExitHard;
  }
  if (fresh_estimates) {
    estimates << "k,N_k";
    for (Index t = 0; t < p; ++t) estimates << ",alpha" << (t + 1);
    for (Index t = 0; t < p; ++t) estimates << ",beta" << (t + 1);
    for (Index t = 0; t < p; ++t) estimates << ",lo" << (t + 1);
    for (Index t = 0; t < p; ++t) estimates << ",hi" << (t + 1);
    estimates << "\n";
  }

  BatchCsvReader reader(*in, p, q,
                        args.batch_col ? std::nullopt
                                       : std::optional<Index>(static_cast<Index>(args.batch_size)));
  while (std::optional<Batch> batch = reader.next()) {
    Eigen::VectorXd alpha, beta, lo, hi;
    std::int64_t k = 0, n_seen = 0;
    if (hetero) {
      *euipw = ingest_hetero(*euipw, *batch);
      alpha = euipw->prop.alpha_hat;
      beta = euipw->beta_hat;
      k = euipw->batch_count;
      n_seen = euipw->n_total;
      try {
        const CovarianceEstimate cov = sigma_hat(*euipw, *batch, variance);
        const ConfidenceRegion region = confidence_region(beta, cov, n_seen, args.level);
        lo = region.band_lo;
        hi = region.band_hi;
      } catch (const std::exception&) {
        lo = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
        hi = lo;
      }
    } else {
      *uipw = ingest(*uipw, *batch);
      alpha = uipw->prop.alpha_hat;
      beta = uipw->beta_hat;
      k = uipw->batch_count;
      n_seen = uipw->n_total;
      try {
        const CovarianceEstimate cov = sigma_hat(*uipw, *batch, variance);
        const ConfidenceRegion region = confidence_region(beta, cov, n_seen, args.level);
        lo = region.band_lo;
        hi = region.band_hi;
      } catch (const std::exception&) {
        lo = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
        hi = lo;
      }
    }
    append_estimates_line(estimates, k, n_seen, alpha, beta, lo, hi);
  }
  estimates.flush();
  if (!estimates) {
    std::cerr << "fit-stream: writing estimates failed\n";
    return kExitHard;
  }

  write_file(args.snapshot_path, hetero ? save_snapshot(*euipw) : save_snapshot(*uipw));
  return kExitOk;
}

struct ClassifyArgs {
  std::string snapshot_path;
  std::string input;
  std::string out{"metrics.json"};
  double threshold{0.5};
};

int run_classify_eval(const ClassifyArgs& args) {
  std::ifstream snap_in(args.snapshot_path);
  if (!snap_in) {
    std::cerr << "classify-eval: cannot read snapshot " << args.snapshot_path << "\n";
    return kExitHard;
  }
  std::stringstream buffer;
  buffer << snap_in.rdbuf();
  const Snapshot snap = load_snapshot(buffer.str());
  if (snap.kind != "uipw" || !snap.uipw ||
      snap.uipw->family.kind() != FamilyKind::bernoulli_logit) {
    std::cerr << "classify-eval: needs a fitted bernoulli uipw snapshot\n";
    return kExitUsage;
  }
  const UipwState& state = *snap.uipw;
  const Index p = state.dim();

  std::ifstream in(args.input);
  if (!in) {
    std::cerr << "classify-eval: cannot read input " << args.input << "\n";
    return kExitHard;
  }
  std::vector<double> scores, labels;
  BatchCsvReader reader(in, p, 0, std::optional<Index>(std::numeric_limits<Index>::max() / 2));
  std::size_t row = 1;
  while (std::optional<Batch> batch = reader.next()) {
    for (Index i = 0; i < batch->n(); ++i) {
      ++row;
      if (!batch->observed[i]) {
        std::cerr << "classify-eval: evaluation data must be complete (delta=1)\n";
        return kExitData;
      }
      if (batch->y[i] != 0.0 && batch->y[i] != 1.0) {
        std::cerr << "classify-eval: non-binary response in evaluation file\n";
        return kExitData;
      }
      scores.push_back(logistic(batch->x.row(i).dot(state.beta_hat)));
      labels.push_back(batch->y[i]);
    }
  }
  if (scores.empty()) {
    std::cerr << "classify-eval: no evaluation rows\n";
    return kExitData;
  }
  const Eigen::VectorXd score_vec =
      Eigen::Map<const Eigen::VectorXd>(scores.data(), static_cast<Index>(scores.size()));
  const Eigen::VectorXd label_vec =
      Eigen::Map<const Eigen::VectorXd>(labels.data(), static_cast<Index>(labels.size()));

  nlohmann::json metrics;
  metrics["n"] = scores.size();
  metrics["threshold"] = args.threshold;
  metrics["accuracy"] = classification_accuracy(score_vec, label_vec, args.threshold);
  metrics["auc"] = auc_midrank(score_vec, label_vec);
  write_file(args.out, metrics.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Constant-memory streaming GLM estimation with missing-at-random responses"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Run a seeded Monte Carlo experiment");
  simulate->add_option("--design", sim.design, "linear_4d | logistic_4d | hetero_logistic")
      ->required();
  simulate->add_option("--K", sim.k_batches, "number of batches")->required()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--n-k", sim.n_k, "rows per batch")->required()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--reps", sim.reps, "replications")->required()
      ->check(CLI::PositiveNumber);
  auto* seed_opt = simulate->add_option("--seed", sim.seed, "master seed (default: STREAMGLM_SEED env, else 1)");
  simulate->add_option("--N-K", sim.n_total_override, "total rows; must equal K*n_k");
  simulate->add_option("--out", sim.out_dir, "output directory")->required();
  simulate->add_option("--estimators", sim.estimators, "comma list (default: all for the design)");
  simulate->add_option("--variance", sim.variance, "batch | accumulated")
      ->check(CLI::IsMember({"batch", "accumulated"}));
  simulate->add_option("--jobs", sim.jobs, "worker count (default: logical cores)");
  simulate->add_flag("--trajectories", sim.trajectories, "record replication-0 trajectory");
  simulate->add_flag("--timing", sim.timing, "include wall-clock column in table.csv");

  FitStreamArgs fit;
  CLI::App* fit_stream = app.add_subcommand("fit-stream", "Ingest a CSV batch stream");
  fit_stream->add_option("--input", fit.input, "CSV path or - for stdin");
  fit_stream->add_option("--family", fit.family, "gaussian | bernoulli")->required();
  fit_stream->add_option("--p", fit.p, "number of x covariates")->required()
      ->check(CLI::PositiveNumber);
  fit_stream->add_option("--z-cols", fit.z_cols, "number of z covariates (enables euipw)")
      ->check(CLI::NonNegativeNumber);
  fit_stream->add_option("--batch-size", fit.batch_size, "chunk rows by fixed size");
  fit_stream->add_flag("--batch-col", fit.batch_col, "chunk rows by the batch column");
  fit_stream->add_option("--snapshot", fit.snapshot_path, "output snapshot path")->required();
  fit_stream->add_option("--resume", fit.resume_path, "snapshot to continue from");
  fit_stream->add_option("--estimates", fit.estimates_path, "per-batch estimates CSV");
  auto* kp_opt = fit_stream->add_option("--known-propensity", fit.known_propensity,
                                        "fixed observation probability in (0,1]");
  fit_stream->add_option("--variance", fit.variance, "batch | accumulated")
      ->check(CLI::IsMember({"batch", "accumulated"}));
  fit_stream->add_option("--level", fit.level, "confidence level for the bands");

  ClassifyArgs cls;
  CLI::App* classify = app.add_subcommand("classify-eval", "Score a holdout CSV with a snapshot");
  classify->add_option("--snapshot", cls.snapshot_path, "fitted bernoulli snapshot")->required();
  classify->add_option("--input", cls.input, "complete-data evaluation CSV")->required();
  classify->add_option("--out", cls.out, "metrics JSON path");
  classify->add_option("--threshold", cls.threshold, "classification threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  sim.seed_given = seed_opt->count() > 0;
  fit.known_propensity_given = kp_opt->count() > 0;

  try {
    if (simulate->parsed()) return run_simulate(sim);
    if (fit_stream->parsed()) return run_fit_stream(fit);
    if (classify->parsed()) return run_classify_eval(cls);
  } catch (const DataFormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const InvalidInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitHard;
  }
  return kExitUsage;
}

}  // namespace streamglm
