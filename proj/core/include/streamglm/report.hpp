#ifndef STREAMGLM_REPORT_HPP
#define STREAMGLM_REPORT_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "streamglm/inference.hpp"

namespace streamglm {

enum class Design { linear_4d, logistic_4d, hetero_logistic };

Design design_from_name(const std::string& name);
const char* design_name(Design design);

struct DesignSpec {
  Design design{Design::linear_4d};
  int k_batches{1};
  Index n_k{1};
  int replications{1};
  std::uint64_t seed{1};
};

struct EstimatorResult {
  std::string name;
  double mse{0.0};
  double mean_seconds{0.0};
  int failures{0};
  int reps_used{0};
  // Per-coordinate 95% band coverage and Wald rejection rate under the
  // generating parameters; filled for the streaming estimator only.
  std::vector<double> coverage;
  double wald_rejection_rate{-1.0};
};

struct TrajectoryPoint {
  int k{0};
  std::int64_t n_seen{0};
  Eigen::VectorXd beta;
  Eigen::VectorXd band_lo, band_hi;
};

struct ExperimentReport {
  DesignSpec spec;
  VarianceSource variance_source{VarianceSource::current_batch};
  int jobs{1};
  std::vector<EstimatorResult> results;
  std::vector<TrajectoryPoint> trajectory;  // replication 0, when recorded
  std::string hardware;
  std::string build;
};

/// report.json text (numbers as plain JSON; timings included).
std::string report_to_json(const ExperimentReport& report);

/// Wide CSV, one row per estimator. Timing is opt-in: wall-clock values are
/// run-dependent and excluded by default so repeat runs are byte-identical.
std::string report_to_table_csv(const ExperimentReport& report, bool with_timing);

std::string hardware_description();
std::string build_description();

}  // namespace streamglm

#endif
