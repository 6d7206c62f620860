#include "streamglm/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace streamglm {

namespace {

std::string format_g17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["config"] = {{"design", design_name(report.spec.design)},
                 {"K", report.spec.k_batches},
                 {"n_k", report.spec.n_k},
                 {"reps", report.spec.replications},
                 {"seed", report.spec.seed},
                 {"variance", variance_source_name(report.variance_source)},
                 {"jobs", report.jobs}};
  j["environment"] = {{"hardware", report.hardware}, {"build", report.build}};
  nlohmann::json results = nlohmann::json::array();
  for (const EstimatorResult& r : report.results) {
    nlohmann::json entry = {{"estimator", r.name},
                            {"mse", r.mse},
                            {"mean_seconds", r.mean_seconds},
                            {"failures", r.failures},
                            {"reps_used", r.reps_used}};
    if (!r.coverage.empty()) {
      entry["coverage"] = r.coverage;
      entry["wald_rejection_rate"] = r.wald_rejection_rate;
    }
    results.push_back(std::move(entry));
  }
  j["results"] = std::move(results);
  if (!report.trajectory.empty()) {
    nlohmann::json traj = nlohmann::json::array();
    for (const TrajectoryPoint& pt : report.trajectory) {
      nlohmann::json entry = {{"k", pt.k}, {"N_k", pt.n_seen}};
      entry["beta"] = std::vector<double>(pt.beta.begin(), pt.beta.end());
      entry["band_lo"] = std::vector<double>(pt.band_lo.begin(), pt.band_lo.end());
      entry["band_hi"] = std::vector<double>(pt.band_hi.begin(), pt.band_hi.end());
      traj.push_back(std::move(entry));
    }
    j["trajectory"] = std::move(traj);
  }
  return j.dump(2) + "\n";
}

std::string report_to_table_csv(const ExperimentReport& report, bool with_timing) {
  std::ostringstream out;
  out << "design,K,n_k,reps,seed,estimator,mse,failures";
  if (with_timing) out << ",mean_seconds";
  out << "\n";
  for (const EstimatorResult& r : report.results) {
    out << design_name(report.spec.design) << ',' << report.spec.k_batches << ','
        << report.spec.n_k << ',' << report.spec.replications << ',' << report.spec.seed << ','
        << r.name << ',' << format_g17(r.mse) << ',' << r.failures;
    if (with_timing) out << ',' << format_g17(r.mean_seconds);
    out << "\n";
  }
  return out.str();
}

std::string hardware_description() {
  std::string model = "unknown-cpu";
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) model = line.substr(colon + 2);
      break;
    }
  }
  return model + ", " + std::to_string(std::thread::hardware_concurrency()) + " logical cores";
}

std::string build_description() {
#if defined(__VERSION__)
  return std::string("streamglm 0.1.0, compiler ") + __VERSION__;
#else
  return "streamglm 0.1.0";
#endif
}

}  // namespace streamglm
