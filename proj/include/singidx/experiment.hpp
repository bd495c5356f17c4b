#pragma once

// Batch drivers for the reaching and path-tracking experiments, summary
// statistics and the flat-file writers used by the bench tool.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "singidx/kinematics.hpp"
#include "singidx/tracker.hpp"

namespace singidx {

enum class ExperimentTask { Reach, Track };

struct TrackSettings {
  std::optional<double> radius;     // m; default 0.25 x reach
  int steps = 500;
  bool fixed_orientation = false;   // switch the chain to pose6d
  std::optional<CirclePlane> plane; // default XY (planar) or XZ (spatial)
  std::optional<JointVector> q0;    // default: default_track_start(chain, seed)
};

struct ExperimentSpec {
  std::string chain_path;
  std::vector<Method> methods;
  int trials = 200;
  std::uint64_t seed = 42;
  ExperimentTask task = ExperimentTask::Reach;
  TrackSettings track;
  std::string output_path;
  TrackerConfig tracker;
  int threads = 1;

  /// Throws InvalidArgument unless trials >= 1, methods is non-empty and
  /// every method and the tracker config are valid.
  void validate() const;
};

struct ReachTrial {
  int trial = 0;
  std::size_t method = 0;  // index into the spec's methods
  ReachOutcome outcome = ReachOutcome::Timeout;
  int steps = 0;
  TrialRecord final_record;
  std::size_t qp_steps = 0;
  double max_kkt_residual = 0.0;
  double max_abs_qdot = 0.0;
  bool limits_respected = true;
};

struct BoxStats {
  int count = 0;
  double median = 0.0;
  double lower_quartile = 0.0;
  double upper_quartile = 0.0;
  double whisker_low = 0.0;   // smallest value >= Q1 - 1.5 IQR
  double whisker_high = 0.0;  // largest value <= Q3 + 1.5 IQR
};

struct MethodSummary {
  std::string method;
  int trials = 0;
  int successes = 0;
  BoxStats sigma_min;
  BoxStats sigma_max;
};

struct SummaryStats {
  std::vector<MethodSummary> methods;
};

struct ReachBatch {
  std::string chain_name;
  std::vector<ReachingProblem> problems;  // one per trial, shared by all methods
  std::vector<ReachTrial> trials;         // ordered by (trial, method)
  SummaryStats summary;
};

struct TrackRun {
  std::size_t method = 0;
  std::vector<TrialRecord> records;
};

struct TrackBatch {
  std::string chain_name;
  int task_dim = 0;
  JointVector q0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.0;
  CirclePlane plane = CirclePlane::XY;
  std::vector<TrackRun> runs;  // ordered as the spec's methods
};

/// Linear interpolation between closest ranks (R type 7) on sorted data.
double quantile_type7(const std::vector<double>& sorted, double p);

/// Box-plot statistics; all fields NaN when `values` is empty.
BoxStats box_stats(std::vector<double> values);

/// Label of a method, e.g. "sik".
std::string method_label(const Method& method);

/// Best-conditioned (largest sigma_min) of 256 deterministic random
/// configurations in the central half of every joint range.
JointVector default_track_start(const ChainModel& chain, std::uint64_t seed);

/// Largest sigma_max(J)^2 over `samples` random configurations: an empirical
/// lower bound for the radius k of a fixed spherical reference k I.
double fixed_sphere_bound(const ChainModel& chain, int samples, std::uint64_t seed);

/// Runs every method on the same sampled problem set. Trials are distributed
/// over `threads` workers; results are ordered by trial index.
ReachBatch run_reach_batch(const ChainModel& chain, const ExperimentSpec& spec);
ReachBatch run_reach_batch(const ExperimentSpec& spec);

/// Tracks the circle with every method. Methods run in parallel.
TrackBatch run_track(const ChainModel& chain, const ExperimentSpec& spec);
TrackBatch run_track(const ExperimentSpec& spec);

SummaryStats summarize(const ReachBatch& batch, const std::vector<Method>& methods);

void write_reach_csv(std::ostream& out, const ReachBatch& batch, const std::vector<Method>& methods);
void write_problems_csv(std::ostream& out, const ReachBatch& batch);
void write_track_csv(std::ostream& out, const TrackBatch& batch, const std::vector<Method>& methods);

nlohmann::json summary_json(const ReachBatch& batch, const ExperimentSpec& spec);
nlohmann::json track_summary_json(const TrackBatch& batch, const ExperimentSpec& spec);

/// Seventeen significant digits ("%.17g"); "inf", "-inf" or "nan" otherwise.
std::string format_number(double v);

}  // namespace singidx
