#include "singidx/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "singidx/chain_io.hpp"
#include "singidx/error.hpp"

namespace singidx {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kTrackStartCandidates = 256;

// Runs fn(i) for i in [0, count) on up to `threads` workers. The first
// exception thrown by any job is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

nlohmann::json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

nlohmann::json box_json(const BoxStats& b) {
  return {{"count", b.count},
          {"median", number_or_null(b.median)},
          {"lower_quartile", number_or_null(b.lower_quartile)},
          {"upper_quartile", number_or_null(b.upper_quartile)},
          {"whisker_low", number_or_null(b.whisker_low)},
          {"whisker_high", number_or_null(b.whisker_high)}};
}

const char* plane_name(CirclePlane plane) {
  switch (plane) {
    case CirclePlane::XY: return "xy";
    case CirclePlane::XZ: return "xz";
    case CirclePlane::YZ: return "yz";
  }
  return "?";
}

}  // namespace

void ExperimentSpec::validate() const {
  if (trials < 1) throw InvalidArgument("ExperimentSpec: trials must be >= 1");
  if (methods.empty()) throw InvalidArgument("ExperimentSpec: no methods given");
  if (threads < 1) throw InvalidArgument("ExperimentSpec: threads must be >= 1");
  if (track.steps < 0) throw InvalidArgument("ExperimentSpec: steps must be >= 0");
  if (track.radius && !(*track.radius >= 0.0)) throw InvalidArgument("ExperimentSpec: radius must be >= 0");
  for (const Method& m : methods) m.validate();
  tracker.validate();
}

double quantile_type7(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return kNaN;
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::vector<double> values) {
  BoxStats b;
  b.count = static_cast<int>(values.size());
  if (values.empty()) {
    b.median = b.lower_quartile = b.upper_quartile = b.whisker_low = b.whisker_high = kNaN;
    return b;
  }
  std::sort(values.begin(), values.end());
  b.median = quantile_type7(values, 0.5);
  b.lower_quartile = quantile_type7(values, 0.25);
  b.upper_quartile = quantile_type7(values, 0.75);
  const double iqr = b.upper_quartile - b.lower_quartile;
  const double fence_low = b.lower_quartile - 1.5 * iqr;
  const double fence_high = b.upper_quartile + 1.5 * iqr;
  b.whisker_low = *std::find_if(values.begin(), values.end(), [&](double v) { return v >= fence_low; });
  b.whisker_high = *std::find_if(values.rbegin(), values.rend(), [&](double v) { return v <= fence_high; });
  return b;
}

std::string method_label(const Method& method) { return to_string(method.kind); }

JointVector default_track_start(const ChainModel& chain, std::uint64_t seed) {
  JointVector best;
  double best_sigma = -1.0;
  for (int i = 0; i < kTrackStartCandidates; ++i) {
    // Pulled into the central half of each joint range, away from the limits.
    const JointVector mid = 0.5 * (chain.lower_limits() + chain.upper_limits());
    const JointVector q = mid + 0.5 * (sample_reaching_problem(chain, seed, -1 - i).q0 - mid);
    const double s = singular_spectrum(geometric_jacobian(chain, q)).minCoeff();
    if (s > best_sigma) {
      best_sigma = s;
      best = q;
    }
  }
  return best;
}

double fixed_sphere_bound(const ChainModel& chain, int samples, std::uint64_t seed) {
  if (samples < 1) throw InvalidArgument("fixed_sphere_bound: samples must be >= 1");
  double bound = 0.0;
  for (int i = 0; i < samples; ++i) {
    const JointVector q = sample_reaching_problem(chain, seed, i).q0;
    const double s = singular_spectrum(geometric_jacobian(chain, q)).maxCoeff();
    bound = std::max(bound, s * s);
  }
  return bound;
}

ReachBatch run_reach_batch(const ChainModel& chain, const ExperimentSpec& spec) {
  spec.validate();
  ReachBatch batch;
  batch.chain_name = chain.name();
  batch.problems.reserve(static_cast<std::size_t>(spec.trials));
  for (int t = 0; t < spec.trials; ++t) batch.problems.push_back(sample_reaching_problem(chain, spec.seed, t));

  const std::size_t m = spec.methods.size();
  batch.trials.resize(static_cast<std::size_t>(spec.trials) * m);
  parallel_for(static_cast<std::size_t>(spec.trials), spec.threads, [&](std::size_t t) {
    const ReachingProblem& problem = batch.problems[t];
    TrackerConfig cfg = spec.tracker;
    cfg.rng_seed = spec.seed * 1000003ULL + t;
    for (std::size_t k = 0; k < m; ++k) {
      const ReachResult r = reach_task(chain, problem.q0, problem.goal, spec.methods[k], cfg);
      ReachTrial& out = batch.trials[t * m + k];
      out.trial = static_cast<int>(t);
      out.method = k;
      out.outcome = r.outcome;
      out.steps = r.steps();
      out.final_record = r.trace.back();
      for (const TrialRecord& rec : r.trace) {
        if (rec.qdot.size() > 0) out.max_abs_qdot = std::max(out.max_abs_qdot, rec.qdot.cwiseAbs().maxCoeff());
        out.max_kkt_residual = std::max(out.max_kkt_residual, rec.kkt_residual);
        if (!rec.flags.singular_escape && !rec.flags.failed && rec.qdot.size() > 0 && rec.qdot_norm > 0.0) {
          ++out.qp_steps;
        }
        if (!chain.within_limits(rec.q, 1e-12)) out.limits_respected = false;
      }
    }
  });
  batch.summary = summarize(batch, spec.methods);
  return batch;
}

ReachBatch run_reach_batch(const ExperimentSpec& spec) { return run_reach_batch(load_chain(spec.chain_path), spec); }

TrackBatch run_track(const ChainModel& base, const ExperimentSpec& spec) {
  spec.validate();
  if (spec.track.fixed_orientation && base.task() == TaskSpace::Position2d) {
    throw InvalidArgument("run_track: fixed orientation needs a spatial chain");
  }
  const ChainModel chain = spec.track.fixed_orientation ? base.with_task(TaskSpace::Pose6d) : base;

  TrackBatch batch;
  batch.chain_name = chain.name();
  batch.task_dim = chain.task_dim();
  batch.q0 = spec.track.q0 ? *spec.track.q0 : default_track_start(chain, spec.seed);
  if (batch.q0.size() != chain.dof()) throw DimensionMismatch("run_track: q0 has the wrong length");
  const Pose start = forward_kinematics(chain, batch.q0);
  batch.center = start.position;
  batch.radius = spec.track.radius ? *spec.track.radius : 0.25 * chain.reach();
  batch.plane = spec.track.plane ? *spec.track.plane
                                 : (chain.task() == TaskSpace::Position2d ? CirclePlane::XY : CirclePlane::XZ);
  const PathFunction path = circle_path(batch.center, batch.radius, batch.plane, start.orientation);

  batch.runs.resize(spec.methods.size());
  parallel_for(spec.methods.size(), spec.threads, [&](std::size_t k) {
    TrackerConfig cfg = spec.tracker;
    cfg.rng_seed = spec.seed;
    batch.runs[k].method = k;
    batch.runs[k].records = track_path(chain, batch.q0, path, spec.methods[k], cfg, spec.track.steps);
  });
  return batch;
}

TrackBatch run_track(const ExperimentSpec& spec) { return run_track(load_chain(spec.chain_path), spec); }

SummaryStats summarize(const ReachBatch& batch, const std::vector<Method>& methods) {
  SummaryStats s;
  for (std::size_t k = 0; k < methods.size(); ++k) {
    MethodSummary ms;
    ms.method = method_label(methods[k]);
    std::vector<double> smin, smax;
    for (const ReachTrial& t : batch.trials) {
      if (t.method != k) continue;
      ++ms.trials;
      if (t.outcome != ReachOutcome::Success) continue;
      ++ms.successes;
      smin.push_back(t.final_record.indices.sigma_min);
      smax.push_back(t.final_record.indices.sigma_max);
    }
    ms.sigma_min = box_stats(std::move(smin));
    ms.sigma_max = box_stats(std::move(smax));
    s.methods.push_back(std::move(ms));
  }
  return s;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_reach_csv(std::ostream& out, const ReachBatch& batch, const std::vector<Method>& methods) {
  out << "trial,method,outcome,steps,sigma_min,sigma_max,xi,manipulability,dexterity,pos_err\n";
  for (const ReachTrial& t : batch.trials) {
    const IndexReport& r = t.final_record.indices;
    out << t.trial << ',' << method_label(methods[t.method]) << ',' << to_string(t.outcome) << ',' << t.steps << ','
        << format_number(r.sigma_min) << ',' << format_number(r.sigma_max) << ',' << format_number(r.xi) << ','
        << format_number(r.manipulability) << ',' << format_number(r.dexterity) << ','
        << format_number(t.final_record.position_error) << '\n';
  }
}

void write_problems_csv(std::ostream& out, const ReachBatch& batch) {
  out << "trial,q0,goal\n";
  for (std::size_t t = 0; t < batch.problems.size(); ++t) {
    const ReachingProblem& p = batch.problems[t];
    out << t << ",\"";
    for (Eigen::Index i = 0; i < p.q0.size(); ++i) out << (i ? " " : "") << format_number(p.q0(i));
    out << "\",\"";
    for (int i = 0; i < 3; ++i) out << (i ? " " : "") << format_number(p.goal.position(i));
    out << "\"\n";
  }
}

void write_track_csv(std::ostream& out, const TrackBatch& batch, const std::vector<Method>& methods) {
  out << "method,step,t";
  for (int i = 1; i <= batch.task_dim; ++i) out << ",sigma_" << i;
  out << ",xi,manipulability,dexterity,pos_err\n";
  for (const TrackRun& run : batch.runs) {
    const std::string label = method_label(methods[run.method]);
    for (const TrialRecord& r : run.records) {
      out << label << ',' << r.step << ',' << format_number(r.t);
      for (Eigen::Index i = 0; i < r.indices.spectrum.size(); ++i) out << ',' << format_number(r.indices.spectrum(i));
      out << ',' << format_number(r.indices.xi) << ',' << format_number(r.indices.manipulability) << ','
          << format_number(r.indices.dexterity) << ',' << format_number(r.position_error) << '\n';
    }
  }
}

nlohmann::json summary_json(const ReachBatch& batch, const ExperimentSpec& spec) {
  nlohmann::json j;
  j["chain"] = batch.chain_name;
  j["task"] = "reach";
  j["trials"] = spec.trials;
  j["seed"] = spec.seed;
  j["quantiles"] = "type7 (linear interpolation between closest ranks)";
  j["whiskers"] = "most extreme values within 1.5 IQR of the quartiles";
  j["statistics_over"] = "successful trials, final configuration";
  j["methods"] = nlohmann::json::array();
  for (std::size_t k = 0; k < batch.summary.methods.size(); ++k) {
    const MethodSummary& ms = batch.summary.methods[k];
    j["methods"].push_back({{"method", ms.method},
                            {"alpha", spec.methods[k].alpha},
                            {"trials", ms.trials},
                            {"successes", ms.successes},
                            {"sigma_min", box_json(ms.sigma_min)},
                            {"sigma_max", box_json(ms.sigma_max)}});
  }
  return j;
}

nlohmann::json track_summary_json(const TrackBatch& batch, const ExperimentSpec& spec) {
  nlohmann::json j;
  j["chain"] = batch.chain_name;
  j["task"] = "track";
  j["steps"] = spec.track.steps;
  j["radius"] = batch.radius;
  j["center"] = {batch.center.x(), batch.center.y(), batch.center.z()};
  j["plane"] = plane_name(batch.plane);
  j["fixed_orientation"] = spec.track.fixed_orientation;
  j["methods"] = nlohmann::json::array();
  for (const TrackRun& run : batch.runs) {
    double min_sigma = std::numeric_limits<double>::infinity();
    double max_sigma = 0.0;
    double max_pos_err = 0.0;
    double max_rot_err = 0.0;
    int failed = 0;
    int escapes = 0;
    for (const TrialRecord& r : run.records) {
      min_sigma = std::min(min_sigma, r.indices.sigma_min);
      max_sigma = std::max(max_sigma, r.indices.sigma_max);
      max_pos_err = std::max(max_pos_err, r.position_error);
      max_rot_err = std::max(max_rot_err, r.orientation_error);
      failed += r.flags.failed ? 1 : 0;
      escapes += r.flags.singular_escape ? 1 : 0;
    }
    j["methods"].push_back({{"method", method_label(spec.methods[run.method])},
                            {"alpha", spec.methods[run.method].alpha},
                            {"min_sigma_min", number_or_null(min_sigma)},
                            {"max_sigma_max", max_sigma},
                            {"max_position_error", max_pos_err},
                            {"max_orientation_error", max_rot_err},
                            {"failed_steps", failed},
                            {"singular_escapes", escapes}});
  }
  return j;
}

}  // namespace singidx
