// bench: experiment harness over chain files.
//
//   bench reach --chain <file> --methods sik,sik2,mik,ik,eik --trials 200 --seed 42 --out results.csv
//   bench track --chain <file> --radius <m> --steps 500 [--fixed-orientation] --out track.csv
//   bench probe --chain <file> --q "0,1.57,0"
//   bench sweep --chain <file> --samples 10000
//
// Exit codes: 0 ok, 2 input error, 3 I/O error.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "singidx/chain_io.hpp"
#include "singidx/error.hpp"
#include "singidx/experiment.hpp"
#include "singidx/indices.hpp"

using namespace singidx;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitIo = 3;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("not a number: '" + text + "'");
  }
  while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
  if (used != text.size() || !std::isfinite(v)) throw InvalidArgument("not a number: '" + text + "'");
  return v;
}

Eigen::VectorXd parse_vector(const std::string& text) {
  const std::vector<std::string> parts = split(text, ',');
  if (parts.empty()) throw InvalidArgument("empty joint vector");
  Eigen::VectorXd v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_number(parts[i]);
  return v;
}

struct MethodOptions {
  std::string names = "sik,sik2,mik,ik,eik";
  double alpha = -1.0;  // < 0: per-method default
  double k = 2.0;
  double margin = 1.0;
};

std::vector<Method> build_methods(const MethodOptions& o, TaskSpace task) {
  std::vector<Method> methods;
  for (const std::string& name : split(o.names, ',')) {
    const auto kind = parse_method_kind(name);
    if (!kind) throw InvalidArgument("unknown method '" + name + "'");
    Method m = default_method(*kind, task);
    if (m.kind != MethodKind::IK && o.alpha >= 0.0) m.alpha = o.alpha;
    if (m.kind == MethodKind::SIK2) m.strategy = ScaledCurrent{o.k};
    if (m.kind == MethodKind::SIK || m.kind == MethodKind::EIK) m.strategy = SphereTrace{o.margin};
    m.validate();
    methods.push_back(std::move(m));
  }
  return methods;
}

CirclePlane parse_plane(const std::string& s) {
  if (s == "xy") return CirclePlane::XY;
  if (s == "xz") return CirclePlane::XZ;
  if (s == "yz") return CirclePlane::YZ;
  throw InvalidArgument("unknown plane '" + s + "' (expected xy, xz or yz)");
}

// Writes via `emit` to a file, or to stdout for "-".
template <class Emit>
void write_output(const std::string& path, Emit emit) {
  if (path == "-") {
    emit(std::cout);
    std::cout.flush();
    if (!std::cout) throw IoError("failed writing to stdout");
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  emit(out);
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string sidecar(const std::string& out, const std::string& suffix) { return out == "-" ? "" : out + suffix; }

nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Singularity-index experiment harness"};
  app.require_subcommand(1);

  std::string chain_path;
  std::string out_path = "-";
  std::string summary_path;
  MethodOptions mopts;
  ExperimentSpec spec;
  spec.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  double vel_limit = spec.tracker.vel_limit;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--chain", chain_path, "Chain description file")->required();
    sub->add_option("--methods", mopts.names, "Comma-separated subset of sik,sik2,mik,ik,eik");
    sub->add_option("--seed", spec.seed, "Random seed");
    sub->add_option("--alpha", mopts.alpha, "Gain for every non-IK method (default: per method)");
    sub->add_option("--k", mopts.k, "Scale of the sik2 reference (k > 1)");
    sub->add_option("--margin", mopts.margin, "Trace multiplier of the spherical reference (>= 1)");
    sub->add_option("--vel-limit", vel_limit, "Joint velocity limit, rad/s");
    sub->add_option("--dt", spec.tracker.dt, "Control period, s");
    sub->add_option("--out", out_path, "CSV output path ('-' for stdout)");
    sub->add_option("--summary", summary_path, "JSON summary path (default: <out>.summary.json)");
    sub->add_option("--threads", spec.threads, "Worker threads");
  };

  CLI::App* reach = app.add_subcommand("reach", "Random reaching tasks");
  add_common(reach);
  reach->add_option("--trials", spec.trials, "Number of random problems");
  reach->add_option("--max-steps", spec.tracker.max_steps, "Control step budget per task");
  reach->add_option("--goal-tol", spec.tracker.goal_tol, "Position tolerance, m");
  std::string problems_path;
  reach->add_option("--problems", problems_path, "Per-trial (q0, goal) log (default: <out>.problems.csv)");

  CLI::App* track = app.add_subcommand("track", "Circular path tracking");
  add_common(track);
  double radius = -1.0;
  std::string plane;
  std::string q0_text;
  track->add_option("--radius", radius, "Circle radius, m (default 0.25 x reach)");
  track->add_option("--steps", spec.track.steps, "Control steps along the circle");
  track->add_flag("--fixed-orientation", spec.track.fixed_orientation, "Also hold the start orientation");
  track->add_option("--plane", plane, "Circle plane: xy, xz or yz");
  track->add_option("--q0", q0_text, "Start configuration, comma-separated");

  CLI::App* probe = app.add_subcommand("probe", "Print the indices at one configuration");
  std::string q_text;
  std::string strategy = "trace";
  double k_fixed = 1.0;
  probe->add_option("--chain", chain_path, "Chain description file")->required();
  probe->add_option("--q", q_text, "Joint values, comma-separated")->required();
  probe->add_option("--reference", strategy, "Reference: trace, fixed or scaled");
  probe->add_option("--margin", mopts.margin, "Trace multiplier (trace)");
  probe->add_option("--k", k_fixed, "Sphere radius (fixed) or scale (scaled)");

  CLI::App* sweep = app.add_subcommand("sweep", "Estimate the fixed-sphere radius bound by sampling");
  int samples = 10000;
  sweep->add_option("--chain", chain_path, "Chain description file")->required();
  sweep->add_option("--samples", samples, "Random configurations to evaluate");
  sweep->add_option("--seed", spec.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    const ChainModel chain = load_chain(chain_path);
    spec.chain_path = chain_path;
    spec.tracker.vel_limit = vel_limit;

    if (sweep->parsed()) {
      const double bound = fixed_sphere_bound(chain, samples, spec.seed);
      nlohmann::json j;
      j["chain"] = chain.name();
      j["samples"] = samples;
      j["seed"] = spec.seed;
      j["max_sigma_max_squared"] = bound;
      std::cout << j.dump() << '\n';
      return 0;
    }

    if (probe->parsed()) {
      const Eigen::VectorXd q = parse_vector(q_text);
      if (q.size() != chain.dof()) {
        throw DimensionMismatch("--q has " + std::to_string(q.size()) + " values, chain has " +
                                std::to_string(chain.dof()) + " joints");
      }
      ReferenceStrategy ref = SphereTrace{mopts.margin};
      if (strategy == "fixed") {
        ref = SphereFixed{k_fixed};
      } else if (strategy == "scaled") {
        ref = ScaledCurrent{k_fixed};
      } else if (strategy != "trace") {
        throw InvalidArgument("unknown reference '" + strategy + "'");
      }
      const IndexReport r = index_report(geometric_jacobian(chain, q), ref);
      nlohmann::json j;
      j["chain"] = chain.name();
      j["q"] = std::vector<double>(q.data(), q.data() + q.size());
      j["xi"] = finite_or_null(r.xi);
      j["xi_infinite"] = r.xi_infinite();
      j["xi_euclidean"] = r.xi_euclidean;
      j["manipulability"] = r.manipulability;
      j["dexterity"] = finite_or_null(r.dexterity);
      j["dexterity_infinite"] = r.dexterity_infinite();
      j["sigma"] = std::vector<double>(r.spectrum.data(), r.spectrum.data() + r.spectrum.size());
      std::cout << j.dump() << '\n';
      return 0;
    }

    if (reach->parsed()) {
      spec.task = ExperimentTask::Reach;
      spec.methods = build_methods(mopts, chain.task());
      const ReachBatch batch = run_reach_batch(chain, spec);
      write_output(out_path, [&](std::ostream& os) { write_reach_csv(os, batch, spec.methods); });
      const std::string summary = summary_path.empty() ? sidecar(out_path, ".summary.json") : summary_path;
      if (!summary.empty()) {
        write_output(summary, [&](std::ostream& os) { os << summary_json(batch, spec).dump(2) << '\n'; });
      }
      const std::string problems = problems_path.empty() ? sidecar(out_path, ".problems.csv") : problems_path;
      if (!problems.empty()) write_output(problems, [&](std::ostream& os) { write_problems_csv(os, batch); });
      return 0;
    }

    spec.task = ExperimentTask::Track;
    if (radius >= 0.0) spec.track.radius = radius;
    if (!plane.empty()) spec.track.plane = parse_plane(plane);
    if (!q0_text.empty()) spec.track.q0 = parse_vector(q0_text);
    const TaskSpace task = spec.track.fixed_orientation ? TaskSpace::Pose6d : chain.task();
    spec.methods = build_methods(mopts, task);
    const TrackBatch batch = run_track(chain, spec);
    write_output(out_path, [&](std::ostream& os) { write_track_csv(os, batch, spec.methods); });
    const std::string summary = summary_path.empty() ? sidecar(out_path, ".summary.json") : summary_path;
    if (!summary.empty()) {
      write_output(summary, [&](std::ostream& os) { os << track_summary_json(batch, spec).dump(2) << '\n'; });
    }
    return 0;
  } catch (const IoError& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return kExitIo;
  } catch (const ParseError& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return kExitInput;
  }
}
