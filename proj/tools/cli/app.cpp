#include "cli/app.hpp"

#include <CLI11.hpp>
#include <sstream>

#include "cli/commands.hpp"
#include "cli/verify.hpp"
#include "stogeo/errors.hpp"

namespace stogeo::cli {

namespace {

// Config files: flat `key = value` lines, or the run.json / flat JSON
// object that the subcommands emit. Command-line flags take precedence.
class FlatConfig : public CLI::ConfigBase {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::stringstream buf;
    buf << input.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') {
      std::istringstream again(text);
      return CLI::ConfigBase::from_config(again);
    }
    Json j = Json::parse(text);
    if (j.contains("config") && j["config"].is_object()) j = j["config"];
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.name = key;
      if (value.is_string()) {
        item.inputs = {value.get<std::string>()};
      } else if (value.is_boolean()) {
        item.inputs = {value.get<bool>() ? "true" : "false"};
      } else if (value.is_number_float()) {
        item.inputs = {format_double(value.get<double>())};
      } else if (value.is_number()) {
        item.inputs = {value.dump()};
      } else {
        throw UsageError("config key '" + key + "' must be a scalar");
      }
      items.push_back(std::move(item));
    }
    return items;
  }
};

void add_config(CLI::App* sub, std::string& path) {
  sub->add_option("--config", path, "Read options from a flat key = value file or run.json");
}

// Fills every option the command line left unset from the config file.
void apply_config(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  std::vector<CLI::ConfigItem> items;
  try {
    items = FlatConfig{}.from_file(path);
  } catch (const CLI::Error& e) {
    throw UsageError("cannot read config " + path + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    if (!item.parents.empty()) throw UsageError("config sections are not supported: " + item.fullname());
    CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
    if (opt == nullptr || item.name == "config") {
      throw UsageError("unknown config key '" + item.name + "' for " + sub->get_name());
    }
    if (opt->count() > 0) continue;
    for (const auto& in : item.inputs) opt->add_result(in);
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError("bad value for config key '" + item.name + "': " + e.what());
    }
  }
}

void add_common(CLI::App* sub, CommonOptions& c) {
  sub->add_option("-k,--k", c.k, "Time step")->capture_default_str();
  sub->add_option("-T,--T", c.T, "Final time")->capture_default_str();
  sub->add_option("--seed", c.seed, "Noise seed")->capture_default_str();
  sub->add_option("--u0", c.u0, "Initial position x,y,z")->capture_default_str();
  sub->add_option("--v0", c.v0, "Initial velocity x,y,z")->capture_default_str();
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  sub->add_option("--fp-tol", c.fp_tol, "Fixed-point tolerance")->capture_default_str();
  sub->add_option("--fp-max-iter", c.fp_max_iter, "Fixed-point iteration cap")
      ->capture_default_str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic geodesic flow on the unit tangent bundle of S^2", "stogeo"};
  app.require_subcommand(1);
  std::string config_path;

  SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "Simulate one path; write trajectory.csv and invariants.json");
  add_common(s, sim.common);
  s->add_option("-D,--D", sim.D, "Noise intensity")->capture_default_str();
  s->add_option("--scheme", sim.scheme, "implicit | em")->capture_default_str();
  s->add_option("--dW", sim.dW, "normal | zero")->capture_default_str();
  s->add_option("--path-id", sim.path_id, "Noise stream index")->capture_default_str();
  s->add_option("--every", sim.every, "Write every n-th step")->capture_default_str();
  s->add_option("--snapshots", sim.snapshots, "Times to write (list or start:stop:step)");
  add_config(s, config_path);

  EnsembleOptions ens;
  auto* e = app.add_subcommand("ensemble", "Monte-Carlo ensemble: histograms, E_max, counts, rate");
  add_common(e, ens.common);
  e->add_option("-D,--D", ens.D, "Noise intensity or comma list (D-sweep)")->capture_default_str();
  e->add_option("-N,--N", ens.N, "Number of paths")->capture_default_str();
  e->add_option("--grid", ens.grid, "Histogram grid n_lat x n_lon")->capture_default_str();
  e->add_flag("--equal-area", ens.equal_area, "Equal-area latitude bands");
  e->add_option("--snapshots", ens.snapshots, "Snapshot times (list or start:stop:step)")
      ->capture_default_str();
  e->add_option("--scheme", ens.scheme, "implicit | em")->capture_default_str();
  e->add_option("--workers", ens.workers, "Worker threads (0: all cores)")->capture_default_str();
  e->add_option("--floor-factor", ens.floor_factor, "Rate fit stops at factor x floor")
      ->capture_default_str();
  e->add_option("--floor-samples", ens.floor_samples, "Uniform samples for the floor (0: N)")
      ->capture_default_str();
  add_config(e, config_path);

  PlanOptions plan;
  auto* p = app.add_subcommand("plan", "Piecewise-constant control between two states");
  p->add_option("--u0", plan.u0, "Start position")->capture_default_str();
  p->add_option("--v0", plan.v0, "Start velocity")->capture_default_str();
  p->add_option("--u1", plan.u1, "Target position")->capture_default_str();
  p->add_option("--v1", plan.v1, "Target velocity")->capture_default_str();
  p->add_option("-T,--T", plan.T, "Horizon (0: 2 pi / r + 0.5)")->capture_default_str();
  p->add_option("--samples", plan.samples, "Trajectory samples")->capture_default_str();
  p->add_option("--out", plan.out, "Output directory")->capture_default_str();
  add_config(p, config_path);

  VerifyOptions ver;
  auto* v = app.add_subcommand("verify", "Run the property suite; nonzero exit on failure");
  v->add_option("--points", ver.points, "Random points per speed")->capture_default_str();
  v->add_option("--partition-samples", ver.partition_samples, "Uniform samples for cell volumes")
      ->capture_default_str();
  v->add_option("--seed", ver.seed, "Seed")->capture_default_str();
  v->add_option("--tolerance-scale", ver.tolerance_scale, "Multiply every tolerance")
      ->capture_default_str();
  v->add_option("--out", ver.out, "Also write verify.json here");
  add_config(v, config_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    for (auto* sub : {s, e, p, v}) {
      if (sub->parsed()) apply_config(sub, config_path);
    }
    if (s->parsed()) return cmd_simulate(sim, err);
    if (e->parsed()) return cmd_ensemble(ens, err);
    if (p->parsed()) return cmd_plan(plan, err);
    return cmd_verify(ver, out, err);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << "\n";
    return 2;
  } catch (const InfeasibleTimeError& ex) {
    err << "error: " << ex.what() << " (T must be >= 2 pi / r = "
        << format_double(ex.min_time()) << ")\n";
    return 3;
  } catch (const DegenerateInputError& ex) {
    err << "error: " << ex.what() << "\n";
    return 2;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return 4;
  } catch (const Json::exception& ex) {
    err << "error: bad config: " << ex.what() << "\n";
    return 2;
  }
}

}  // namespace stogeo::cli
