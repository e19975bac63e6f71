#include "isd/commands.hpp"

#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>

#include <boost/algorithm/string.hpp>

#include "isd/aircraft.hpp"
#include "isd/csv.hpp"
#include "isd/dp_threshold.hpp"
#include "isd/errors.hpp"
#include "isd/hmm_filter.hpp"
#include "isd/montecarlo.hpp"
#include "isd/occupation_filter.hpp"
#include "isd/signal_core.hpp"
#include "isd/stopping.hpp"

namespace isd {

namespace {

using Json = nlohmann::ordered_json;
using Runner = std::function<void(const CommandOptions&)>;

constexpr double kHuge = std::numeric_limits<double>::max();
constexpr std::uint64_t kMaxCount = std::numeric_limits<std::uint32_t>::max();

std::ofstream open_output(const CommandOptions& opt, const std::string& name,
                          std::ios::openmode mode = std::ios::out) {
  std::ofstream out(opt.out_dir / name, mode | std::ios::trunc);
  if (!out) throw Error("cannot write " + (opt.out_dir / name).string());
  return out;
}

Json summary_head(const std::string& command, const Config& cfg, std::uint64_t seed) {
  Json j;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = cfg.resolved_json();
  j["config_text"] = cfg.canonical_text();
  j["config_sha1"] = cfg.content_hash();
  return j;
}

void write_summary(const CommandOptions& opt, const Json& j) {
  auto out = open_output(opt, "summary.json");
  out << j.dump(2) << '\n';
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

// Reads [model] rho, a, mu1, mu2 and optionally sigma2.
struct ModelBlock {
  TransitionModel2 model;
  double mu1 = 1.0;
  double mu2 = 2.0;
  double sigma2 = 5.0;
};

ModelBlock read_model(Config& cfg, bool with_sigma2) {
  ModelBlock m;
  m.model.rho = cfg.real("model.rho", 0.01, 0.0, 1.0);
  m.model.a = cfg.real("model.a", 0.99, 0.0, 1.0);
  m.mu1 = cfg.real("model.mu1", 1.0, -kHuge, kHuge);
  m.mu2 = cfg.real("model.mu2", 2.0, -kHuge, kHuge);
  if (with_sigma2) m.sigma2 = cfg.real("model.sigma2", 5.0, std::numeric_limits<double>::min(), kHuge);
  return m;
}

// "stationary" or "p1,p2".
std::optional<Belief> read_initial(Config& cfg, const TransitionModel2& model) {
  const std::string field = "model.initial_belief";
  const std::string v = cfg.text(field, "stationary");
  if (v == "stationary") {
    try {
      (void)stationary_distribution(model);
    } catch (const InvalidArgument& e) {
      throw ConfigError(field, e.what());
    }
    return std::nullopt;
  }
  std::vector<std::string> parts;
  boost::split(parts, v, boost::is_any_of(","));
  if (parts.size() != 2) throw ConfigError(field, "expected 'stationary' or two comma-separated probabilities");
  Config one = Config::parse("[x]\np = " + parts[0] + "\nq = " + parts[1] + "\n");
  try {
    return Belief({one.real("x.p", 0.0, 0.0, 1.0), one.real("x.q", 0.0, 0.0, 1.0)});
  } catch (const Error& e) {
    throw ConfigError(field, e.what());
  }
}

Belief initial_or_stationary(const std::optional<Belief>& b, const TransitionModel2& model) {
  return b ? *b : stationary_distribution(model);
}

ResetPolicy read_reset(Config& cfg, const std::string& field) {
  return cfg.choice(field, "reset_to_initial", {"reset_to_initial", "reset_to_stationary"}) == "reset_to_initial"
             ? ResetPolicy::reset_to_initial
             : ResetPolicy::reset_to_stationary;
}

std::vector<RuleVariant> read_variants(Config& cfg, const std::string& field, std::vector<std::string> fallback) {
  std::vector<RuleVariant> out;
  for (const auto& w : cfg.words(field, fallback)) {
    if (w == "isd") {
      out.push_back(RuleVariant::isd);
    } else if (w == "sbd") {
      out.push_back(RuleVariant::sbd);
    } else {
      throw ConfigError(field, "entries must be isd or sbd, got '" + w + "'");
    }
  }
  return out;
}

// "state:count,..." describing X_0..X_n.
std::vector<State> parse_script(const std::string& field, const std::string& script) {
  std::vector<State> states;
  std::vector<std::string> runs;
  boost::split(runs, script, boost::is_any_of(","));
  for (auto run : runs) {
    boost::trim(run);
    std::vector<std::string> parts;
    boost::split(parts, run, boost::is_any_of(":"));
    if (parts.size() != 2) throw ConfigError(field, "runs must look like state:count, got '" + run + "'");
    Config one = Config::parse("[x]\ns = " + parts[0] + "\nn = " + parts[1] + "\n");
    std::uint64_t s = 0, n = 0;
    try {
      s = one.integer("x.s", 0, 1, 2);
      n = one.integer("x.n", 0, 1, kMaxCount);
    } catch (const Error& e) {
      throw ConfigError(field, e.what());
    }
    states.insert(states.end(), n, s == 1 ? State::normal : State::anomalous);
  }
  if (states.size() < 2) throw ConfigError(field, "script must cover X_0 and at least one measurement");
  return states;
}

// [trajectory] length, seed, script.
struct TrajectoryBlock {
  std::size_t length = 1000;
  std::uint64_t seed = 1;
  std::vector<State> script;
};

TrajectoryBlock read_trajectory(Config& cfg) {
  TrajectoryBlock t;
  t.seed = cfg.integer("trajectory.seed", 1, 0, std::numeric_limits<std::uint64_t>::max());
  if (cfg.has("trajectory.script")) {
    t.script = parse_script("trajectory.script", cfg.text("trajectory.script", ""));
    t.length = t.script.size() - 1;
  } else {
    t.length = cfg.integer("trajectory.length", 1000, 1, kMaxCount);
  }
  return t;
}

Trajectory make_trajectory(const ModelBlock& m, const std::optional<Belief>& initial, const TrajectoryBlock& t) {
  const GaussianPairObservation obs(m.mu1, m.mu2, m.sigma2);
  if (!t.script.empty()) return simulate_scripted(t.script, obs, t.seed);
  return simulate_trajectory(m.model, obs, initial_or_stationary(initial, m.model), t.length, t.seed);
}

Runner cmd_simulate(Config& cfg) {
  const ModelBlock m = read_model(cfg, true);
  const auto initial = read_initial(cfg, m.model);
  const TrajectoryBlock t = read_trajectory(cfg);
  return [&cfg, m, initial, t](const CommandOptions& opt) {
    const Trajectory traj = make_trajectory(m, initial, t);
    auto out = open_output(opt, "trajectory.csv");
    write_trajectory_csv(out, traj);
    Json j = summary_head("simulate", cfg, t.seed);
    std::size_t anomalous = 0;
    for (State s : traj.states) anomalous += s == State::anomalous;
    j["results"] = {{"length", traj.length()}, {"anomalous_states", anomalous}};
    write_summary(opt, j);
  };
}

Runner cmd_detect(Config& cfg) {
  const ModelBlock m = read_model(cfg, true);
  const auto initial = read_initial(cfg, m.model);
  const TrajectoryBlock t = read_trajectory(cfg);
  const double h = cfg.real("detect.threshold", 0.7, 0.0, 1.0);
  const auto variants = read_variants(cfg, "detect.variants", {"isd"});
  const bool multi = cfg.flag("detect.multi_alarm", false);
  const ResetPolicy policy = read_reset(cfg, "detect.reset_policy");
  if (std::any_of(variants.begin(), variants.end(), [](RuleVariant v) { return v == RuleVariant::sbd; })) {
    try {
      (void)stationary_distribution(TransitionModel2{m.model.rho, 1.0});
    } catch (const InvalidArgument&) {
      if (!initial) throw ConfigError("model.initial_belief", "the sbd filter has no stationary law at rho = 0");
    }
  }
  return [&cfg, m, initial, t, h, variants, multi, policy](const CommandOptions& opt) {
    const Trajectory traj = make_trajectory(m, initial, t);
    const GaussianPairObservation obs(m.mu1, m.mu2, m.sigma2);
    {
      auto out = open_output(opt, "trajectory.csv");
      write_trajectory_csv(out, traj);
    }
    Json j = summary_head("detect", cfg, t.seed);
    std::optional<std::size_t> onset;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      if (traj.states[k] == State::anomalous) {
        onset = k;
        break;
      }
    }
    j["results"]["first_anomalous_k"] = onset ? Json(*onset) : Json(nullptr);
    const StoppingRule rule{h};
    for (RuleVariant v : variants) {
      const TransitionModel2 fm = v == RuleVariant::sbd ? TransitionModel2{m.model.rho, 1.0} : m.model;
      const Belief start = initial ? *initial : stationary_distribution(fm);
      const auto trace = run_filter(traj.observations, fm, obs, start);
      const auto occ1 = run_occupation(traj.observations, fm, obs, start, State::normal);
      const auto occ2 = run_occupation(traj.observations, fm, obs, start, State::anomalous);
      const std::string tag = to_string(v);
      {
        auto out = open_output(opt, "filter_" + tag + ".csv");
        write_filter_csv(out, trace);
      }
      {
        auto out = open_output(opt, "occupation_" + tag + ".csv");
        write_occupation_csv(out, occ1, occ2);
      }
      std::vector<AlarmRecord> alarms;
      if (multi) {
        alarms = run_with_resets(traj, fm, obs, start, rule, policy);
      } else if (auto a = first_alarm(start, trace, rule, traj, occ2)) {
        alarms.push_back(*a);
      }
      {
        auto out = open_output(opt, "alarms_" + tag + ".csv");
        write_alarm_csv_header(out);
        write_alarm_csv_rows(out, 0, alarms);
      }
      std::size_t false_alarms = 0;
      for (const auto& a : alarms) false_alarms += a.is_false_alarm;
      Json r;
      r["alarms"] = alarms.size();
      r["false_alarms"] = false_alarms;
      r["first_alarm"] = alarms.empty() ? Json(nullptr) : Json(alarms.front().alarm_time);
      r["first_alarm_is_false"] = alarms.empty() ? Json(nullptr) : Json(alarms.front().is_false_alarm);
      r["final_belief_e2"] = trace.back().belief[1];
      r["log_likelihood"] = [&] {
        double s = 0.0;
        for (const auto& f : trace) s += f.log_normalizer;
        return s;
      }();
      j["results"][tag] = r;
    }
    write_summary(opt, j);
  };
}

enum class Study { montecarlo, soc, occstudy };

Runner cmd_experiment(Config& cfg, Study study) {
  const ModelBlock m = read_model(cfg, false);
  ExperimentSpec spec;
  spec.model = m.model;
  spec.mu1 = m.mu1;
  spec.mu2 = m.mu2;
  spec.initial = read_initial(cfg, m.model);
  const double pos = std::numeric_limits<double>::min();
  spec.sigma2_list = cfg.reals("experiment.sigma2_list", {5.0}, pos, kHuge);
  const std::vector<double> default_h =
      study == Study::occstudy ? std::vector<double>{0.7} : std::vector<double>{0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99};
  spec.thresholds = cfg.reals("experiment.thresholds", default_h, 0.0, 1.0);
  spec.horizon = cfg.integer("experiment.horizon", 2000, 1, kMaxCount);
  spec.trials = cfg.integer("experiment.trials", 1000, 1, kMaxCount);
  spec.seed_base = cfg.integer("experiment.seed_base", 1, 0, std::numeric_limits<std::uint64_t>::max());
  spec.reset_policy = read_reset(cfg, "experiment.reset_policy");
  const auto variants = read_variants(cfg, "experiment.variants",
                                      study == Study::soc ? std::vector<std::string>{"isd", "sbd"}
                                                          : std::vector<std::string>{"isd"});
  if (study == Study::soc && spec.sigma2_list.size() != 1) {
    throw ConfigError("experiment.sigma2_list", "an operating-characteristic sweep uses a single sigma2");
  }
  if (study == Study::soc && spec.thresholds.size() < 2) {
    throw ConfigError("experiment.thresholds", "an operating-characteristic sweep needs at least two thresholds");
  }
  if (study == Study::occstudy && spec.thresholds.size() != 1) {
    throw ConfigError("experiment.thresholds", "the occupation study uses a single threshold");
  }
  for (RuleVariant v : variants) {
    spec.variant = v;
    if (!spec.initial) {
      try {
        (void)stationary_distribution(spec.filter_model());
      } catch (const InvalidArgument& e) {
        throw ConfigError("model.initial_belief", e.what());
      }
    }
  }
  spec.validate();
  const char* name = study == Study::montecarlo ? "montecarlo" : study == Study::soc ? "soc" : "occstudy";
  return [&cfg, spec, variants, study, name](const CommandOptions& opt) mutable {
    spec.threads = opt.threads;
    SweepResult all;
    for (RuleVariant v : variants) {
      spec.variant = v;
      SweepResult part = study == Study::soc        ? soc_sweep(spec)
                         : study == Study::occstudy ? occupation_study(spec)
                                                    : run_trials(spec);
      all.rows.insert(all.rows.end(), part.rows.begin(), part.rows.end());
    }
    {
      auto out = open_output(opt, std::string(study == Study::occstudy ? "occupation_study" : "sweep") + ".csv");
      write_sweep_csv(out, all);
    }
    Json j = summary_head(name, cfg, spec.seed_base);
    Json rows = Json::array();
    for (const auto& r : all.rows) {
      Json row;
      row["variant"] = to_string(r.variant);
      row["threshold"] = r.threshold;
      row["sigma2"] = r.sigma2;
      row["mean_delay"] = number_or_null(r.mean_delay);
      row["stderr_delay"] = number_or_null(r.stderr_delay);
      row["mean_false_alarms"] = r.mean_false_alarms;
      row["pfa"] = number_or_null(r.pfa);
      row["pfa_bound"] = 1.0 - r.threshold;
      if (study == Study::occstudy) {
        row["mean_occupation_estimate"] = number_or_null(r.mean_occupation_estimate);
        row["mean_gap"] = number_or_null(r.mean_gap);
        row["underestimates"] = r.mean_occupation_estimate <= r.mean_delay + 3.0 * r.stderr_gap;
      }
      rows.push_back(row);
    }
    j["results"]["rows"] = rows;
    write_summary(opt, j);
  };
}

Runner cmd_dp(Config& cfg) {
  const ModelBlock m = read_model(cfg, true);
  const double c = cfg.real("dp.c", 0.01, 0.0, kHuge);
  const std::size_t resolution = cfg.integer("dp.grid_resolution", 2001, 3, 10000000);
  SolverSettings s;
  s.quadrature.nodes_per_component = cfg.integer("dp.quadrature_nodes", 64, 2, 512);
  s.tol = cfg.real("dp.tol", 1e-8, std::numeric_limits<double>::min(), kHuge);
  s.max_iter = cfg.integer("dp.max_iter", 100000, 1, kMaxCount);
  const double stop_tol = cfg.real("dp.stop_tolerance", 1e-6, 0.0, kHuge);
  m.model.validate();
  return [&cfg, m, c, resolution, s, stop_tol](const CommandOptions& opt) mutable {
    s.threads = opt.threads;
    const BeliefGrid grid = BeliefGrid::uniform(resolution);
    const GaussianPairObservation obs(m.mu1, m.mu2, m.sigma2);
    const ValueFunction vf = solve(grid, m.model, obs, c, s);
    const StoppingInterval stop = extract_stopping_set(vf, grid, stop_tol);
    {
      auto out = open_output(opt, "value_function.csv");
      write_value_function_csv(out, vf, grid, stop_tol);
    }
    Json j = summary_head("dp", cfg, 0);
    j["results"] = {{"threshold", stop.threshold},
                    {"threshold_index", stop.first_index},
                    {"iterations", vf.iterations},
                    {"sup_norm_residual", vf.sup_norm_residual},
                    {"value_at_one", vf.values.back()},
                    {"max_second_difference", max_second_difference(vf, grid)}};
    write_summary(opt, j);
  };
}

std::vector<aircraft::PatchEntry> parse_patch(const std::string& field, const std::string& text) {
  std::vector<aircraft::PatchEntry> patch;
  std::vector<std::string> entries;
  boost::split(entries, text, boost::is_any_of(";"));
  for (auto e : entries) {
    boost::trim(e);
    std::vector<std::string> parts;
    boost::split(parts, e, boost::is_any_of(","));
    if (parts.size() != 3) throw ConfigError(field, "entries must look like drow,dcol,probability; got '" + e + "'");
    Config one = Config::parse("[x]\nr = " + parts[0] + "\nc = " + parts[1] + "\np = " + parts[2] + "\n");
    try {
      const double r = one.real("x.r", 0, -1e6, 1e6);
      const double c = one.real("x.c", 0, -1e6, 1e6);
      if (r != std::floor(r) || c != std::floor(c)) throw ConfigError(field, "offsets must be integers");
      patch.push_back({static_cast<int>(r), static_cast<int>(c), one.real("x.p", 0, 0.0, 1.0)});
    } catch (const ConfigError& err) {
      throw ConfigError(field, err.what());
    }
  }
  return patch;
}

Runner cmd_aircraft(Config& cfg) {
  aircraft::GridModel g;
  g.width = cfg.integer("grid.width", 16, 1, 4096);
  g.height = cfg.integer("grid.height", 16, 1, 4096);
  g.patch = parse_patch("grid.patch", cfg.text("grid.patch", "0,0,0.5;-1,0,0.5"));
  g.nva_to_image_total = cfg.real("grid.nva_to_image_total", 0.1, 0.0, 1.0);
  try {
    g.validate();
  } catch (const InvalidPatch& e) {
    throw ConfigError("grid.patch", e.what());
  }
  const double h_c = cfg.real("detect.h_c", 0.99, 0.0, 1.0);
  const std::string input = cfg.text("scenario.input", "");
  aircraft::IntensityModel intensity;
  aircraft::EmergenceSchedule schedule;
  std::size_t frames = 0;
  std::uint64_t seed = 0;
  if (input.empty()) {
    intensity.background_mean = cfg.real("scenario.background_mean", 1.0, 0.0, kHuge);
    intensity.target_offset = cfg.real("scenario.target_offset", 4.0, 0.0, kHuge);
    frames = cfg.integer("scenario.frames", 100, 1, kMaxCount);
    const std::uint64_t emerge = cfg.integer("scenario.emergence_frame", 50, 0, frames);
    if (emerge > 0) schedule.emergence_frame = emerge;
    schedule.start_row = cfg.integer("scenario.start_row", g.height - 1, 0, g.height - 1);
    schedule.start_col = cfg.integer("scenario.start_col", g.width / 2, 0, g.width - 1);
    schedule.motion = cfg.choice("scenario.motion", "chain", {"chain", "fixed"}) == "chain" ? aircraft::Motion::chain
                                                                                          : aircraft::Motion::fixed;
    seed = cfg.integer("scenario.seed", 1, 0, std::numeric_limits<std::uint64_t>::max());
  }
  return [&cfg, g, h_c, input, intensity, schedule, frames, seed](const CommandOptions& opt) {
    std::vector<aircraft::ImageObservation> images;
    std::vector<std::size_t> track;
    if (input.empty()) {
      auto seq = aircraft::generate_synthetic_sequence(g, intensity, schedule, frames, seed);
      images = std::move(seq.images);
      track = std::move(seq.track);
      auto raster = open_output(opt, "frames.raster", std::ios::out | std::ios::binary);
      aircraft::write_raster(raster, images);
      auto out = open_output(opt, "track.csv");
      aircraft::write_track_csv(out, g, track);
    } else {
      std::ifstream in(input, std::ios::binary);
      if (!in) throw Error("cannot read raster " + input);
      images = aircraft::read_raster(in);
    }
    const auto result = aircraft::detect_emergence(images, g, std::nullopt, h_c);
    {
      auto out = open_output(opt, "zeta.csv");
      aircraft::write_zeta_csv(out, result);
    }
    Json j = summary_head("aircraft", cfg, seed);
    j["results"]["frames"] = images.size();
    j["results"]["alarm_frame"] = result.alarm_frame ? Json(*result.alarm_frame) : Json(nullptr);
    if (!track.empty()) {
      std::optional<std::size_t> visible;
      for (std::size_t k = 0; k < track.size(); ++k) {
        if (track[k] != g.nva()) {
          visible = k;
          break;
        }
      }
      j["results"]["emergence_frame"] = visible ? Json(*visible) : Json(nullptr);
      const bool false_alarm = result.alarm_frame && (!visible || *result.alarm_frame < *visible);
      j["results"]["false_alarm"] = false_alarm;
      j["results"]["detection_delay"] =
          result.alarm_frame && visible && !false_alarm ? Json(*result.alarm_frame - *visible) : Json(nullptr);
    }
    write_summary(opt, j);
  };
}

const std::map<std::string, std::function<Runner(Config&)>>& registry() {
  static const std::map<std::string, std::function<Runner(Config&)>> r{
      {"simulate", cmd_simulate},
      {"detect", cmd_detect},
      {"montecarlo", [](Config& c) { return cmd_experiment(c, Study::montecarlo); }},
      {"soc", [](Config& c) { return cmd_experiment(c, Study::soc); }},
      {"occstudy", [](Config& c) { return cmd_experiment(c, Study::occstudy); }},
      {"dp", cmd_dp},
      {"aircraft", cmd_aircraft},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "detect", "montecarlo", "soc",
                                              "occstudy", "dp",     "aircraft"};
  return names;
}

int run_command(const std::string& name, Config& config, const CommandOptions& options, std::ostream& err) {
  const auto it = registry().find(name);
  if (it == registry().end()) {
    err << "unknown command '" << name << "'\n";
    return exit_validation;
  }
  Runner runner;
  try {
    runner = it->second(config);
    config.finish();
    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    const auto probe = options.out_dir / ".write_probe";
    {
      std::ofstream test(probe);
      if (!test) throw ConfigError("--out", "output directory " + options.out_dir.string() + " is not writable");
    }
    std::filesystem::remove(probe, ec);
  } catch (const std::exception& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return exit_validation;
  }
  try {
    runner(options);
  } catch (const std::exception& e) {
    err << name << " failed: " << e.what() << '\n';
    return exit_runtime;
  }
  return exit_ok;
}

}  // namespace isd
