#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "neurodiff/callbacks.hpp"
#include "neurodiff/error.hpp"
#include "neurodiff/operators.hpp"
#include "neurodiff/solver.hpp"

namespace neurodiff::cli {

namespace {

using json = nlohmann::json;

class UsageError : public Error {
 public:
  using Error::Error;
};

constexpr const char* kMetricsFile = "metrics.csv";
constexpr const char* kSolutionFile = "solution.csv";
constexpr const char* kCheckpointFile = "checkpoint.ndstate";
constexpr const char* kManifestFile = "run-manifest.json";
constexpr const char* kThetaFile = "theta.json";

bool is_bundle(const std::string& preset) {
  for (const auto& n : bundle_preset_names())
    if (n == preset) return true;
  return false;
}

bool is_solve(const std::string& preset) {
  for (const auto& n : solve_preset_names())
    if (n == preset) return true;
  return false;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s;
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("NEURODIFF_SEED");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (*end != '\0') throw UsageError("NEURODIFF_SEED must be a non-negative integer");
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double parse_number(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0') throw UsageError(what + ": '" + t + "' is not a number");
  return v;
}

int run_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  set_precision(cfg.precision == "f32" ? Precision::f32 : Precision::f64);
  const Preset preset = make_preset(cfg.preset, to_options(cfg));
  std::filesystem::create_directories(cfg.out);

  SolverConfig config = preset.config;
  config.log = &err;
  std::vector<Callback> callbacks = preset.callbacks;
  if (cfg.log_every > 0) {
    callbacks.push_back({Trigger::every_n_epochs(cfg.log_every),
                         {actions::LogMessage{"epoch {epoch} train {train_loss} valid {valid_loss} ({loss_kind})"}}});
  }
  const SolverState state = preset.layout.empty() ? fit(preset.problem, config, callbacks)
                                                  : fit_bundle(preset.problem, preset.layout, config, callbacks);

  std::ostringstream metrics;
  write_metrics_csv(metrics, state.metrics);
  write_file(cfg.out / kMetricsFile, metrics.str());

  const SolutionTable table = solution_table(preset, get_solution(state, Strategy::best));
  std::ostringstream solution;
  write_solution_csv(solution, table);
  write_file(cfg.out / kSolutionFile, solution.str());

  save_state(state, cfg.out / kCheckpointFile);
  write_file(cfg.out / kManifestFile, manifest_json(cfg));

  out << cfg.preset << ": " << state.epoch << " epochs";
  if (!state.valid_history.empty()) out << ", final valid loss " << state.valid_history.back();
  if (preset.reference) {
    double max_err = 0.0;
    const std::size_t col = table.rows.cols() - 1;
    for (std::size_t r = 0; r < table.rows.rows(); ++r) max_err = std::max(max_err, table.rows(r, col));
    out << ", max abs error on grid " << max_err;
  }
  out << "\nartifacts written to " << cfg.out.string() << '\n';
  return kOk;
}

struct TrainFlags {
  std::string preset;
  std::string manifest;
  std::size_t dim = 3;
  bool allow_large = false;
  bool constant_lr = false;
  std::optional<std::size_t> epochs, batch_size, batches_per_epoch, log_every;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr;
  std::string hidden, activation, loss;
  std::string precision = "f64";
  std::string out;
};

void add_train_flags(CLI::App* sub, TrainFlags& f, bool with_dim) {
  if (with_dim) {
    sub->add_option("--dim", f.dim, "heat: number of spatial dimensions")->check(CLI::Range(1, 10));
    sub->add_flag("--allow-large", f.allow_large, "heat: accept --dim above 3");
  }
  sub->add_option("--epochs", f.epochs, "training epochs");
  sub->add_option("--batch-size", f.batch_size, "collocation points per batch")->check(CLI::PositiveNumber);
  sub->add_option("--batches-per-epoch", f.batches_per_epoch, "optimizer steps per epoch")->check(CLI::PositiveNumber);
  sub->add_option("--seed", f.seed, "random seed (default: $NEURODIFF_SEED or 0)");
  sub->add_option("--lr", f.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  sub->add_flag("--constant-lr", f.constant_lr, "keep the learning rate fixed instead of step decay");
  sub->add_option("--hidden", f.hidden, "hidden layer widths, e.g. 32,32");
  sub->add_option("--activation", f.activation, "tanh, sin or softplus");
  sub->add_option("--loss", f.loss, "mse, l2, l1, linf, h1 or semi-h1");
  sub->add_option("--precision", f.precision, "f64 or f32")->check(CLI::IsMember({"f32", "f64"}));
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--log-every", f.log_every, "log progress every N epochs (0: quiet)");
}

RunConfig config_from_flags(const std::string& command, const TrainFlags& f) {
  if (!f.manifest.empty()) {
    RunConfig cfg = parse_manifest(read_file(f.manifest));
    if (cfg.command != command) throw UsageError("manifest records a '" + cfg.command + "' run");
    if (!f.out.empty()) cfg.out = f.out;
    return cfg;
  }
  if (f.preset.empty()) throw UsageError(command + ": a preset or --manifest is required");
  if (command == "solve" && !is_solve(f.preset)) {
    if (is_bundle(f.preset)) throw UsageError("'" + f.preset + "' is a bundle preset; use the bundle command");
    throw UsageError("unknown preset '" + f.preset + "' (expected one of: " + join(solve_preset_names()) + ")");
  }
  if (command == "bundle" && !is_bundle(f.preset))
    throw UsageError("unknown bundle preset '" + f.preset + "' (expected one of: " + join(bundle_preset_names()) + ")");
  PresetOptions o;
  o.dim = f.dim;
  o.allow_large = f.allow_large;
  o.epochs = f.epochs;
  o.batch_size = f.batch_size;
  o.batches_per_epoch = f.batches_per_epoch;
  o.seed = f.seed ? f.seed : env_seed();
  o.lr = f.lr;
  o.constant_lr = f.constant_lr;
  try {
    if (!f.hidden.empty()) o.hidden = parse_sizes(f.hidden);
    if (!f.activation.empty()) o.activation = parse_activation(f.activation);
    if (!f.loss.empty()) o.loss = parse_loss_kind(f.loss);
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const std::filesystem::path out = f.out.empty() ? std::filesystem::path("runs") / f.preset : std::filesystem::path(f.out);
  RunConfig cfg;
  try {
    cfg = resolve(command, f.preset, o, f.precision, out);
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  cfg.log_every = f.log_every.value_or(0);
  return cfg;
}

int run_invert(const std::string& preset_name, const std::string& data, const std::string& checkpoint,
               const std::string& init, std::size_t steps, double lr, const std::string& out_dir, std::ostream& out) {
  if (!is_bundle(preset_name))
    throw UsageError("invert needs a bundle preset (one of: " + join(bundle_preset_names()) + ")");
  const Preset preset = make_preset(preset_name);
  const std::size_t n_coords = preset.problem.coord_names.size();
  const std::size_t n_unknowns = preset.problem.n_unknowns;

  std::vector<MLP> nets = load_state_networks(checkpoint);
  if (nets.size() != n_unknowns) throw UsageError("checkpoint holds " + std::to_string(nets.size()) + " networks");
  for (const MLP& m : nets) {
    if (m.spec().input_dim != n_coords + preset.layout.size())
      throw UsageError("checkpoint network does not take " + preset_name + " inputs");
  }
  const Solution solution(std::move(nets), preset.config.conditions, n_coords, preset.layout);
  const Observations obs = read_observations(data, n_coords, n_unknowns);

  const auto ranges = preset.layout.all();
  std::vector<double> theta;
  for (const ParamRange& r : ranges) theta.push_back(0.5 * (r.lo + r.hi));
  if (!init.empty()) {
    for (const std::string& item : split(init, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw UsageError("--init expects name=value pairs");
      const std::string name = trim(item.substr(0, eq));
      bool found = false;
      for (std::size_t j = 0; j < ranges.size(); ++j) {
        if (ranges[j].name == name) {
          theta[j] = parse_number(item.substr(eq + 1), "--init " + name);
          found = true;
        }
      }
      if (!found) throw UsageError("--init: unknown parameter '" + name + "'");
    }
  }
  for (std::size_t j = 0; j < ranges.size(); ++j) {
    if (!(theta[j] >= ranges[j].lo && theta[j] <= ranges[j].hi))
      throw UsageError("--init " + ranges[j].name + " is outside [" + std::to_string(ranges[j].lo) + ", " +
                       std::to_string(ranges[j].hi) + "]");
  }

  const InverseResult result = fit_inverse(solution, InverseData{obs.coords, obs.values}, theta, steps, lr);
  json j;
  json th = json::object();
  for (std::size_t k = 0; k < ranges.size(); ++k) th[ranges[k].name] = result.theta[k];
  j["preset"] = preset_name;
  j["theta"] = th;
  j["loss"] = result.loss;
  j["steps"] = result.steps;
  j["lr"] = lr;
  j["observations"] = obs.coords.rows();
  const std::filesystem::path dir = out_dir.empty() ? std::filesystem::path(".") : std::filesystem::path(out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / kThetaFile, j.dump(2) + "\n");
  out << th.dump() << " mismatch " << result.loss << '\n';
  return kOk;
}

}  // namespace

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  for (const std::string& part : split(text, ',')) {
    const std::string t = trim(part);
    if (t.empty()) throw UsageError("empty entry in list '" + text + "'");
    char* end = nullptr;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (*end != '\0' || v <= 0) throw UsageError("'" + t + "' is not a positive integer");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

RunConfig resolve(const std::string& command, const std::string& preset_name, const PresetOptions& options,
                  const std::string& precision, const std::filesystem::path& out) {
  const Preset p = make_preset(preset_name, options);
  RunConfig cfg;
  cfg.command = command;
  cfg.preset = preset_name;
  cfg.dim = options.dim;
  cfg.allow_large = options.allow_large;
  cfg.epochs = p.config.epochs;
  cfg.batch_size = p.batch_size;
  cfg.batches_per_epoch = p.config.batches_per_epoch;
  cfg.seed = p.config.seed;
  cfg.lr = std::get<AdamConfig>(p.config.optimizer).lr;
  cfg.hidden = p.config.networks.front().hidden_dims;
  cfg.activation = p.config.networks.front().activation;
  cfg.loss = p.config.loss.kind;
  cfg.precision = precision;
  cfg.constant_lr = options.constant_lr;
  cfg.out = out;
  return cfg;
}

PresetOptions to_options(const RunConfig& c) {
  PresetOptions o;
  o.dim = c.dim;
  o.allow_large = c.allow_large;
  o.epochs = c.epochs;
  o.batch_size = c.batch_size;
  o.batches_per_epoch = c.batches_per_epoch;
  o.seed = c.seed;
  o.lr = c.lr;
  o.hidden = c.hidden;
  o.activation = c.activation;
  o.loss = c.loss;
  o.constant_lr = c.constant_lr;
  return o;
}

std::string manifest_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["preset"] = c.preset;
  j["dim"] = c.dim;
  j["allow_large"] = c.allow_large;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["batches_per_epoch"] = c.batches_per_epoch;
  j["seed"] = c.seed;
  j["lr"] = c.lr;
  j["hidden"] = c.hidden;
  j["activation"] = std::string(to_string(c.activation));
  j["loss"] = std::string(to_string(c.loss));
  j["precision"] = c.precision;
  j["optimizer"] = "adam";
  j["lr_schedule"] = c.constant_lr ? "constant" : "step";
  j["out"] = c.out.string();
  j["log_every"] = c.log_every;
  return j.dump(2) + "\n";
}

RunConfig parse_manifest(const std::string& text) {
  try {
    const json j = json::parse(text);
    RunConfig c;
    c.command = j.at("command").get<std::string>();
    c.preset = j.at("preset").get<std::string>();
    c.dim = j.at("dim").get<std::size_t>();
    c.allow_large = j.at("allow_large").get<bool>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.batches_per_epoch = j.value("batches_per_epoch", std::size_t{1});
    c.seed = j.at("seed").get<std::uint64_t>();
    c.lr = j.at("lr").get<double>();
    c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    c.activation = parse_activation(j.at("activation").get<std::string>());
    c.loss = parse_loss_kind(j.at("loss").get<std::string>());
    c.precision = j.at("precision").get<std::string>();
    c.out = j.at("out").get<std::string>();
    c.log_every = j.value("log_every", std::size_t{0});
    const std::string schedule = j.value("lr_schedule", std::string("step"));
    if (schedule != "step" && schedule != "constant") throw UsageError("manifest: bad lr_schedule '" + schedule + "'");
    c.constant_lr = schedule == "constant";
    if (c.precision != "f32" && c.precision != "f64") throw UsageError("manifest: bad precision");
    if (c.command == "solve" ? !is_solve(c.preset) : !is_bundle(c.preset))
      throw UsageError("manifest: unknown preset '" + c.preset + "'");
    return c;
  } catch (const json::exception& e) {
    throw UsageError(std::string("manifest: ") + e.what());
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(std::string("manifest: ") + e.what());
  }
}

Observations read_observations(const std::filesystem::path& path, std::size_t n_coords, std::size_t n_unknowns) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open data file '" + path.string() + "'");
  const std::size_t cols = n_coords + n_unknowns;
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0, rows = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != cols)
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) +
                       " columns, found " + std::to_string(fields.size()));
    if (!header_seen) {
      header_seen = true;
      char* end = nullptr;
      const std::string f0 = trim(fields[0]);
      std::strtod(f0.c_str(), &end);
      if (f0.empty() || *end != '\0') continue;  // header row
    }
    for (const std::string& f : fields)
      values.push_back(parse_number(f, path.string() + ":" + std::to_string(lineno)));
    ++rows;
  }
  if (rows == 0) throw UsageError("data file '" + path.string() + "' has no observations");
  Observations obs{Tensor({rows, n_coords}), Tensor({rows, n_unknowns})};
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < n_coords; ++c) obs.coords(r, c) = values[r * cols + c];
    for (std::size_t k = 0; k < n_unknowns; ++k) obs.values(r, k) = values[r * cols + n_coords + k];
  }
  return obs;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural-network solver for differential equations"};
  app.name("neurodiff");
  app.require_subcommand(1);

  TrainFlags solve_flags;
  CLI::App* solve = app.add_subcommand("solve", "train a built-in problem and write artifacts");
  solve->add_option("preset", solve_flags.preset, "decay, sho, heat, gravity or poisson-gaussian");
  solve->add_option("--manifest", solve_flags.manifest, "rerun from a run-manifest.json");
  add_train_flags(solve, solve_flags, true);

  TrainFlags bundle_flags;
  CLI::App* bundle = app.add_subcommand("bundle", "train a bundle over initial-condition/equation parameters");
  bundle->add_option("preset", bundle_flags.preset, "decay-bundle or sho-bundle");
  bundle->add_option("--manifest", bundle_flags.manifest, "rerun from a run-manifest.json");
  add_train_flags(bundle, bundle_flags, false);

  std::string inv_preset, inv_data, inv_ckpt, inv_init, inv_out;
  std::size_t inv_steps = 2000;
  double inv_lr = 0.5;
  CLI::App* invert = app.add_subcommand("invert", "recover bundle parameters from observations");
  invert->add_option("preset", inv_preset, "bundle preset the checkpoint was trained on")->required();
  invert->add_option("--data", inv_data, "CSV of observations (coordinates, then values)")->required();
  invert->add_option("--checkpoint", inv_ckpt, "checkpoint written by the bundle command")->required();
  invert->add_option("--init", inv_init, "initial parameters, e.g. lambda=1,u0=1 (default: range midpoints)");
  invert->add_option("--steps", inv_steps, "gradient-descent steps");
  invert->add_option("--lr", inv_lr, "gradient-descent step size")->check(CLI::NonNegativeNumber);
  invert->add_option("--out", inv_out, "directory for theta.json (default: current directory)");

  std::string bench_sizes = "4096", bench_hidden = "32", bench_out;
  int bench_repeats = 5;
  std::uint64_t bench_seed = 0;
  CLI::App* bench = app.add_subcommand("bench-operators", "time naive against fused differential operators");
  bench->add_option("--sizes", bench_sizes, "comma-separated batch sizes");
  bench->add_option("--repeats", bench_repeats, "timed repeats per mode")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_seed, "network seed");
  bench->add_option("--hidden", bench_hidden, "hidden widths of the field networks");
  bench->add_option("--out", bench_out, "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kUsage;
  }

  try {
    if (solve->parsed()) return run_train(config_from_flags("solve", solve_flags), out, err);
    if (bundle->parsed()) return run_train(config_from_flags("bundle", bundle_flags), out, err);
    if (invert->parsed()) return run_invert(inv_preset, inv_data, inv_ckpt, inv_init, inv_steps, inv_lr, inv_out, out);
    if (bench->parsed()) {
      BenchOptions o;
      o.sizes = parse_sizes(bench_sizes);
      o.repeats = bench_repeats;
      o.seed = bench_seed;
      o.hidden = parse_sizes(bench_hidden);
      const auto rows = bench_operators(o);
      if (bench_out.empty()) {
        write_bench_csv(out, rows);
      } else {
        std::ostringstream csv;
        write_bench_csv(csv, rows);
        write_file(bench_out, csv.str());
      }
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const TrainingAborted& e) {
    err << "error: training aborted: " << e.what() << '\n';
    return kTrainingFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kTrainingFailed;
  }
  return kUsage;
}

}  // namespace neurodiff::cli
