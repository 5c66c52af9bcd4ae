#include "simrec/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace simrec {

namespace fs = std::filesystem;

std::string_view to_string(Preset preset) {
  switch (preset) {
    case Preset::chaney_single: return "chaney-single";
    case Preset::chaney_repeated: return "chaney-repeated";
    case Preset::goel: return "goel";
    case Preset::creators: return "creators";
    case Preset::custom: return "custom";
  }
  return "unknown";
}

Preset parse_preset(std::string_view name) {
  for (Preset p : {Preset::chaney_single, Preset::chaney_repeated, Preset::goel, Preset::creators,
                   Preset::custom})
    if (name == to_string(p)) return p;
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

namespace {

std::vector<ModelKind> ideal_first_models() {
  std::vector<ModelKind> models{ModelKind::ideal};
  for (ModelKind k : all_model_kinds())
    if (k != ModelKind::ideal) models.push_back(k);
  return models;
}

}  // namespace

ExperimentConfig preset_config(Preset preset) {
  ExperimentConfig c;
  c.preset = preset;
  SimulationConfig& s = c.simulation;
  switch (preset) {
    case Preset::chaney_single:
    case Preset::chaney_repeated:
      c.trials = 100;
      c.models = ideal_first_models();
      s.num_items = 0;
      s.new_items_per_step = 10;
      s.timesteps = 100;
      s.startup_steps = preset == Preset::chaney_single ? 50 : 10;
      s.training = preset == Preset::chaney_single ? TrainingMode::single : TrainingMode::repeated;
      s.metrics = {"jaccard", "mse"};
      break;
    case Preset::creators:
      c.trials = 200;
      c.models = ideal_first_models();
      s.num_items = 0;
      s.timesteps = 500;
      s.startup_steps = 10;
      s.training = TrainingMode::repeated;
      s.creators.enabled = true;
      s.metrics = {"ace", "apdmci"};
      break;
    case Preset::goel:
      c.trials = 1;
      break;
    case Preset::custom:
      break;
  }
  return c;
}

// ---------------------------------------------------------------------------
// JSON mapping

namespace {

std::string creator_mode_name(CreatorMode m) {
  return m == CreatorMode::dirichlet_attrs ? "dirichlet" : "bernoulli";
}

CreatorMode parse_creator_mode(const std::string& name) {
  if (name == "dirichlet") return CreatorMode::dirichlet_attrs;
  if (name == "bernoulli") return CreatorMode::bernoulli_attrs;
  throw ConfigError("unknown creator mode '" + name + "'");
}

Json simulation_to_json(const SimulationConfig& s) {
  const AlsOptions& als = s.model_params.als;
  return Json{
      {"num_users", s.num_users},
      {"num_items", s.num_items},
      {"num_attrs", s.num_attrs},
      {"timesteps", s.timesteps},
      {"list_size", s.list_size},
      {"startup_steps", s.startup_steps},
      {"training", std::string(to_string(s.training))},
      {"new_items_per_step", s.new_items_per_step},
      {"repeat_interaction", s.repeat_interaction},
      {"drift_weight", s.drift_weight},
      {"attention_decay", s.attention_decay},
      {"attention_in_startup", s.attention_in_startup},
      {"persistent_interleave", s.persistent_interleave},
      {"user_concentration", s.user_concentration},
      {"item_concentration", s.item_concentration},
      {"utility",
       {{"true_concentration", s.utility.true_concentration},
        {"known_fraction_mean", s.utility.known_fraction_mean},
        {"known_fraction_concentration", s.utility.known_fraction_concentration}}},
      {"als",
       {{"factors", als.factors},
        {"regularization", als.regularization},
        {"confidence_alpha", als.confidence_alpha},
        {"iterations", als.iterations},
        {"init_scale", als.init_scale},
        {"warm_iterations", s.model_params.als_warm_iterations},
        {"cold_restart", s.model_params.als_cold_restart}}},
      {"creators",
       {{"enabled", s.creators.enabled},
        {"num", s.creators.num},
        {"creation_prob", s.creators.creation_prob},
        {"item_concentration", s.creators.item_concentration},
        {"learn_rate", s.creators.learn_rate},
        {"mode", creator_mode_name(s.creators.mode)},
        {"profile_concentration", s.creators.profile_concentration},
        {"weight_by_count", s.creators.weight_by_count}}},
      {"metrics", s.metrics}};
}

// Typed read that names the key path on failure.
template <typename T>
T read(const Json& j, const std::string& path) {
  const Json* node = &j;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    node = &node->at(key);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  try {
    return node->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + ": unexpected value " + node->dump());
  }
}

void merge_checked(Json& base, const Json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ConfigError((prefix.empty() ? "config" : prefix) + ": expected an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown key '" + path + "'");
    if (base[key].is_object()) {
      merge_checked(base[key], value, path);
    } else {
      base[key] = value;
    }
  }
}

template <typename Fn>
void with_prefix(const std::string& prefix, Fn fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(prefix + e.what());
  }
}

}  // namespace

Json config_to_json(const ExperimentConfig& c) {
  Json models = Json::array();
  for (ModelKind k : c.models) models.push_back(std::string(to_string(k)));
  return Json{{"preset", std::string(to_string(c.preset))},
              {"trials", c.trials},
              {"seed", c.seed},
              {"workers", c.workers},
              {"out", c.out},
              {"models", std::move(models)},
              {"simulation", simulation_to_json(c.simulation)},
              {"diffusion",
               {{"nodes", c.diffusion.nodes},
                {"alphas", c.diffusion.alphas},
                {"rs", c.diffusion.rs},
                {"graphs_per_alpha", c.diffusion.graphs_per_alpha},
                {"cascades", c.diffusion.cascades},
                {"threshold", c.diffusion.threshold},
                {"directed", c.diffusion.directed}}}};
}

ExperimentConfig parse_config(const Json& input) {
  if (!input.is_object()) throw ConfigError("config: expected a JSON object");
  Preset preset = Preset::custom;
  if (input.contains("preset")) preset = parse_preset(read<std::string>(input, "preset"));
  Json j = config_to_json(preset_config(preset));
  merge_checked(j, input, "");

  ExperimentConfig c;
  c.preset = preset;
  c.trials = read<std::int64_t>(j, "trials");
  c.seed = read<std::uint64_t>(j, "seed");
  c.workers = read<int>(j, "workers");
  c.out = read<std::string>(j, "out");
  c.models.clear();
  for (const auto& name : read<std::vector<std::string>>(j, "models"))
    with_prefix("models: ", [&] { c.models.push_back(parse_model_kind(name)); });

  SimulationConfig& s = c.simulation;
  s.num_users = read<Index>(j, "simulation.num_users");
  s.num_items = read<Index>(j, "simulation.num_items");
  s.num_attrs = read<Index>(j, "simulation.num_attrs");
  s.timesteps = read<Index>(j, "simulation.timesteps");
  s.list_size = read<Index>(j, "simulation.list_size");
  s.startup_steps = read<Index>(j, "simulation.startup_steps");
  with_prefix("simulation.training: ",
              [&] { s.training = parse_training_mode(read<std::string>(j, "simulation.training")); });
  s.new_items_per_step = read<Index>(j, "simulation.new_items_per_step");
  s.repeat_interaction = read<bool>(j, "simulation.repeat_interaction");
  s.drift_weight = read<double>(j, "simulation.drift_weight");
  s.attention_decay = read<double>(j, "simulation.attention_decay");
  s.attention_in_startup = read<bool>(j, "simulation.attention_in_startup");
  s.persistent_interleave = read<bool>(j, "simulation.persistent_interleave");
  s.user_concentration = read<double>(j, "simulation.user_concentration");
  s.item_concentration = read<double>(j, "simulation.item_concentration");
  s.utility.true_concentration = read<double>(j, "simulation.utility.true_concentration");
  s.utility.known_fraction_mean = read<double>(j, "simulation.utility.known_fraction_mean");
  s.utility.known_fraction_concentration = read<double>(j, "simulation.utility.known_fraction_concentration");
  AlsOptions& als = s.model_params.als;
  als.factors = read<Index>(j, "simulation.als.factors");
  als.regularization = read<double>(j, "simulation.als.regularization");
  als.confidence_alpha = read<double>(j, "simulation.als.confidence_alpha");
  als.iterations = read<int>(j, "simulation.als.iterations");
  als.init_scale = read<double>(j, "simulation.als.init_scale");
  s.model_params.als_warm_iterations = read<int>(j, "simulation.als.warm_iterations");
  s.model_params.als_cold_restart = read<bool>(j, "simulation.als.cold_restart");
  s.creators.enabled = read<bool>(j, "simulation.creators.enabled");
  s.creators.num = read<Index>(j, "simulation.creators.num");
  s.creators.creation_prob = read<double>(j, "simulation.creators.creation_prob");
  s.creators.item_concentration = read<double>(j, "simulation.creators.item_concentration");
  s.creators.learn_rate = read<double>(j, "simulation.creators.learn_rate");
  with_prefix("simulation.creators.mode: ", [&] {
    s.creators.mode = parse_creator_mode(read<std::string>(j, "simulation.creators.mode"));
  });
  s.creators.profile_concentration = read<double>(j, "simulation.creators.profile_concentration");
  s.creators.weight_by_count = read<bool>(j, "simulation.creators.weight_by_count");
  s.metrics = read<std::vector<std::string>>(j, "simulation.metrics");
  if (!c.models.empty()) s.model = c.models.front();

  DiffusionConfig& d = c.diffusion;
  d.nodes = read<NodeId>(j, "diffusion.nodes");
  d.alphas = read<std::vector<double>>(j, "diffusion.alphas");
  d.rs = read<std::vector<double>>(j, "diffusion.rs");
  d.graphs_per_alpha = read<int>(j, "diffusion.graphs_per_alpha");
  d.cascades = read<std::int64_t>(j, "diffusion.cascades");
  d.threshold = read<std::int64_t>(j, "diffusion.threshold");
  d.directed = read<bool>(j, "diffusion.directed");

  if (c.trials < 1) throw ConfigError("trials: must be >= 1");
  if (c.workers < 0) throw ConfigError("workers: must be >= 0");
  if (preset == Preset::goel) {
    if (d.nodes < 100) throw ConfigError("diffusion.nodes: must be >= 100");
    if (d.alphas.empty()) throw ConfigError("diffusion.alphas: must not be empty");
    for (double a : d.alphas)
      if (!(a > 1.0)) throw ConfigError("diffusion.alphas: every alpha must be > 1");
    if (d.rs.empty()) throw ConfigError("diffusion.rs: must not be empty");
    for (double r : d.rs)
      if (!(r > 0.0)) throw ConfigError("diffusion.rs: every r must be > 0");
    if (d.graphs_per_alpha < 1) throw ConfigError("diffusion.graphs_per_alpha: must be >= 1");
    if (d.cascades < 1) throw ConfigError("diffusion.cascades: must be >= 1");
    if (d.threshold < 2) throw ConfigError("diffusion.threshold: must be >= 2");
  } else {
    if (c.models.empty()) throw ConfigError("models: must not be empty");
    auto sorted = c.models;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ConfigError("models: duplicate model kind");
    with_prefix("simulation.", [&] { s.validate(); });
  }
  return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": malformed JSON: " + e.what());
  }
  return parse_config(j);
}

void apply_override(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "': expected key=value");
  std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }
  const std::string head = path.substr(0, path.find('.'));
  static const Json defaults = config_to_json(ExperimentConfig{});
  if (!defaults.contains(head) && defaults.at("simulation").contains(head)) path = "simulation." + path;

  Json* node = &config;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override '" + assignment + "': empty key");
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    Json& child = (*node)[key];
    if (child.is_null()) child = Json::object();
    if (!child.is_object()) throw ConfigError("override '" + assignment + "': '" + key + "' is not an object");
    node = &child;
    start = dot + 1;
  }
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SIMREC_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    warn("ignoring SIMREC_WORKERS='" + std::string(env) + "'");
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// ---------------------------------------------------------------------------
// Trials

TrialResult run_simulation_trial(const ExperimentConfig& config, std::int64_t trial) {
  const RngStream rng(config.seed, static_cast<std::uint64_t>(trial));
  SimulationConfig base = config.simulation;
  base.seed = config.seed;
  const Dataset dataset = generate_dataset(base, rng);

  std::vector<ModelKind> order;
  const bool has_ideal = std::find(config.models.begin(), config.models.end(), ModelKind::ideal) != config.models.end();
  if (has_ideal) order.push_back(ModelKind::ideal);
  for (ModelKind k : config.models)
    if (k != ModelKind::ideal) order.push_back(k);
  const auto wants = [&](const std::string& name) {
    return std::find(base.metrics.begin(), base.metrics.end(), name) != base.metrics.end();
  };
  const bool relative = has_ideal && wants("jaccard");

  TrialResult result;
  result.trial = trial;
  std::vector<Interaction> ideal_log;
  for (ModelKind kind : order) {
    SimulationConfig cfg = base;
    cfg.model = kind;
    if (wants("jaccard") && !wants("pairing_degenerate")) cfg.metrics.push_back("pairing_degenerate");
    if (relative && kind != ModelKind::ideal && !wants("pairs")) cfg.metrics.push_back("pairs");
    Simulation sim(cfg, dataset, rng);
    sim.run();

    const std::string prefix = std::string(to_string(kind)) + ".";
    std::map<std::string, const TimeSeries*> scalar;
    for (const auto& [name, series] : sim.metrics().all_series()) {
      const bool is_scalar = std::all_of(series.samples().begin(), series.samples().end(),
                                         [](const MetricSample& s) { return s.value.size() == 1; });
      if (name == "pairs" || name == "user_repr" || name == "creator_profiles" || !is_scalar) continue;
      scalar[name] = &series;
    }
    std::optional<TimeSeries> rel;
    if (relative && kind != ModelKind::ideal) {
      const TimeSeries ideal_jaccard =
          replay_homogenization(sim.metrics().series("pairs"), ideal_log, cfg.num_users);
      rel = relative_homogenization(sim.metrics().series("jaccard"), ideal_jaccard);
      scalar["relative_homogenization"] = &*rel;
    }
    for (const auto& [name, series] : scalar)
      for (const auto& s : series->samples()) result.rows.push_back({s.timestep, prefix + name, s.value(0, 0)});
    if (kind == ModelKind::ideal) ideal_log = sim.state().log;
  }
  return result;
}

std::string trial_csv(const TrialResult& trial) {
  std::string out = "trial,timestep,metric,value\n";
  for (const auto& row : trial.rows) {
    out += std::to_string(trial.trial);
    out += ',';
    out += std::to_string(row.timestep);
    out += ',';
    out += row.metric;
    out += ',';
    out += format_double(row.value);
    out += '\n';
  }
  return out;
}

Json aggregate_trials(const std::vector<TrialResult>& trials) {
  std::map<std::string, std::map<Timestep, std::vector<double>>> grouped;
  for (const auto& t : trials)
    for (const auto& row : t.rows) grouped[row.metric][row.timestep].push_back(row.value);
  Json metrics = Json::object();
  for (const auto& [name, by_t] : grouped) {
    Json ts = Json::array(), n = Json::array(), mean = Json::array(), sd = Json::array();
    for (const auto& [t, values] : by_t) {
      double sum = 0.0;
      for (double v : values) sum += v;
      const double m = sum / static_cast<double>(values.size());
      double ss = 0.0;
      for (double v : values) ss += (v - m) * (v - m);
      ts.push_back(t);
      n.push_back(values.size());
      mean.push_back(m);
      sd.push_back(values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0);
    }
    metrics[name] = Json{{"timestep", ts}, {"n", n}, {"mean", mean}, {"sd", sd}};
  }
  return metrics;
}

Json cascade_summary(const std::vector<CascadeCell>& cells) {
  Json out = Json::array();
  for (const auto& c : cells) {
    out.push_back(Json{{"alpha", c.alpha},
                       {"r", c.r},
                       {"mean_degrees", c.mean_degrees},
                       {"cascades", c.stats.trials},
                       {"threshold", c.stats.threshold},
                       {"popular", c.stats.popular},
                       {"p_popular", c.stats.p_popular},
                       {"mean_size", c.stats.mean_size},
                       {"mean_virality", c.stats.mean_virality},
                       {"sd_virality", c.stats.sd_virality},
                       {"correlation", c.stats.correlation}});
  }
  return out;
}

std::string cascade_csv(const CascadeCell& cell) {
  std::string out = "trial,size,virality\n";
  for (const auto& r : cell.stats.popular_cascades)
    out += std::to_string(r.trial) + ',' + std::to_string(r.size) + ',' + format_double(r.virality) + '\n';
  return out;
}

namespace {

std::vector<CascadeCell> run_cascade_cells(const ExperimentConfig& config, int workers) {
  const DiffusionConfig& d = config.diffusion;
  const RngStream root(config.seed, 0);
  std::vector<CascadeCell> cells;
  for (std::size_t a = 0; a < d.alphas.size(); ++a) {
    std::vector<DiffusionNetwork> graphs(static_cast<std::size_t>(d.graphs_per_alpha));
    std::vector<std::thread> pool;
    for (int g = 0; g < d.graphs_per_alpha; ++g) {
      pool.emplace_back([&, g] {
        RngStream grng = root.fork(1, a).fork(static_cast<std::uint64_t>(g));
        graphs[static_cast<std::size_t>(g)] = build_graph(d.nodes, d.alphas[a], grng, d.directed);
      });
      if (static_cast<int>(pool.size()) >= workers) {
        for (auto& t : pool) t.join();
        pool.clear();
      }
    }
    for (auto& t : pool) t.join();
    std::vector<double> degrees;
    for (const auto& g : graphs) degrees.push_back(g.mean_degree());
    for (std::size_t ri = 0; ri < d.rs.size(); ++ri) {
      CascadeCell cell;
      cell.alpha = d.alphas[a];
      cell.r = d.rs[ri];
      cell.mean_degrees = degrees;
      cell.stats = run_cascade_batch(graphs, d.rs[ri], d.cascades, root.fork(2, a).fork(ri),
                                     CascadeBatchOptions{d.threshold, workers});
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

std::vector<TrialResult> run_trials(const ExperimentConfig& config, int workers) {
  const auto n = static_cast<std::size_t>(config.trials);
  std::vector<TrialResult> results(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex mu;
  std::string failure;
  auto worker = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t j = next.fetch_add(1);
      if (j >= n) return;
      try {
        results[j] = run_simulation_trial(config, static_cast<std::int64_t>(j));
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (!failed.exchange(true))
          failure = "trial " + std::to_string(j) + " (seed " + std::to_string(config.seed) + ") failed: " + e.what();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min<int>(workers, static_cast<int>(n));
  for (int w = 1; w < count; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failed) throw std::runtime_error(failure);
  return results;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

std::string cell_file_name(const CascadeCell& cell) {
  return "alpha_" + format_double(cell.alpha) + "_r_" + format_double(cell.r) + ".csv";
}

fs::path temp_sibling(const fs::path& out) {
  fs::path tmp = out;
  tmp += ".tmp";
  return tmp;
}

fs::path prepare_output(const std::string& out) {
  const fs::path target(out);
  const fs::path tmp = temp_sibling(target);
  std::error_code ec;
  fs::remove_all(tmp, ec);
  if (!fs::create_directories(tmp, ec) || ec)
    throw ConfigError("output directory '" + out + "' is not writable");
  return tmp;
}

void write_into(const ResultBundle& bundle, const fs::path& dir) {
  write_file(dir / "config.json", bundle.config.dump(2) + "\n");
  if (!bundle.trials.empty()) {
    fs::create_directories(dir / "trials");
    for (const auto& t : bundle.trials) {
      char name[32];
      std::snprintf(name, sizeof name, "trial_%05lld.csv", static_cast<long long>(t.trial));
      write_file(dir / "trials" / name, trial_csv(t));
    }
    write_file(dir / "aggregate.json",
               Json{{"config", bundle.config}, {"metrics", bundle.aggregate}}.dump(2) + "\n");
  }
  if (!bundle.cascades.empty()) {
    fs::create_directories(dir / "cascades");
    for (const auto& cell : bundle.cascades) write_file(dir / "cascades" / cell_file_name(cell), cascade_csv(cell));
    write_file(dir / "summary.json",
               Json{{"config", bundle.config}, {"cells", cascade_summary(bundle.cascades)}}.dump(2) + "\n");
  }
}

void commit_output(const fs::path& tmp, const std::string& out) {
  const fs::path target(out);
  std::error_code ec;
  fs::remove_all(target, ec);
  fs::rename(tmp, target);
}

}  // namespace

void write_bundle(const ResultBundle& bundle, const std::string& out) {
  const fs::path tmp = prepare_output(out);
  write_into(bundle, tmp);
  commit_output(tmp, out);
}

ResultBundle run_experiment(const ExperimentConfig& config) {
  // Round-trip through JSON so programmatic configs get the same checks.
  const ExperimentConfig resolved = parse_config(config_to_json(config));
  std::optional<fs::path> tmp;
  if (!resolved.out.empty()) tmp = prepare_output(resolved.out);
  const int workers = resolve_workers(resolved.workers);

  ResultBundle bundle;
  // Execution settings stay out of the bundle so it is identical for any
  // worker count and destination.
  bundle.config = config_to_json(resolved);
  bundle.config.erase("workers");
  bundle.config.erase("out");
  try {
    if (resolved.preset == Preset::goel) {
      bundle.cascades = run_cascade_cells(resolved, workers);
    } else {
      bundle.trials = run_trials(resolved, workers);
      bundle.aggregate = aggregate_trials(bundle.trials);
    }
    if (tmp) {
      write_into(bundle, *tmp);
      commit_output(*tmp, resolved.out);
    }
  } catch (...) {
    if (tmp) {
      std::error_code ec;
      fs::remove_all(*tmp, ec);
    }
    throw;
  }
  return bundle;
}

}  // namespace simrec
