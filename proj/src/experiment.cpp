#include "crc/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "crc/error.hpp"
#include "crc/format.hpp"

namespace crc {

namespace fs = std::filesystem;

double ExperimentConfig::resolved_m0() const {
  return m0.value_or(m0_heuristic(static_cast<std::size_t>(n) * m_v, lr, n));
}

std::size_t ExperimentConfig::resolved_train_size() const {
  return train_size.value_or(static_cast<std::size_t>(n) * m_v);
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw Error("invalid value '" + value + "' for '" + key + "': expected " + expected);
}

long long to_integer(const std::string& key, const std::string& value, long long min) {
  auto parsed = parse_integer(value);
  if (!parsed || *parsed < min) bad_value(key, value, "an integer >= " + std::to_string(min));
  return *parsed;
}

int to_int(const std::string& key, const std::string& value, int min) {
  const auto v = to_integer(key, value, min);
  if (v > std::numeric_limits<int>::max()) bad_value(key, value, "a smaller integer");
  return static_cast<int>(v);
}

std::size_t to_size(const std::string& key, const std::string& value, std::size_t min) {
  return static_cast<std::size_t>(to_integer(key, value, static_cast<long long>(min)));
}

double to_real(const std::string& key, const std::string& value) {
  auto parsed = parse_double(value);
  if (!parsed) bad_value(key, value, "a finite number");
  return *parsed;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc{} || ptr != end || value.empty()) bad_value(key, value, "an unsigned 64-bit integer");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "yes" || value == "1") return true;
  if (value == "false" || value == "no" || value == "0") return false;
  bad_value(key, value, "true or false");
}

bool is_auto(const std::string& value) { return value == "auto"; }

template <class T>
std::string optional_text(const std::optional<T>& v, const std::string& none) {
  if (!v) return none;
  if constexpr (std::is_floating_point_v<T>) {
    return format_double(*v);
  } else {
    return std::to_string(*v);
  }
}

struct Key {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<std::pair<std::string, Key>>& key_table() {
  static const std::vector<std::pair<std::string, Key>> table = {
      {"data", {[](auto& c, const auto& v) { c.data = v; }, [](const auto& c) { return c.data; }}},
      {"label", {[](auto& c, const auto& v) { c.label = v; }, [](const auto& c) { return c.label; }}},
      {"name", {[](auto& c, const auto& v) { c.name = v; }, [](const auto& c) { return c.name; }}},
      {"n",
       {[](auto& c, const auto& v) { c.n = to_int("n", v, 1); }, [](const auto& c) { return std::to_string(c.n); }}},
      {"m_v",
       {[](auto& c, const auto& v) { c.m_v = to_size("m_v", v, 1); },
        [](const auto& c) { return std::to_string(c.m_v); }}},
      {"t_max",
       {[](auto& c, const auto& v) { c.t_max = to_int("t_max", v, 1); },
        [](const auto& c) { return std::to_string(c.t_max); }}},
      {"iter",
       {[](auto& c, const auto& v) { c.iter = to_int("iter", v, 1); },
        [](const auto& c) { return std::to_string(c.iter); }}},
      {"lr",
       {[](auto& c, const auto& v) { c.lr = to_real("lr", v); }, [](const auto& c) { return format_double(c.lr); }}},
      {"m0",
       {[](auto& c, const auto& v) {
          if (v == "heuristic" || is_auto(v)) {
            c.m0.reset();
          } else {
            c.m0 = to_real("m0", v);
          }
        },
        [](const auto& c) { return optional_text(c.m0, "heuristic"); }}},
      {"topology",
       {[](auto& c, const auto& v) { c.topology = parse_topology(v); },
        [](const auto& c) { return to_string(c.topology); }}},
      {"neighborhood",
       {[](auto& c, const auto& v) { c.neighborhood = parse_neighborhood_mode(v); },
        [](const auto& c) { return to_string(c.neighborhood); }}},
      {"partition",
       {[](auto& c, const auto& v) { c.partition = parse_partition_mode(v); },
        [](const auto& c) { return to_string(c.partition); }}},
      {"delta",
       {[](auto& c, const auto& v) {
          if (v == "inf" || v == "infinite" || v == "∞") {
            c.delta.reset();
          } else {
            c.delta = to_int("delta", v, 1);
          }
        },
        [](const auto& c) { return optional_text(c.delta, "inf"); }}},
      {"train_size",
       {[](auto& c, const auto& v) {
          if (is_auto(v)) {
            c.train_size.reset();
          } else {
            c.train_size = to_size("train_size", v, 1);
          }
        },
        [](const auto& c) { return optional_text(c.train_size, "auto"); }}},
      {"test_size",
       {[](auto& c, const auto& v) {
          if (is_auto(v)) {
            c.test_size.reset();
          } else {
            c.test_size = to_size("test_size", v, 1);
          }
        },
        [](const auto& c) { return optional_text(c.test_size, "auto"); }}},
      {"seed",
       {[](auto& c, const auto& v) { c.seed = to_u64("seed", v); },
        [](const auto& c) { return std::to_string(c.seed); }}},
      {"repetitions",
       {[](auto& c, const auto& v) { c.repetitions = to_int("repetitions", v, 1); },
        [](const auto& c) { return std::to_string(c.repetitions); }}},
      {"threads",
       {[](auto& c, const auto& v) { c.threads = static_cast<unsigned>(to_int("threads", v, 0)); },
        [](const auto& c) { return std::to_string(c.threads); }}},
      {"ml_smoothing",
       {[](auto& c, const auto& v) { c.ml_smoothing = to_real("ml_smoothing", v); },
        [](const auto& c) { return format_double(c.ml_smoothing); }}},
      {"m_total",
       {[](auto& c, const auto& v) {
          if (is_auto(v)) {
            c.m_total.reset();
          } else {
            c.m_total = to_size("m_total", v, 1);
          }
        },
        [](const auto& c) { return optional_text(c.m_total, "auto"); }}},
      {"dump_params",
       {[](auto& c, const auto& v) { c.dump_params = to_bool("dump_params", v); },
        [](const auto& c) { return std::string(c.dump_params ? "true" : "false"); }}},
      {"standardize",
       {[](auto& c, const auto& v) { c.standardize = to_bool("standardize", v); },
        [](const auto& c) { return std::string(c.standardize ? "true" : "false"); }}},
  };
  return table;
}

const Key& find_key(const std::string& key) {
  for (const auto& [name, entry] : key_table()) {
    if (name == key) return entry;
  }
  throw Error("unknown config key '" + key + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& entry : key_table()) out.push_back(entry.first);
    return out;
  }();
  return keys;
}

void validate(const ExperimentConfig& c) {
  if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos) {
    throw Error("name must be non-empty and must not contain path separators");
  }
  if (c.n < 1) throw Error("n must be at least 1");
  if (c.m_v < 1) throw Error("m_v must be at least 1");
  if (c.t_max < 1) throw Error("t_max must be at least 1");
  if (c.iter < 1) throw Error("iter must be at least 1");
  if (!(c.lr > 0.0) || !std::isfinite(c.lr)) throw Error("lr must be positive");
  if (c.m0 && !(*c.m0 > 0.0)) throw Error("m0 must be positive");
  if (c.delta && *c.delta < 1) throw Error("delta must be at least 1");
  if (c.repetitions < 1) throw Error("repetitions must be at least 1");
  if (!(c.ml_smoothing >= 0.0)) throw Error("ml_smoothing must be non-negative");
  if (c.train_size && *c.train_size < static_cast<std::size_t>(c.n) * c.m_v) {
    throw Error("train_size must be at least n * m_v = " + std::to_string(static_cast<std::size_t>(c.n) * c.m_v));
  }
  if (c.m_total && *c.m_total < 1) throw Error("m_total must be at least 1");
  check_topology(c.topology, c.n);
}

ExperimentConfig parse_config(std::string_view text, const ConfigOverrides& overrides) {
  ExperimentConfig config;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error("config line " + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key(trim(body.substr(0, eq)));
    const std::string value(trim(body.substr(eq + 1)));
    if (!seen.insert(key).second) throw Error("config line " + std::to_string(number) + ": duplicate key '" + key + "'");
    try {
      find_key(key).set(config, value);
    } catch (const Error& e) {
      throw Error("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  for (const auto& [key, value] : overrides) find_key(key).set(config, std::string(trim(value)));
  validate(config);
  return config;
}

ExperimentConfig load_config(const fs::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str(), overrides);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::string to_config_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [name, entry] : key_table()) out += name + " = " + entry.get(config) + "\n";
  return out;
}

std::uint64_t repetition_seed(const ExperimentConfig& config, int repetition) {
  return config.seed + static_cast<std::uint64_t>(repetition) * kSeedStride;
}

namespace {

struct Prepared {
  Dataset global;  // union of the local sets
  Dataset test;
  std::vector<Dataset> local;
  Graph graph;
  RewireSchedule schedule;
};

Prepared prepare(const ExperimentConfig& config, const Dataset& dataset, std::uint64_t seed) {
  const std::size_t train_size = config.resolved_train_size();
  if (train_size >= dataset.size()) {
    throw Error("dataset has " + std::to_string(dataset.size()) + " instances; " + std::to_string(train_size) +
                " are needed for training plus at least one for testing");
  }
  const std::size_t test_size = config.test_size.value_or(dataset.size() - train_size);
  Rng rng(seed);
  auto parts = train_test_split(dataset, train_size, test_size, rng);
  if (config.standardize) {
    const auto scaler = fit_feature_scaler(parts.train);
    parts.train = scaler.apply(parts.train);
    parts.test = scaler.apply(parts.test);
  }
  const auto plan = split(config.partition, parts.train, config.n, config.m_v, rng);
  Prepared p{parts.train.subset(plan.global_sample()), std::move(parts.test), materialize(plan, parts.train),
             Graph{}, RewireSchedule{}};
  p.graph = generate(config.topology, config.n, rng);
  p.schedule = {config.delta, config.topology, rng.fork_seed()};
  return p;
}

BaselineOptions baseline_options(const ExperimentConfig& config) {
  return {config.lr, config.t_max, std::nullopt, config.ml_smoothing};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

std::string rep_tag(const ExperimentConfig& config, int k) { return config.name + "_rep" + std::to_string(k + 1); }

}  // namespace

Dataset load_dataset(const ExperimentConfig& config) {
  if (config.data.empty()) throw Error("no dataset given (set 'data')");
  return infer_schema(load_csv(config.data, config.label));
}

ExperimentResult run_experiment(const ExperimentConfig& config, const Dataset& dataset) {
  validate(config);
  const double m0 = config.resolved_m0();
  ExperimentResult result;
  std::vector<std::vector<RoundMetrics>> runs;
  for (int k = 0; k < config.repetitions; ++k) {
    RepetitionResult rep;
    rep.seed = repetition_seed(config, k);
    rep.m0 = m0;
    const auto p = prepare(config, dataset, rep.seed);

    const auto options = baseline_options(config);
    auto ml = run_baseline(BaselineKind::ml, p.global, options);
    auto rc_run = run_baseline(BaselineKind::rc, p.global, options);
    auto points = baseline_errors(*rc_run.trace, p.global, p.test);
    rep.ml = {evaluate(ml.params, p.global).err01, evaluate(ml.params, p.test).err01};
    rep.rc = points.back();
    rep.ml_params = std::move(ml.params);
    rep.rc_params = std::move(rc_run.params);

    CrcOptions crc_options;
    crc_options.t_max = config.t_max;
    crc_options.iter = config.iter;
    crc_options.m0 = m0;
    crc_options.neighborhood = config.neighborhood;
    crc_options.threads = config.threads;
    const EvaluationContext context{p.global, p.test, std::move(points)};
    auto crc = run_crc(crc_options, p.local, p.graph, p.schedule, &context);
    rep.metrics = std::move(crc.metrics);
    for (auto& node : crc.nodes) rep.node_params.push_back(std::move(node.params));
    runs.push_back(rep.metrics);
    result.repetitions.push_back(std::move(rep));
  }
  result.aggregate = average_metrics(runs);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const fs::path& output_dir) {
  validate(config);
  const auto dataset = load_dataset(config);
  auto result = run_experiment(config, dataset);

  fs::create_directories(output_dir);
  write_text(output_dir / (config.name + ".config"), to_config_text(config));
  std::ofstream baselines(output_dir / (config.name + "_baselines.csv"));
  if (!baselines) throw Error("cannot write baselines under '" + output_dir.string() + "'");
  baselines << "rep,seed,m0,ml_train_err,ml_test_err,rc_train_err,rc_test_err,crc_train_err,crc_test_err\n";
  for (std::size_t k = 0; k < result.repetitions.size(); ++k) {
    const auto& rep = result.repetitions[k];
    const auto tag = rep_tag(config, static_cast<int>(k));
    write_metrics_csv(output_dir / (tag + ".csv"), rep.metrics);
    const auto& last = rep.metrics.back();
    baselines << k + 1 << ',' << rep.seed << ',' << format_double(rep.m0) << ',' << format_double(rep.ml.train_err)
              << ',' << format_double(rep.ml.test_err) << ',' << format_double(rep.rc.train_err) << ','
              << format_double(rep.rc.test_err) << ',' << format_double(last.train_err_mean) << ','
              << format_double(last.test_err_mean) << '\n';
    if (config.dump_params) {
      for (std::size_t v = 0; v < rep.node_params.size(); ++v) {
        write_text(output_dir / (tag + "_node" + std::to_string(v + 1) + ".params"), dump_string(rep.node_params[v]));
      }
      write_text(output_dir / (tag + "_rc.params"), dump_string(rep.rc_params));
      write_text(output_dir / (tag + "_ml.params"), dump_string(rep.ml_params));
    }
  }
  write_metrics_csv(output_dir / (config.name + "_aggregate.csv"), result.aggregate);
  return result;
}

std::vector<RoundMetrics> average_metrics(const std::vector<std::vector<RoundMetrics>>& runs) {
  if (runs.empty()) return {};
  const std::size_t rounds = runs.front().size();
  for (const auto& run : runs) {
    if (run.size() != rounds) throw Error("cannot average runs with different round counts");
  }
  const auto count = static_cast<double>(runs.size());
  std::vector<RoundMetrics> out(rounds);
  for (std::size_t t = 0; t < rounds; ++t) {
    auto& m = out[t];
    m.t = runs.front()[t].t;
    m.train_errors.assign(runs.front()[t].train_errors.size(), 0.0);
    m.test_errors.assign(runs.front()[t].test_errors.size(), 0.0);
    for (const auto& run : runs) {
      const auto& r = run[t];
      if (r.train_errors.size() != m.train_errors.size()) throw Error("cannot average runs with different node counts");
      for (std::size_t v = 0; v < m.train_errors.size(); ++v) {
        m.train_errors[v] += r.train_errors[v];
        m.test_errors[v] += r.test_errors[v];
      }
      m.train_err_mean += r.train_err_mean;
      m.train_err_std += r.train_err_std;
      m.test_err_mean += r.test_err_mean;
      m.test_err_std += r.test_err_std;
      m.soft_train_mean += r.soft_train_mean;
      m.rc_train_err += r.rc_train_err;
      m.rc_test_err += r.rc_test_err;
      m.train_gap += r.train_gap;
      m.test_gap += r.test_gap;
    }
    for (auto& v : m.train_errors) v /= count;
    for (auto& v : m.test_errors) v /= count;
    for (double* field : {&m.train_err_mean, &m.train_err_std, &m.test_err_mean, &m.test_err_std,
                          &m.soft_train_mean, &m.rc_train_err, &m.rc_test_err, &m.train_gap, &m.test_gap}) {
      *field /= count;
    }
  }
  return out;
}

ExperimentConfig sweep_point(const ExperimentConfig& base, const std::string& axis, const std::string& value) {
  ExperimentConfig c = base;
  if (axis == "fragmentation") {
    const std::size_t total = base.m_total.value_or(static_cast<std::size_t>(base.n) * base.m_v);
    c.n = to_int("fragmentation", value, 1);
    c.m_v = total / static_cast<std::size_t>(c.n);
    if (c.m_v < 1) throw Error("fragmentation " + value + " leaves no local data (m_total = " + std::to_string(total) + ")");
    c.m_total = total;
  } else if (axis == "m_v" || axis == "n" || axis == "topology" || axis == "partition" || axis == "iter" ||
             axis == "delta") {
    find_key(axis).set(c, value);
  } else {
    throw Error("unknown sweep axis '" + axis + "'");
  }
  c.name = base.name + "_" + axis + "-" + value;
  validate(c);
  return c;
}

std::vector<SweepRow> sweep(const ExperimentConfig& config, const std::string& axis,
                            const std::vector<std::string>& values, const fs::path& output_dir) {
  if (values.empty()) throw Error("sweep needs at least one value");
  std::vector<ExperimentConfig> points;
  for (const auto& value : values) points.push_back(sweep_point(config, axis, value));

  const auto dataset = load_dataset(config);
  fs::create_directories(output_dir);
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& point = points[i];
    auto result = run_experiment(point, dataset);
    // Same files a plain run would write.
    write_text(output_dir / (point.name + ".config"), to_config_text(point));
    for (std::size_t k = 0; k < result.repetitions.size(); ++k) {
      write_metrics_csv(output_dir / (rep_tag(point, static_cast<int>(k)) + ".csv"), result.repetitions[k].metrics);
    }
    write_metrics_csv(output_dir / (point.name + "_aggregate.csv"), result.aggregate);

    SweepRow row{values[i], point, result.aggregate.back(), {}};
    for (const auto& rep : result.repetitions) {
      row.ml.train_err += rep.ml.train_err;
      row.ml.test_err += rep.ml.test_err;
    }
    row.ml.train_err /= static_cast<double>(result.repetitions.size());
    row.ml.test_err /= static_cast<double>(result.repetitions.size());
    rows.push_back(std::move(row));
  }

  std::ofstream out(output_dir / (config.name + "_" + axis + "_summary.csv"));
  if (!out) throw Error("cannot write sweep summary under '" + output_dir.string() + "'");
  out << "dataset,axis,value,n,m_v,m0,t,train_err_mean,train_err_std,test_err_mean,test_err_std,rc_train_err,"
         "rc_test_err,ml_train_err,ml_test_err,train_gap,test_gap\n";
  const auto dataset_name = fs::path(config.data).stem().string();
  for (const auto& row : rows) {
    const auto& m = row.final_round;
    out << dataset_name << ',' << axis << ',' << row.value << ',' << row.config.n << ',' << row.config.m_v << ','
        << format_double(row.config.resolved_m0()) << ',' << m.t;
    for (double v : {m.train_err_mean, m.train_err_std, m.test_err_mean, m.test_err_std, m.rc_train_err,
                     m.rc_test_err, row.ml.train_err, row.ml.test_err, m.train_gap, m.test_gap}) {
      out << ',' << format_double(v);
    }
    out << '\n';
  }
  return rows;
}

std::vector<BaselineReport> run_baselines(const ExperimentConfig& config, const fs::path& output_dir) {
  validate(config);
  const auto dataset = load_dataset(config);
  fs::create_directories(output_dir);
  std::vector<BaselineReport> reports;
  std::ofstream out(output_dir / (config.name + "_baselines.csv"));
  if (!out) throw Error("cannot write baselines under '" + output_dir.string() + "'");
  out << "rep,seed,ml_train_err,ml_test_err,rc_train_err,rc_test_err,rc_best_t\n";
  for (int k = 0; k < config.repetitions; ++k) {
    const auto seed = repetition_seed(config, k);
    const auto p = prepare(config, dataset, seed);
    const auto options = baseline_options(config);
    auto ml = run_baseline(BaselineKind::ml, p.global, options);
    auto rc_run = run_baseline(BaselineKind::rc, p.global, options);
    BaselineReport report{{evaluate(ml.params, p.global).err01, evaluate(ml.params, p.test).err01},
                          {evaluate(rc_run.params, p.global).err01, evaluate(rc_run.params, p.test).err01},
                          std::move(*rc_run.trace)};
    write_trace_csv(output_dir / (rep_tag(config, k) + "_rc_trace.csv"), report.trace);
    out << k + 1 << ',' << seed << ',' << format_double(report.ml.train_err) << ','
        << format_double(report.ml.test_err) << ',' << format_double(report.rc.train_err) << ','
        << format_double(report.rc.test_err) << ',' << report.trace.best_record().t << '\n';
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace crc
