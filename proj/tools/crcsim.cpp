// crcsim: run collaborative RC experiments from the command line.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crc/data.hpp"
#include "crc/error.hpp"
#include "crc/experiment.hpp"
#include "crc/format.hpp"
#include "crc/network.hpp"
#include "crc/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct ConfigFlags {
  std::string config_path;
  std::string output_dir;
  std::map<std::string, std::string> values;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
  cmd->add_option("-c,--config", flags.config_path, "Config file of 'key = value' lines")->check(CLI::ExistingFile);
  cmd->add_option("-o,--output-dir", flags.output_dir, "Output directory (default: $CRC_OUTPUT_DIR, else ./out)");
  for (const auto& key : crc::config_keys()) {
    cmd->add_option("--" + key, flags.values[key], "Config key '" + key + "'");
  }
}

crc::ExperimentConfig resolve_config(CLI::App* cmd, const ConfigFlags& flags) {
  crc::ConfigOverrides overrides;
  for (const auto& key : crc::config_keys()) {
    if (cmd->count("--" + key) > 0) overrides.emplace_back(key, flags.values.at(key));
  }
  if (flags.config_path.empty()) return crc::parse_config("", overrides);
  return crc::load_config(flags.config_path, overrides);
}

fs::path output_dir(const ConfigFlags& flags) {
  if (!flags.output_dir.empty()) return flags.output_dir;
  if (const char* env = std::getenv("CRC_OUTPUT_DIR"); env && *env) return env;
  return "out";
}

void print_final(const crc::RoundMetrics& m) {
  std::cout << "round " << m.t << ": train_err " << crc::format_double(m.train_err_mean) << " (std "
            << crc::format_double(m.train_err_std) << "), test_err " << crc::format_double(m.test_err_mean) << " (std "
            << crc::format_double(m.test_err_std) << "), test_gap " << crc::format_double(m.test_gap) << "\n";
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw crc::Error("cannot write '" + path + "'");
  return file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaborative risk-based calibration simulator"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  auto* run = app.add_subcommand("run", "Run one experiment (all repetitions)");
  add_config_flags(run, run_flags);

  ConfigFlags sweep_flags;
  std::string axis;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "Run one experiment per value of an axis");
  add_config_flags(sweep, sweep_flags);
  sweep->add_option("--axis", axis, "m_v, n, topology, partition, iter, delta or fragmentation")->required();
  sweep->add_option("--values", values, "Axis values (comma separated)")->required()->delimiter(',');

  ConfigFlags baseline_flags;
  auto* baseline = app.add_subcommand("baseline", "Train only the centralized RC and ML baselines");
  add_config_flags(baseline, baseline_flags);

  std::string graph_topology = "tree";
  int graph_nodes = 50;
  std::uint64_t graph_seed = 1;
  std::string graph_output;
  auto* gengraph = app.add_subcommand("gengraph", "Write a random graph as a 1-based edge list");
  gengraph->add_option("--topology", graph_topology, "tree, chain, full or tree+k")->capture_default_str();
  gengraph->add_option("-n,--nodes", graph_nodes, "Number of nodes")->capture_default_str();
  gengraph->add_option("--seed", graph_seed, "Random seed")->capture_default_str();
  gengraph->add_option("--output", graph_output, "Output file (default: stdout)");

  std::string data_kind = "blobs";
  crc::SyntheticSpec data_spec;
  std::uint64_t data_seed = 1;
  std::string data_output;
  std::optional<std::size_t> size;
  std::optional<int> classes, continuous, discrete, cardinality;
  std::optional<double> separation, signal;
  auto* gendata = app.add_subcommand("gendata", "Write a synthetic dataset as CSV");
  gendata->add_option("--kind", data_kind, "blobs, categorical or mixed")->capture_default_str();
  gendata->add_option("--size", size, "Number of instances (default 1000)");
  gendata->add_option("--classes", classes, "Number of classes");
  gendata->add_option("--continuous", continuous, "Number of continuous features");
  gendata->add_option("--discrete", discrete, "Number of discrete features");
  gendata->add_option("--cardinality", cardinality, "Categories per discrete feature");
  gendata->add_option("--separation", separation, "Distance between class centers");
  gendata->add_option("--signal", signal, "Class dependence of discrete features");
  gendata->add_option("--seed", data_seed, "Random seed")->capture_default_str();
  gendata->add_option("--output", data_output, "Output file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto config = resolve_config(run, run_flags);
      const auto dir = output_dir(run_flags);
      const auto result = crc::run_experiment(config, dir);
      std::cout << "wrote " << config.repetitions << " repetition(s) of '" << config.name << "' to " << dir.string()
                << "\n";
      print_final(result.aggregate.back());
    } else if (sweep->parsed()) {
      const auto config = resolve_config(sweep, sweep_flags);
      const auto dir = output_dir(sweep_flags);
      const auto rows = crc::sweep(config, axis, values, dir);
      for (const auto& row : rows) {
        std::cout << axis << "=" << row.value << ": ";
        print_final(row.final_round);
      }
      std::cout << "summary: " << (dir / (config.name + "_" + axis + "_summary.csv")).string() << "\n";
    } else if (baseline->parsed()) {
      const auto config = resolve_config(baseline, baseline_flags);
      const auto reports = crc::run_baselines(config, output_dir(baseline_flags));
      for (std::size_t k = 0; k < reports.size(); ++k) {
        const auto& r = reports[k];
        std::cout << "rep " << k + 1 << ": RC train " << crc::format_double(r.rc.train_err) << " test "
                  << crc::format_double(r.rc.test_err) << ", ML train " << crc::format_double(r.ml.train_err)
                  << " test " << crc::format_double(r.ml.test_err) << "\n";
      }
    } else if (gengraph->parsed()) {
      const auto spec = crc::parse_topology(graph_topology);
      crc::check_topology(spec, graph_nodes);
      crc::Rng rng(graph_seed);
      const auto graph = crc::generate(spec, graph_nodes, rng);
      std::ofstream file;
      crc::write_edge_list(open_output(graph_output, file), graph);
    } else if (gendata->parsed()) {
      data_spec = crc::synthetic_preset(data_kind);
      if (size) data_spec.size = *size;
      if (classes) data_spec.num_classes = *classes;
      if (continuous) data_spec.num_continuous = *continuous;
      if (discrete) data_spec.num_discrete = *discrete;
      if (cardinality) data_spec.cardinality = *cardinality;
      if (separation) data_spec.separation = *separation;
      if (signal) data_spec.discrete_signal = *signal;
      crc::Rng rng(data_seed);
      const auto dataset = crc::generate_synthetic(data_spec, rng);
      std::ofstream file;
      crc::write_csv(open_output(data_output, file), dataset);
    }
  } catch (const std::exception& e) {
    std::cerr << "crcsim: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
