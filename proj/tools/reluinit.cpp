#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "reluinit/lab/commands.hpp"

namespace fs = std::filesystem;
using namespace reluinit::lab;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw reluinit::ValidationError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw reluinit::ValidationError("write failed for '" + path.string() + "'");
}

fs::path sibling_path(const fs::path& out, const std::string& name) {
  fs::path p = out;
  p.replace_filename(out.stem().string() + "." + name + ".csv");
  return p;
}

void emit(const CommandOutput& res, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << res.main.str();
    if (!res.siblings.empty()) std::cerr << "note: sibling tables are only written with --out\n";
    return;
  }
  write_file(out, res.main.str());
  for (const auto& [name, table] : res.siblings) write_file(sibling_path(out, name), table.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ReLU initialization experiments"};
  app.require_subcommand(1);

  std::string config_path, out;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_given = false;

  const std::vector<std::string> names = {"states-sweep", "knot-density", "norm-conc",
                                          "train-1d",     "random-functions", "validate"};
  for (const auto& n : names) {
    auto* sub = app.add_subcommand(n);
    sub->add_option("--config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { seed = s, seed_given = true; }, "base seed (overrides config)");
    sub->add_option("--out", out, "output path; '-' or absent writes to stdout");
    sub->add_option("--set", overrides, "override a config key, key=value");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    Config cfg = Config::from_file(config_path);
    for (const auto& kv : overrides) cfg.apply_override(kv);
    if (!seed_given) {
      if (!cfg.has("seed")) throw reluinit::ValidationError("no seed: set 'seed' in the config or pass --seed");
      seed = cfg.get_u64("seed", 0);
    }
    cfg.get_u64("seed", 0);
    const std::string cfg_out = cfg.get_string("output", "");
    if (out.empty()) out = cfg_out;

    int status = 0;
    if (cmd == "validate") {
      const auto res = cmd_validate(cfg, seed);
      if (out.empty() || out == "-") std::cout << res.text;
      else write_file(out, res.text);
      status = res.passed ? 0 : 1;
    } else if (cmd == "states-sweep") {
      emit(cmd_states_sweep(cfg, seed), out);
    } else if (cmd == "knot-density") {
      emit(cmd_knot_density(cfg, seed), out);
    } else if (cmd == "norm-conc") {
      emit(cmd_norm_conc(cfg, seed), out);
    } else if (cmd == "train-1d") {
      emit(cmd_train_1d(cfg, seed), out);
    } else {
      emit(cmd_random_functions(cfg, seed), out);
    }
    for (const auto& k : cfg.unused_keys()) std::cerr << "warning: unused config key '" << k << "'\n";
    return status;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
