// Command-line front end: every subcommand parses a JSON config, runs one
// action from the core library, and writes a report plus CSV side files
// into the output directory.

#include <hdp/experiment.hpp>
#include <hdp/version.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  CLI::App app{std::string(hdp::kToolName) +
               " - stationarity, sharpness, and rate experiments for "
               "l1-regularized problems in the squared-variable lifting"};
  app.set_version_flag("--version", std::string(hdp::kVersion));
  app.require_subcommand(0, 1);

  std::string config_path;
  std::string out_dir;
  std::string preset_name;
  std::int64_t seed = -1;

  const auto add_common = [&](CLI::App* sub, bool config_required) {
    CLI::Option* c =
        sub->add_option("--config", config_path, "JSON config file");
    if (config_required) {
      c->required();
    }
    sub->add_option("--out", out_dir,
                    "output directory (overrides HDPOPT_OUT_DIR and config)");
    sub->add_option("--seed", seed, "override every seed in the config");
  };

  struct SubSpec {
    const char* name;
    const char* help;
    bool config_required;
  };
  const std::vector<SubSpec> subs = {
      {"solve", "run the lifted backtracking descent and classify the limit",
       true},
      {"classify", "first- and second-order classification of a point", true},
      {"kl-fit", "sample sharpness around a point and fit the exponent", true},
      {"rate-fit", "run descent and fit linear vs sublinear distance decay",
       true},
      {"saddle-margin", "brute-force escape margin over index subsets", true},
      {"check-grad", "finite-difference audit of loss derivatives", true},
  };
  for (const SubSpec& s : subs) {
    add_common(app.add_subcommand(s.name, s.help), s.config_required);
  }

  CLI::App* preset =
      app.add_subcommand("preset", "run a named built-in experiment");
  add_common(preset, false);
  preset->add_option("--preset,name", preset_name, "preset name");
  bool list_presets = false;
  preset->add_flag("--list", list_presets, "list available presets");

  CLI11_PARSE(app, argc, argv);

  if (app.get_subcommands().empty()) {
    std::cout << app.help() << std::endl;
    return 0;
  }
  const std::string action = app.get_subcommands().front()->get_name();

  if (action == "preset" && list_presets) {
    for (const hdp::PresetInfo& p : hdp::preset_catalog()) {
      std::cout << p.name << "\n  " << p.description << "\n  params:";
      for (const std::string& k : p.params) {
        std::cout << ' ' << k;
      }
      std::cout << "\n";
    }
    return 0;
  }

  hdp::CliOptions opts;
  opts.action = action;
  opts.config_path = config_path;
  opts.out_dir = out_dir;
  opts.preset = preset_name;
  if (seed >= 0) {
    opts.seed = static_cast<std::uint64_t>(seed);
  }
  return hdp::run_cli(opts, std::cout, std::cerr);
}
