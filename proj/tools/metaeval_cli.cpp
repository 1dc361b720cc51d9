// metaeval: benchmark, sanity, hpo, convergence and train verbs.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "metaeval/metaeval.hpp"

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "run configuration (JSON)")->required();
  cmd->add_option("--out", c.out, "output directory (overrides config 'output')");
  cmd->add_option("--seed", c.seed, "master seed (overrides config 'master_seed')");
  cmd->add_option("--jobs", c.jobs, "worker threads for estimator x test cells")->check(CLI::PositiveNumber);
  cmd->add_option("--set", c.overrides, "override a config key, e.g. --set nr.mpt_sigma=0.01")->take_all();
}

metaeval::RunConfig load(const Common& c) {
  std::vector<std::string> overrides = c.overrides;
  if (c.seed) overrides.push_back("master_seed=" + std::to_string(*c.seed));
  if (c.jobs) overrides.push_back("jobs=" + std::to_string(*c.jobs));
  return metaeval::load_config(c.config, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta-evaluation of explanation quality estimators"};
  app.require_subcommand(1);
  Common common;
  using Fn = int (*)(const metaeval::RunConfig&, const std::string&, metaeval::CommandIo);
  const std::vector<std::tuple<std::string, std::string, Fn>> verbs{
      {"benchmark", "meta-evaluate the configured estimators", &metaeval::cmd_benchmark},
      {"sanity", "adversarial-estimator sanity check", &metaeval::cmd_sanity},
      {"hpo", "rank an estimator hyperparameter grid by MC", &metaeval::cmd_hpo},
      {"convergence", "correlate meta-evaluation profiles within and across categories", &metaeval::cmd_convergence},
      {"train", "train the configured toy model and save it", &metaeval::cmd_train},
  };
  std::vector<std::pair<CLI::App*, Fn>> commands;
  for (const auto& [name, help, fn] : verbs) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, common);
    commands.emplace_back(sub, fn);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : metaeval::kExitConfig;
  }
  for (const auto& [sub, fn] : commands) {
    if (!sub->parsed()) continue;
    return metaeval::run_command(
        [&, fn = fn] { return fn(load(common), common.out, {std::cout, std::cerr}); }, std::cerr);
  }
  return metaeval::kExitConfig;
}
