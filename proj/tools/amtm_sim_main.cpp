#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "amtm/experiments.hpp"
#include "amtm/run_config.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<double> duration;
  std::optional<double> intensity;
  std::optional<std::string> scheme;
  std::optional<std::string> topology;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run config JSON file");
  cmd->add_option("--seed", args.seed, "rng seed (overrides config)");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--duration", args.duration, "simulated seconds");
  cmd->add_option("--intensity", args.intensity, "flow arrival rate per second");
  cmd->add_option("--scheme", args.scheme, "amtm | centralized | semi-centralized");
  cmd->add_option("--topology", args.topology, "topology JSON file");
}

amtm::RunConfig materialize(const CommonArgs& args, const std::string& kind,
                            bool seed_required) {
  amtm::RunConfig rc;
  if (!args.config_path.empty()) rc = amtm::load_run_config(args.config_path);
  rc.kind = kind;
  if (args.seed) rc.seed = *args.seed;
  if (!args.out_dir.empty()) rc.out_dir = args.out_dir;
  if (args.duration) rc.duration_s = *args.duration;
  if (args.intensity) rc.arrival_rate_per_s = *args.intensity;
  if (args.scheme) rc.scheme = *args.scheme;
  if (args.topology) rc.topology_file = *args.topology;
  if (seed_required && !args.seed)
    throw CLI::ValidationError("--seed", "comparison runs need an explicit seed");
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous multi-class traffic management simulator"};
  app.require_subcommand(1);

  CommonArgs conv_args, sweep_args, cmp_args, single_args;
  CLI::App* conv = app.add_subcommand("convergence", "price/backlog convergence study");
  add_common(conv, conv_args);
  CLI::App* sweep = app.add_subcommand("n-sweep", "queueing/utility tradeoff in n");
  add_common(sweep, sweep_args);
  CLI::App* cmp = app.add_subcommand("compare", "scheme comparison on replayed traces");
  add_common(cmp, cmp_args);
  CLI::App* single = app.add_subcommand("single", "one run of the configured scheme");
  add_common(single, single_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (conv->parsed()) {
      const auto res = amtm::cmd_convergence(materialize(conv_args, "convergence", false));
      std::cout << "stationary: final_rel_err=" << res.stationary.final_rel_error
                << " max_link_backlog_mbit=" << res.stationary.max_link_backlog_mbit
                << "\ndynamic: mean_tracking_err=" << res.dynamic.mean_tracking_error
                << " backlog_bounded=" << (res.dynamic.backlog_bounded ? "yes" : "no")
                << "\n";
    } else if (sweep->parsed()) {
      const auto res = amtm::cmd_n_sweep(materialize(sweep_args, "n-sweep", false));
      std::cout << "n points=" << res.n_values.size()
                << " delay_inversions=" << res.delay_inversions
                << " utility_inversions=" << res.utility_inversions
                << " adaptive_terminal_w_bar_s=" << res.adaptive_terminal_w_bar_s << "\n";
    } else if (cmp->parsed()) {
      const auto res = amtm::cmd_compare(materialize(cmp_args, "compare", true));
      for (const auto& r : res.rows)
        std::cout << "intensity=" << r.intensity << " scheme=" << to_string(r.scheme)
                  << " utility=" << r.utility_total
                  << " utilization=" << r.mean_utilization
                  << " delay_sensitive_s=" << r.delay_mean_sensitive_s << "\n";
    } else if (single->parsed()) {
      const auto rep = amtm::cmd_single(materialize(single_args, "single", false));
      std::cout << "scheme=" << to_string(rep.scheme)
                << " utility_total=" << rep.utility_total
                << " flows=" << rep.trace_flows << " rejected=" << rep.rejected << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
