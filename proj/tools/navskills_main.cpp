#include <atomic>
#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "navskills/cli.hpp"

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  CLI::App app{"navigation skills toolkit"};
  app.require_subcommand(1);

  namespace cli = navskills::cli;

  // gen-maps
  cli::GenMapsOptions gm;
  auto* gen = app.add_subcommand("gen-maps", "generate scenario files and thumbnails");
  gen->add_option("--config", gm.spec_path, "map spec file (json)")->required();
  gen->add_option("--out", gm.out, "output directory");
  auto* gm_seed = gen->add_option("--seed", gm.seed, "override spec seed");

  // train-low / train-high
  cli::TrainOptions tl, th;
  auto* low = app.add_subcommand("train-low", "phase 1: train the skill-conditioned low level");
  low->add_option("--config", tl.config_path, "phase config file (json)")->required();
  low->add_option("--out", tl.out, "output root (overrides config out_dir)");
  auto* tl_seed = low->add_option("--seed", tl.seed, "override config seed");
  low->add_option("--steps", tl.steps, "override total env steps");
  low->add_option("--resume", tl.resume_from, "checkpoint to resume from");

  auto* high = app.add_subcommand("train-high", "phase 2: train the skill-emitting high level");
  high->add_option("--config", th.config_path, "phase config file (json)")->required();
  high->add_option("--out", th.out, "output root (overrides config out_dir)");
  auto* th_seed = high->add_option("--seed", th.seed, "override config seed");
  high->add_option("--steps", th.steps, "override total env steps");
  high->add_option("--resume", th.resume_from, "checkpoint to resume from");
  high->add_option("--low", th.low, "frozen low-level checkpoint");

  // eval
  cli::EvalOptions ev;
  auto* evc = app.add_subcommand("eval", "run an eval suite and write metrics + records");
  evc->add_option("--config", ev.suite_path, "suite file (json)")->required();
  evc->add_option("--policy", ev.policy, "dwa | fixed:<preset> | hierarchy");
  evc->add_option("--low", ev.low, "low-level checkpoint");
  evc->add_option("--high", ev.high, "high-level checkpoint");
  evc->add_option("--out", ev.out, "output directory");
  auto* ev_seed = evc->add_option("--seed", ev.seed, "override suite seed");

  // replay
  cli::ReplayOptions rp;
  auto* rep = app.add_subcommand("replay", "re-run a recorded episode and render it");
  rep->add_option("--records", rp.records_path, "episode records (jsonl)")->required();
  rep->add_option("--config", rp.suite_path, "suite file the records came from")->required();
  rep->add_option("--episode", rp.episode, "episode index");
  rep->add_option("--policy", rp.policy, "dwa | fixed:<preset> | hierarchy");
  rep->add_option("--low", rp.low, "low-level checkpoint");
  rep->add_option("--high", rp.high, "high-level checkpoint");
  rep->add_option("--out", rp.out, "output directory");

  // plot-telemetry
  cli::PlotOptions pl;
  auto* plot = app.add_subcommand("plot-telemetry", "render training curves from telemetry");
  plot->add_option("--config", pl.telemetry_path, "telemetry file (jsonl)")->required();
  plot->add_option("--out", pl.out, "output directory");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    gm.has_seed = gm_seed->count() > 0;
    return cli::cmd_gen_maps(gm, std::cout, std::cerr);
  }
  if (low->parsed()) {
    tl.has_seed = tl_seed->count() > 0;
    tl.stop = &g_stop;
    return cli::cmd_train(1, tl, std::cout, std::cerr);
  }
  if (high->parsed()) {
    th.has_seed = th_seed->count() > 0;
    th.stop = &g_stop;
    return cli::cmd_train(2, th, std::cout, std::cerr);
  }
  if (evc->parsed()) {
    ev.has_seed = ev_seed->count() > 0;
    return cli::cmd_eval(ev, std::cout, std::cerr);
  }
  if (rep->parsed()) return cli::cmd_replay(rp, std::cout, std::cerr);
  if (plot->parsed()) return cli::cmd_plot_telemetry(pl, std::cout, std::cerr);
  return 1;
}
