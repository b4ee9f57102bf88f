#include "commands.hpp"

#include "pointstream/codec.hpp"
#include "pointstream/errors.hpp"
#include "pointstream/ply.hpp"
#include "pointstream/scene.hpp"
#include "pointstream/transport.hpp"
#include "pointstream/version.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>

namespace cli = pointstream::cli;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pointstream: live point-cloud capture, fusion and streaming toolkit"};
  app.set_version_flag("--version", std::string(pointstream::kVersion));
  app.require_subcommand(1);

  cli::GlobalOptions g;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string log_level = "warn";
  app.add_option("--config", config_path, "Pipeline config file (JSON)");
  auto* seed_opt = app.add_option("--seed", seed, "Override the scene seed");
  app.add_flag("--fake-clock", g.fake_clock, "Run time-driven behaviour on virtual time");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  cli::SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Render a scan/frame dataset from a scene file");
  simulate->add_option("--scene", sim_args.scene, "Scene file (defaults to the config's scene)");
  simulate->add_option("--duration", sim_args.duration_s, "Seconds of capture");
  simulate->add_option("--out", sim_args.out_dir, "Output directory")->required();

  cli::PipelineArgs pipe_args;
  auto* pipeline = app.add_subcommand("pipeline", "Simulate, process and stream RGB-D frames");
  pipeline->add_option("--frames", pipe_args.frames, "Number of frames (default: from duration)");
  pipeline->add_option("--endpoint", pipe_args.endpoint, "loopback, file:<path> or host:port");
  pipeline->add_option("--out", pipe_args.out_dir, "Metrics directory");
  pipeline->add_option("--inject-delay", pipe_args.delays,
                       "Extra stage time, stage=ms (process, send, transport, decode)");

  cli::ReceiveArgs recv_args;
  auto* receive = app.add_subcommand("receive", "Decode a stream, merge with the static cloud");
  receive->add_option("--static", recv_args.static_ply, "Static cloud PLY")->required();
  receive->add_option("--endpoint", recv_args.endpoint, "file:<path> or host:port to listen on");
  receive->add_option("--out", recv_args.out_dir, "Snapshot and metrics directory");

  cli::RecolorArgs rc;
  auto* recolor = app.add_subcommand("recolor", "Adapt static colours to a dynamic cloud");
  recolor->add_option("--static", rc.static_ply, "Static cloud PLY")->required();
  recolor->add_option("--dynamic", rc.dynamic_ply, "Dynamic cloud PLY")->required();
  recolor->add_option("--out", rc.out_ply, "Recoloured static cloud PLY")->required();
  recolor->add_option("--dump-lab", rc.dump_lab, "Write transferred Lab values before quantisation");
  recolor->add_option("-l,--overlap", rc.l, "Overlap distance in meters");
  recolor->add_option("-k,--clusters", rc.k, "Number of k-means clusters");
  recolor->add_option("--alpha", rc.alpha, "Weight of the per-cluster correction");
  recolor->add_option("--min-pairs", rc.min_pairs, "Pairs needed for a transfer");
  recolor->add_option("--kmeans-seed", rc.kmeans_seed, "k-means++ seed");
  recolor->add_option("--kmeans-max-iter", rc.max_iter, "Lloyd iteration cap");

  cli::BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Loopback throughput and codec metrics");
  bench->add_option("--frames", bench_args.frames, "Frames to push through")->check(CLI::PositiveNumber);
  bench->add_option("--width", bench_args.width, "Camera width override");
  bench->add_option("--height", bench_args.height, "Camera height override");
  bench->add_option("--codec", bench_args.codec, "store or deflate")
      ->check(CLI::IsMember({"store", "deflate"}));
  bench->add_option("--metrics", bench_args.metrics, "Metrics file (line-delimited JSON)");

  auto* config = app.add_subcommand("config", "Config file utilities");
  config->require_subcommand(1);
  std::string validate_path;
  auto* validate = config->add_subcommand("validate", "Check a config file");
  validate->add_option("file", validate_path, "Config file")->required();
  auto* defaults = config->add_subcommand("default", "Print the default config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto logger = spdlog::stderr_color_mt("pointstream");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));
  g.config_path = config_path;
  if (*seed_opt) g.seed = seed;

  try {
    if (*simulate) return cli::cmd_simulate(g, sim_args);
    if (*pipeline) return cli::cmd_pipeline(g, pipe_args);
    if (*receive) return cli::cmd_receive(g, recv_args);
    if (*recolor) return cli::cmd_recolor(g, rc);
    if (*bench) return cli::cmd_bench(g, bench_args);
    if (*validate) return cli::cmd_config_validate(validate_path);
    if (*defaults) return cli::cmd_config_default();
  } catch (const cli::UsageError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const pointstream::ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const pointstream::sim::SceneFileError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const pointstream::PlyError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const pointstream::ParameterError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const pointstream::InsufficientOverlap& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
