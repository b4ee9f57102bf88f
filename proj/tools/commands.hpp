#pragma once

#include "pointstream/config.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pointstream::cli {

/// Problems with the invocation or its input files; exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::filesystem::path config_path;
  std::optional<std::uint64_t> seed;
  bool fake_clock = false;
};

/// Loaded config plus the directory relative paths resolve against.
struct LoadedConfig {
  PipelineConfig config;
  std::filesystem::path base_dir;
};
LoadedConfig load(const GlobalOptions& g);

struct SimulateArgs {
  std::string scene;
  std::optional<double> duration_s;
  std::filesystem::path out_dir;
};
int cmd_simulate(const GlobalOptions& g, const SimulateArgs& a);

struct PipelineArgs {
  std::optional<int> frames;
  std::optional<std::string> endpoint;
  std::optional<std::string> out_dir;
  std::vector<std::string> delays;  ///< "stage=ms"
};
int cmd_pipeline(const GlobalOptions& g, const PipelineArgs& a);

struct ReceiveArgs {
  std::filesystem::path static_ply;
  std::optional<std::string> endpoint;
  std::optional<std::string> out_dir;
};
int cmd_receive(const GlobalOptions& g, const ReceiveArgs& a);

struct RecolorArgs {
  std::filesystem::path static_ply, dynamic_ply, out_ply;
  std::optional<std::filesystem::path> dump_lab;
  std::optional<double> l, alpha;
  std::optional<int> k, max_iter;
  std::optional<std::size_t> min_pairs;
  std::optional<std::uint64_t> kmeans_seed;
};
int cmd_recolor(const GlobalOptions& g, const RecolorArgs& a);

struct BenchArgs {
  int frames = 300;
  std::optional<int> width, height;
  std::optional<std::string> codec;
  std::optional<std::filesystem::path> metrics;
};
int cmd_bench(const GlobalOptions& g, const BenchArgs& a);

int cmd_config_validate(const std::filesystem::path& path);
int cmd_config_default();

}  // namespace pointstream::cli
