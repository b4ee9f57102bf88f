#include "commands.hpp"

#include "pointstream/color.hpp"
#include "pointstream/errors.hpp"
#include "pointstream/pipeline.hpp"
#include "pointstream/ply.hpp"
#include "pointstream/scene.hpp"
#include "pointstream/version.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <thread>

namespace pointstream::cli {

namespace fs = std::filesystem;
using nlohmann::json;

LoadedConfig load(const GlobalOptions& g) {
  LoadedConfig lc;
  if (!g.config_path.empty()) {
    lc.config = load_config(g.config_path);
    lc.base_dir = g.config_path.parent_path();
  }
  if (g.seed) lc.config.seed = g.seed;
  lc.config.validate();
  return lc;
}

namespace {

sim::Scene load_scene_for(const LoadedConfig& lc, const std::string& override_path) {
  fs::path path;
  if (!override_path.empty())
    path = override_path;
  else if (!lc.config.scene.empty())
    path = lc.config.scene_path(lc.base_dir);
  else
    throw UsageError("no scene given: pass --scene or set \"scene\" in the config");
  sim::Scene scene = sim::load_scene(path);
  if (lc.config.seed) scene.seed = *lc.config.seed;
  spdlog::debug("loaded scene {} ({} primitives, seed {})", path.string(), scene.primitives.size(),
                scene.seed);
  return scene;
}

double events_per_second(const sim::RigConfig& rig) {
  double rate = 0.0;
  for (const auto& l : rig.lidars) rate += l.rotation_hz;
  return rate;
}

std::vector<sim::Trigger> triggers_for(const sim::RigConfig& rig, double duration,
                                       std::optional<int> frames) {
  if (!frames) return sim::rig_triggers(rig, duration);
  if (*frames < 1) throw UsageError("--frames must be >= 1");
  auto t = sim::rig_triggers(rig, (*frames + 1) / events_per_second(rig));
  t.resize(std::min<std::size_t>(t.size(), static_cast<std::size_t>(*frames)));
  return t;
}

std::vector<sim::RigEvent> render_all(const sim::Scene& scene, const sim::RigConfig& rig,
                                      const std::vector<sim::Trigger>& triggers, unsigned threads) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<sim::RigEvent> events;
  events.reserve(triggers.size());
  for (std::size_t i = 0; i < triggers.size(); ++i)
    events.push_back(sim::render_event(scene, rig, triggers[i], i, threads));
  spdlog::info("simulated {} events in {:.2f} s", events.size(),
               std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return events;
}

void write_ppm(const RgbImage& img, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()),
            static_cast<std::streamsize>(img.pixels().size() * 3));
}

std::string numbered(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06zu.%s", stem, i, ext);
  return buf;
}

PipelineOptions pipeline_options(const PipelineConfig& c) {
  PipelineOptions o;
  o.fusion = c.fusion;
  o.upsample = c.upsample;
  o.upsample.threads = c.threads;
  o.defocus_radius = c.stream.defocus_radius;
  o.encode = c.stream.encode;
  o.pacing = c.stream.pacing();
  return o;
}

StageDelays parse_delays(const std::vector<std::string>& specs) {
  StageDelays d;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--inject-delay expects stage=ms, got '" + s + "'");
    const std::string stage = s.substr(0, eq);
    double ms = 0;
    try {
      ms = std::stod(s.substr(eq + 1));
    } catch (const std::exception&) {
      throw UsageError("--inject-delay: bad milliseconds in '" + s + "'");
    }
    if (!(ms >= 0.0)) throw UsageError("--inject-delay: delay must be >= 0");
    const auto ns = static_cast<std::int64_t>(std::llround(ms * 1e6));
    if (stage == "process")
      d.process_ns = ns;
    else if (stage == "send")
      d.send_ns = ns;
    else if (stage == "transport")
      d.transport_ns = ns;
    else if (stage == "decode")
      d.decode_ns = ns;
    else
      throw UsageError("--inject-delay: unknown stage '" + stage +
                       "' (process, send, transport, decode)");
  }
  return d;
}

json stats_json(const ChannelStats& s) {
  return {{"mean", {s.mean[0], s.mean[1], s.mean[2]}},
          {"std", {s.stddev[0], s.stddev[1], s.stddev[2]}},
          {"count", s.count}};
}

json summary_json(const LatencySummary& s) {
  return {{"mean", s.mean_ms}, {"sd", s.sd_ms}, {"min", s.min_ms}, {"max", s.max_ms},
          {"p99", s.p99_ms}, {"count", s.count}};
}

json latency_json(const LatencyRecord& r) {
  auto ms = [](std::int64_t a, std::int64_t b) { return static_cast<double>(b - a) / 1e6; };
  return {{"end_to_end", ms(r.capture_ns, r.decoded_ns)},
          {"process", ms(r.capture_ns, r.processed_ns)},
          {"send", ms(r.processed_ns, r.sent_ns)},
          {"transport", ms(r.sent_ns, r.received_ns)},
          {"decode", ms(r.received_ns, r.decoded_ns)}};
}

json frame_json(const FrameMetrics& m) {
  return {{"type", "frame"},
          {"seq", m.frame_seq},
          {"capture_ts_ns", m.capture_ts_ns},
          {"fused_points", m.fused_points},
          {"culled_points", m.culled_points},
          {"valid_depth", m.valid_depth},
          {"raw_bytes", m.raw_bytes},
          {"rgb_bytes", m.rgb_bytes},
          {"depth_bytes", m.depth_bytes},
          {"wire_bytes", m.wire_bytes},
          {"compression_ratio", static_cast<double>(m.raw_bytes) / static_cast<double>(m.wire_bytes)},
          {"crc32", m.crc32}};
}

// Timing fields are deterministic under the fake clock and wall-clock
// measurements otherwise; the latter live under "wall".
void write_metrics(std::ostream& out, const PipelineResult& r, bool fake_clock) {
  std::map<std::uint64_t, const LatencyRecord*> by_seq;
  for (const auto& l : r.latency) by_seq[l.frame_seq] = &l;
  for (const auto& m : r.frames) {
    json j = frame_json(m);
    j["wall"] = {{"process_ms", m.process_wall_ms}};
    auto it = by_seq.find(m.frame_seq);
    j["delivered"] = it != by_seq.end();
    if (it != by_seq.end()) {
      if (fake_clock)
        j["latency_ms"] = latency_json(*it->second);
      else
        j["wall"]["latency_ms"] = latency_json(*it->second);
    }
    out << j.dump() << '\n';
  }
}

std::unique_ptr<TcpStream> connect_with_retry(const Endpoint& ep, const StreamSettings& s) {
  double backoff = s.connect_backoff_s;
  for (int attempt = 1;; ++attempt) {
    try {
      return TcpStream::connect(ep.host, ep.port);
    } catch (const TransportError& e) {
      if (attempt >= s.connect_attempts) throw;
      spdlog::warn("connect to {}:{} failed ({}), retry {}/{} in {:.2f} s", ep.host, ep.port,
                   e.what(), attempt, s.connect_attempts - 1, backoff);
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2.0;
    }
  }
}

fs::path ensure_dir(const fs::path& dir) {
  fs::create_directories(dir);
  return dir;
}

fs::path output_dir(const LoadedConfig& lc, const std::optional<std::string>& override_dir) {
  if (override_dir) return *override_dir;
  const fs::path p(lc.config.output_dir);
  return p.is_absolute() || lc.base_dir.empty() ? p : lc.base_dir / p;
}

}  // namespace

int cmd_simulate(const GlobalOptions& g, const SimulateArgs& a) {
  const LoadedConfig lc = load(g);
  const sim::Scene scene = load_scene_for(lc, a.scene);
  const sim::RigConfig rig = lc.config.rig.to_rig();
  const double duration = a.duration_s.value_or(lc.config.duration_s);
  if (!(duration > 0.0)) throw UsageError("--duration must be > 0");

  const auto triggers = sim::rig_triggers(rig, duration);
  ensure_dir(a.out_dir / "scans");
  ensure_dir(a.out_dir / "frames");
  json events = json::array();
  for (std::size_t i = 0; i < triggers.size(); ++i) {
    const auto ev = sim::render_event(scene, rig, triggers[i], i, lc.config.threads);
    const std::string scan = "scans/" + numbered("scan", i, "ply");
    const std::string frame = "frames/" + numbered("frame", i, "ppm");
    write_ply(ev.scan, a.out_dir / scan);
    write_ppm(ev.frame, a.out_dir / frame);
    events.push_back({{"index", i},
                      {"time_s", ev.time_s},
                      {"timestamp_ns", ev.timestamp_ns},
                      {"lidar", ev.lidar},
                      {"sensor_id", rig.lidars[ev.lidar].sensor_id},
                      {"rotation", ev.rotation},
                      {"points", ev.scan.size()},
                      {"scan", scan},
                      {"frame", frame}});
  }
  json manifest = {{"format", "pointstream-dataset"},
                   {"version", 1},
                   {"generator", std::string("pointstream ") + kVersion},
                   {"seed", scene.seed},
                   {"duration_s", duration},
                   {"width", rig.camera.intrinsics.width},
                   {"height", rig.camera.intrinsics.height},
                   {"camera_fps", rig.camera_fps},
                   {"events", events}};
  std::ofstream(a.out_dir / "manifest.json") << manifest.dump(2) << '\n';
  std::cout << json({{"type", "simulate"}, {"events", events.size()}, {"out", a.out_dir.string()}})
                   .dump()
            << '\n';
  return 0;
}

int cmd_pipeline(const GlobalOptions& g, const PipelineArgs& a) {
  const LoadedConfig lc = load(g);
  const PipelineConfig& c = lc.config;
  const std::string endpoint = a.endpoint.value_or(c.stream.endpoint);
  const fs::path out = ensure_dir(output_dir(lc, a.out_dir));
  PipelineOptions opts = pipeline_options(c);
  opts.delays = parse_delays(a.delays);

  const sim::Scene scene = load_scene_for(lc, "");
  const sim::RigConfig rig = c.rig.to_rig();
  const auto events = render_all(scene, rig, triggers_for(rig, c.duration_s, a.frames), c.threads);

  std::unique_ptr<ByteSink> owned_sink;
  std::unique_ptr<TcpStream> tcp;
  ByteSink* sink = nullptr;
  if (endpoint.starts_with("file:")) {
    owned_sink = std::make_unique<FileSink>(endpoint.substr(5));
    sink = owned_sink.get();
  } else if (endpoint != "loopback") {
    tcp = connect_with_retry(parse_endpoint(endpoint), c.stream);
    sink = tcp.get();
  }

  PipelineResult r;
  if (g.fake_clock) {
    r = run_pipeline_virtual(events, rig.camera, opts, sink);
  } else {
    SteadyClock clock;
    std::size_t next = 0;
    auto provider = [&]() -> std::optional<sim::RigEvent> {
      if (next == events.size()) return std::nullopt;
      return events[next++];
    };
    if (sink) {
      r = run_pipeline_threaded(provider, rig.camera, opts, *sink, nullptr, clock, true);
    } else {
      LoopbackPipe pipe;
      r = run_pipeline_threaded(provider, rig.camera, opts, pipe.sink(), &pipe.source(), clock,
                                true);
    }
  }

  std::ofstream metrics(out / "pipeline_metrics.jsonl");
  write_metrics(metrics, r, g.fake_clock);
  const bool receiver_known = !sink || g.fake_clock;
  json summary = {{"type", "summary"},
                  {"frames", r.frames.size()},
                  {"sent", r.frames.size() - r.dropped_seqs.size()},
                  {"dropped", r.dropped_seqs.size()},
                  {"dropped_seqs", r.dropped_seqs},
                  {"wall", {{"seconds", r.wall_seconds}}}};
  if (receiver_known) {
    summary["received"] = r.latency.size();
    summary["decode_errors"] = r.decode_errors;
  }
  if (!r.latency.empty()) {
    const LatencyReport report = latency_report(r.latency);
    json lat = {{"end_to_end", summary_json(report.end_to_end)}};
    for (std::size_t i = 0; i < kLatencyStages.size(); ++i)
      lat[kLatencyStages[i]] = summary_json(report.stages[i]);
    if (g.fake_clock)
      summary["latency_ms"] = lat;
    else
      summary["wall"]["latency_ms"] = lat;
    metrics << summary.dump() << '\n';
    std::cout << "frames " << r.frames.size() << " sent " << summary["sent"] << " dropped "
              << r.dropped_seqs.size() << " received " << r.latency.size() << " decode_errors "
              << r.decode_errors << '\n';
    std::cout << report.format();
  } else {
    metrics << summary.dump() << '\n';
    std::cout << "frames " << r.frames.size() << " sent " << summary["sent"] << " dropped "
              << r.dropped_seqs.size() << '\n';
    std::cout << "latency is measured at the receiver for this endpoint\n";
  }
  return 0;
}

int cmd_receive(const GlobalOptions& g, const ReceiveArgs& a) {
  const LoadedConfig lc = load(g);
  const PipelineConfig& c = lc.config;
  const std::string endpoint = a.endpoint.value_or(c.stream.endpoint);
  const fs::path out = ensure_dir(output_dir(lc, a.out_dir));
  PointCloud static_cloud = read_ply(a.static_ply);
  if (!static_cloud.has_colors()) throw UsageError(a.static_ply.string() + " has no colours");

  ReceiverSettings settings;
  settings.transfer = c.transfer;
  settings.recolor_interval_ns = std::llround(c.recolor_interval_s * 1e9);
  settings.recolor_frames = static_cast<std::size_t>(c.recolor_frames);
  settings.snapshot_interval = static_cast<std::size_t>(c.snapshot_interval);
  settings.output_dir = out;
  ReceiverSession session(std::move(static_cloud), c.rig.to_rig().camera, settings);

  std::unique_ptr<ByteSource> file;
  std::unique_ptr<TcpListener> listener;
  std::unique_ptr<TcpStream> conn;
  ByteSource* source = nullptr;
  if (endpoint.starts_with("file:")) {
    file = std::make_unique<FileSource>(endpoint.substr(5));
    source = file.get();
  } else if (endpoint == "loopback") {
    throw UsageError("receive needs a file: or tcp endpoint");
  } else {
    const Endpoint ep = parse_endpoint(endpoint);
    listener = std::make_unique<TcpListener>(ep.host, ep.port);
    spdlog::info("listening on {}:{}", ep.host, listener->port());
    conn = listener->accept();
    source = conn.get();
  }

  // Under the fake clock, time follows the capture timestamps in the stream.
  SteadyClock steady;
  FakeClock fake;
  std::optional<std::int64_t> first_ts;
  std::ofstream metrics(out / "receive_metrics.jsonl");
  std::size_t recolors_logged = 0, recolors_applied = 0;
  FrameReader reader(*source);
  while (auto item = reader.next()) {
    std::optional<RgbdFrame> frame;
    if (item->error) {
      session.on_error(*item->error);
      spdlog::warn("stream error: {} ({} bytes skipped)", item->error->what(), item->skipped_bytes);
      metrics << json({{"type", "error"}, {"kind", to_string(item->error->kind())},
                       {"skipped_bytes", item->skipped_bytes}})
                     .dump()
              << '\n';
    } else {
      try {
        frame = decode_frame(item->blob);
      } catch (const DecodeError& e) {
        session.on_error(e);
        spdlog::warn("frame dropped: {}", e.what());
        metrics << json({{"type", "error"}, {"kind", to_string(e.kind())}}).dump() << '\n';
      }
    }
    if (frame) {
      session.on_frame(*frame);
      if (!first_ts) first_ts = frame->capture_ts_ns;
      fake.set(frame->capture_ts_ns - *first_ts);
      metrics << json({{"type", "frame"}, {"seq", frame->frame_seq},
                       {"capture_ts_ns", frame->capture_ts_ns},
                       {"points", session.latest_dynamic().size()}})
                     .dump()
              << '\n';
    }
    session.tick(g.fake_clock ? fake.now_ns() : steady.now_ns());
    if (session.recolor_attempts() > recolors_logged) {
      recolors_logged = session.recolor_attempts();
      const bool applied = session.recolor_successes() > recolors_applied;
      recolors_applied = session.recolor_successes();
      json rec = {{"type", "recolor"}, {"attempt", recolors_logged}, {"applied", applied}};
      if (applied) rec["pairs"] = session.last_report()->pair_count;
      else spdlog::warn("recolour skipped: too little overlap with the live cloud");
      metrics << rec.dump() << '\n';
    }
  }
  json summary = {{"type", "summary"},
                  {"frames", session.frames()},
                  {"errors", session.errors()},
                  {"snapshots", session.snapshots().size()},
                  {"recolor_attempts", session.recolor_attempts()},
                  {"recolor_applied", session.recolor_successes()}};
  metrics << summary.dump() << '\n';
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_recolor(const GlobalOptions& g, const RecolorArgs& a) {
  const LoadedConfig lc = load(g);
  TransferParams p = lc.config.transfer;
  if (a.l) p.overlap_distance = *a.l;
  if (a.alpha) p.alpha = *a.alpha;
  if (a.k) p.clusters = *a.k;
  if (a.max_iter) p.kmeans_max_iter = *a.max_iter;
  if (a.min_pairs) p.min_pairs = *a.min_pairs;
  if (a.kmeans_seed) p.kmeans_seed = *a.kmeans_seed;
  p.validate();

  const PointCloud stat = read_ply(a.static_ply);
  const PointCloud dyn = read_ply(a.dynamic_ply);
  if (!stat.has_colors()) throw UsageError(a.static_ply.string() + " has no colours");
  if (!dyn.has_colors()) throw UsageError(a.dynamic_ply.string() + " has no colours");
  if (p.clusters > static_cast<int>(stat.size()))
    throw UsageError("k = " + std::to_string(p.clusters) + " exceeds the static point count");

  const TransferResult res = transfer_colors(stat, dyn, p);
  write_ply(res.cloud, a.out_ply);
  if (a.dump_lab) {
    std::FILE* f = std::fopen(a.dump_lab->string().c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + a.dump_lab->string());
    for (const auto& c : res.lab) std::fprintf(f, "%.17g %.17g %.17g\n", c[0], c[1], c[2]);
    std::fclose(f);
  }

  const auto& rep = res.report;
  std::cout << json({{"type", "pairs"}, {"count", rep.pair_count}}).dump() << '\n';
  std::cout << json({{"type", "stats"}, {"which", "static_before"}, {"lab", stats_json(rep.global_src)}})
                   .dump()
            << '\n';
  std::cout << json({{"type", "stats"}, {"which", "dynamic"}, {"lab", stats_json(rep.global_dst)}})
                   .dump()
            << '\n';
  std::cout << json({{"type", "stats"}, {"which", "static_after"}, {"lab", stats_json(rep.after)}})
                   .dump()
            << '\n';
  for (std::size_t i = 0; i < rep.clusters.size(); ++i) {
    const auto& cl = rep.clusters[i];
    json j = {{"type", "cluster"}, {"id", i}, {"points", cl.points}, {"pairs", cl.pairs},
              {"local", cl.local}};
    if (cl.local) {
      j["src"] = stats_json(cl.src);
      j["dst"] = stats_json(cl.dst);
    }
    std::cout << j.dump() << '\n';
  }
  return 0;
}

int cmd_bench(const GlobalOptions& g, const BenchArgs& a) {
  LoadedConfig lc = load(g);
  PipelineConfig& c = lc.config;
  if (a.width) c.rig.width = *a.width;
  if (a.height) c.rig.height = *a.height;
  if (a.codec) {
    if (*a.codec == "store")
      c.stream.encode.codec = CodecId::Store;
    else if (*a.codec == "deflate")
      c.stream.encode.codec = CodecId::Deflate;
    else
      throw UsageError("--codec must be store or deflate");
  }
  c.validate();
  if (a.frames < 1) throw UsageError("--frames must be >= 1");

  const sim::Scene scene = load_scene_for(lc, "");
  const sim::RigConfig rig = c.rig.to_rig();
  const auto events = render_all(scene, rig, triggers_for(rig, c.duration_s, a.frames), c.threads);

  PipelineOptions opts = pipeline_options(c);
  opts.pacing.fps = 0.0;  // capacity, not pacing, is what is measured
  PipelineResult r;
  if (g.fake_clock) {
    r = run_pipeline_virtual(events, rig.camera, opts);
  } else {
    SteadyClock clock;
    LoopbackPipe pipe;
    std::size_t next = 0;
    auto provider = [&]() -> std::optional<sim::RigEvent> {
      if (next == events.size()) return std::nullopt;
      return events[next++];
    };
    r = run_pipeline_threaded(provider, rig.camera, opts, pipe.sink(), &pipe.source(), clock, false);
  }

  const fs::path metrics_path =
      a.metrics ? *a.metrics : ensure_dir(output_dir(lc, std::nullopt)) / "bench_metrics.jsonl";
  if (metrics_path.has_parent_path()) fs::create_directories(metrics_path.parent_path());
  std::ofstream metrics(metrics_path);
  write_metrics(metrics, r, g.fake_clock);

  std::size_t raw = 0, wire = 0;
  double process_ms = 0;
  for (const auto& m : r.frames) {
    raw += m.raw_bytes;
    wire += m.wire_bytes;
    process_ms += m.process_wall_ms;
  }
  const double fps = r.wall_seconds > 0 ? static_cast<double>(r.latency.size()) / r.wall_seconds : 0;
  json summary = {{"type", "summary"},
                  {"frames", r.frames.size()},
                  {"delivered", r.latency.size()},
                  {"dropped", r.dropped_seqs.size()},
                  {"decode_errors", r.decode_errors},
                  {"width", c.rig.width},
                  {"height", c.rig.height},
                  {"codec", c.stream.encode.codec == CodecId::Store ? "store" : "deflate"},
                  {"raw_bytes", raw},
                  {"wire_bytes", wire},
                  {"compression_ratio", wire ? static_cast<double>(raw) / static_cast<double>(wire) : 0.0},
                  {"wall",
                   {{"seconds", r.wall_seconds},
                    {"throughput_fps", fps},
                    {"process_ms_mean", r.frames.empty() ? 0.0 : process_ms / r.frames.size()}}}};
  if (!r.latency.empty()) {
    const LatencyReport rep = latency_report(r.latency);
    json lat = {{"end_to_end", summary_json(rep.end_to_end)}};
    for (std::size_t i = 0; i < kLatencyStages.size(); ++i)
      lat[kLatencyStages[i]] = summary_json(rep.stages[i]);
    if (g.fake_clock)
      summary["latency_ms"] = lat;
    else
      summary["wall"]["latency_ms"] = lat;
  }
  metrics << summary.dump() << '\n';
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_config_validate(const fs::path& path) {
  const PipelineConfig c = load_config(path);
  c.validate();
  std::cout << path.string() << ": ok\n";
  return 0;
}

int cmd_config_default() {
  std::cout << emit_config(PipelineConfig{});
  return 0;
}

}  // namespace pointstream::cli
