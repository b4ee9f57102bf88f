#pragma once

#include "pointstream/clock.hpp"
#include "pointstream/codec.hpp"
#include "pointstream/color_transfer.hpp"
#include "pointstream/fusion.hpp"
#include "pointstream/latency.hpp"
#include "pointstream/simulator.hpp"
#include "pointstream/upsample.hpp"
#include "pointstream/wire.hpp"

#include <deque>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace pointstream {

/// Sender-side per-frame cleanup: motion mask against the previous camera
/// frame, 3-scan fusion, occlusion culling, densification and defocus.
class FrameProcessor {
 public:
  FrameProcessor(SensorModel camera, FusionParams fusion, BilateralParams upsample,
                 int defocus_radius);

  struct Output {
    RgbdFrame frame;
    std::size_t fused_points = 0;
    std::size_t culled_points = 0;
    std::size_t dynamic_pixels = 0;
  };

  /// Frames are numbered in call order from 0.
  Output process(const sim::RigEvent& event);

 private:
  SensorModel camera_;
  FusionParams fusion_;
  BilateralParams upsample_;
  int defocus_radius_;
  ScanWindow window_;
  std::deque<MotionMask> masks_;
  std::optional<RgbImage> prev_rgb_;
  std::uint64_t next_seq_ = 0;
};

/// Artificial extra time spent in each latency stage.
struct StageDelays {
  std::int64_t process_ns = 0;
  std::int64_t send_ns = 0;
  std::int64_t transport_ns = 0;
  std::int64_t decode_ns = 0;
};

struct PipelineOptions {
  FusionParams fusion;
  BilateralParams upsample;
  int defocus_radius = 4;
  EncodeOptions encode;
  PacingOptions pacing;
  StageDelays delays;
};

struct FrameMetrics {
  std::uint64_t frame_seq = 0;
  std::int64_t capture_ts_ns = 0;
  std::size_t fused_points = 0;
  std::size_t culled_points = 0;
  std::size_t valid_depth = 0;
  std::size_t raw_bytes = 0;    ///< uncompressed rgb + u16 depth
  std::size_t rgb_bytes = 0;    ///< compressed payload lengths
  std::size_t depth_bytes = 0;
  std::size_t wire_bytes = 0;   ///< including length prefix
  std::uint32_t crc32 = 0;
  double process_wall_ms = 0;   ///< measured compute time, never deterministic
};

struct PipelineResult {
  std::vector<FrameMetrics> frames;     ///< one per processed frame
  std::vector<LatencyRecord> latency;   ///< one per delivered frame
  std::vector<std::uint64_t> dropped_seqs;
  std::size_t decode_errors = 0;
  double wall_seconds = 0;
};

/// Called for every decoded frame on the receiving side.
using FrameCallback = std::function<void(const RgbdFrame&, const LatencyRecord&)>;
using ErrorCallback = std::function<void(const DecodeError&)>;

/// Deterministic run on virtual time. Stage timestamps come from the capture
/// schedule and the injected delays only, so the result, the bytes written to
/// `sink` and the delivered frames depend on nothing but the inputs. Frames go
/// through encode, the paced drop-oldest sender, the wire and decode.
PipelineResult run_pipeline_virtual(std::span<const sim::RigEvent> events,
                                    const SensorModel& camera, const PipelineOptions& opts,
                                    ByteSink* sink = nullptr, const FrameCallback& on_frame = {},
                                    const ErrorCallback& on_error = {});

/// Produces the next capture event, or nullopt when the run is over.
using EventProvider = std::function<std::optional<sim::RigEvent>()>;

/// Threaded run on a real clock: processing, a drop-oldest send queue of
/// `pacing.queue_capacity`, and the paced sender run concurrently. When
/// `loopback` is given a receiver thread decodes from it and the result holds
/// full latency records; otherwise only frames/drops are filled in. With
/// `live` set, event i is held back until its capture time relative to the
/// first event, emulating a live sensor.
PipelineResult run_pipeline_threaded(const EventProvider& events, const SensorModel& camera,
                                     const PipelineOptions& opts, ByteSink& sink,
                                     ByteSource* loopback, Clock& clock, bool live,
                                     const FrameCallback& on_frame = {},
                                     const ErrorCallback& on_error = {});

/// Fires once per elapsed interval boundary, measured from the first poll.
/// Boundaries skipped between polls collapse into one firing.
class RecolorScheduler {
 public:
  explicit RecolorScheduler(std::int64_t interval_ns);
  bool poll(std::int64_t now_ns);
  std::size_t fired() const { return fired_; }

 private:
  std::int64_t interval_;
  std::optional<std::int64_t> next_;
  std::size_t fired_ = 0;
};

struct ReceiverSettings {
  TransferParams transfer;
  std::int64_t recolor_interval_ns = 900'000'000'000;
  std::size_t recolor_frames = 3;
  std::size_t snapshot_interval = 30;
  std::filesystem::path output_dir;  ///< empty: snapshots are not written
};

/// Visualization-side state: back-projects decoded frames, keeps the static
/// cloud recoloured against recent dynamic data and writes merged snapshots.
class ReceiverSession {
 public:
  ReceiverSession(PointCloud static_cloud, SensorModel camera, ReceiverSettings settings);

  /// Handles one decoded frame.
  void on_frame(const RgbdFrame& frame);
  void on_error(const DecodeError& error);
  /// Runs a recolour when the scheduler says one is due.
  void tick(std::int64_t now_ns);
  /// Recolours the static cloud from its original colours. Returns false
  /// (keeping the current colours) when there is too little overlap.
  bool recolor();

  const PointCloud& static_cloud() const { return static_; }
  const PointCloud& latest_dynamic() const { return latest_; }
  std::size_t frames() const { return frames_; }
  std::size_t errors() const { return errors_; }
  std::size_t recolor_attempts() const { return recolor_attempts_; }
  std::size_t recolor_successes() const { return recolor_successes_; }
  const std::vector<std::filesystem::path>& snapshots() const { return snapshots_; }
  const std::optional<TransferReport>& last_report() const { return last_report_; }

 private:
  PointCloud original_;
  PointCloud static_;
  SensorModel camera_;
  ReceiverSettings settings_;
  RecolorScheduler scheduler_;
  std::deque<PointCloud> recent_;
  PointCloud latest_;
  std::size_t frames_ = 0, errors_ = 0;
  std::size_t recolor_attempts_ = 0, recolor_successes_ = 0;
  std::vector<std::filesystem::path> snapshots_;
  std::optional<TransferReport> last_report_;
};

}  // namespace pointstream
