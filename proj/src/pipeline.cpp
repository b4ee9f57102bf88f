#include "pointstream/pipeline.hpp"

#include "pointstream/errors.hpp"
#include "pointstream/ply.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

namespace pointstream {

FrameProcessor::FrameProcessor(SensorModel camera, FusionParams fusion, BilateralParams upsample,
                               int defocus_radius)
    : camera_(std::move(camera)),
      fusion_(fusion),
      upsample_(upsample),
      defocus_radius_(defocus_radius) {
  camera_.intrinsics.validate();
  fusion_.validate();
  upsample_.validate();
  if (defocus_radius_ < 0) throw ParameterError("defocus radius must be >= 0");
}

FrameProcessor::Output FrameProcessor::process(const sim::RigEvent& event) {
  const RgbImage& rgb = event.frame;
  const auto& k = camera_.intrinsics;
  if (rgb.width() != k.width || rgb.height() != k.height)
    throw ParameterError("camera frame does not match the camera intrinsics");

  // The first frame has nothing to difference against and counts as static.
  MotionMask mask = prev_rgb_ ? motion_mask(*prev_rgb_, rgb, fusion_)
                              : MotionMask(k.width, k.height, 0);
  prev_rgb_ = rgb;

  const std::uint8_t sensor =
      event.scan.sensor_ids && !event.scan.sensor_ids->empty()
          ? event.scan.sensor_ids->front()
          : static_cast<std::uint8_t>(event.lidar);
  const bool evicts = window_.size() == ScanWindow::kCapacity;
  window_.push({event.scan, event.timestamp_ns, sensor});
  if (evicts) masks_.pop_front();
  Output out;
  out.dynamic_pixels = static_cast<std::size_t>(
      std::count(mask.pixels().begin(), mask.pixels().end(), std::uint8_t{1}));
  masks_.push_back(std::move(mask));

  std::map<std::uint8_t, SensorModel> cams;
  for (const auto& e : window_.entries()) cams.emplace(e.sensor_id, camera_);
  const std::vector<MotionMask> masks(masks_.begin(), masks_.end());
  const PointCloud fused = fuse_window(window_, masks, cams);
  const PointCloud culled = occlusion_cull(fused, camera_, fusion_.occlusion_margin);
  out.fused_points = fused.size();
  out.culled_points = culled.size();

  out.frame = densify_frame(culled, rgb, camera_, upsample_);
  out.frame.capture_ts_ns = event.timestamp_ns;
  out.frame.frame_seq = next_seq_++;
  out.frame.camera_id = 0;
  if (defocus_radius_ > 0) {
    out.frame.rgb = defocus(out.frame.rgb, defocus_radius_);
    out.frame.defocused = true;
  }
  return out;
}

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
      .count();
}

FrameMetrics metrics_for(const FrameProcessor::Output& o, std::span<const std::uint8_t> blob) {
  const FrameHeader h = FrameHeader::unpack(blob);
  FrameMetrics m;
  m.frame_seq = o.frame.frame_seq;
  m.capture_ts_ns = o.frame.capture_ts_ns;
  m.fused_points = o.fused_points;
  m.culled_points = o.culled_points;
  m.valid_depth = static_cast<std::size_t>(
      std::count_if(o.frame.depth.pixels().begin(), o.frame.depth.pixels().end(),
                    [](double d) { return d > 0.0; }));
  m.raw_bytes = o.frame.rgb.pixels().size() * 3 + o.frame.depth.pixels().size() * 2;
  m.rgb_bytes = h.rgb_len;
  m.depth_bytes = h.depth_len;
  m.wire_bytes = blob.size() + 4;
  m.crc32 = h.crc32;
  return m;
}

}  // namespace

PipelineResult run_pipeline_virtual(std::span<const sim::RigEvent> events,
                                    const SensorModel& camera, const PipelineOptions& opts,
                                    ByteSink* sink, const FrameCallback& on_frame,
                                    const ErrorCallback& on_error) {
  const auto wall_start = std::chrono::steady_clock::now();
  PipelineResult result;
  if (events.empty()) {
    if (sink) sink->close();
    return result;
  }
  FrameProcessor proc(camera, opts.fusion, opts.upsample, opts.defocus_radius);

  // Each stage is a single server: it starts a frame once the frame has
  // arrived and the previous frame has left.
  const std::int64_t ts0 = events.front().timestamp_ns;
  std::vector<OutgoingFrame> outgoing;
  std::vector<LatencyRecord> stamps;
  std::int64_t process_free = std::numeric_limits<std::int64_t>::min();
  for (const auto& ev : events) {
    const auto t = std::chrono::steady_clock::now();
    auto out = proc.process(ev);
    auto blob = encode_frame(out.frame, opts.encode);
    FrameMetrics m = metrics_for(out, blob);
    m.process_wall_ms = elapsed_ms(t);
    result.frames.push_back(m);

    LatencyRecord r;
    r.frame_seq = out.frame.frame_seq;
    r.capture_ns = ev.timestamp_ns - ts0;
    r.processed_ns = std::max(r.capture_ns, process_free) + opts.delays.process_ns;
    process_free = r.processed_ns;
    stamps.push_back(r);
    outgoing.push_back({std::move(blob), r.frame_seq, r.processed_ns});
  }

  MemorySink wire;
  FakeClock clock(outgoing.front().ready_ns);
  const SendStats sent = send_frames(outgoing, wire, opts.pacing, clock);
  outgoing.clear();
  result.dropped_seqs = sent.dropped_seqs;
  for (const auto& s : sent.sent) stamps[s.frame_seq].sent_ns = s.sent_ns + opts.delays.send_ns;
  if (sink) {
    sink->write(wire.bytes());
    sink->close();
  }

  MemorySource source(wire.bytes());
  FrameReader reader(source);
  std::int64_t decode_free = std::numeric_limits<std::int64_t>::min();
  while (auto item = reader.next()) {
    if (item->error) {
      ++result.decode_errors;
      if (on_error) on_error(*item->error);
      continue;
    }
    RgbdFrame frame;
    try {
      frame = decode_frame(item->blob);
    } catch (const DecodeError& e) {
      ++result.decode_errors;
      if (on_error) on_error(e);
      continue;
    }
    if (frame.frame_seq >= stamps.size()) throw DataError("received a frame that was never sent");
    LatencyRecord r = stamps[frame.frame_seq];
    r.received_ns = r.sent_ns + opts.delays.transport_ns;
    r.decoded_ns = std::max(r.received_ns, decode_free) + opts.delays.decode_ns;
    decode_free = r.decoded_ns;
    result.latency.push_back(r);
    if (on_frame) on_frame(frame, r);
  }
  result.wall_seconds = elapsed_ms(wall_start) / 1e3;
  return result;
}

PipelineResult run_pipeline_threaded(const EventProvider& events, const SensorModel& camera,
                                     const PipelineOptions& opts, ByteSink& sink,
                                     ByteSource* loopback, Clock& clock, bool live,
                                     const FrameCallback& on_frame,
                                     const ErrorCallback& on_error) {
  const auto wall_start = std::chrono::steady_clock::now();
  PipelineResult result;
  FrameProcessor proc(camera, opts.fusion, opts.upsample, opts.defocus_radius);

  std::mutex mu;
  std::map<std::uint64_t, LatencyRecord> stamps;
  BoundedQueue<OutgoingFrame> queue(opts.pacing.queue_capacity, true);

  std::exception_ptr sender_error;
  std::thread sender([&] {
    try {
      const bool paced = opts.pacing.fps > 0.0;
      std::optional<SlotSchedule> schedule;
      std::int64_t slot = 0;
      for (;;) {
        if (schedule) clock.sleep_until(schedule->deadline(slot));
        auto item = queue.pop();
        if (!item) break;
        if (paced && !schedule) {
          schedule.emplace(clock.now_ns(), opts.pacing.fps);
          slot = 0;
        } else if (schedule && clock.now_ns() > schedule->deadline(slot)) {
          // Late for this slot: send now and count the slot as the one in progress.
          slot = std::max(slot, schedule->first_slot_at_or_after(clock.now_ns()) - 1);
        }
        if (opts.delays.send_ns > 0) clock.sleep_for(opts.delays.send_ns);
        {
          std::lock_guard lock(mu);
          stamps[item->frame_seq].sent_ns = clock.now_ns();
        }
        write_framed(sink, item->blob);
        ++slot;
      }
    } catch (...) {
      sender_error = std::current_exception();
      queue.close();
    }
    sink.close();
  });

  std::exception_ptr receiver_error;
  std::thread receiver;
  if (loopback) {
    receiver = std::thread([&] {
      try {
        FrameReader reader(*loopback);
        while (auto item = reader.next()) {
          if (opts.delays.transport_ns > 0) clock.sleep_for(opts.delays.transport_ns);
          const std::int64_t received = clock.now_ns();
          std::optional<RgbdFrame> frame;
          if (item->error) {
            std::lock_guard lock(mu);
            ++result.decode_errors;
            if (on_error) on_error(*item->error);
            continue;
          }
          try {
            frame = decode_frame(item->blob);
          } catch (const DecodeError& e) {
            std::lock_guard lock(mu);
            ++result.decode_errors;
            if (on_error) on_error(e);
            continue;
          }
          if (opts.delays.decode_ns > 0) clock.sleep_for(opts.delays.decode_ns);
          const std::int64_t decoded = clock.now_ns();
          LatencyRecord r;
          {
            std::lock_guard lock(mu);
            r = stamps[frame->frame_seq];
            r.received_ns = received;
            r.decoded_ns = decoded;
            result.latency.push_back(r);
          }
          if (on_frame) on_frame(*frame, r);
        }
      } catch (...) {
        receiver_error = std::current_exception();
      }
    });
  }

  std::exception_ptr producer_error;
  try {
    const std::int64_t start = clock.now_ns();
    std::optional<std::int64_t> ts0;
    while (auto ev = events()) {
      if (!ts0) ts0 = ev->timestamp_ns;
      std::int64_t capture;
      if (live) {
        capture = start + (ev->timestamp_ns - *ts0);
        clock.sleep_until(capture);
      } else {
        capture = clock.now_ns();
      }
      const auto t = std::chrono::steady_clock::now();
      auto out = proc.process(*ev);
      auto blob = encode_frame(out.frame, opts.encode);
      FrameMetrics m = metrics_for(out, blob);
      m.process_wall_ms = elapsed_ms(t);
      if (opts.delays.process_ns > 0) clock.sleep_for(opts.delays.process_ns);
      const std::uint64_t seq = out.frame.frame_seq;
      {
        std::lock_guard lock(mu);
        auto& r = stamps[seq];
        r.frame_seq = seq;
        r.capture_ns = capture;
        r.processed_ns = clock.now_ns();
        result.frames.push_back(m);
      }
      if (auto evicted = queue.push({std::move(blob), seq, clock.now_ns()})) {
        std::lock_guard lock(mu);
        result.dropped_seqs.push_back(evicted->frame_seq);
      }
      if (sender_error) break;
    }
  } catch (...) {
    producer_error = std::current_exception();
  }
  queue.close();
  sender.join();
  if (receiver.joinable()) receiver.join();
  if (producer_error) std::rethrow_exception(producer_error);
  if (sender_error) std::rethrow_exception(sender_error);
  if (receiver_error) std::rethrow_exception(receiver_error);
  result.wall_seconds = elapsed_ms(wall_start) / 1e3;
  return result;
}

RecolorScheduler::RecolorScheduler(std::int64_t interval_ns) : interval_(interval_ns) {
  if (interval_ns <= 0) throw ParameterError("recolor interval must be > 0");
}

bool RecolorScheduler::poll(std::int64_t now_ns) {
  if (!next_) {
    next_ = now_ns + interval_;
    return false;
  }
  if (now_ns < *next_) return false;
  const std::int64_t missed = (now_ns - *next_) / interval_;
  *next_ += (missed + 1) * interval_;
  ++fired_;
  return true;
}

ReceiverSession::ReceiverSession(PointCloud static_cloud, SensorModel camera,
                                 ReceiverSettings settings)
    : original_(std::move(static_cloud)),
      static_(original_),
      camera_(std::move(camera)),
      settings_(std::move(settings)),
      scheduler_(settings_.recolor_interval_ns) {
  if (!original_.has_colors()) throw ParameterError("static cloud must be coloured");
  if (settings_.snapshot_interval == 0) throw ParameterError("snapshot interval must be >= 1");
  if (settings_.recolor_frames == 0) throw ParameterError("recolor frame count must be >= 1");
  settings_.transfer.validate();
}

void ReceiverSession::on_frame(const RgbdFrame& frame) {
  latest_ = backproject(frame.depth, &frame.rgb, camera_);
  recent_.push_back(latest_);
  while (recent_.size() > settings_.recolor_frames) recent_.pop_front();
  ++frames_;
  if (frames_ % settings_.snapshot_interval != 0) return;

  char name[32];
  std::snprintf(name, sizeof name, "snapshot_%06zu.ply", frames_ / settings_.snapshot_interval);
  const auto path = settings_.output_dir / name;
  if (!settings_.output_dir.empty()) {
    PointCloud merged = static_;
    merged.append(latest_);
    write_ply(merged, path);
  }
  snapshots_.push_back(path);
}

void ReceiverSession::on_error(const DecodeError&) { ++errors_; }

void ReceiverSession::tick(std::int64_t now_ns) {
  if (scheduler_.poll(now_ns)) recolor();
}

bool ReceiverSession::recolor() {
  ++recolor_attempts_;
  PointCloud dynamic;
  for (const auto& c : recent_) dynamic.append(c);
  if (dynamic.empty()) return false;
  try {
    auto res = transfer_colors(original_, dynamic, settings_.transfer);
    static_ = std::move(res.cloud);
    last_report_ = std::move(res.report);
  } catch (const InsufficientOverlap&) {
    return false;
  }
  ++recolor_successes_;
  return true;
}

}  // namespace pointstream
