#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace pointstream {

/// Per-frame pipeline timestamps, ns on one clock.
struct LatencyRecord {
  std::uint64_t frame_seq = 0;
  std::int64_t capture_ns = 0;
  std::int64_t processed_ns = 0;
  std::int64_t sent_ns = 0;
  std::int64_t received_ns = 0;
  std::int64_t decoded_ns = 0;

  std::int64_t end_to_end_ns() const { return decoded_ns - capture_ns; }
};

/// Population statistics in milliseconds.
struct LatencySummary {
  double mean_ms = 0, sd_ms = 0, min_ms = 0, max_ms = 0, p99_ms = 0;
  std::size_t count = 0;

  /// "mean 81.31 ms (SD: 4.85)"
  std::string format() const;
};

inline constexpr std::array<const char*, 4> kLatencyStages = {"process", "send", "transport",
                                                              "decode"};

struct LatencyReport {
  LatencySummary end_to_end;
  /// capture->processed, processed->sent, sent->received, received->decoded
  std::array<LatencySummary, 4> stages;

  /// Multi-line human summary: end-to-end line, then one line per stage.
  std::string format() const;
};

/// Throws ParameterError on empty input and DataError naming the frame when a
/// record's timestamps go backwards.
LatencyReport latency_report(const std::vector<LatencyRecord>& records);

LatencySummary summarize_ms(std::vector<double> values_ms);

}  // namespace pointstream
