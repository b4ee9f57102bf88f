#include "pointstream/latency.hpp"

#include "pointstream/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace pointstream {

std::string LatencySummary::format() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "mean %.2f ms (SD: %.2f)", mean_ms, sd_ms);
  return buf;
}

std::string LatencyReport::format() const {
  std::string out = "end_to_end " + end_to_end.format();
  char buf[160];
  std::snprintf(buf, sizeof buf, " min %.2f max %.2f p99 %.2f n %zu\n", end_to_end.min_ms,
                end_to_end.max_ms, end_to_end.p99_ms, end_to_end.count);
  out += buf;
  for (std::size_t i = 0; i < stages.size(); ++i)
    out += std::string(kLatencyStages[i]) + " " + stages[i].format() + "\n";
  return out;
}

LatencySummary summarize_ms(std::vector<double> v) {
  if (v.empty()) throw ParameterError("latency summary needs at least one sample");
  LatencySummary s;
  s.count = v.size();
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean_ms = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean_ms) * (x - s.mean_ms);
  s.sd_ms = std::sqrt(ss / static_cast<double>(v.size()));
  std::sort(v.begin(), v.end());
  s.min_ms = v.front();
  s.max_ms = v.back();
  // Nearest-rank percentile.
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(v.size())));
  s.p99_ms = v[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

LatencyReport latency_report(const std::vector<LatencyRecord>& records) {
  if (records.empty()) throw ParameterError("latency_report: no records");
  std::vector<double> e2e;
  std::array<std::vector<double>, 4> stage;
  e2e.reserve(records.size());
  for (const auto& r : records) {
    const std::int64_t ts[5] = {r.capture_ns, r.processed_ns, r.sent_ns, r.received_ns,
                                r.decoded_ns};
    for (int i = 0; i < 4; ++i) {
      if (ts[i + 1] < ts[i])
        throw DataError("latency_report: frame " + std::to_string(r.frame_seq) +
                        " has out-of-order timestamps (" + kLatencyStages[i] + " stage)");
      stage[i].push_back(static_cast<double>(ts[i + 1] - ts[i]) / 1e6);
    }
    e2e.push_back(static_cast<double>(r.end_to_end_ns()) / 1e6);
  }
  LatencyReport rep;
  rep.end_to_end = summarize_ms(std::move(e2e));
  for (int i = 0; i < 4; ++i) rep.stages[i] = summarize_ms(std::move(stage[i]));
  return rep;
}

}  // namespace pointstream
