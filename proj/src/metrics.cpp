#include "bpr/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace bpr {

Batches lyapunov(const QueueMatrix& queues) {
  Batches sum = 0;
  for (Batches u : queues.cells()) sum += u * u;
  return sum;
}

Batches lyapunov(const NetworkSnapshot& snapshot) { return lyapunov(snapshot.queues); }

void MetricsCollector::record_slot(const SlotSample& sample) {
  if (sample.t != static_cast<Slot>(series_.size())) throw std::logic_error("slot samples must be recorded in order");
  series_.push_back(sample);
}

void MetricsCollector::record_transit(Slot, std::size_t checked, std::size_t satisfied) {
  transit_checked_ += checked;
  transit_satisfied_ += satisfied;
}

void MetricsCollector::record_path(int hops, int excess_hops) {
  max_hops_ = std::max(max_hops_, hops);
  excess_hops_ += excess_hops;
}

MetricsReport aggregate(const MetricsCollector& collector, Slot warmup, double slot_sec, double batch_bytes) {
  const auto& series = collector.series();
  const Slot slots = static_cast<Slot>(series.size());
  if (warmup < 0 || warmup >= slots)
    throw std::invalid_argument("warmup of " + std::to_string(warmup) + " slots leaves nothing of a " +
                                std::to_string(slots) + "-slot run");

  MetricsReport r;
  r.slots = slots;
  r.warmup = warmup;

  Batches gen = 0, drop = 0, del = 0, latency = 0;
  double queue_sum = 0, lyap_sum = 0;
  for (const SlotSample& s : series) {
    r.generated += s.generated;
    r.dropped += s.dropped;
    r.delivered += s.delivered;
    if (s.t < warmup) continue;
    gen += s.generated;
    drop += s.dropped;
    del += s.delivered;
    latency += s.latency_sum;
    queue_sum += static_cast<double>(s.total_queued);
    lyap_sum += static_cast<double>(s.lyapunov);
  }
  r.in_flight = series.back().total_queued;

  const double measured = static_cast<double>(slots - warmup);
  const double seconds = measured * slot_sec;
  r.avg_delivery_slots = del > 0 ? static_cast<double>(latency) / static_cast<double>(del) : 0.0;
  r.overflow_rate = static_cast<double>(drop) / seconds;
  r.overflow_byte_rate = r.overflow_rate * batch_bytes;
  r.throughput = static_cast<double>(del) * batch_bytes / seconds;
  r.generation_rate = static_cast<double>(gen) * batch_bytes / seconds;
  r.mean_total_queue = queue_sum / measured;
  r.mean_lyapunov = lyap_sum / measured;
  r.transit_fraction = collector.transit_checked() > 0 ? static_cast<double>(collector.transit_satisfied()) /
                                                             static_cast<double>(collector.transit_checked())
                                                       : 1.0;
  r.max_hops = collector.max_hops();
  r.excess_hops = collector.excess_hops();
  r.series = series;
  return r;
}

}  // namespace bpr
