#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bpr/engine.hpp"

namespace bpr {

// L(t): sum over (n, c) of U_(n,c)^2, in batch^2.
Batches lyapunov(const NetworkSnapshot& snapshot);
Batches lyapunov(const QueueMatrix& queues);

struct SlotSample {
  Slot t = 0;
  Batches generated = 0;
  Batches dropped = 0;
  Batches delivered = 0;
  Batches latency_sum = 0;  // slots, over this slot's deliveries
  Batches total_queued = 0;  // after the slot
  Batches lyapunov = 0;      // after the slot

  friend bool operator==(const SlotSample&, const SlotSample&) = default;
};

// Append-only per-run event collector. One record_slot() per simulated slot,
// in order; transit checks are recorded per actuation.
class MetricsCollector {
 public:
  void record_slot(const SlotSample& sample);
  void record_transit(Slot t, std::size_t checked, std::size_t satisfied);
  void record_path(int hops, int excess_hops);

  const std::vector<SlotSample>& series() const { return series_; }
  std::size_t transit_checked() const { return transit_checked_; }
  std::size_t transit_satisfied() const { return transit_satisfied_; }
  int max_hops() const { return max_hops_; }
  std::int64_t excess_hops() const { return excess_hops_; }

 private:
  std::vector<SlotSample> series_;
  std::size_t transit_checked_ = 0;
  std::size_t transit_satisfied_ = 0;
  int max_hops_ = 0;
  std::int64_t excess_hops_ = 0;
};

struct ConfigEcho {
  std::string mode;
  double G = 0;
  double v = 0;
  int T = 0;
  Batches alarm = 0;
  std::string hop_filter;
  std::string forecast;
  std::uint64_t seed = 0;

  friend bool operator==(const ConfigEcho&, const ConfigEcho&) = default;
};

struct MetricsReport {
  ConfigEcho config;
  Slot slots = 0;
  Slot warmup = 0;

  // Aggregates over slots >= warmup.
  double avg_delivery_slots = 0;  // 0 when nothing was delivered
  double overflow_rate = 0;       // dropped batches per second
  double overflow_byte_rate = 0;  // dropped bytes per second
  double throughput = 0;          // delivered bytes per second
  double generation_rate = 0;     // generated bytes per second
  double mean_total_queue = 0;
  double mean_lyapunov = 0;
  double transit_fraction = 1;  // pooled over actuations; 1 when no rule was checked

  // Whole-run ledger.
  Batches generated = 0;
  Batches delivered = 0;
  Batches dropped = 0;
  Batches in_flight = 0;
  int max_hops = 0;
  std::int64_t excess_hops = 0;  // sum of (path hops - shortest hops) over deliveries

  std::vector<SlotSample> series;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

// Throws std::invalid_argument when warmup >= the number of recorded slots.
MetricsReport aggregate(const MetricsCollector& collector, Slot warmup, double slot_sec, double batch_bytes);

}  // namespace bpr
