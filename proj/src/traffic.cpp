#include "bpr/traffic.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace bpr {

TrafficSchedule::TrafficSchedule(std::size_t node_count, const TrafficConfig& config, Slot length)
    : node_count_(node_count), length_(length), rates_(node_count) {
  if (node_count < 2) throw std::invalid_argument("traffic needs at least two nodes");
  if (length < 0) throw std::invalid_argument("schedule length must be non-negative");
  if (!(config.base_rate >= 0)) throw std::invalid_argument("base rate must be non-negative");
  if (!(config.heterogeneity >= 0 && config.heterogeneity <= 1))
    throw std::invalid_argument("heterogeneity must lie in [0, 1]");

  // std::mt19937_64 is portable; the distributions below are implemented by
  // hand because libstdc++/libc++ distributions are not bit-compatible.
  std::mt19937_64 rng(config.seed);
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  const double G = config.base_rate;
  const double spread = config.heterogeneity * G;
  for (double& r : rates_) r = spread > 0 ? (G - spread) + 2 * spread * unit() : G;

  offsets_.reserve(static_cast<std::size_t>(length) * node_count + 1);
  for (Slot t = 0; t < length; ++t) {
    for (std::size_t n = 0; n < node_count; ++n) {
      offsets_.push_back(dests_.size());
      const double whole = std::floor(rates_[n]);
      std::int64_t count = static_cast<std::int64_t>(whole);
      const double frac = rates_[n] - whole;
      if (frac > 0 && unit() < frac) ++count;
      for (std::int64_t k = 0; k < count; ++k) {
        // Uniform over the N - 1 other nodes.
        std::size_t pick = static_cast<std::size_t>(unit() * static_cast<double>(node_count - 1));
        if (pick >= node_count - 1) pick = node_count - 2;
        if (pick >= n) ++pick;
        dests_.push_back(NodeId{pick});
      }
    }
  }
  offsets_.push_back(dests_.size());
}

std::span<const NodeId> TrafficSchedule::batches(Slot t, NodeId n) const {
  if (t < 0 || t >= length_) throw std::out_of_range("slot " + std::to_string(t) + " is outside the traffic schedule");
  const std::size_t idx = static_cast<std::size_t>(t) * node_count_ + n.value;
  return std::span<const NodeId>(dests_).subspan(offsets_[idx], offsets_[idx + 1] - offsets_[idx]);
}

}  // namespace bpr
