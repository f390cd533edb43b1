#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>

namespace bpr {

// Dense node index in [0, N).
struct NodeId {
  std::size_t value = 0;

  constexpr NodeId() = default;
  constexpr explicit NodeId(std::size_t v) : value(v) {}

  friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

// Dense link index in [0, L). Link ids are assigned in insertion order.
struct LinkId {
  std::size_t value = 0;

  constexpr LinkId() = default;
  constexpr explicit LinkId(std::size_t v) : value(v) {}

  friend constexpr auto operator<=>(LinkId, LinkId) = default;
};

using Slot = std::int64_t;

// Batch counts (queue backlogs, forecasts, link capacities).
using Batches = std::int64_t;

}  // namespace bpr

template <>
struct std::hash<bpr::NodeId> {
  std::size_t operator()(bpr::NodeId n) const noexcept { return std::hash<std::size_t>{}(n.value); }
};

template <>
struct std::hash<bpr::LinkId> {
  std::size_t operator()(bpr::LinkId l) const noexcept { return std::hash<std::size_t>{}(l.value); }
};
