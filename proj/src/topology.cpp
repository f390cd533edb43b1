#include "bpr/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>

namespace bpr {

Topology::Topology(std::size_t node_count, std::vector<Link> links, std::vector<MultiLinkGroup> multilinks,
                   PeeringPolicy policy)
    : node_count_(node_count),
      links_(std::move(links)),
      multilinks_(std::move(multilinks)),
      policy_(std::move(policy)),
      out_(node_count),
      in_(node_count) {
  if (node_count_ == 0) throw std::invalid_argument("topology needs at least one node");

  for (std::size_t i = 0; i < links_.size(); ++i) {
    const Link& l = links_[i];
    if (l.id.value != i) throw std::invalid_argument("link id " + std::to_string(l.id.value) + " at position " + std::to_string(i));
    if (l.source.value >= node_count_ || l.dest.value >= node_count_)
      throw std::invalid_argument("link " + std::to_string(i) + " references an unknown node");
    if (l.source == l.dest) throw std::invalid_argument("link " + std::to_string(i) + " is a self-loop");
    if (l.bandwidth < 1) throw std::invalid_argument("link " + std::to_string(i) + " has bandwidth < 1 batch/slot");
    out_[l.source.value].push_back(l.id);
    in_[l.dest.value].push_back(l.id);
  }

  for (const MultiLinkGroup& g : multilinks_) {
    if (g.members.size() < 2) throw std::invalid_argument("multi-link group needs at least two members");
    for (LinkId id : g.members) {
      if (id.value >= links_.size()) throw std::invalid_argument("multi-link member " + std::to_string(id.value) + " does not exist");
      const Link& l = links_[id.value];
      if (l.source != g.source || l.dest != g.dest)
        throw std::invalid_argument("multi-link member " + std::to_string(id.value) + " does not match the group endpoints");
    }
    std::vector<LinkId> sorted = g.members;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("multi-link group lists a member twice");
  }

  // All-pairs hop counts, one BFS per source.
  hops_.assign(node_count_ * node_count_, kUnreachable);
  std::deque<std::size_t> frontier;
  for (std::size_t s = 0; s < node_count_; ++s) {
    int* row = &hops_[s * node_count_];
    row[s] = 0;
    frontier.assign(1, s);
    while (!frontier.empty()) {
      std::size_t u = frontier.front();
      frontier.pop_front();
      for (LinkId id : out_[u]) {
        std::size_t v = links_[id.value].dest.value;
        if (row[v] == kUnreachable) {
          row[v] = row[u] + 1;
          frontier.push_back(v);
        }
      }
    }
  }
}

bool Topology::connected() const {
  return std::find(hops_.begin(), hops_.end(), kUnreachable) == hops_.end();
}

int Topology::diameter() const {
  return hops_.empty() ? 0 : *std::max_element(hops_.begin(), hops_.end());
}

Batches batches_per_slot(double bandwidth_bytes_per_sec, double batch_bytes, double slot_sec) {
  if (!(bandwidth_bytes_per_sec > 0) || !(batch_bytes > 0) || !(slot_sec > 0))
    throw std::invalid_argument("bandwidth, batch size and slot duration must be positive");
  // Nudge before flooring so that e.g. 2e9 * 1 / 1e8 lands on 20, not 19.
  double exact = bandwidth_bytes_per_sec * slot_sec / batch_bytes;
  return static_cast<Batches>(std::floor(exact * (1.0 + 1e-12)));
}

Topology build_grid(int rows, int cols, double bandwidth_bytes_per_sec, double batch_bytes, double slot_sec) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("grid dimensions must be positive");
  if (rows * cols < 2) throw std::invalid_argument("grid needs at least two nodes");
  Batches bw = batches_per_slot(bandwidth_bytes_per_sec, batch_bytes, slot_sec);
  if (bw < 1) throw std::invalid_argument("link bandwidth is below one batch per slot");

  auto index = [cols](int i, int j) { return static_cast<std::size_t>(i * cols + j); };
  std::vector<Link> links;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      // Neighbors in ascending index order: up, left, right, down.
      const std::pair<int, int> nbrs[] = {{i - 1, j}, {i, j - 1}, {i, j + 1}, {i + 1, j}};
      for (auto [ni, nj] : nbrs) {
        if (ni < 0 || nj < 0 || ni >= rows || nj >= cols) continue;
        links.push_back(Link{LinkId{links.size()}, NodeId{index(i, j)}, NodeId{index(ni, nj)}, bw});
      }
    }
  }
  return Topology(static_cast<std::size_t>(rows * cols), std::move(links));
}

}  // namespace bpr
