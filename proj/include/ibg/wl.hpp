#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "ibg/tensor.hpp"

namespace ibg::wl {

// A refinement pattern: (own label, sorted multiset of neighbor labels),
// in terms of the previous iteration's canonical label ids. This is the
// injective-hash input, kept explicit so signatures are comparable across
// graphs.
using Pattern = std::pair<int, std::vector<int>>;

// Sorted (pattern, count) histogram for one refinement round.
using IterationSummary = std::vector<std::pair<Pattern, std::size_t>>;

// Node labels after some refinement rounds. Labels are canonical: distinct
// patterns are sorted before ids are assigned, so ids do not depend on node
// order.
struct WlLabeling {
  std::vector<int> labels;
  std::size_t iteration = 0;
  std::vector<IterationSummary> history;  // one summary per completed round
};

// node count + per-round pattern histograms until stabilization;
// equal signatures <=> the WL test cannot distinguish the graphs.
struct Signature {
  std::size_t node_count = 0;
  std::vector<IterationSummary> iterations;

  bool operator==(const Signature&) const = default;
};

// Neighbor lists from a weighted adjacency, edge iff weight > 0.
std::vector<std::vector<std::size_t>> binarize(const Tensor& adjacency);

// Uniform labels, per the structural (attribute-free) test.
WlLabeling initial_labeling(std::size_t node_count);

// One round of refinement: new label = canonical id of
// (old label, sorted multiset of neighbor labels).
WlLabeling wl_refine_step(const std::vector<std::vector<std::size_t>>& graph,
                          const WlLabeling& labeling);

// Refines until the partition stabilizes or |V| iterations.
Signature wl_signature(const Tensor& adjacency);

bool wl_equivalent(const Tensor& g1, const Tensor& g2);

// S[i][j] = 1 iff meta-path graphs i and j are WL-equivalent.
struct EquivalenceMatrix {
  std::array<std::array<std::uint8_t, 4>, 4> s{};
  bool at(std::size_t i, std::size_t j) const { return s[i][j] != 0; }
};

EquivalenceMatrix build_equivalence_matrix(const std::array<Tensor, 4>& adjacencies);

}  // namespace ibg::wl
