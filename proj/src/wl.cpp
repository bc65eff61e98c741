#include "ibg/wl.hpp"

#include <algorithm>
#include <map>

#include "ibg/error.hpp"

namespace ibg::wl {

std::vector<std::vector<std::size_t>> binarize(const Tensor& adjacency) {
  if (adjacency.rows() != adjacency.cols()) {
    throw ShapeError("wl: adjacency must be square, got " + adjacency.shape_str());
  }
  const std::size_t n = adjacency.rows();
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && adjacency(i, j) > 0.0) nbrs[i].push_back(j);
    }
  }
  return nbrs;
}

WlLabeling initial_labeling(std::size_t node_count) {
  WlLabeling l;
  l.labels.assign(node_count, 0);
  return l;
}

WlLabeling wl_refine_step(const std::vector<std::vector<std::size_t>>& graph,
                          const WlLabeling& labeling) {
  const std::size_t n = graph.size();

  std::vector<Pattern> patterns(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> nb;
    nb.reserve(graph[i].size());
    for (std::size_t j : graph[i]) nb.push_back(labeling.labels[j]);
    std::sort(nb.begin(), nb.end());
    patterns[i] = {labeling.labels[i], std::move(nb)};
  }

  // canonical ids: the distinct patterns are sorted, then numbered; counts
  // double as the iteration's histogram
  std::map<Pattern, std::size_t> counts;
  for (const Pattern& p : patterns) ++counts[p];
  std::map<Pattern, int> dict;
  int next = 0;
  for (const auto& [pat, cnt] : counts) dict.emplace(pat, next++);

  WlLabeling out;
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.labels[i] = dict.at(patterns[i]);
  out.iteration = labeling.iteration + 1;
  out.history = labeling.history;
  out.history.emplace_back(counts.begin(), counts.end());
  return out;
}

Signature wl_signature(const Tensor& adjacency) {
  const auto graph = binarize(adjacency);
  const std::size_t n = graph.size();
  WlLabeling l = initial_labeling(n);
  for (std::size_t it = 0; it < n; ++it) {
    WlLabeling next = wl_refine_step(graph, l);
    const bool stable = next.labels == l.labels;
    l = std::move(next);
    if (stable) break;
  }
  return Signature{n, l.history};
}

bool wl_equivalent(const Tensor& g1, const Tensor& g2) {
  if (g1.rows() != g2.rows()) return false;
  return wl_signature(g1) == wl_signature(g2);
}

EquivalenceMatrix build_equivalence_matrix(const std::array<Tensor, 4>& adjacencies) {
  std::array<Signature, 4> sig;
  for (std::size_t k = 0; k < 4; ++k) sig[k] = wl_signature(adjacencies[k]);

  EquivalenceMatrix m;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) m.s[i][j] = (sig[i] == sig[j]) ? 1 : 0;
  }
  // signature equality is reflexive, symmetric, and transitive; verify anyway
  for (std::size_t i = 0; i < 4; ++i) {
    if (!m.at(i, i)) throw NumericError("equivalence matrix: diagonal not reflexive");
    for (std::size_t j = 0; j < 4; ++j) {
      if (m.at(i, j) != m.at(j, i)) throw NumericError("equivalence matrix: not symmetric");
      for (std::size_t k = 0; k < 4; ++k) {
        if (m.at(i, j) && m.at(j, k) && !m.at(i, k)) {
          throw NumericError("equivalence matrix: not transitive");
        }
      }
    }
  }
  return m;
}

}  // namespace ibg::wl
