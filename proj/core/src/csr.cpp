#include "geowealth/csr.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "geowealth/error.hpp"

namespace geowealth {

Csr Csr::empty(std::size_t n) {
  Csr csr;
  csr.offsets.assign(n + 1, 0);
  return csr;
}

Csr Csr::from_undirected(std::size_t n, std::span<const WeightedEdge> edges) {
  std::vector<WeightedEdge> directed;
  directed.reserve(2 * edges.size());
  for (const auto& e : edges) {
    if (e.src >= n || e.dst >= n) throw ValidationError("edge endpoint out of range");
    if (e.src == e.dst) throw ValidationError("self-edge on node " + std::to_string(e.src));
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw ValidationError("edge weight must be positive and finite");
    }
    directed.push_back(e);
    directed.push_back(WeightedEdge{e.dst, e.src, e.weight});
  }
  std::sort(directed.begin(), directed.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });

  Csr csr = empty(n);
  csr.columns.reserve(directed.size());
  csr.weights.reserve(directed.size());
  for (std::size_t i = 0; i < directed.size(); ++i) {
    const auto& e = directed[i];
    if (i > 0 && directed[i - 1].src == e.src && directed[i - 1].dst == e.dst) {
      if (directed[i - 1].weight != e.weight) {
        throw ValidationError("conflicting weights for edge " + std::to_string(e.src) + "-" +
                              std::to_string(e.dst));
      }
      continue;
    }
    csr.columns.push_back(e.dst);
    csr.weights.push_back(e.weight);
    ++csr.offsets[e.src + 1];
  }
  for (std::size_t r = 0; r < n; ++r) csr.offsets[r + 1] += csr.offsets[r];
  return csr;
}

void Csr::validate() const {
  if (offsets.empty() || offsets.front() != 0) throw ValidationError("CSR offsets must start at 0");
  if (offsets.back() != columns.size() || columns.size() != weights.size()) {
    throw ValidationError("CSR offsets/columns/weights lengths disagree");
  }
  const std::size_t n = num_rows();
  for (std::size_t r = 0; r < n; ++r) {
    if (offsets[r + 1] < offsets[r]) throw ValidationError("CSR offsets decrease at row " + std::to_string(r));
    for (std::size_t p = offsets[r]; p < offsets[r + 1]; ++p) {
      if (columns[p] >= n) throw ValidationError("CSR column out of range in row " + std::to_string(r));
      if (columns[p] == r) throw ValidationError("CSR self-edge in row " + std::to_string(r));
      if (p > offsets[r] && columns[p] <= columns[p - 1]) {
        throw ValidationError("CSR columns not strictly increasing in row " + std::to_string(r));
      }
      if (!(weights[p] > 0.0) || !std::isfinite(weights[p])) {
        throw ValidationError("CSR weight not positive and finite in row " + std::to_string(r));
      }
    }
  }
}

double edge_weight(const Csr& csr, std::size_t row, std::size_t col) {
  const auto cols = csr.neighbors(row);
  const auto it = std::lower_bound(cols.begin(), cols.end(), col);
  if (it == cols.end() || *it != col) return 0.0;
  return csr.weights[csr.offsets[row] + static_cast<std::size_t>(it - cols.begin())];
}

bool Csr::is_symmetric() const {
  for (std::size_t r = 0; r < num_rows(); ++r) {
    for (std::size_t p = offsets[r]; p < offsets[r + 1]; ++p) {
      if (edge_weight(*this, columns[p], r) != weights[p]) return false;
    }
  }
  return true;
}

}  // namespace geowealth
