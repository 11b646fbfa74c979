#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "xferlag/features.hpp"

namespace testutil {

// Plain numeric matrix with columns x0..x{m-1}; targets left empty.
inline xferlag::FeatureMatrix numeric_matrix(std::size_t n, std::size_t m,
                                             const std::vector<double>& row_major) {
  xferlag::FeatureMatrix x;
  x.n_rows = n;
  for (std::size_t c = 0; c < m; ++c) {
    x.columns.push_back({"A.x" + std::to_string(c), xferlag::FeatureGroup::A, "numeric", {}});
  }
  x.values = row_major;
  x.missing.assign(n * m, 0);
  for (std::size_t i = 0; i < n; ++i) {
    x.event_ids.push_back(i);
    x.start_times.push_back(static_cast<std::int64_t>(i));
  }
  return x;
}

inline std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace testutil
