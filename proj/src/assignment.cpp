// Copyright 2026 The dmasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dmasr/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dmasr/error.hpp"

namespace dmasr {

CostMatrix::CostMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ValidationError("ragged cost matrix");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

namespace {

// Hungarian method with row/column potentials, O(n^2 m) for n <= m.
// `rows` and `cols` select a submatrix of `m`; when `transpose` is set the
// roles are swapped so the shorter side drives the outer loop.
struct SubProblem {
  const CostMatrix* m;
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
};

double hungarian_min_cost(const SubProblem& p, std::vector<int>* row_to_col) {
  const bool transpose = p.rows.size() > p.cols.size();
  const std::size_t n = transpose ? p.cols.size() : p.rows.size();
  const std::size_t m = transpose ? p.rows.size() : p.cols.size();
  if (row_to_col) row_to_col->assign(p.rows.size(), Assignment::kUnassigned);
  if (n == 0) return 0.0;

  auto at = [&](std::size_t i, std::size_t j) {  // 1-based
    const CostMatrix& a = *p.m;
    return transpose ? a(p.rows[j - 1], p.cols[i - 1]) : a(p.rows[i - 1], p.cols[j - 1]);
  };
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> match(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = at(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  double total = 0.0;
  for (std::size_t j = 1; j <= m; ++j) {
    if (match[j] == 0) continue;
    const std::size_t i = match[j];
    total += at(i, j);
    if (row_to_col) {
      const std::size_t r = transpose ? j - 1 : i - 1;
      const std::size_t c = transpose ? i - 1 : j - 1;
      (*row_to_col)[r] = static_cast<int>(p.cols[c]);
    }
  }
  return total;
}

bool same_cost(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

Assignment optimal_assignment(const CostMatrix& cost) {
  Assignment out;
  out.row_to_col.assign(cost.rows(), Assignment::kUnassigned);
  if (cost.empty()) return out;
  for (std::size_t r = 0; r < cost.rows(); ++r) {
    for (std::size_t c = 0; c < cost.cols(); ++c) {
      if (!(cost(r, c) >= 0.0) || !std::isfinite(cost(r, c))) {
        throw ValidationError("assignment costs must be finite and non-negative");
      }
    }
  }

  SubProblem full{&cost, {}, {}};
  for (std::size_t r = 0; r < cost.rows(); ++r) full.rows.push_back(r);
  for (std::size_t c = 0; c < cost.cols(); ++c) full.cols.push_back(c);
  const double best = hungarian_min_cost(full, nullptr);

  // Fix rows one at a time to the smallest column that still admits an
  // optimal completion.
  SubProblem rest = full;
  double fixed_cost = 0.0;
  std::size_t slack = cost.rows() > cost.cols() ? cost.rows() - cost.cols() : 0;
  for (std::size_t r = 0; r < cost.rows(); ++r) {
    rest.rows.erase(rest.rows.begin());
    bool placed = false;
    for (std::size_t k = 0; k < rest.cols.size(); ++k) {
      const std::size_t c = rest.cols[k];
      SubProblem trial = rest;
      trial.cols.erase(trial.cols.begin() + static_cast<std::ptrdiff_t>(k));
      const double total = fixed_cost + cost(r, c) + hungarian_min_cost(trial, nullptr);
      if (same_cost(total, best)) {
        out.row_to_col[r] = static_cast<int>(c);
        fixed_cost += cost(r, c);
        rest = std::move(trial);
        placed = true;
        break;
      }
    }
    if (!placed) {
      // Left unassigned; only possible while rows outnumber columns.
      if (slack == 0) {
        // Numerical corner: fall back to the plain Hungarian answer.
        hungarian_min_cost(full, &out.row_to_col);
        out.cost = best;
        return out;
      }
      --slack;
    }
  }
  out.cost = best;
  return out;
}

}  // namespace dmasr
