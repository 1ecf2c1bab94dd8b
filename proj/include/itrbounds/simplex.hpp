#pragma once

// Dense two-phase tableau simplex for small equality-form LPs:
//
//     optimize c'x  subject to  A x = b,  x >= 0.
//
// Phase 1 runs once on construction; any number of objectives can then be optimized
// from the resulting feasible basis. Pricing is Dantzig's rule, falling back to
// Bland's rule for the rest of the solve after a run of degenerate pivots.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace itrb::lp {

enum class SimplexStatus { optimal, infeasible, unbounded, iteration_limit };

inline std::string_view to_string(SimplexStatus s) {
  switch (s) {
    case SimplexStatus::optimal: return "optimal";
    case SimplexStatus::infeasible: return "infeasible";
    case SimplexStatus::unbounded: return "unbounded";
    case SimplexStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

struct SimplexOptions {
  double pivot_tolerance = 1e-11;
  double cost_tolerance = 1e-11;
  double feasibility_tolerance = 1e-8;
  std::size_t degenerate_run_before_bland = 50;
  std::size_t max_iterations = 0;  // 0: 200 * (rows + cols) + 1000
};

struct SimplexSolution {
  SimplexStatus status = SimplexStatus::optimal;
  double objective = 0.0;
  std::vector<double> x;
  std::size_t iterations = 0;
};

class DenseSimplex {
 public:
  // `a` is rows x cols, row-major.
  DenseSimplex(std::size_t rows, std::size_t cols, std::span<const double> a, std::span<const double> b,
               SimplexOptions options = {})
      : rows_(rows), cols_(cols), options_(options) {
    if (options_.max_iterations == 0) options_.max_iterations = 200 * (rows + cols) + 1000;
    phase_one(a, b);
  }

  bool feasible() const noexcept { return feasible_; }
  double infeasibility() const noexcept { return infeasibility_; }
  // Original row carrying the largest residual when infeasible.
  std::size_t worst_row() const noexcept { return worst_row_; }
  double worst_residual() const noexcept { return worst_residual_; }
  std::size_t phase_one_iterations() const noexcept { return phase_one_iterations_; }
  std::size_t active_rows() const noexcept { return basis_.size(); }

  SimplexSolution minimize(std::span<const double> cost) const { return optimize(cost, false); }
  SimplexSolution maximize(std::span<const double> cost) const { return optimize(cost, true); }

 private:
  // m x (width) tableau with the right-hand side in the last column.
  struct Tableau {
    std::size_t m = 0, width = 0;
    std::vector<double> t;
    std::vector<std::size_t> basis;

    double& at(std::size_t i, std::size_t j) { return t[i * width + j]; }
    double at(std::size_t i, std::size_t j) const { return t[i * width + j]; }
    double rhs(std::size_t i) const { return t[i * width + width - 1]; }
  };

  static void pivot(Tableau& tab, std::vector<double>& reduced, std::size_t row, std::size_t col) {
    const std::size_t w = tab.width;
    double* prow = &tab.t[row * w];
    const double inv = 1.0 / prow[col];
    for (std::size_t j = 0; j < w; ++j) prow[j] *= inv;
    prow[col] = 1.0;
    for (std::size_t i = 0; i < tab.m; ++i) {
      if (i == row) continue;
      double* r = &tab.t[i * w];
      const double f = r[col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < w; ++j) r[j] -= f * prow[j];
      r[col] = 0.0;
      if (std::abs(r[w - 1]) < 1e-15) r[w - 1] = 0.0;
    }
    const double f = reduced[col];
    if (f != 0.0) {
      for (std::size_t j = 0; j < w; ++j) reduced[j] -= f * prow[j];
      reduced[col] = 0.0;
    }
    tab.basis[row] = col;
  }

  // Minimizes with the given reduced-cost row (last entry holds -objective).
  SimplexStatus iterate(Tableau& tab, std::vector<double>& reduced, std::size_t enterable,
                        std::size_t& iterations) const {
    bool bland = false;
    std::size_t degenerate_run = 0;
    const std::size_t rhs = tab.width - 1;
    while (true) {
      if (iterations >= options_.max_iterations) return SimplexStatus::iteration_limit;
      std::size_t enter = enterable;
      double best = -options_.cost_tolerance;
      for (std::size_t j = 0; j < enterable; ++j) {
        if (reduced[j] < best) {
          enter = j;
          if (bland) break;
          best = reduced[j];
        }
      }
      if (enter == enterable) return SimplexStatus::optimal;

      std::size_t leave = tab.m;
      double best_ratio = 0.0, best_pivot = 0.0;
      for (std::size_t i = 0; i < tab.m; ++i) {
        const double a = tab.at(i, enter);
        if (a <= options_.pivot_tolerance) continue;
        const double ratio = std::max(tab.at(i, rhs), 0.0) / a;
        if (leave == tab.m || ratio < best_ratio - 1e-13) {
          leave = i, best_ratio = ratio, best_pivot = a;
        } else if (ratio <= best_ratio + 1e-13) {
          bool better = bland ? tab.basis[i] < tab.basis[leave] : a > best_pivot;
          if (better) leave = i, best_ratio = std::min(ratio, best_ratio), best_pivot = a;
        }
      }
      if (leave == tab.m) return SimplexStatus::unbounded;

      if (best_ratio <= 1e-14) {
        if (++degenerate_run >= options_.degenerate_run_before_bland) bland = true;
      } else {
        degenerate_run = 0;
      }
      pivot(tab, reduced, leave, enter);
      ++iterations;
    }
  }

  void phase_one(std::span<const double> a, std::span<const double> b) {
    Tableau tab;
    tab.m = rows_;
    tab.width = cols_ + rows_ + 1;
    tab.t.assign(tab.m * tab.width, 0.0);
    tab.basis.resize(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double sign = b[i] < 0.0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < cols_; ++j) tab.at(i, j) = sign * a[i * cols_ + j];
      tab.at(i, cols_ + i) = 1.0;
      tab.at(i, tab.width - 1) = sign * b[i];
      tab.basis[i] = cols_ + i;
    }
    std::vector<double> reduced(tab.width, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = 0; j < cols_; ++j) reduced[j] -= tab.at(i, j);
      reduced[tab.width - 1] -= tab.rhs(i);
    }

    auto status = iterate(tab, reduced, cols_, phase_one_iterations_);
    infeasibility_ = 0.0;
    for (std::size_t i = 0; i < rows_; ++i)
      if (tab.basis[i] >= cols_) {
        const double v = std::max(tab.rhs(i), 0.0);
        infeasibility_ += v;
        if (v > worst_residual_) worst_residual_ = v, worst_row_ = tab.basis[i] - cols_;
      }
    feasible_ = status == SimplexStatus::optimal && infeasibility_ <= options_.feasibility_tolerance;
    if (!feasible_) return;

    // Drive artificials out of the basis; rows where that is impossible are redundant.
    std::vector<bool> keep(rows_, true);
    for (std::size_t i = 0; i < rows_; ++i) {
      if (tab.basis[i] < cols_) continue;
      std::size_t col = cols_;
      double mag = 1e-9;
      for (std::size_t j = 0; j < cols_; ++j)
        if (std::abs(tab.at(i, j)) > mag) mag = std::abs(tab.at(i, j)), col = j;
      if (col == cols_) {
        keep[i] = false;
      } else {
        pivot(tab, reduced, i, col);
      }
    }

    // Phase-2 tableau: structural columns and rhs of the surviving rows.
    for (std::size_t i = 0; i < rows_; ++i) {
      if (!keep[i]) continue;
      for (std::size_t j = 0; j < cols_; ++j) t_.push_back(tab.at(i, j));
      t_.push_back(std::max(tab.rhs(i), 0.0));
      basis_.push_back(tab.basis[i]);
    }
  }

  SimplexSolution optimize(std::span<const double> cost, bool maximize) const {
    SimplexSolution out;
    if (!feasible_) {
      out.status = SimplexStatus::infeasible;
      return out;
    }
    Tableau tab;
    tab.m = basis_.size();
    tab.width = cols_ + 1;
    tab.t = t_;
    tab.basis = basis_;
    const double sign = maximize ? -1.0 : 1.0;
    std::vector<double> reduced(tab.width, 0.0);
    for (std::size_t j = 0; j < cols_; ++j) reduced[j] = sign * cost[j];
    for (std::size_t i = 0; i < tab.m; ++i) {
      const double cb = sign * cost[tab.basis[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < tab.width; ++j) reduced[j] -= cb * tab.at(i, j);
    }
    out.status = iterate(tab, reduced, cols_, out.iterations);
    out.x.assign(cols_, 0.0);
    for (std::size_t i = 0; i < tab.m; ++i) out.x[tab.basis[i]] = tab.rhs(i);
    double value = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) value += cost[j] * out.x[j];
    out.objective = value;
    return out;
  }

  std::size_t rows_, cols_;
  SimplexOptions options_;
  bool feasible_ = false;
  double infeasibility_ = 0.0;
  std::size_t worst_row_ = 0;
  double worst_residual_ = 0.0;
  std::size_t phase_one_iterations_ = 0;
  std::vector<double> t_;
  std::vector<std::size_t> basis_;
};

}  // namespace itrb::lp
