#pragma once

// Reference computations used by the test suite. Nothing here calls into the library's
// bounding code: the LP oracle enumerates basic solutions, the structural-model oracle
// redraws CPTs straight from a raw engine and sums with nested loops.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------------------
// Brute-force LP: optimum of c'x over {A x = b, x >= 0} by visiting every basis.

struct VertexResult {
  bool feasible = false;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
};

inline std::optional<std::vector<double>> solve_square(std::vector<double> m, std::vector<double> rhs, std::size_t n) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t best = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m[r * n + col]) > std::abs(m[best * n + col])) best = r;
    if (std::abs(m[best * n + col]) < 1e-12) return std::nullopt;
    for (std::size_t j = 0; j < n; ++j) std::swap(m[col * n + j], m[best * n + j]);
    std::swap(rhs[col], rhs[best]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = m[r * n + col] / m[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) m[r * n + j] -= f * m[col * n + j];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = rhs[i] / m[i * n + i];
  return x;
}

// Rows of `a` must be linearly independent.
inline VertexResult vertex_enumeration(std::size_t rows, std::size_t cols, const std::vector<double>& a,
                                       const std::vector<double>& b, const std::vector<double>& c) {
  VertexResult out;
  std::vector<int> pick(cols, 0);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(rows), 1);
  std::sort(pick.begin(), pick.end());
  do {
    std::vector<std::size_t> basis;
    for (std::size_t j = 0; j < cols; ++j)
      if (pick[j]) basis.push_back(j);
    std::vector<double> m(rows * rows);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t k = 0; k < rows; ++k) m[i * rows + k] = a[i * cols + basis[k]];
    auto x = solve_square(m, b, rows);
    if (!x) continue;
    if (std::any_of(x->begin(), x->end(), [](double v) { return v < -1e-10; })) continue;
    double value = 0.0;
    for (std::size_t k = 0; k < rows; ++k) value += c[basis[k]] * (*x)[k];
    out.feasible = true;
    out.min = std::min(out.min, value);
    out.max = std::max(out.max, value);
  } while (std::next_permutation(pick.begin(), pick.end()));
  return out;
}

// ---------------------------------------------------------------------------
// Closed forms over raw probability arrays.

// p[a][y][b] over binary (A, Y, f(X)).
using BinaryTable = std::array<std::array<std::array<double, 2>, 2>, 2>;

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
};

inline Bounds eq2(const BinaryTable& p) {
  return {p[0][1][0] + p[1][1][1], 1.0 - p[0][0][0] - p[1][0][1]};
}

inline double disagreement(const BinaryTable& p) {
  return p[0][0][1] + p[0][1][1] + p[1][0][0] + p[1][1][0];
}

// p[a * 2 + y] over (A, Y) within a stratum.
inline Bounds manski(const std::vector<double>& p, int level) {
  const double hit = p[static_cast<std::size_t>(level) * 2 + 1];
  double off = 0.0;
  for (std::size_t a = 0; a * 2 < p.size(); ++a)
    if (static_cast<int>(a) != level) off += p[a * 2] + p[a * 2 + 1];
  return {hit, hit + off};
}

// ---------------------------------------------------------------------------
// Random simplex points.

template <typename Engine>
std::vector<double> dirichlet_flat(std::size_t n, Engine& engine) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> out(n);
  double total = 0.0;
  for (auto& v : out) total += (v = e(engine));
  for (auto& v : out) v /= total;
  return out;
}

// Dirichlet draw with some cells forced to exact zero.
template <typename Engine>
std::vector<double> sparse_dirichlet(std::size_t n, double zero_rate, Engine& engine) {
  std::bernoulli_distribution zero(zero_rate);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> out(n);
  double total = 0.0;
  for (auto& v : out) total += (v = zero(engine) ? 0.0 : e(engine));
  if (total == 0.0) {
    out[0] = 1.0;
    return out;
  }
  for (auto& v : out) v /= total;
  return out;
}

// ---------------------------------------------------------------------------
// Confounded rule-evaluation SCM, independently of the library's generator:
// U -> X, (Z, X, U) -> A, (A, X, U) -> Y, with CPT rows drawn as normalized
// ((engine() >> 11) + 0.5) * 2^-53 uniforms in the order U, Z, X, A, Y.

inline std::uint64_t splitmix_finalize(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t replication_seed(std::uint64_t master, std::uint64_t i) {
  return splitmix_finalize(master ^ splitmix_finalize(i + 0x9E3779B97F4A7C15ULL));
}

struct RawScm {
  int nz = 1, nu = 2, nx = 6, na = 3;
  bool instrument = true;
  std::vector<double> pu;             // [u]
  std::vector<double> pz;             // [z]
  std::vector<std::vector<double>> px;  // [u][x]
  std::vector<double> pa;             // [z][x][u][a]
  std::vector<double> py;             // [a][x][u][y]

  double a_given(int z, int x, int u, int a) const {
    return pa[((static_cast<std::size_t>(z) * nx + x) * nu + u) * na + a];
  }
  double y1_given(int a, int x, int u) const { return py[((static_cast<std::size_t>(a) * nx + x) * nu + u) * 2 + 1]; }

  // P(Z, A, Y, X) flattened row-major, Z omitted without an instrument.
  std::vector<double> observed() const {
    std::vector<double> out(static_cast<std::size_t>(nz) * na * 2 * nx, 0.0);
    for (int z = 0; z < nz; ++z)
      for (int u = 0; u < nu; ++u)
        for (int x = 0; x < nx; ++x)
          for (int a = 0; a < na; ++a)
            for (int y = 0; y < 2; ++y) {
              const double py1 = y1_given(a, x, u);
              const double p = pz[static_cast<std::size_t>(z)] * pu[static_cast<std::size_t>(u)] *
                               px[static_cast<std::size_t>(u)][static_cast<std::size_t>(x)] * a_given(z, x, u, a) *
                               (y ? py1 : 1.0 - py1);
              out[((static_cast<std::size_t>(z) * na + a) * 2 + y) * nx + x] += p;
            }
    return out;
  }

  double theta(const std::vector<int>& rule) const {
    double total = 0.0;
    for (int u = 0; u < nu; ++u)
      for (int x = 0; x < nx; ++x)
        total += pu[static_cast<std::size_t>(u)] * px[static_cast<std::size_t>(u)][static_cast<std::size_t>(x)] *
                 y1_given(rule[static_cast<std::size_t>(x)], x, u);
    return total;
  }
};

inline RawScm draw_scm(std::uint64_t master, std::uint64_t index, bool instrument, int nz, int nu, int nx, int na) {
  std::mt19937_64 engine(replication_seed(master, index));
  auto uniform = [&] { return (static_cast<double>(engine() >> 11) + 0.5) / 9007199254740992.0; };
  auto row = [&](int d) {
    std::vector<double> r(static_cast<std::size_t>(d));
    double total = 0.0;
    for (auto& v : r) total += (v = uniform());
    for (auto& v : r) v /= total;
    return r;
  };
  RawScm s;
  s.instrument = instrument;
  s.nz = instrument ? nz : 1;
  s.nu = nu;
  s.nx = nx;
  s.na = na;
  s.pu = row(nu);
  s.pz = instrument ? row(nz) : std::vector<double>{1.0};
  for (int u = 0; u < nu; ++u) s.px.push_back(row(nx));
  for (int i = 0; i < s.nz * nx * nu; ++i) {
    auto r = row(na);
    s.pa.insert(s.pa.end(), r.begin(), r.end());
  }
  for (int i = 0; i < na * nx * nu; ++i) {
    auto r = row(2);
    s.py.insert(s.py.end(), r.begin(), r.end());
  }
  return s;
}

// Same structure with Dirichlet(1, ..., 1) CPT rows from any engine.
template <typename Engine>
RawScm dirichlet_scm(Engine& engine, bool instrument, int nz, int nu, int nx, int na) {
  auto row = [&](int d) { return dirichlet_flat(static_cast<std::size_t>(d), engine); };
  RawScm s;
  s.instrument = instrument;
  s.nz = instrument ? nz : 1;
  s.nu = nu;
  s.nx = nx;
  s.na = na;
  s.pu = row(nu);
  s.pz = instrument ? row(nz) : std::vector<double>{1.0};
  for (int u = 0; u < nu; ++u) s.px.push_back(row(nx));
  for (int i = 0; i < s.nz * nx * nu; ++i) {
    auto r = row(na);
    s.pa.insert(s.pa.end(), r.begin(), r.end());
  }
  for (int i = 0; i < na * nx * nu; ++i) {
    auto r = row(2);
    s.py.insert(s.py.end(), r.begin(), r.end());
  }
  return s;
}

}  // namespace oracle
