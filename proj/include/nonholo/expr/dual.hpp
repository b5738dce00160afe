#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <vector>

namespace nonholo::expr {

inline constexpr int kMaxDirections = 24;

/// First-order forward-mode number with up to kMaxDirections tangent directions.
struct Dual {
  double value = 0.0;
  int dim = 0;
  std::array<double, kMaxDirections> d{};

  Dual() = default;
  Dual(double v, int n) : value(v), dim(n) {}
  static Dual seed(double v, int n, int direction) {
    Dual r(v, n);
    r.d[direction] = 1.0;
    return r;
  }
};

/// Second-order jet: value, gradient, and packed upper-triangular Hessian.
struct Jet2 {
  double value = 0.0;
  int dim = 0;
  std::vector<double> g;
  std::vector<double> h;  // row-major upper triangle, (i, j) with i <= j

  Jet2() = default;
  Jet2(double v, int n) : value(v), dim(n), g(n, 0.0), h(n * (n + 1) / 2, 0.0) {}
  static Jet2 seed(double v, int n, int direction) {
    Jet2 r(v, n);
    r.g[direction] = 1.0;
    return r;
  }
  static std::size_t index(int i, int j, int n) {
    return static_cast<std::size_t>(i) * n - static_cast<std::size_t>(i) * (i - 1) / 2 + (j - i);
  }
  double hess(int i, int j) const { return i <= j ? h[index(i, j, dim)] : h[index(j, i, dim)]; }
};

// --- scalar hooks used by the generic evaluator -------------------------------

inline double primal(double x) { return x; }
inline double primal(const Dual& x) { return x.value; }
inline double primal(const Jet2& x) { return x.value; }

/// Chain rule for y = f(x) given f(x), f'(x), f''(x).
inline double chain(const double&, double f0, double, double) { return f0; }

inline Dual chain(const Dual& x, double f0, double f1, double) {
  Dual r(f0, x.dim);
  for (int i = 0; i < x.dim; ++i) r.d[i] = f1 * x.d[i];
  return r;
}

inline Jet2 chain(const Jet2& x, double f0, double f1, double f2) {
  const int n = x.dim;
  Jet2 r(f0, n);
  for (int i = 0; i < n; ++i) r.g[i] = f1 * x.g[i];
  std::size_t k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j, ++k) r.h[k] = f1 * x.h[k] + f2 * (x.g[i] * x.g[j]);
  return r;
}

inline Dual operator-(const Dual& a) {
  Dual r(-a.value, a.dim);
  for (int i = 0; i < a.dim; ++i) r.d[i] = -a.d[i];
  return r;
}
inline Dual operator+(const Dual& a, const Dual& b) {
  const int n = std::max(a.dim, b.dim);
  Dual r(a.value + b.value, n);
  for (int i = 0; i < n; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}
inline Dual operator-(const Dual& a, const Dual& b) {
  const int n = std::max(a.dim, b.dim);
  Dual r(a.value - b.value, n);
  for (int i = 0; i < n; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}
inline Dual operator*(const Dual& a, const Dual& b) {
  const int n = std::max(a.dim, b.dim);
  Dual r(a.value * b.value, n);
  for (int i = 0; i < n; ++i) r.d[i] = a.d[i] * b.value + a.value * b.d[i];
  return r;
}
inline Dual operator/(const Dual& a, const Dual& b) {
  const int n = std::max(a.dim, b.dim);
  Dual r(a.value / b.value, n);
  for (int i = 0; i < n; ++i) r.d[i] = (a.d[i] - r.value * b.d[i]) / b.value;
  return r;
}

inline Jet2 operator-(const Jet2& a) {
  Jet2 r = a;
  r.value = -a.value;
  for (auto& x : r.g) x = -x;
  for (auto& x : r.h) x = -x;
  return r;
}
inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  Jet2 r(a.value + b.value, a.dim);
  for (int i = 0; i < a.dim; ++i) r.g[i] = a.g[i] + b.g[i];
  for (std::size_t k = 0; k < r.h.size(); ++k) r.h[k] = a.h[k] + b.h[k];
  return r;
}
inline Jet2 operator-(const Jet2& a, const Jet2& b) {
  Jet2 r(a.value - b.value, a.dim);
  for (int i = 0; i < a.dim; ++i) r.g[i] = a.g[i] - b.g[i];
  for (std::size_t k = 0; k < r.h.size(); ++k) r.h[k] = a.h[k] - b.h[k];
  return r;
}
inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  const int n = a.dim;
  Jet2 r(a.value * b.value, n);
  for (int i = 0; i < n; ++i) r.g[i] = a.g[i] * b.value + a.value * b.g[i];
  std::size_t k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j, ++k)
      r.h[k] = a.h[k] * b.value + a.value * b.h[k] + (a.g[i] * b.g[j] + b.g[i] * a.g[j]);
  return r;
}
inline Jet2 operator/(const Jet2& a, const Jet2& b) {
  const int n = a.dim;
  Jet2 r(a.value / b.value, n);
  for (int i = 0; i < n; ++i) r.g[i] = (a.g[i] - r.value * b.g[i]) / b.value;
  std::size_t k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j, ++k)
      r.h[k] = (a.h[k] - r.value * b.h[k] - (b.g[i] * r.g[j] + r.g[i] * b.g[j])) / b.value;
  return r;
}

}  // namespace nonholo::expr
