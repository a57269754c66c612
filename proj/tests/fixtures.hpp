#pragma once

// Example bundles shared by the test suites. Inverses are assembled from the
// same ingredients as the forward maps (triangular solve), then checked by
// validate() in the tests rather than trusted.

#include <grb/bundle.hpp>

#include "test_util.hpp"

namespace grb::testing {

using Matrix = std::vector<std::vector<Poly>>;  // A[b][a]: y'^a = y^b A_b^a

inline Poly V(const Variable& v) { return Poly(v); }

/// One weight class of fibre coordinates.
struct Layer {
  std::vector<Variable> src, dst;
  Matrix A, Ainv;       // polynomials in source base coordinates
  std::vector<Poly> R;  // nonlinear corrections, in source coordinates
};

struct ChartChange {
  std::vector<Variable> base_src, base_dst;
  std::vector<Poly> phi;      // base_dst images, in base_src
  std::vector<Poly> phi_inv;  // base_src images, in base_dst
  std::vector<Layer> layers;  // increasing weight
};

inline GradedBundle assemble(const ChartChange& cc, bool with_inverse = true) {
  CoordinateSystem a{"A", cc.base_src, 1}, b{"B", cc.base_dst, 1};
  for (auto& l : cc.layers) {
    a.vars.insert(a.vars.end(), l.src.begin(), l.src.end());
    b.vars.insert(b.vars.end(), l.dst.begin(), l.dst.end());
  }
  TransitionMap t{0, 1, {}, std::nullopt};
  Substitution inv;
  for (std::size_t i = 0; i < cc.base_dst.size(); ++i) {
    t.forward[cc.base_dst[i]] = cc.phi[i];
    inv[cc.base_src[i]] = cc.phi_inv[i];
  }
  for (auto& l : cc.layers) {
    std::size_t d = l.src.size();
    for (std::size_t a_ = 0; a_ < d; ++a_) {
      Poly img = l.R.empty() ? Poly() : l.R[a_];
      for (std::size_t b_ = 0; b_ < d; ++b_) img += V(l.src[b_]) * l.A[b_][a_];
      t.forward[l.dst[a_]] = img;
    }
    // y = (y' − R) A^{-1}, everything on the right rewritten in target coordinates
    Substitution inv_so_far = inv;
    for (std::size_t a_ = 0; a_ < d; ++a_) {
      Poly img;
      for (std::size_t b_ = 0; b_ < d; ++b_) {
        Poly shifted = V(l.dst[b_]);
        if (!l.R.empty()) shifted -= substitute(l.R[b_], inv_so_far);
        img += shifted * substitute(l.Ainv[b_][a_], inv_so_far);
      }
      inv[l.src[a_]] = img;
    }
  }
  if (with_inverse) t.inverse = inv;
  GradedBundle g;
  g.charts = {a, b};
  g.transitions = {t};
  return g;
}

inline std::vector<Variable> vars(const std::string& stem, int n, int w) {
  std::vector<Variable> r;
  for (int i = 1; i <= n; ++i)
    r.push_back(even(n == 1 ? stem : stem + std::to_string(i), {w}));
  return r;
}

/// Degree-2 example: x' = x, y' = yT(x), z' = zS + ½ y y U(x); y has rank 2.
struct Degree2Example {
  Variable x, xp;
  std::vector<Variable> y, yp;
  Variable z, zp;
  Matrix T;
  Poly S;
  Matrix U;  // symmetric
  GradedBundle bundle;
};

inline Degree2Example degree2_example() {
  Degree2Example e;
  e.x = even("x", {0});
  e.xp = even("xp", {0});
  e.y = vars("y", 2, 1);
  e.yp = vars("yp", 2, 1);
  e.z = even("z", {2});
  e.zp = even("zp", {2});
  Poly x = V(e.x);
  e.T = {{Poly(1), x}, {Poly(), Poly(1)}};
  Matrix Tinv = {{Poly(1), -x}, {Poly(), Poly(1)}};
  e.S = Poly(2);
  e.U = {{x, Poly(1)}, {Poly(1), rational(3) * x * x}};
  Poly quad;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) quad += V(e.y[a]) * V(e.y[b]) * e.U[b][a];
  ChartChange cc;
  cc.base_src = {e.x};
  cc.base_dst = {e.xp};
  cc.phi = {x};
  cc.phi_inv = {V(e.xp)};
  cc.layers.push_back({e.y, e.yp, e.T, Tinv, {}});
  cc.layers.push_back({{e.z}, {e.zp}, {{e.S}}, {{Poly(rational(1, 2))}},
                       {rational(1, 2) * quad}});
  e.bundle = assemble(cc);
  return e;
}

/// Degree-3 example with coordinates (x, y^a, z, w), weights 0..3, y of rank 2.
struct Degree3Example {
  Variable x, xp;
  std::vector<Variable> y, yp;
  Variable z, zp, w, wp;
  Matrix Ty;        // T_b^a
  Poly Tz;          // T_j^i
  Matrix Tyy;       // T_ba^i, symmetric
  Poly Tw;          // T_μ^κ
  std::vector<Poly> Tyz;  // T_ai^κ
  std::vector<std::vector<std::vector<Poly>>> Tyyy;  // T_cba^κ, symmetric
  GradedBundle bundle;
};

inline Degree3Example degree3_example() {
  Degree3Example e;
  e.x = even("x", {0});
  e.xp = even("xp", {0});
  e.y = vars("y", 2, 1);
  e.yp = vars("yp", 2, 1);
  e.z = even("z", {2});
  e.zp = even("zp", {2});
  e.w = even("w", {3});
  e.wp = even("wp", {3});
  Poly x = V(e.x);
  e.Ty = {{Poly(1), x}, {Poly(), Poly(1)}};
  Matrix Tyinv = {{Poly(1), -x}, {Poly(), Poly(1)}};
  e.Tz = Poly(3);
  e.Tyy = {{x, Poly(1)}, {Poly(1), Poly(2)}};
  e.Tw = Poly(-1);
  e.Tyz = {x + Poly(1), Poly(2)};
  e.Tyyy.assign(2, std::vector<std::vector<Poly>>(2, std::vector<Poly>(2)));
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        int ones = (a == 0) + (b == 0) + (c == 0);
        e.Tyyy[a][b][c] = ones == 3 ? x : ones == 2 ? Poly(1) : ones == 1 ? Poly() : Poly(5);
      }
  Poly quad, zy, cubic;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      quad += V(e.y[a]) * V(e.y[b]) * e.Tyy[b][a];
      for (int c = 0; c < 2; ++c)
        cubic += V(e.y[a]) * V(e.y[b]) * V(e.y[c]) * e.Tyyy[c][b][a];
    }
  for (int a = 0; a < 2; ++a) zy += V(e.z) * V(e.y[a]) * e.Tyz[a];
  ChartChange cc;
  cc.base_src = {e.x};
  cc.base_dst = {e.xp};
  cc.phi = {x};
  cc.phi_inv = {V(e.xp)};
  cc.layers.push_back({e.y, e.yp, e.Ty, Tyinv, {}});
  cc.layers.push_back({{e.z}, {e.zp}, {{e.Tz}}, {{Poly(rational(1, 3))}},
                       {rational(1, 2) * quad}});
  cc.layers.push_back({{e.w}, {e.wp}, {{e.Tw}}, {{Poly(-1)}},
                       {zy + rational(1, 6) * cubic}});
  e.bundle = assemble(cc);
  return e;
}

/// Vector bundle E (degree 1): base (x1, x2) ↦ (x1 + 1, x2 + x1^2), y' = yT.
/// With tangent = true, T is the Jacobian of the base map, so E = TM.
inline GradedBundle vector_bundle_example(bool tangent = false) {
  auto xs = vars("x", 2, 0), xps = vars("xp", 2, 0);
  auto y = vars("y", 2, 1), yp = vars("yp", 2, 1);
  Poly x1 = V(xs[0]), x2 = V(xs[1]);
  ChartChange cc;
  cc.base_src = xs;
  cc.base_dst = xps;
  cc.phi = {x1 + Poly(1), x2 + x1 * x1};
  cc.phi_inv = {V(xps[0]) - Poly(1),
                V(xps[1]) - (V(xps[0]) - Poly(1)) * (V(xps[0]) - Poly(1))};
  Matrix T, Tinv;
  if (tangent) {
    T = {{Poly(1), rational(2) * x1}, {Poly(), Poly(1)}};
    Tinv = {{Poly(1), rational(-2) * x1}, {Poly(), Poly(1)}};
  } else {
    T = {{Poly(2), x1}, {Poly(), Poly(1)}};
    Tinv = {{Poly(rational(1, 2)), rational(-1, 2) * x1}, {Poly(), Poly(1)}};
  }
  cc.layers.push_back({y, yp, T, Tinv, {}});
  return assemble(cc);
}

/// Random valid graded bundle of the given degree; fibre ranks ≤ 2.
inline GradedBundle random_bundle(Rng& rng, int degree, int base_dim = -1) {
  if (base_dim < 0) base_dim = rng.uniform(1, 2);
  ChartChange cc;
  cc.base_src = vars("x", base_dim, 0);
  cc.base_dst = vars("xp", base_dim, 0);
  std::vector<Poly> xs;
  for (auto& v : cc.base_src) xs.push_back(V(v));
  // triangular polynomial automorphism of the base
  Rational shift = rng.small_rational();
  cc.phi.push_back(xs[0] + Poly(shift));
  cc.phi_inv.push_back(V(cc.base_dst[0]) - Poly(shift));
  if (base_dim == 2) {
    Rational q = rng.nonzero_rational();
    cc.phi.push_back(xs[1] + q * xs[0] * xs[0]);
    Poly x1 = cc.phi_inv[0];
    cc.phi_inv.push_back(V(cc.base_dst[1]) - q * x1 * x1);
  }
  std::vector<Variable> lower = cc.base_src;
  std::string stems = "yzwuv";
  for (int w = 1; w <= degree; ++w) {
    int d = rng.uniform(1, 2);
    Layer l;
    l.src = vars(std::string(1, stems[w - 1]), d, w);
    l.dst = vars(std::string(1, stems[w - 1]) + "p", d, w);
    Rational c = rng.nonzero_rational();
    if (d == 1) {
      l.A = {{Poly(c)}};
      l.Ainv = {{Poly(1 / c)}};
    } else {
      Poly p = Poly(rng.small_rational()) + rng.small_rational() * xs[0];
      l.A = {{Poly(c), c * p}, {Poly(), Poly(c)}};
      l.Ainv = {{Poly(1 / c), -(1 / c) * p}, {Poly(), Poly(1 / c)}};
    }
    for (int a = 0; a < d; ++a)
      l.R.push_back(w == 1 ? Poly() : rng.homogeneous(lower, Weight({w}), 3, w + 1));
    lower.insert(lower.end(), l.src.begin(), l.src.end());
    cc.layers.push_back(l);
  }
  return assemble(cc);
}

/// Random weight-preserving polynomial map between chart 0 of a and chart 0 of b.
inline Substitution random_components(Rng& rng, const GradedBundle& a, const GradedBundle& b) {
  Substitution s;
  std::vector<Variable> base = a.chart(0).base(), all = a.chart(0).vars;
  for (auto& v : b.chart(0).vars) {
    int w = v.weight.total();
    s[v] = w == 0 ? rng.poly(base, 2, 2) : rng.homogeneous(all, v.weight, 3, w + 1);
  }
  return s;
}

}  // namespace grb::testing
