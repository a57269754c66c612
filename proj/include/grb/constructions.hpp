#pragma once

#include <grb/algebroid.hpp>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace grb {

// ------------------------------------------------------------ jet machinery

namespace detail {

inline Rational factorial(int n) {
  Rational r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

}  // namespace detail

/// Weight-r velocity of v: name_t<r>, weight of v plus r in the first component.
inline Variable velocity(const Variable& v, int r) {
  if (r == 0) return v;
  std::size_t n = std::max<std::size_t>(v.weight.arity(), 1);
  return Variable(v.name + "_t" + std::to_string(r), v.weight + Weight::unit(n, 0) * r, v.odd);
}

/// D = Σ_v Σ_{s<order} (s+1) v_{s+1} ∂/∂v_s with Taylor-coefficient velocities.
inline Derivation total_derivative(const std::vector<Variable>& vars, int order) {
  Derivation d(false, Weight({1}));
  for (auto& v : vars)
    for (int s = 0; s < order; ++s) d.set(velocity(v, s), Rational(s + 1) * Poly(velocity(v, s + 1)));
  return d;
}

/// Images of v_r = (1/r!) Dʳ(image of v) for r ≤ order.
inline Substitution jet_map(const Substitution& m, const std::vector<Variable>& dom, int order) {
  Derivation d = total_derivative(dom, order);
  Substitution r;
  for (auto& [v, img] : m) {
    Poly p = img;
    r[v] = p;
    for (int s = 1; s <= order; ++s) {
      p = d(p);
      r[velocity(v, s)] = p * (Rational(1) / detail::factorial(s));
    }
  }
  return r;
}

inline CoordinateSystem jet_chart(const CoordinateSystem& c, int order) {
  CoordinateSystem r = c;
  for (int s = 1; s <= order; ++s)
    for (auto& v : c.vars) r.vars.push_back(velocity(v, s));
  return r;
}

/// Jet prolongation of every chart and transition of b to order `order`.
inline GradedBundle jet_bundle(const GradedBundle& b, int order) {
  GradedBundle r;
  for (auto& c : b.charts) r.charts.push_back(jet_chart(c, order));
  for (auto& t : b.transitions) {
    TransitionMap nt{t.source, t.target, jet_map(t.forward, b.charts[t.source].vars, order),
                     std::nullopt};
    if (t.inverse) nt.inverse = jet_map(*t.inverse, b.charts[t.target].vars, order);
    r.transitions.push_back(std::move(nt));
  }
  return r;
}

// ----------------------------------------------------------- higher tangent

/// Base change x' = x'(x) between two charts of weight-0 coordinates.
struct PolynomialDiffeo {
  CoordinateSystem source, target;
  Substitution forward;
  std::optional<Substitution> inverse;
};

inline CheckList check_diffeo(const PolynomialDiffeo& phi) {
  GradedBundle b{{phi.source, phi.target}, {{0, 1, phi.forward, phi.inverse}}};
  return validate(b);
}

/// TᵏM: weight-r coordinates are Taylor coefficients x_t<r> = x⁽ʳ⁾/r!.
inline GradedBundle higher_tangent(const PolynomialDiffeo& phi, int k) {
  if (k < 0) throw std::invalid_argument("higher_tangent needs k >= 0");
  for (auto* c : {&phi.source, &phi.target})
    for (auto& v : c->vars)
      if (!v.weight.is_zero() || v.weight.arity() != 1)
        throw std::invalid_argument("base coordinate " + v.name + " must have weight (0)");
  return jet_bundle({{phi.source, phi.target}, {{0, 1, phi.forward, phi.inverse}}}, k);
}

/// D(TᵏM) ≅ T(Tᵏ⁻¹M): x_t<r>_dot corresponds to d_x_t<r−1>.
inline CheckList higher_tangent_linearisation_check(const PolynomialDiffeo& phi, int k) {
  CheckList out;
  GLBundle d = linearise(higher_tangent(phi, k));
  GradedBundle t = tangent_bundle(higher_tangent(phi, k - 1));
  std::vector<std::map<Variable, Variable>> ren;
  bool same = d.bundle.charts.size() == t.charts.size();
  for (std::size_t i = 0; same && i < d.bundle.charts.size(); ++i) {
    const auto& dc = d.bundle.charts[i];
    const auto& tc = t.charts[i];
    std::map<Variable, Variable> s;
    for (auto& v : dc.vars) {
      std::string name = v.name;
      if (name.ends_with("_dot")) {
        std::string stem = name.substr(0, name.size() - 4);
        auto pos = stem.rfind("_t");
        int r = std::stoi(stem.substr(pos + 2));
        std::string base = stem.substr(0, pos);
        name = tangent_name(r == 1 ? base : base + "_t" + std::to_string(r - 1));
      }
      const Variable* w = tc.find(name);
      if (!w || !(w->weight == v.weight)) {
        same = false;
        break;
      }
      s[v] = *w;
    }
    same = same && s.size() == tc.vars.size();
    ren.push_back(s);
  }
  out.add("tk.coordinates", same);
  if (!same) return out;
  for (std::size_t i = 0; i < d.bundle.transitions.size(); ++i) {
    const auto& td = d.bundle.transitions[i];
    const auto& tt = t.transitions[i];
    std::string id = d.bundle.transition_id(td);
    Substitution rs;
    for (auto& [from, to] : ren[td.source]) rs[from] = Poly(to);
    for (auto& [v, img] : td.forward) {
      Poly diff = substitute(img, rs) - tt.forward.at(ren[td.target].at(v));
      out.add("tk." + id + "." + v.name, diff.is_zero()).residual =
          diff.is_zero() ? "" : render(diff);
    }
  }
  return out;
}

// ----------------------------------------------------- structure constants

/// c^k_ij of [e_i, e_j] = Σ_k c^k_ij e_k.
struct StructureConstants {
  std::size_t dim = 0;
  std::vector<Rational> c;

  explicit StructureConstants(std::size_t d = 0) : dim(d), c(d * d * d, 0) {}
  Rational& operator()(std::size_t k, std::size_t i, std::size_t j) {
    return c.at((k * dim + i) * dim + j);
  }
  const Rational& operator()(std::size_t k, std::size_t i, std::size_t j) const {
    return c.at((k * dim + i) * dim + j);
  }
  /// Sets c^k_ij = v and c^k_ji = −v.
  void set(std::size_t k, std::size_t i, std::size_t j, const Rational& v) {
    (*this)(k, i, j) = v;
    (*this)(k, j, i) = -v;
  }
  bool antisymmetric() const {
    for (std::size_t k = 0; k < dim; ++k)
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
          if ((*this)(k, i, j) != -(*this)(k, j, i)) return false;
    return true;
  }
  /// Σ_m c^m_ij c^l_mk + cyclic in (i, j, k) = 0 for all indices.
  bool jacobi() const {
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        for (std::size_t k = 0; k < dim; ++k)
          for (std::size_t l = 0; l < dim; ++l) {
            Rational s = 0;
            for (std::size_t m = 0; m < dim; ++m)
              s += (*this)(m, i, j) * (*this)(l, m, k) + (*this)(m, j, k) * (*this)(l, m, i) +
                   (*this)(m, k, i) * (*this)(l, m, j);
            if (s != 0) return false;
          }
    return true;
  }
};

inline StructureConstants abelian(std::size_t d) { return StructureConstants(d); }

/// c^k_ij = ε_ijk.
inline StructureConstants so3() {
  StructureConstants c(3);
  c.set(2, 0, 1, 1);
  c.set(0, 1, 2, 1);
  c.set(1, 2, 0, 1);
  return c;
}

/// Basis (h, e, f): [h,e] = 2e, [h,f] = −2f, [e,f] = h.
inline StructureConstants sl2() {
  StructureConstants c(3);
  c.set(1, 0, 1, 2);
  c.set(2, 0, 2, -2);
  c.set(0, 1, 2, 1);
  return c;
}

/// Basis (x, y, z): [x,y] = z.
inline StructureConstants heisenberg3() {
  StructureConstants c(3);
  c.set(2, 0, 1, 1);
  return c;
}

// ---------------------------------------------------------- algebroid data

/// Anchor ρ(e_a) = Σ anchor[a][A] ∂_A and bracket [e_a, e_b] = Σ_c bracket[c][a][b] e_c
/// in one chart. Base coordinates have bi-weight (0,0); the optional GL bundle of
/// degree 1 holds the chart changes of E (base coordinates, then fibre coordinates).
struct AlgebroidData {
  CoordinateSystem base{"E", {}, 2};
  std::vector<std::string> fibre;
  std::vector<std::vector<Poly>> anchor;
  std::vector<std::vector<std::vector<Poly>>> bracket;
  std::optional<GLBundle> bundle;

  std::size_t rank() const { return fibre.size(); }
  std::vector<Variable> fibre_vars(bool odd) const {
    std::vector<Variable> r;
    for (auto& n : fibre) r.emplace_back(n, Weight({0, 1}), odd);
    return r;
  }
};

inline std::string tower_index(std::size_t a) { return std::to_string(a + 1); }

/// Lie algebra as an algebroid over a point, fibre coordinates xi_<a>.
inline AlgebroidData from_constants(const StructureConstants& c, const std::string& name = "g") {
  AlgebroidData e;
  e.base.name = name;
  std::size_t d = c.dim;
  for (std::size_t a = 0; a < d; ++a) e.fibre.push_back("xi_" + tower_index(a));
  e.anchor.assign(d, {});
  e.bracket.assign(d, std::vector<std::vector<Poly>>(d, std::vector<Poly>(d)));
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) e.bracket[k][i][j] = Poly(c(k, i, j));
  return e;
}

/// TM with identity anchor and coordinate vector fields as basis.
inline AlgebroidData tangent_data(const CoordinateSystem& base) {
  AlgebroidData e;
  e.base.name = base.name;
  for (auto& v : base.vars) e.base.vars.push_back(undotted_in_pair(v));
  std::size_t n = e.base.vars.size();
  for (auto& v : base.vars) e.fibre.push_back(tangent_name(v.name));
  e.anchor.assign(n, std::vector<Poly>(n));
  for (std::size_t a = 0; a < n; ++a) e.anchor[a][a] = Poly(1);
  e.bracket.assign(n, std::vector<std::vector<Poly>>(n, std::vector<Poly>(n)));
  return e;
}

namespace detail {

inline Poly anchor_apply(const AlgebroidData& e, std::size_t a, const Poly& f) {
  Poly r;
  for (std::size_t A = 0; A < e.base.vars.size(); ++A)
    if (!e.anchor[a][A].is_zero()) r += e.anchor[a][A] * partial(f, e.base.vars[A]);
  return r;
}

inline void check_data_shape(const AlgebroidData& e) {
  std::size_t n = e.rank(), m = e.base.vars.size();
  bool ok = e.anchor.size() == n && e.bracket.size() == n;
  for (auto& row : e.anchor) ok = ok && (m == 0 || row.size() == m);
  for (auto& b : e.bracket) {
    ok = ok && b.size() == n;
    for (auto& row : b) ok = ok && row.size() == n;
  }
  if (!ok) throw std::invalid_argument("algebroid data has inconsistent dimensions");
}

}  // namespace detail

/// Antisymmetry, anchor morphism ρ[e_a,e_b] = [ρe_a, ρe_b] and the Jacobi identity,
/// evaluated on basis sections.
inline CheckList lie_check(const AlgebroidData& e) {
  detail::check_data_shape(e);
  CheckList out;
  std::size_t n = e.rank(), m = e.base.vars.size();
  bool anti = true;
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (!(e.bracket[c][a][b] == -e.bracket[c][b][a])) anti = false;
  out.add("data.antisymmetric", anti);
  std::string where;
  for (std::size_t a = 0; a < n && where.empty(); ++a)
    for (std::size_t b = 0; b < n && where.empty(); ++b)
      for (std::size_t A = 0; A < m; ++A) {
        Poly lhs;
        for (std::size_t c = 0; c < n; ++c) lhs += e.bracket[c][a][b] * e.anchor[c][A];
        Poly rhs = detail::anchor_apply(e, a, e.anchor[b][A]) -
                   detail::anchor_apply(e, b, e.anchor[a][A]);
        if (!(lhs == rhs)) {
          where = e.fibre[a] + "," + e.fibre[b];
          break;
        }
      }
  out.add("data.anchor_morphism", where.empty(), where);
  std::string jac;
  for (std::size_t a = 0; a < n && jac.empty(); ++a)
    for (std::size_t b = 0; b < n && jac.empty(); ++b)
      for (std::size_t d = 0; d < n && jac.empty(); ++d)
        for (std::size_t l = 0; l < n; ++l) {
          Poly s;
          std::size_t idx[3] = {a, b, d};
          for (int cyc = 0; cyc < 3; ++cyc) {
            std::size_t i = idx[cyc], j = idx[(cyc + 1) % 3], k = idx[(cyc + 2) % 3];
            s += detail::anchor_apply(e, i, e.bracket[l][j][k]);
            for (std::size_t mm = 0; mm < n; ++mm) s += e.bracket[mm][j][k] * e.bracket[l][i][mm];
          }
          if (!s.is_zero()) {
            jac = e.fibre[a] + "," + e.fibre[b] + "," + e.fibre[d];
            break;
          }
        }
  out.add("data.jacobi", jac.empty(), jac);
  return out;
}

/// ΠE with Q = ξ^a ρ_a^A ∂_A − ½ ξ^a ξ^b C^c_ab ∂_ξc (degree 1).
inline WeightedAlgebroid algebroid_of(const AlgebroidData& e) {
  detail::check_data_shape(e);
  CoordinateSystem c = e.base;
  auto even = e.fibre_vars(false), odd = e.fibre_vars(true);
  c.vars.insert(c.vars.end(), even.begin(), even.end());
  GLBundle g{{{c}, {}}, 1};
  if (e.bundle) g = *e.bundle;
  Derivation q(true, Weight({0, 1}));
  std::size_t n = e.rank();
  for (std::size_t A = 0; A < e.base.vars.size(); ++A) {
    Poly img;
    for (std::size_t a = 0; a < n; ++a) img += Poly(odd[a]) * e.anchor[a][A];
    q.set(e.base.vars[A], img);
  }
  for (std::size_t k = 0; k < n; ++k) {
    Poly img;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (!e.bracket[k][a][b].is_zero())
          img += Poly(odd[a]) * Poly(odd[b]) * e.bracket[k][a][b] * Rational(-1, 2);
    q.set(odd[k], img);
  }
  return {g, q};
}

// --------------------------------------------------- canonical algebroids

/// ΠTF with the de Rham differential Q = Σ d_x ∂_x; degree deg F + 1.
inline WeightedAlgebroid tangent_algebroid(const GradedBundle& f) {
  GLBundle g{tangent_bundle(f), f.degree() + 1};
  CoordinateSystem oc = odd_chart(g);
  Derivation q(true, Weight({0, 1}));
  for (auto& v : oc.vars)
    if (!is_linear_coordinate(v)) q.set(v, Poly(oc.at(tangent_name(v.name))));
  return {g, q};
}

/// Conjugate pairs (x, χ_x) on ΠT*F for F of degree k − 1; χ_x has bi-weight (k−1−w, 1).
inline Conjugates cotangent_pairs(const CoordinateSystem& c, int k) {
  Conjugates r;
  for (auto& v : c.vars) {
    int w = v.weight[0];
    r.emplace_back(undotted_in_pair(v),
                   Variable(momentum_name(v.name), Weight({k - 1 - w, 1}), true));
  }
  return r;
}

/// T*F as a GL bundle of degree k: momenta transform by the transposed inverse Jacobian.
inline GLBundle cotangent_bundle(const GradedBundle& f) {
  int k = f.degree() + 1;
  GLBundle g{{}, k};
  std::vector<Conjugates> pairs;
  for (auto& c : f.charts) {
    if (c.arity != 1) throw std::invalid_argument("cotangent bundle of an n-tuple bundle");
    Conjugates p = cotangent_pairs(c, k);
    CoordinateSystem nc{c.name, {}, 2};
    for (auto& [x, chi] : p) nc.vars.push_back(x);
    for (auto& [x, chi] : p) nc.vars.emplace_back(chi.name, chi.weight, false);
    g.bundle.charts.push_back(nc);
    pairs.push_back(p);
  }
  for (auto& t : f.transitions) {
    if (!t.inverse) throw std::invalid_argument("cotangent bundle needs declared inverses");
    const auto& cs = f.charts[t.source];
    const auto& ct = f.charts[t.target];
    const auto& gs = g.bundle.charts[t.source];
    const auto& gt = g.bundle.charts[t.target];
    Substitution ps, pt;
    for (auto& v : cs.vars) ps[v] = Poly(gs.at(v.name));
    for (auto& v : ct.vars) pt[v] = Poly(gt.at(v.name));
    Substitution fwd, inv;
    for (auto& v : ct.vars) fwd[gt.at(v.name)] = substitute(t.forward.at(v), ps);
    for (auto& v : cs.vars) inv[gs.at(v.name)] = substitute(t.inverse->at(v), pt);
    // χ'_β = Σ_α ∂x^α/∂x'^β (x'(x)) χ_α,  χ_α = Σ_β ∂x'^β/∂x^α (x(x')) χ'_β
    for (auto& b : ct.vars) {
      Poly img;
      for (auto& a : cs.vars) {
        Poly d = partial(inv.at(gs.at(a.name)), gt.at(b.name));
        if (!d.is_zero())
          img += substitute(d, fwd) * Poly(gs.at(momentum_name(a.name)));
      }
      fwd[gt.at(momentum_name(b.name))] = img;
    }
    for (auto& a : cs.vars) {
      Poly img;
      for (auto& b : ct.vars) {
        Poly d = partial(fwd.at(gt.at(b.name)), gs.at(a.name));
        if (!d.is_zero())
          img += substitute(d, inv) * Poly(gt.at(momentum_name(b.name)));
      }
      inv[gs.at(momentum_name(a.name))] = img;
    }
    g.bundle.transitions.push_back({t.source, t.target, fwd, inv});
  }
  return g;
}

struct CotangentAlgebroid {
  WeightedAlgebroid algebroid;
  Poly P;
  Conjugates pairs;
  AlgebroidKind kind = AlgebroidKind::Skew;
  AlgebroidKind base_kind = AlgebroidKind::Skew;  // F̄*_{k−1} → M
  CheckList checks;
};

/// Q = −[P, ·] on ΠT*F; lie iff [P,P] = 0. P is written in F's coordinates
/// promoted to bi-weight (w, 0) and the odd momenta chi_<x>.
inline CotangentAlgebroid cotangent_algebroid(const GradedBundle& f, const Poly& p) {
  CotangentAlgebroid r;
  int k = f.degree() + 1;
  r.algebroid.carrier = cotangent_bundle(f);
  r.pairs = cotangent_pairs(f.chart(0), k);
  r.P = p;
  WeightOf w = weight_of(p);
  if (!w.is(Weight({k - 1, 2})))
    throw WeightViolation("P must have bi-weight " + Weight({k - 1, 2}).str());
  Derivation q(true, Weight({0, 1}));
  for (auto& [x, chi] : r.pairs) {
    q.set(x, -schouten(p, Poly(x), r.pairs));
    q.set(chi, -schouten(p, Poly(chi), r.pairs));
  }
  r.algebroid.Q = q;
  auto& wc = r.checks.add("cotangent.p.weight", true);
  wc.weight = w.kind == WeightOf::Homogeneous ? w.weight.str() : "";
  Poly pp = schouten(p, p, r.pairs);
  auto& pc = r.checks.add("cotangent.p.square", pp.is_zero());
  if (!pp.is_zero()) pc.residual = render(pp);
  r.kind = pp.is_zero() ? AlgebroidKind::Lie : AlgebroidKind::Skew;
  AlgebroidReport rep = check_weighted_algebroid(r.algebroid);
  r.checks.append(rep.checks);
  RestrictedDifferential a1 = restrict_to_A1(r.algebroid);
  Derivation dd = commutator(a1.d, a1.d);
  r.base_kind = dd.is_zero() ? AlgebroidKind::Lie : AlgebroidKind::Skew;
  r.checks.add("cotangent.A1.square", dd.is_zero());
  return r;
}

// ------------------------------------------------------------ complete lift

/// Xᶜ(v_r) = (1/r!) Dʳ X(v) on the order-(k−1) jets of the chart.
inline Derivation complete_lift(const Derivation& q, const CoordinateSystem& chart, int k) {
  int order = k - 1;
  Derivation d = total_derivative(chart.vars, order);
  Derivation r(q.odd, q.shift);
  for (auto& v : chart.vars) {
    Poly p = q.coefficient(v);
    r.set(v, p);
    for (int s = 1; s <= order; ++s) {
      p = d(p);
      r.set(velocity(v, s), p * (Rational(1) / detail::factorial(s)));
    }
  }
  return r;
}

/// T^{k−1}E with the complete lift of Q_E; degree k.
inline WeightedAlgebroid lifted_algebroid(const AlgebroidData& e, int k) {
  if (k < 1) throw std::invalid_argument("lifted_algebroid needs k >= 1");
  WeightedAlgebroid base = algebroid_of(e);
  GLBundle g{jet_bundle(base.carrier.bundle, k - 1), k};
  return {g, complete_lift(base.Q, odd_chart(base.carrier), k)};
}

// --------------------------------------------------------------- lie tower

/// Π𝔤_k over a point: y<r>_<a> (r,0), xi_<a> (0,1), dy<r+1>_<a> (r,1), 1 ≤ r < k;
/// Q = Σ dy_{r+1} ∂_{y_r} − ½ c^c_ab ξ^a ξ^b ∂_{ξ^c}.
inline WeightedAlgebroid lie_tower(const StructureConstants& c, int k) {
  if (k < 1) throw std::invalid_argument("lie_tower needs k >= 1");
  std::size_t d = c.dim;
  CoordinateSystem ch{"g", {}, 2};
  for (int r = 1; r < k; ++r)
    for (std::size_t a = 0; a < d; ++a)
      ch.vars.emplace_back("y" + std::to_string(r) + "_" + tower_index(a), Weight({r, 0}));
  for (std::size_t a = 0; a < d; ++a) ch.vars.emplace_back("xi_" + tower_index(a), Weight({0, 1}));
  for (int r = 1; r < k; ++r)
    for (std::size_t a = 0; a < d; ++a)
      ch.vars.emplace_back("dy" + std::to_string(r + 1) + "_" + tower_index(a), Weight({r, 1}));
  GLBundle g{{{ch}, {}}, k};
  CoordinateSystem oc = odd_chart(g);
  Derivation q(true, Weight({0, 1}));
  for (int r = 1; r < k; ++r)
    for (std::size_t a = 0; a < d; ++a)
      q.set(oc.at("y" + std::to_string(r) + "_" + tower_index(a)),
            Poly(oc.at("dy" + std::to_string(r + 1) + "_" + tower_index(a))));
  for (std::size_t l = 0; l < d; ++l) {
    Poly img;
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        if (c(l, a, b) != 0)
          img += Poly(oc.at("xi_" + tower_index(a))) * Poly(oc.at("xi_" + tower_index(b))) *
                 (Rational(-1, 2) * c(l, a, b));
    q.set(oc.at("xi_" + tower_index(l)), img);
  }
  return {g, q};
}

/// A section (Y, Z) of D(𝔤_k) → 𝔤_{k−1}: Y^a and Z^v are polynomials in the y
/// coordinates; Z is indexed like the tower's y coordinates in chart order.
struct TowerSection {
  std::vector<Poly> Y, Z;
  friend bool operator==(const TowerSection&, const TowerSection&) = default;
};

/// y coordinates, ξ coordinates and the dy partner of each y, in chart order.
struct TowerCoordinates {
  std::vector<Variable> y, xi, dy;
};

inline TowerCoordinates tower_coordinates(const WeightedAlgebroid& a) {
  TowerCoordinates t;
  for (auto& v : a.carrier.bundle.chart(0).vars) {
    if (v.weight[1] == 0) t.y.push_back(v);
    else if (v.weight[0] == 0) t.xi.push_back(v);
    else t.dy.push_back(v);
  }
  if (t.y.size() != t.dy.size()) throw CoordinateMismatch("not a lie tower chart");
  return t;
}

/// ([Y1,Y2]_𝔤 + Z1(Y2) − Z2(Y1), Z1(Z2) − Z2(Z1)).
inline TowerSection reduced_bracket(const StructureConstants& c, const TowerCoordinates& t,
                                    const TowerSection& s1, const TowerSection& s2) {
  std::size_t d = c.dim;
  if (s1.Y.size() != d || s2.Y.size() != d || s1.Z.size() != t.y.size() ||
      s2.Z.size() != t.y.size())
    throw CoordinateMismatch("section has the wrong number of components");
  auto vf = [&](const TowerSection& s, const Poly& f) {
    Poly r;
    for (std::size_t i = 0; i < t.y.size(); ++i)
      if (!s.Z[i].is_zero()) r += s.Z[i] * partial(f, t.y[i]);
    return r;
  };
  TowerSection r;
  for (std::size_t l = 0; l < d; ++l) {
    Poly y;
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        if (c(l, a, b) != 0) y += s1.Y[a] * s2.Y[b] * c(l, a, b);
    y += vf(s1, s2.Y[l]) - vf(s2, s1.Y[l]);
    r.Y.push_back(y);
  }
  for (std::size_t i = 0; i < t.y.size(); ++i) r.Z.push_back(vf(s1, s2.Z[i]) - vf(s2, s1.Z[i]));
  return r;
}

/// L(Y, Z) = Σ Y^a π_ξa + Σ Z^v π_dy(v) as a function on the phase space.
inline Poly tower_section_function(const TowerCoordinates& t, const PhaseSpace& ps,
                                   const TowerSection& s) {
  auto pi_of = [&](const Variable& lin) {
    for (std::size_t i = 0; i < ps.fibre.size(); ++i)
      if (ps.fibre[i].name == lin.name) return Poly(ps.pi[i]);
    throw CoordinateMismatch("no momentum for " + lin.name);
  };
  Poly f;
  for (std::size_t a = 0; a < t.xi.size(); ++a) f += s.Y.at(a) * pi_of(t.xi[a]);
  for (std::size_t i = 0; i < t.y.size(); ++i) f += s.Z.at(i) * pi_of(t.dy[i]);
  return f;
}

/// Inverse of tower_section_function on π-linear functions.
inline TowerSection tower_section_of(const TowerCoordinates& t, const PhaseSpace& ps,
                                     const Poly& f) {
  auto coeff = [&](const Variable& lin) {
    for (std::size_t i = 0; i < ps.fibre.size(); ++i)
      if (ps.fibre[i].name == lin.name) return right_partial(f, ps.pi[i]);
    throw CoordinateMismatch("no momentum for " + lin.name);
  };
  TowerSection s;
  for (auto& x : t.xi) s.Y.push_back(coeff(x));
  for (auto& v : t.dy) s.Z.push_back(coeff(v));
  return s;
}

/// Derived bracket read back as a section; equals −reduced_bracket under the fixed
/// convention derived_bracket = [[s1,P],s2].
inline TowerSection tower_derived_bracket(const WeightedAlgebroid& a, const TowerSection& s1,
                                          const TowerSection& s2) {
  TowerCoordinates t = tower_coordinates(a);
  PhaseSpace ps = phase_space(a);
  Poly p = p_from_q(a);
  Poly b = derived_bracket(tower_section_function(t, ps, s1), tower_section_function(t, ps, s2),
                           p, ps);
  return tower_section_of(t, ps, b);
}

// ----------------------------------------------------------- prolongation

/// D(Aᵏ(G)) as the prolongation of A^{k−1} with respect to E: coordinates
/// (x, y_w, ξ, dy_{w+1}) and Q = ξρ∂x − ½ξξC∂ξ + Σ dy_{w+1}∂y_w. Without a tower
/// the y coordinates are y<w>_<a>; with one, they are its positive-weight
/// coordinates and dy is d_<y>. Transitions need the tower and E's bundle, and
/// are produced for chart changes out of chart 0, where the anchor is given.
inline WeightedAlgebroid prolongation_algebroid(const AlgebroidData& e, int k,
                                                const std::optional<GradedBundle>& tower = {}) {
  detail::check_data_shape(e);
  if (k < 2) throw std::invalid_argument("prolongation needs k >= 2");
  std::size_t n = e.rank();
  auto even_xi = e.fibre_vars(false);
  GLBundle g{{}, k};
  std::vector<std::vector<Variable>> ys, dys;
  auto build_chart = [&](const std::string& name, const std::vector<Variable>& xs,
                         const std::vector<Variable>& y, const std::vector<Variable>& xi,
                         const std::vector<Variable>& dy) {
    CoordinateSystem c{name, xs, 2};
    c.vars.insert(c.vars.end(), y.begin(), y.end());
    c.vars.insert(c.vars.end(), xi.begin(), xi.end());
    c.vars.insert(c.vars.end(), dy.begin(), dy.end());
    g.bundle.charts.push_back(c);
    ys.push_back(y);
    dys.push_back(dy);
  };
  if (!tower) {
    std::vector<Variable> y, dy;
    for (int r = 1; r < k; ++r)
      for (std::size_t a = 0; a < n; ++a) {
        y.emplace_back("y" + std::to_string(r) + "_" + tower_index(a), Weight({r, 0}));
        dy.emplace_back("dy" + std::to_string(r + 1) + "_" + tower_index(a), Weight({r, 1}));
      }
    build_chart(e.base.name, e.base.vars, y, even_xi, dy);
  } else {
    if (tower->degree() != k - 1)
      throw std::invalid_argument("tower must have degree k - 1");
    if (e.bundle && e.bundle->bundle.charts.size() != tower->charts.size())
      throw std::invalid_argument("tower and E must have the same charts");
    for (std::size_t i = 0; i < tower->charts.size(); ++i) {
      const auto& tc = tower->charts[i];
      std::vector<Variable> xs, y, dy, xi;
      for (auto& v : tc.vars)
        (v.weight.is_zero() ? xs : y).push_back(undotted_in_pair(v));
      for (auto& v : y) dy.emplace_back(tangent_name(v.name), Weight({v.weight[0], 1}), v.odd);
      if (i == 0) {
        xs = e.base.vars;
        xi = even_xi;
      } else if (e.bundle) {
        for (auto& v : e.bundle->bundle.charts[i].vars)
          if (is_linear_coordinate(v)) xi.push_back(v);
      } else {
        throw std::invalid_argument("tower with several charts needs E's bundle");
      }
      build_chart(tc.name, xs, y, xi, dy);
    }
    for (std::size_t ti = 0; ti < tower->transitions.size(); ++ti) {
      const auto& t = tower->transitions[ti];
      if (t.source != 0)
        throw std::invalid_argument("prolongation transitions must start at chart 0");
      const auto& src = g.bundle.charts[0];
      const auto& dst = g.bundle.charts[t.target];
      Substitution promote;
      for (auto& v : tower->charts[0].vars) promote[v] = Poly(src.at(v.name));
      TransitionMap nt{0, t.target, {}, std::nullopt};
      // d_x ↦ Σ_a ξ^a ρ_a^A
      std::vector<Poly> dx;
      for (std::size_t A = 0; A < e.base.vars.size(); ++A) {
        Poly s;
        for (std::size_t a = 0; a < n; ++a) s += Poly(even_xi[a]) * e.anchor[a][A];
        dx.push_back(s);
      }
      for (auto& v : tower->charts[t.target].vars) {
        Poly law = substitute(t.forward.at(v), promote);
        nt.forward[dst.at(v.name)] = law;
        if (v.weight.is_zero()) continue;
        Poly d;
        for (std::size_t j = 0; j < ys[0].size(); ++j)
          d += Poly(dys[0][j]) * partial(law, ys[0][j]);
        for (std::size_t A = 0; A < e.base.vars.size(); ++A)
          d += dx[A] * partial(law, e.base.vars[A]);
        nt.forward[dst.at(tangent_name(v.name))] = d;
      }
      if (!e.bundle) throw std::invalid_argument("transitions need E's bundle");
      const auto* et = &e.bundle->bundle.transitions.at(ti);
      for (auto& [v, img] : et->forward)
        if (is_linear_coordinate(v)) nt.forward[v] = img;
      g.bundle.transitions.push_back(std::move(nt));
    }
  }
  CoordinateSystem oc = odd_chart(g);
  WeightedAlgebroid base = algebroid_of(e);
  Derivation q(true, Weight({0, 1}));
  for (auto& [v, c] : base.Q.action) q.set(v, c);
  for (std::size_t j = 0; j < ys[0].size(); ++j)
    q.set(ys[0][j], Poly(oc.at(dys[0][j].name)));
  return {g, q};
}

}  // namespace grb
