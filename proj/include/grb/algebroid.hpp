#pragma once

#include <grb/linfun.hpp>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace grb {

class MalformedQ : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DegreeUnderflow : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NotALinearisation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ProjectionObstruction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CoordinateMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ------------------------------------------------------------ Schouten bracket

/// Conjugate pairs (q, q*) with q even and q* odd, so that [q, q*] = 1.
using Conjugates = std::vector<std::pair<Variable, Variable>>;

namespace detail {

inline void check_domain(const Poly& f, const Conjugates& pairs, const char* what) {
  for (auto& v : f.variables()) {
    bool found = false;
    for (auto& [q, p] : pairs)
      if (v == q || v == p) found = true;
    if (!found)
      throw CoordinateMismatch(std::string(what) + " involves " + v.name +
                               ", which is not a phase-space coordinate");
  }
}

}  // namespace detail

/// [F,G] = Σ F∂⃖_q ∂⃗_{q*}G − F∂⃖_{q*} ∂⃗_q G.
inline Poly schouten(const Poly& f, const Poly& g, const Conjugates& pairs) {
  detail::check_domain(f, pairs, "left argument");
  detail::check_domain(g, pairs, "right argument");
  Poly r;
  for (auto& [q, p] : pairs) {
    Poly a = right_partial(f, q);
    if (!a.is_zero()) r += a * partial(g, p);
    Poly b = right_partial(f, p);
    if (!b.is_zero()) r -= b * partial(g, q);
  }
  return r;
}

/// Shift of the tri-weight under the bracket.
inline Weight schouten_shift(int k) { return Weight({1 - k, -1, -1}); }

// ------------------------------------------------------------- phase space

/// ΠT*D*_k ≅ ΠT*ΠD_k over one chart of ΠD_k. The base coordinates x and the odd
/// fibre coordinates θ are the chart's own variables; χ_x and π_θ are new.
struct PhaseSpace {
  int k = 1;
  std::vector<Variable> base, fibre, chi, pi;
  Conjugates pairs;  // (x, χ_x) then (π_θ, θ)
};

inline std::string momentum_name(const std::string& n) { return "chi_" + n; }

/// ΠD_k chart: the fibre (second weight 1) coordinates must be odd.
inline PhaseSpace phase_space(const CoordinateSystem& odd_chart, int k) {
  PhaseSpace ps;
  ps.k = k;
  for (auto& v : odd_chart.vars) {
    int u = v.weight[0];
    if (v.weight[1] == 0) {
      ps.base.push_back(v);
      ps.chi.emplace_back(momentum_name(v.name), Weight({k - 1 - u, 1, 1}), true);
      ps.pairs.emplace_back(v, ps.chi.back());
    } else {
      if (!v.odd) throw MalformedQ("fibre coordinate " + v.name + " of ΠD_k must be odd");
      ps.fibre.push_back(v);
      ps.pi.emplace_back(dual_name(v.name), Weight({k - 1 - u, 0, 1}), false);
    }
  }
  for (std::size_t i = 0; i < ps.fibre.size(); ++i) ps.pairs.emplace_back(ps.pi[i], ps.fibre[i]);
  return ps;
}

// ----------------------------------------------------------- algebroid data

enum class AlgebroidKind { General, Skew, Lie };

inline const char* to_string(AlgebroidKind k) {
  switch (k) {
    case AlgebroidKind::General: return "general";
    case AlgebroidKind::Skew: return "skew";
    case AlgebroidKind::Lie: return "lie";
  }
  return "?";
}

/// Homological-type vector field Q of bi-weight (0,1) on ΠD_k (chart 0 of the
/// parity-reversed carrier). The carrier keeps even fibres.
struct WeightedAlgebroid {
  GLBundle carrier;
  Derivation Q;
};

/// Chart 0 of ΠD_k.
inline CoordinateSystem odd_chart(const GLBundle& g) {
  CoordinateSystem c = g.bundle.chart(0);
  for (auto& v : c.vars)
    if (is_linear_coordinate(v)) v.odd = true;
  return c;
}

inline PhaseSpace phase_space(const WeightedAlgebroid& a) {
  return phase_space(odd_chart(a.carrier), a.carrier.k);
}

/// Odd, bi-weight (0,1), coefficients on the chart.
inline CheckList q_shape_check(const Derivation& q, const CoordinateSystem& chart) {
  CheckList out;
  out.add("q.odd", q.odd, q.odd ? "" : "Q is even");
  out.add("q.shift", q.shift == Weight({0, 1}), "shift " + q.shift.str());
  for (auto& [v, c] : q.action) {
    if (!chart.contains(v)) {
      out.add("q.domain." + v.name, false, "not a coordinate of " + chart.name);
      continue;
    }
    bool dom = involves_only(c, chart);
    out.add("q.domain." + v.name, dom, dom ? "" : "coefficient leaves the chart");
    WeightOf w = weight_of(c);
    auto& chk = out.add("q.weight." + v.name, w.is(v.weight + Weight({0, 1})),
                        w.homogeneous() ? "" : "inhomogeneous");
    if (w.kind == WeightOf::Homogeneous) chk.weight = w.weight.str();
    out.add("q.parity." + v.name, parity_of(c).is(!v.odd));
  }
  return out;
}

namespace detail {

inline void require_shape(const Derivation& q, const CoordinateSystem& chart) {
  CheckList c = q_shape_check(q, chart);
  for (auto& ch : c.checks)
    if (ch.verdict == Verdict::Fail)
      throw MalformedQ("Q fails " + ch.id + (ch.detail.empty() ? "" : ": " + ch.detail));
}

}  // namespace detail

/// P = Σ Q^x χ_x − Σ Q^θ π_θ, so that Q = −[P, ·] on functions of ΠD_k.
inline Poly p_from_q(const Derivation& q, const PhaseSpace& ps) {
  Poly p;
  for (std::size_t i = 0; i < ps.base.size(); ++i) p += q.coefficient(ps.base[i]) * Poly(ps.chi[i]);
  for (std::size_t i = 0; i < ps.fibre.size(); ++i)
    p -= q.coefficient(ps.fibre[i]) * Poly(ps.pi[i]);
  return p;
}

inline Poly p_from_q(const WeightedAlgebroid& a) {
  detail::require_shape(a.Q, odd_chart(a.carrier));
  return p_from_q(a.Q, phase_space(a));
}

/// Inverse of p_from_q: Q^x = P∂⃖χ_x, Q^θ = −P∂⃖π_θ. P must be linear in momenta.
inline Derivation q_from_p(const Poly& p, const PhaseSpace& ps) {
  std::set<Variable> momenta(ps.chi.begin(), ps.chi.end());
  momenta.insert(ps.pi.begin(), ps.pi.end());
  for (auto& [m, c] : p.terms()) {
    unsigned n = 0;
    for (auto& f : m.factors())
      if (momenta.count(f.var)) n += f.exp;
    if (n != 1) throw MalformedQ("Hamiltonian term " + render(m) + " is not linear in momenta");
  }
  Derivation q(true, Weight({0, 1}));
  for (std::size_t i = 0; i < ps.base.size(); ++i) q.set(ps.base[i], right_partial(p, ps.chi[i]));
  for (std::size_t i = 0; i < ps.fibre.size(); ++i)
    q.set(ps.fibre[i], -right_partial(p, ps.pi[i]));
  return q;
}

struct AlgebroidReport {
  AlgebroidKind kind = AlgebroidKind::Skew;
  CheckList checks;
  Derivation qq;  // [Q,Q]
  Poly pp;        // [P,P]
};

/// Shape of Q, tri-weight of P, and whether [Q,Q] and [P,P] vanish.
inline AlgebroidReport check_weighted_algebroid(const WeightedAlgebroid& a) {
  AlgebroidReport r;
  CoordinateSystem chart = odd_chart(a.carrier);
  r.checks = q_shape_check(a.Q, chart);
  if (!r.checks.ok()) {
    r.kind = AlgebroidKind::General;
    return r;
  }
  PhaseSpace ps = phase_space(a);
  int k = a.carrier.k;
  Poly p = p_from_q(a.Q, ps);
  WeightOf pw = weight_of(p);
  auto& wc = r.checks.add("p.weight", pw.is(Weight({k - 1, 2, 1})));
  if (pw.kind == WeightOf::Homogeneous) wc.weight = pw.weight.str();
  r.qq = commutator(a.Q, a.Q);
  r.pp = schouten(p, p, ps.pairs);
  std::string qres;
  for (auto& [v, c] : r.qq.action) qres += (qres.empty() ? "" : "; ") + v.name + ": " + render(c);
  auto& qc = r.checks.add("q.square", r.qq.is_zero(), r.qq.is_zero() ? "" : "[Q,Q] != 0");
  qc.residual = qres;
  auto& pc = r.checks.add("p.square", r.pp.is_zero(), r.pp.is_zero() ? "" : "[P,P] != 0");
  if (!r.pp.is_zero()) {
    pc.residual = render(r.pp);
    WeightOf ppw = weight_of(r.pp);
    if (ppw.kind == WeightOf::Homogeneous) pc.weight = ppw.weight.str();
  }
  r.kind = r.qq.is_zero() ? AlgebroidKind::Lie : AlgebroidKind::Skew;
  return r;
}

// ---------------------------------------------------------- structure data

/// Anchor P_I^α = ∂_θI Q^α and bracket P_IJ^K = ∂_θJ ∂_θI Q^K, indexed by the
/// phase space's fibre and base lists.
struct StructureFunctions {
  std::vector<std::vector<Poly>> anchor;                // [I][α]
  std::vector<std::vector<std::vector<Poly>>> bracket;  // [I][J][K]
};

inline StructureFunctions structure_from_q(const Derivation& q, const PhaseSpace& ps) {
  std::size_t n = ps.fibre.size(), m = ps.base.size();
  StructureFunctions s;
  s.anchor.assign(n, std::vector<Poly>(m));
  s.bracket.assign(n, std::vector<std::vector<Poly>>(n, std::vector<Poly>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < m; ++a)
      s.anchor[i][a] = partial(q.coefficient(ps.base[a]), ps.fibre[i]);
    for (std::size_t kk = 0; kk < n; ++kk) {
      Poly d = partial(q.coefficient(ps.fibre[kk]), ps.fibre[i]);
      for (std::size_t j = 0; j < n; ++j) s.bracket[i][j][kk] = partial(d, ps.fibre[j]);
    }
  }
  return s;
}

// ---------------------------------------------------------- derived bracket

/// A section of degree r is a function linear in π of tri-weight (r−1, 0, 1).
inline std::optional<int> section_degree(const Poly& s) {
  WeightOf w = weight_of(s);
  if (w.kind != WeightOf::Homogeneous || w.weight[1] != 0 || w.weight[2] != 1) return std::nullopt;
  return w.weight[0] + 1;
}

inline void require_section(const Poly& s, const PhaseSpace& ps, const char* what) {
  std::set<Variable> allowed(ps.base.begin(), ps.base.end());
  for (auto& [m, c] : s.terms()) {
    unsigned n = 0;
    for (auto& f : m.factors()) {
      if (std::find(ps.pi.begin(), ps.pi.end(), f.var) != ps.pi.end()) {
        n += f.exp;
      } else if (!allowed.count(f.var)) {
        throw CoordinateMismatch(std::string(what) + " involves " + f.var.name +
                                 ", sections depend on base coordinates and π only");
      }
    }
    if (n != 1) throw CoordinateMismatch(std::string(what) + " is not linear in π");
  }
}

/// [s1, s2] = [[s1, P], s2]; homogeneous degrees add up to r1 + r2 − k.
inline Poly derived_bracket(const Poly& s1, const Poly& s2, const Poly& p, const PhaseSpace& ps) {
  require_section(s1, ps, "first section");
  require_section(s2, ps, "second section");
  auto r1 = section_degree(s1), r2 = section_degree(s2);
  if (r1 && r2 && *r1 + *r2 - ps.k < 1)
    throw DegreeUnderflow("bracket of sections of degrees " + std::to_string(*r1) + " and " +
                          std::to_string(*r2) + " has degree " +
                          std::to_string(*r1 + *r2 - ps.k) + " < 1 (k = " +
                          std::to_string(ps.k) + ")");
  return schouten(schouten(s1, p, ps.pairs), s2, ps.pairs);
}

/// Jacobi identity of the derived bracket on all triples from a list of sections.
inline CheckList derived_jacobi_check(const std::vector<Poly>& sections, const Poly& p,
                                      const PhaseSpace& ps) {
  CheckList out;
  auto br = [&](const Poly& a, const Poly& b) {
    return schouten(schouten(a, p, ps.pairs), b, ps.pairs);
  };
  for (std::size_t i = 0; i < sections.size(); ++i)
    for (std::size_t j = 0; j < sections.size(); ++j)
      for (std::size_t l = 0; l < sections.size(); ++l) {
        const Poly &a = sections[i], &b = sections[j], &c = sections[l];
        Poly res = br(a, br(b, c)) - br(br(a, b), c) - br(b, br(a, c));
        auto& chk = out.add("jacobi." + std::to_string(i) + "." + std::to_string(j) + "." +
                                std::to_string(l),
                            res.is_zero());
        if (!res.is_zero()) chk.residual = render(res);
      }
  return out;
}

// ------------------------------------------------------------------ anchors

/// Pullbacks of the coordinates of a tangent bundle TB (x and d_x) along a map.
struct AnchorMap {
  CoordinateSystem target;
  Substitution components;
};

namespace detail {

/// Even D_k fibre coordinate for each odd ΠD_k one; used where Q^x (linear in θ)
/// is read as a function on D_k.
inline Poly make_even(const Poly& p) {
  Poly r;
  for (auto& [m, c] : p.terms()) {
    Poly t(c);
    for (auto& f : m.factors()) {
      Variable v = f.var;
      if (is_linear_coordinate(v)) v.odd = false;
      t = t * pow(Poly(v), f.exp);
    }
    r += t;
  }
  return r;
}

}  // namespace detail

/// ρ_q : D_k → T B_{q−1}, ρ*(δx^α) = Q^α with θ read as the even fibre
/// coordinate; q = k gives the full anchor.
inline AnchorMap anchor(const WeightedAlgebroid& a, int q = 0) {
  int k = a.carrier.k;
  if (q <= 0) q = k;
  const CoordinateSystem& c = a.carrier.bundle.chart(0);
  AnchorMap r;
  r.target.name = "T" + c.name;
  r.target.arity = 2;
  for (auto& v : c.vars)
    if (v.weight[1] == 0 && v.weight[0] <= q - 1) {
      Variable d(tangent_name(v.name), Weight({v.weight[0], 1}), v.odd);
      r.target.vars.push_back(v);
      r.target.vars.push_back(d);
      r.components[v] = Poly(v);
      r.components[d] = detail::make_even(a.Q.coefficient(v));
    }
  return r;
}

/// ρ̂_q = Tτ ∘ ρ ∘ ι : F_k → T F_{q−1}; needs D_k = D(F_k).
inline AnchorMap anchor_hat(const WeightedAlgebroid& a, int q) {
  int k = a.carrier.k;
  GradedBundle f;
  try {
    f = reconstruct(a.carrier);
  } catch (const NotSymmetric& e) {
    throw NotALinearisation(std::string("carrier is not a linearisation: ") + e.what());
  }
  const CoordinateSystem& c = a.carrier.bundle.chart(0);
  const CoordinateSystem& fc = f.chart(0);
  detail::Holonomy h = detail::holonomy(c, k);
  Substitution iota;
  for (auto& v : h.base) iota[v] = Poly(fc.at(v.name));
  for (std::size_t i = 0; i < h.a.size(); ++i)
    iota[h.a[i]] = Rational(h.b[i].weight[0]) * Poly(fc.at(h.b[i].name));
  for (auto& z : h.top) iota[z] = Rational(k) * Poly(fc.at(reconstructed_name(z.name)));
  AnchorMap rho = anchor(a, q);
  AnchorMap r;
  r.target = tangent_bundle(project_tower(f, q - 1)).chart(0);
  for (auto& v : r.target.vars) {
    const Variable* src = rho.target.find(v.name);
    if (!src) throw NotALinearisation("no anchor component for " + v.name);
    r.components[v] = substitute(rho.components.at(*src), iota);
  }
  return r;
}

// -------------------------------------------------------------- restriction

/// d_ε on A_1 = D_k[Δ¹ ≤ 0]: Q on the first-weight-0 coordinates.
struct RestrictedDifferential {
  CoordinateSystem chart;
  Derivation d;
};

inline RestrictedDifferential restrict_to_A1(const WeightedAlgebroid& a) {
  CoordinateSystem full = odd_chart(a.carrier);
  RestrictedDifferential r;
  r.chart = CoordinateSystem(full.name, full.select([](const Variable& v) {
                               return v.weight[0] == 0;
                             }),
                             full.arity);
  r.d = Derivation(a.Q.odd, a.Q.shift);
  for (auto& v : r.chart.vars) {
    Poly c = a.Q.coefficient(v);
    for (auto& w : c.variables())
      if (!r.chart.contains(w))
        throw ProjectionObstruction("Q(" + v.name + ") involves " + w.name +
                                    " of positive first weight");
    r.d.set(v, c);
  }
  return r;
}

/// Q(αΦ) = d(α)Φ + (−1)^{|α|} α Q(Φ) for α on A_1 and Φ on ΠD_k.
inline Poly leibniz_residual(const Derivation& q, const Derivation& d, const Poly& alpha,
                             const Poly& phi) {
  ParityOf pa = parity_of(alpha);
  if (pa.kind == ParityOf::Mixed) throw std::invalid_argument("alpha must have a parity");
  Poly rhs = d(alpha) * phi;
  Poly second = alpha * q(phi);
  if (pa.kind == ParityOf::Odd) rhs -= second;
  else rhs += second;
  return q(alpha * phi) - rhs;
}

// ------------------------------------------------------------ epsilon map

/// ε : T*D_k → T D*_k in coordinates (x, y, p, π):
/// δx^α = Σ y^I P_I^α, δπ_J = Σ P_J^α p_α + Σ y^I P_IJ^K π_K.
struct EpsilonMap {
  std::vector<Variable> x, y, p, pi;  // domain
  std::vector<Variable> dx, dpi;      // target differentials
  Substitution components;
};

inline EpsilonMap epsilon_components(const WeightedAlgebroid& a) {
  PhaseSpace ps = phase_space(a);
  StructureFunctions s = structure_from_q(a.Q, ps);
  int k = a.carrier.k;
  EpsilonMap e;
  e.x = ps.base;
  e.pi = ps.pi;
  for (auto& th : ps.fibre) e.y.emplace_back(th.name, th.weight, false);
  for (auto& x : ps.base) {
    int u = x.weight[0];
    e.p.emplace_back("p_" + x.name, Weight({k - 1 - u, 1, 1}), false);
    e.dx.emplace_back(tangent_name(x.name), Weight({u, 1}), false);
  }
  for (auto& pi : ps.pi) e.dpi.emplace_back(tangent_name(pi.name), pi.weight + Weight({0, 1, 0}));
  std::size_t n = ps.fibre.size(), m = ps.base.size();
  for (std::size_t al = 0; al < m; ++al) {
    Poly c;
    for (std::size_t i = 0; i < n; ++i)
      c += Poly(e.y[i]) * detail::make_even(s.anchor[i][al]);
    e.components[e.dx[al]] = c;
  }
  for (std::size_t j = 0; j < n; ++j) {
    Poly c;
    for (std::size_t al = 0; al < m; ++al)
      c += detail::make_even(s.anchor[j][al]) * Poly(e.p[al]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t kk = 0; kk < n; ++kk)
        c += Poly(e.y[i]) * detail::make_even(s.bracket[i][j][kk]) * Poly(e.pi[kk]);
    e.components[e.dpi[j]] = c;
  }
  return e;
}

// ------------------------------------------------------- special degrees

/// Weighted Lie algebra: the carrier has no coordinate of total weight 0.
inline CheckList weighted_lie_algebra_check(const WeightedAlgebroid& a) {
  CheckList out;
  std::string base;
  for (auto& v : a.carrier.bundle.chart(0).vars)
    if (v.weight.is_zero()) base += (base.empty() ? "" : ",") + v.name;
  out.add("lie_algebra.point_base", base.empty(), base.empty() ? "" : "weight-0 coordinates " + base);
  AlgebroidReport r = check_weighted_algebroid(a);
  out.append(r.checks);
  return out;
}

/// Degree 2: Q has weight (0,1) with respect to both Euler fields, i.e.
/// [Δ¹, Q] = 0 and [Δ², Q] = Q, which makes (D_2, Q) a VB-algebroid.
inline CheckList vb_algebroid_check(const WeightedAlgebroid& a) {
  CheckList out;
  out.add("vb.degree", a.carrier.k == 2, "k = " + std::to_string(a.carrier.k));
  CoordinateSystem c = odd_chart(a.carrier);
  Derivation d1 = weight_vector_field(c, 0), d2 = weight_vector_field(c, 1);
  Derivation c1 = commutator(d1, a.Q);
  Derivation c2 = commutator(d2, a.Q) + Rational(-1) * a.Q;
  out.add("vb.euler.first", c1.is_zero());
  out.add("vb.euler.second", c2.is_zero());
  AlgebroidReport r = check_weighted_algebroid(a);
  out.append(r.checks);
  return out;
}

}  // namespace grb
