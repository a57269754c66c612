#pragma once

#include <grb/bundle.hpp>

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace grb {

class WeightViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotSymmetric : public std::runtime_error {
 public:
  NotSymmetric(std::string a, std::string b, const std::string& what)
      : std::runtime_error(what), first(std::move(a)), second(std::move(b)) {}
  std::string first, second;
};

class NonlinearFiber : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Double graded bundle of arity 2 whose second weight is 0 or 1 (the linear leg);
/// degree k refers to the total weight, so first weights stay below k.
struct GLBundle {
  NTupleBundle bundle;
  int k = 1;
};

inline bool is_linear_coordinate(const Variable& v) { return v.weight[1] == 1; }

/// Holonomic weight of a fibre coordinate: first weight plus second weight.
inline int total_weight(const Variable& v) { return v.weight.total(); }

inline CheckList validate_gl(const GLBundle& g) {
  CheckList out = validate(g.bundle);
  bool shape = g.bundle.arity() == 2;
  std::string detail;
  for (auto& c : g.bundle.charts)
    for (auto& v : c.vars) {
      if (v.weight[1] != 0 && v.weight[1] != 1) {
        shape = false;
        detail += " second weight of " + v.name;
      }
      if (v.weight[0] > g.k - 1) {
        shape = false;
        detail += " first weight of " + v.name;
      }
    }
  out.add("gl.shape", shape, detail);
  bool linear = true;
  std::string where;
  for (auto& t : g.bundle.transitions)
    for (auto& [v, img] : t.forward)
      for (auto& [m, c] : img.terms()) {
        unsigned deg = 0;
        for (auto& f : m.factors())
          if (is_linear_coordinate(f.var)) deg += f.exp;
        if (deg != (is_linear_coordinate(v) ? 1u : 0u)) {
          linear = false;
          where = v.name;
        }
      }
  out.add("gl.linear", linear, where.empty() ? "" : "nonlinear image of " + where);
  bool base_ok = true;
  std::string why;
  try {
    project(g.bundle, [](const Variable& v) { return v.weight[1] == 0; });
  } catch (const IllDefinedProjection& e) {
    base_ok = false;
    why = e.what();
  }
  out.add("gl.base", base_ok, why);
  return out;
}

// ------------------------------------------------------------- morphisms

/// Polynomial map between the charts source_chart and target_chart:
/// components give every target coordinate in source coordinates.
struct GradedMorphism {
  GradedBundle source, target;
  Substitution components;
  std::size_t source_chart = 0, target_chart = 0;

  const CoordinateSystem& dom() const { return source.chart(source_chart); }
  const CoordinateSystem& cod() const { return target.chart(target_chart); }
};

inline CheckList check_morphism(const GradedMorphism& f) {
  CheckList out;
  bool same_arity = f.source.arity() == f.target.arity();
  for (auto& v : f.cod().vars) {
    auto it = f.components.find(v);
    if (it == f.components.end()) {
      out.add("morphism.defined." + v.name, false, "missing component");
      continue;
    }
    const Poly& p = it->second;
    bool ok = involves_only(p, f.dom()) && parity_of(p).is(v.odd);
    if (same_arity) {
      ok = ok && weight_of(p).is(v.weight);
    } else {
      for (auto& [m, c] : p.terms()) ok = ok && m.weight().total() == v.weight.total();
    }
    if (v.weight.is_zero())
      for (auto& u : p.variables()) ok = ok && u.weight.is_zero();
    auto& c = out.add("morphism.weight." + v.name, ok);
    if (!ok) c.residual = render(p);
  }
  return out;
}

inline GradedMorphism identity_morphism(const GradedBundle& b, std::size_t chart = 0) {
  return {b, b, identity_on(b.chart(chart).vars), chart, chart};
}

/// second ∘ first.
inline GradedMorphism compose(const GradedMorphism& second, const GradedMorphism& first) {
  return {first.source, second.target, compose(second.components, first.components),
          first.source_chart, second.target_chart};
}

inline bool same_components(const GradedMorphism& a, const GradedMorphism& b) {
  return a.components == b.components;
}

/// Tower projection F_k → F_l as a morphism.
inline GradedMorphism tower_projection(const GradedBundle& b, int l) {
  GradedBundle low = project_tower(b, l);
  return {b, low, identity_on(low.chart(0).vars), 0, 0};
}

/// Vφ: VF → VF'.
inline GradedMorphism vertical_morphism(const GradedMorphism& f) {
  GradedMorphism r;
  r.source = vertical_bundle(f.source);
  r.target = vertical_bundle(f.target);
  r.source_chart = f.source_chart;
  r.target_chart = f.target_chart;
  r.components =
      detail::lift_map(f.components, f.dom(), r.dom(), r.cod(), true);
  return r;
}

// ---------------------------------------------------------- linearisation

/// D(F): the vertical bundle with the top-weight undotted coordinates removed.
inline GLBundle linearise(const GradedBundle& f) {
  int k = f.degree();
  NTupleBundle vb = vertical_bundle(f);
  return {project(vb, [k](const Variable& v) { return v.weight[0] <= k - 1; }), k};
}

namespace detail {

inline Substitution kill_top(const CoordinateSystem& c, int k) {
  Substitution s;
  for (auto& v : c.vars)
    if (v.weight[1] == 0 && v.weight[0] == k) s[v] = Poly();
  return s;
}

}  // namespace detail

/// Dφ: D(F) → D(F'); dotted components are differentials with z set to zero.
inline GradedMorphism linearise_morphism(const GradedMorphism& f) {
  CheckList chk = check_morphism(f);
  for (auto& c : chk.checks)
    if (c.verdict == Verdict::Fail)
      throw WeightViolation("morphism fails " + c.id + ": " + c.residual);
  GradedMorphism v = vertical_morphism(f);
  int k = f.source.degree();
  GradedMorphism r;
  r.source = linearise(f.source).bundle;
  r.target = linearise(f.target).bundle;
  r.source_chart = f.source_chart;
  r.target_chart = f.target_chart;
  Substitution z = detail::kill_top(v.dom(), k);
  for (auto& t : r.cod().vars) r.components[t] = substitute(v.components.at(t), z);
  return r;
}

/// ι: F → D(F), ẏ_w ↦ w y_w and ż ↦ k z.
inline GradedMorphism holonomic_embedding(const GradedBundle& f, std::size_t chart = 0) {
  GradedMorphism r;
  r.source = f;
  r.target = linearise(f).bundle;
  r.source_chart = r.target_chart = chart;
  const auto& src = f.chart(chart);
  for (auto& v : src.vars) {
    int w = v.weight[0];
    if (auto* u = r.cod().find(v.name)) r.components[*u] = Poly(v);
    if (w > 0) r.components[r.cod().at(dot_name(v.name))] = Rational(w) * Poly(v);
  }
  return r;
}

/// Every transition of D(F) pulled back through ι equals ι of the F transition.
inline CheckList embedding_compatibility(const GradedBundle& f) {
  CheckList out;
  GLBundle d = linearise(f);
  for (std::size_t i = 0; i < f.transitions.size(); ++i) {
    const auto& tf = f.transitions[i];
    const auto& td = d.bundle.transitions[i];
    Substitution is = holonomic_embedding(f, tf.source).components;
    Substitution it = holonomic_embedding(f, tf.target).components;
    for (auto& [v, img] : td.forward) {
      Poly lhs = substitute(img, is);
      Poly rhs = substitute(it.at(v), tf.forward);
      auto& c = out.add("embedding." + f.transition_id(tf) + "." + v.name, lhs == rhs);
      if (!(lhs == rhs)) c.residual = render(lhs - rhs);
    }
  }
  return out;
}

/// Dφ ∘ ι_F = ι_F' ∘ φ.
inline CheckList embedding_naturality(const GradedMorphism& f) {
  CheckList out;
  GradedMorphism df = linearise_morphism(f);
  Substitution is = holonomic_embedding(f.source, f.source_chart).components;
  Substitution it = holonomic_embedding(f.target, f.target_chart).components;
  for (auto& [v, img] : df.components) {
    Poly lhs = substitute(img, is);
    Poly rhs = substitute(it.at(v), f.components);
    auto& c = out.add("naturality." + v.name, lhs == rhs);
    if (!(lhs == rhs)) c.residual = render(lhs - rhs);
  }
  return out;
}

namespace detail {

inline void compare_maps(CheckList& out, const std::string& id, const Substitution& a,
                         const Substitution& b) {
  std::string residual;
  bool ok = a.size() == b.size();
  for (auto& [v, img] : a) {
    auto it = b.find(v);
    if (it == b.end()) {
      ok = false;
      residual += v.name + " missing; ";
    } else if (!(img == it->second)) {
      ok = false;
      residual += v.name + ": " + render(img - it->second) + "; ";
    }
  }
  out.add(id, ok).residual = residual;
}

inline GradedBundle promote_arity(const GradedBundle& b) {
  GradedBundle r;
  Substitution up;
  for (auto& c : b.charts) {
    CoordinateSystem nc{c.name, {}, 2};
    for (auto& v : c.vars) {
      nc.vars.push_back(undotted_in_pair(v));
      up[v] = Poly(nc.vars.back());
    }
    r.charts.push_back(nc);
  }
  for (auto& t : b.transitions) {
    TransitionMap nt{t.source, t.target, {}, std::nullopt};
    for (auto& [v, img] : t.forward) nt.forward[undotted_in_pair(v)] = substitute(img, up);
    if (t.inverse) {
      nt.inverse.emplace();
      for (auto& [v, img] : *t.inverse) (*nt.inverse)[undotted_in_pair(v)] = substitute(img, up);
    }
    r.transitions.push_back(std::move(nt));
  }
  return r;
}

}  // namespace detail

/// Commutativity identities of the linearisation diagram for degree k ≥ 2:
/// D(F_k)[Δ² ≤ 0] = F_{k−1}, D(F_k)[Δ¹ ≤ k−2] = D(F_{k−1}),
/// D(F_k)[Δ ≤ k−1] = VF_{k−1}, and d_{k−1} ∘ Vτ = Dτ ∘ d_k.
inline CheckList linearisation_diagram_check(const GradedBundle& f) {
  CheckList out;
  int k = f.degree();
  if (k < 2) throw std::invalid_argument("linearisation diagram needs degree >= 2");
  GLBundle d = linearise(f);
  GradedBundle low = project_tower(f, k - 1);
  auto compare = [&](const std::string& id, const GradedBundle& a, const GradedBundle& b) {
    bool charts = a.charts.size() == b.charts.size();
    for (std::size_t i = 0; charts && i < a.charts.size(); ++i)
      charts = std::is_permutation(a.charts[i].vars.begin(), a.charts[i].vars.end(),
                                   b.charts[i].vars.begin(), b.charts[i].vars.end());
    out.add(id + ".coordinates", charts);
    for (std::size_t i = 0; i < a.transitions.size(); ++i)
      detail::compare_maps(out, id + "." + a.transition_id(a.transitions[i]),
                           a.transitions[i].forward, b.transitions[i].forward);
  };
  compare("base", project(d.bundle, [](const Variable& v) { return v.weight[1] == 0; }),
          detail::promote_arity(low));
  compare("lower",
          project(d.bundle, [k](const Variable& v) { return v.weight[0] <= k - 2; }),
          linearise(low).bundle);
  compare("vertical",
          project(d.bundle, [k](const Variable& v) { return v.weight.total() <= k - 1; }),
          vertical_bundle(low));
  // pullbacks to VF_k of the coordinates of D(F_{k−1}); d_k and d_{k−1} keep names
  GradedMorphism tau = tower_projection(f, k - 1);
  GradedMorphism vtau = vertical_morphism(tau);
  GradedMorphism dtau = linearise_morphism(tau);
  Substitution lhs;
  for (auto& [v, img] : dtau.components) lhs[v] = vtau.components.at(v);
  detail::compare_maps(out, "square", lhs, dtau.components);
  return out;
}

// ------------------------------------------------- symmetry, reconstruction

namespace detail {

/// A_{k−1} coordinates paired by chart order with the B coordinates one weight up.
struct Holonomy {
  std::vector<Variable> a, b;   // ȧ_I and its partner y_I
  std::vector<Variable> top;    // z̄ coordinates, bi-weight (k−1, 1)
  std::vector<Variable> base;   // all B coordinates
};

inline Holonomy holonomy(const CoordinateSystem& c, int k) {
  Holonomy h;
  for (auto& v : c.vars)
    if (v.weight[1] == 0) h.base.push_back(v);
  for (int u = 0; u + 1 <= k - 1; ++u) {
    auto as = c.select([&](const Variable& v) { return v.weight[1] == 1 && v.weight[0] == u; });
    auto bs = c.select([&](const Variable& v) { return v.weight[1] == 0 && v.weight[0] == u + 1; });
    if (as.size() != bs.size())
      throw NotSymmetric(c.name, std::to_string(u),
                         "chart " + c.name + ": A and VB ranks differ at weight " +
                             std::to_string(u + 1));
    h.a.insert(h.a.end(), as.begin(), as.end());
    h.b.insert(h.b.end(), bs.begin(), bs.end());
  }
  h.top = c.select([&](const Variable& v) { return v.weight[1] == 1 && v.weight[0] == k - 1; });
  return h;
}

}  // namespace detail

/// Checks A_{k−1} ≅ VB_{k−1} (the A laws are the vertical lift of the B laws)
/// and closedness of the z̄ coefficients, which is symmetry of the tensors.
inline CheckList symmetry_check(const GLBundle& g) {
  CheckList out;
  int k = g.k;
  std::vector<detail::Holonomy> hs;
  try {
    for (auto& c : g.bundle.charts) hs.push_back(detail::holonomy(c, k));
  } catch (const NotSymmetric& e) {
    out.add("symmetric.ranks", false, e.what());
    return out;
  }
  for (auto& t : g.bundle.transitions) {
    const auto& hs_ = hs[t.source];
    const auto& ht = hs[t.target];
    std::string id = g.bundle.transition_id(t);
    for (std::size_t j = 0; j < ht.a.size(); ++j) {
      Poly expected;
      const Poly& fb = t.forward.at(ht.b[j]);
      for (std::size_t i = 0; i < hs_.a.size(); ++i) {
        Poly d = partial(fb, hs_.b[i]);
        if (!d.is_zero()) expected += Poly(hs_.a[i]) * d;
      }
      Poly diff = t.forward.at(ht.a[j]) - expected;
      auto& c = out.add("symmetric." + id + ".vertical." + ht.a[j].name, diff.is_zero(),
                        diff.is_zero() ? "" : ht.a[j].name + " ~ " + ht.b[j].name);
      if (!diff.is_zero()) c.residual = render(diff);
    }
    for (auto& zt : ht.top) {
      const Poly& law = t.forward.at(zt);
      std::vector<Poly> L;
      for (auto& a : hs_.a) L.push_back(partial(law, a));
      bool ok = true;
      std::string pair;
      for (std::size_t i = 0; i < L.size() && ok; ++i)
        for (std::size_t j = i + 1; j < L.size() && ok; ++j)
          if (!(partial(L[i], hs_.b[j]) == partial(L[j], hs_.b[i]))) {
            ok = false;
            pair = hs_.a[i].name + "," + hs_.a[j].name;
          }
      out.add("symmetric." + id + ".closed." + zt.name, ok, pair);
    }
  }
  return out;
}

inline bool is_symmetric(const GLBundle& g) { return symmetry_check(g).ok(); }

inline std::string reconstructed_name(const std::string& n) {
  if (n.size() > 4 && n.ends_with("_dot")) return n.substr(0, n.size() - 4);
  return n + "_h";
}

/// Graded bundle of holonomic vectors: z = z̄ / k on the locus ȧ_I = w_I y_I.
inline GradedBundle reconstruct(const GLBundle& g) {
  CheckList chk = symmetry_check(g);
  for (auto& c : chk.checks)
    if (c.verdict == Verdict::Fail) {
      auto comma = c.detail.find(',');
      if (comma != std::string::npos)
        throw NotSymmetric(c.detail.substr(0, comma), c.detail.substr(comma + 1),
                           "not symmetric: " + c.id + " (" + c.detail + ")");
      throw NotSymmetric(c.id, c.detail, "not symmetric: " + c.id + " " + c.detail);
    }
  int k = g.k;
  GradedBundle r;
  std::vector<Substitution> down;  // GL chart → reconstructed chart, on the locus
  std::vector<std::map<Variable, Variable>> up;  // reconstructed chart → GL chart
  for (auto& c : g.bundle.charts) {
    detail::Holonomy h = detail::holonomy(c, k);
    CoordinateSystem nc{c.name, {}, 1};
    Substitution dn;
    std::map<Variable, Variable> u;
    for (auto& v : h.base) {
      Variable w(v.name, Weight({v.weight[0]}), v.odd);
      nc.vars.push_back(w);
      dn[v] = Poly(w);
      u[w] = v;
    }
    for (std::size_t i = 0; i < h.a.size(); ++i)
      dn[h.a[i]] = Rational(h.b[i].weight[0]) * dn[h.b[i]];
    for (auto& z : h.top) {
      Variable w(reconstructed_name(z.name), Weight({k}), z.odd);
      nc.vars.push_back(w);
      dn[z] = Rational(k) * Poly(w);
      u[w] = z;
    }
    r.charts.push_back(nc);
    down.push_back(dn);
    up.push_back(u);
  }
  auto rebuild = [&](const Substitution& m, std::size_t from, std::size_t to) {
    Substitution out;
    for (auto& nv : r.charts[to].vars) {
      Poly img = substitute(m.at(up[to].at(nv)), down[from]);
      if (nv.weight[0] == k) img *= Rational(1, k);
      out[nv] = img;
    }
    return out;
  };
  for (auto& t : g.bundle.transitions) {
    TransitionMap nt{t.source, t.target, rebuild(t.forward, t.source, t.target), std::nullopt};
    if (t.inverse) nt.inverse = rebuild(*t.inverse, t.target, t.source);
    r.transitions.push_back(std::move(nt));
  }
  return r;
}

// ------------------------------------------------------------ linear dual

inline std::string dual_name(const std::string& n) {
  return "pi_" + (n.ends_with("_dot") ? n.substr(0, n.size() - 4) : n);
}

namespace detail {

using PolyMatrix = std::vector<std::vector<Poly>>;

inline PolyMatrix zeros(std::size_t n) { return PolyMatrix(n, std::vector<Poly>(n)); }

inline PolyMatrix mul(const PolyMatrix& a, const PolyMatrix& b) {
  std::size_t n = a.size();
  PolyMatrix r = zeros(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < n; ++l) {
      if (a[i][l].is_zero()) continue;
      for (std::size_t j = 0; j < n; ++j)
        if (!b[l][j].is_zero()) r[i][j] += a[i][l] * b[l][j];
    }
  return r;
}

/// M_IJ = ∂ḋ'_J / ∂ḋ_I for linear coordinates I (source) and J (target).
inline PolyMatrix linear_part(const Substitution& m, const std::vector<Variable>& src,
                              const std::vector<Variable>& dst) {
  PolyMatrix r = zeros(src.size());
  for (std::size_t i = 0; i < src.size(); ++i)
    for (std::size_t j = 0; j < dst.size(); ++j) r[i][j] = partial(m.at(dst[j]), src[i]);
  return r;
}

/// Inverse of a block-triangular M given the inverses of its diagonal blocks:
/// M⁻¹ = Σ_m (−D⁻¹U)^m D⁻¹ with U nilpotent.
inline PolyMatrix block_inverse(const PolyMatrix& m, const PolyMatrix& dinv,
                                const std::vector<int>& cls) {
  std::size_t n = m.size();
  PolyMatrix u = zeros(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (cls[i] != cls[j]) u[i][j] = m[i][j];
  PolyMatrix step = mul(dinv, u);
  for (auto& row : step)
    for (auto& e : row) e = -e;
  PolyMatrix term = dinv, sum = dinv;
  for (std::size_t it = 0; it < n; ++it) {
    term = mul(step, term);
    bool zero = true;
    for (auto& row : term)
      for (auto& e : row)
        if (!e.is_zero()) zero = false;
    if (zero) break;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) sum[i][j] += term[i][j];
  }
  return sum;
}

}  // namespace detail

/// D*(F): dual of D(F) → F_{k−1}; π dual to a linear coordinate of total weight t
/// has bi-weight (k − t, 1).
inline GLBundle linear_dual(const GradedBundle& f) {
  GLBundle d = linearise(f);
  int k = d.k;
  GradedBundle r;
  std::vector<std::vector<Variable>> lin, pis;
  std::vector<std::vector<int>> cls;
  for (auto& c : d.bundle.charts) {
    CoordinateSystem nc{c.name, {}, 2};
    std::vector<Variable> l, p;
    std::vector<int> w;
    for (auto& v : c.vars) {
      if (!is_linear_coordinate(v)) {
        nc.vars.push_back(v);
        continue;
      }
      if (v.odd) throw std::invalid_argument("linear dual of odd fibres is not supported");
      l.push_back(v);
      p.emplace_back(dual_name(v.name), Weight({k - total_weight(v), 1}), false);
      w.push_back(total_weight(v));
    }
    nc.vars.insert(nc.vars.end(), p.begin(), p.end());
    r.charts.push_back(nc);
    lin.push_back(l);
    pis.push_back(p);
    cls.push_back(w);
  }
  for (auto& t : d.bundle.transitions) {
    if (!t.inverse)
      throw std::invalid_argument("linear dual needs declared inverse transitions");
    std::size_t s = t.source, g = t.target;
    detail::PolyMatrix m = detail::linear_part(t.forward, lin[s], lin[g]);
    detail::PolyMatrix n = detail::linear_part(*t.inverse, lin[g], lin[s]);
    // diagonal blocks of the inverse law, rewritten in source coordinates
    detail::PolyMatrix dinv = detail::zeros(m.size());
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::size_t j = 0; j < m.size(); ++j)
        if (cls[s][j] == cls[g][i]) dinv[i][j] = substitute(n[i][j], t.forward);
    detail::PolyMatrix minv = detail::block_inverse(m, dinv, cls[s]);
    TransitionMap nt{s, g, {}, Substitution{}};
    for (auto& v : r.charts[g].vars)
      if (!is_linear_coordinate(v)) nt.forward[v] = t.forward.at(v);
    for (auto& v : r.charts[s].vars)
      if (!is_linear_coordinate(v)) (*nt.inverse)[v] = t.inverse->at(v);
    // π'_J = Σ_I (M⁻¹)_JI π_I and π_I = Σ_J M_IJ π'_J
    for (std::size_t j = 0; j < pis[g].size(); ++j) {
      Poly img;
      for (std::size_t i = 0; i < pis[s].size(); ++i)
        if (!minv[j][i].is_zero()) img += minv[j][i] * Poly(pis[s][i]);
      nt.forward[pis[g][j]] = img;
    }
    for (std::size_t i = 0; i < pis[s].size(); ++i) {
      Poly img;
      for (std::size_t j = 0; j < pis[g].size(); ++j)
        if (!m[i][j].is_zero()) img += substitute(m[i][j], *t.inverse) * Poly(pis[g][j]);
      (*nt.inverse)[pis[s][i]] = img;
    }
    r.transitions.push_back(std::move(nt));
  }
  return {r, k};
}

/// Σ π_I ḋ^I over chart i of D(F) and D*(F), in the union of their coordinates.
inline Poly dual_pairing(const GradedBundle& f, std::size_t chart = 0) {
  GLBundle d = linearise(f);
  Poly p;
  for (auto& v : d.bundle.chart(chart).vars)
    if (is_linear_coordinate(v))
      p += Poly(Variable(dual_name(v.name), Weight({d.k - total_weight(v), 1}))) * Poly(v);
  return p;
}

/// Σ π'ḋ' = Σ πḋ under every transition of D(F) and D*(F).
inline CheckList dual_pairing_check(const GradedBundle& f) {
  CheckList out;
  GLBundle d = linearise(f), ds = linear_dual(f);
  for (std::size_t i = 0; i < d.bundle.transitions.size(); ++i) {
    const auto& t = d.bundle.transitions[i];
    Substitution s = t.forward;
    for (auto& [v, img] : ds.bundle.transitions[i].forward) s[v] = img;
    Poly diff = substitute(dual_pairing(f, t.target), s) - dual_pairing(f, t.source);
    out.add("pairing.dual." + d.bundle.transition_id(t), diff.is_zero()).residual =
        diff.is_zero() ? "" : render(diff);
  }
  return out;
}

/// δ* = Σ w π^{k−w+1} y_w + k π¹ z in coordinates of D*(F) together with z.
inline Poly pairing(const GradedBundle& f, std::size_t chart = 0) {
  int k = f.degree();
  Poly p;
  for (auto& v : f.chart(chart).vars) {
    int w = v.weight[0];
    if (w == 0) continue;
    Variable pi(dual_name(v.name), Weight({k - w, 1}), v.odd);
    p += Rational(w) * Poly(pi) * Poly(undotted_in_pair(v));
  }
  return p;
}

/// δ* is invariant under simultaneous transitions of F and D*(F).
inline CheckList pairing_check(const GradedBundle& f) {
  CheckList out;
  GLBundle ds = linear_dual(f);
  GradedBundle pf = detail::promote_arity(f);
  for (std::size_t i = 0; i < f.transitions.size(); ++i) {
    const auto& t = ds.bundle.transitions[i];
    Substitution s = pf.transitions[i].forward;
    for (auto& [v, img] : t.forward) s[v] = img;
    Poly before = pairing(f, t.source);
    Poly diff = substitute(pairing(f, t.target), s) - before;
    std::string id = f.transition_id(f.transitions[i]);
    out.add("pairing.invariant." + id, diff.is_zero()).residual =
        diff.is_zero() ? "" : render(diff);
    WeightOf w = weight_of(before);
    auto& c = out.add("pairing.weight", before.is_zero() || w.is(Weight({f.degree(), 1})));
    c.weight = w.weight.str();
  }
  return out;
}

/// Mi(F) = D*(F)[Δ¹ + kΔ² ≤ k]: keeps x, y and the weight-(0,1) momenta.
inline GLBundle mironian(const GradedBundle& f) {
  GLBundle ds = linear_dual(f);
  int k = ds.k;
  return {project(ds.bundle,
                  [k](const Variable& v) { return v.weight[0] + k * v.weight[1] <= k; }),
          k};
}

/// Π over the linear leg: parity of every second-weight-1 coordinate flips.
inline GLBundle parity_reverse(const GLBundle& g) {
  std::map<Variable, Variable> flip;
  GLBundle r{{}, g.k};
  for (auto& c : g.bundle.charts) {
    CoordinateSystem nc{c.name, {}, c.arity};
    for (auto& v : c.vars) {
      Variable w = v;
      if (is_linear_coordinate(v)) w.odd = !v.odd;
      flip[v] = w;
      nc.vars.push_back(w);
    }
    r.bundle.charts.push_back(nc);
  }
  auto rebuild = [&](const Substitution& m) {
    Substitution out;
    for (auto& [v, img] : m) {
      Poly p;
      for (auto& [mono, coef] : img.terms()) {
        Poly term(coef);
        unsigned lin = 0;
        for (auto& f : mono.factors()) {
          if (is_linear_coordinate(f.var)) lin += f.exp;
          term = term * pow(Poly(flip.at(f.var)), f.exp);
        }
        if (lin > 1)
          throw NonlinearFiber("fibre coordinate appears nonlinearly in image of " + v.name);
        p += term;
      }
      out[flip.at(v)] = p;
    }
    return out;
  };
  for (auto& t : g.bundle.transitions) {
    TransitionMap nt{t.source, t.target, rebuild(t.forward), std::nullopt};
    if (t.inverse) nt.inverse = rebuild(*t.inverse);
    r.bundle.transitions.push_back(std::move(nt));
  }
  return r;
}

}  // namespace grb
