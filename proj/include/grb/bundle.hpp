#pragma once

#include <grb/checks.hpp>
#include <grb/superalg.hpp>

#include <algorithm>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace grb {

class IllDefinedProjection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CoordinateSystem {
  std::string name;
  std::vector<Variable> vars;
  std::size_t arity = 1;

  CoordinateSystem() = default;
  CoordinateSystem(std::string n, std::vector<Variable> v, std::size_t a = 1)
      : name(std::move(n)), vars(std::move(v)), arity(a) {}

  const Variable* find(const std::string& n) const {
    for (auto& v : vars)
      if (v.name == n) return &v;
    return nullptr;
  }
  const Variable& at(const std::string& n) const {
    if (auto* v = find(n)) return *v;
    throw std::out_of_range("no coordinate " + n + " in chart " + name);
  }
  bool contains(const Variable& v) const {
    return std::find(vars.begin(), vars.end(), v) != vars.end();
  }
  std::size_t index_of(const Variable& v) const {
    return static_cast<std::size_t>(std::find(vars.begin(), vars.end(), v) -
                                    vars.begin());
  }
  std::vector<Variable> select(const std::function<bool(const Variable&)>& f) const {
    std::vector<Variable> r;
    for (auto& v : vars)
      if (f(v)) r.push_back(v);
    return r;
  }
  std::vector<Variable> base() const {
    return select([](const Variable& v) { return v.weight.is_zero(); });
  }
  std::vector<Variable> fibre() const {
    return select([](const Variable& v) { return !v.weight.is_zero(); });
  }
};

/// Chart change: forward expresses target coordinates in source coordinates;
/// inverse the other way round.
struct TransitionMap {
  std::size_t source = 0;
  std::size_t target = 1;
  Substitution forward;
  std::optional<Substitution> inverse;
};

struct GradedBundle {
  std::vector<CoordinateSystem> charts;
  std::vector<TransitionMap> transitions;

  std::size_t arity() const { return charts.empty() ? 1 : charts.front().arity; }
  const CoordinateSystem& chart(std::size_t i = 0) const { return charts.at(i); }

  /// Maximal total weight among coordinates.
  int degree() const {
    int k = 0;
    for (auto& c : charts)
      for (auto& v : c.vars) k = std::max(k, v.weight.total());
    return k;
  }
  std::string transition_id(const TransitionMap& t) const {
    return charts.at(t.source).name + "->" + charts.at(t.target).name;
  }
};

using NTupleBundle = GradedBundle;

// --------------------------------------------------------------- helpers

inline bool involves_only(const Poly& p, const CoordinateSystem& c) {
  for (auto& v : p.variables())
    if (!c.contains(v)) return false;
  return true;
}

/// s2 ∘ s1 as pullbacks: images of s2 rewritten through s1.
inline Substitution compose(const Substitution& outer, const Substitution& inner) {
  Substitution r;
  for (auto& [v, img] : outer) r[v] = substitute(img, inner);
  return r;
}

inline Substitution identity_on(const std::vector<Variable>& vs) {
  Substitution s;
  for (auto& v : vs) s[v] = Poly(v);
  return s;
}

/// Position-wise relabelling from one variable list to another.
inline Substitution relabel(const std::vector<Variable>& from,
                            const std::vector<Variable>& to) {
  if (from.size() != to.size())
    throw std::invalid_argument("relabel: size mismatch");
  Substitution s;
  for (std::size_t i = 0; i < from.size(); ++i) s[from[i]] = Poly(to[i]);
  return s;
}

/// Does p contain a term linear in a coordinate of weight w, times weight-0 factors?
inline bool has_linear_term(const Poly& p, const Weight& w) {
  for (auto& [m, c] : p.terms()) {
    int lin = 0;
    bool ok = true;
    for (auto& f : m.factors()) {
      if (f.var.weight.is_zero()) continue;
      if (f.exp == 1 && f.var.weight == w) {
        ++lin;
      } else {
        ok = false;
      }
    }
    if (ok && lin == 1) return true;
  }
  return false;
}

// -------------------------------------------------------------- validate

namespace detail {

inline void check_images(CheckList& out, const std::string& id,
                         const Substitution& map, const CoordinateSystem& dom,
                         const CoordinateSystem& cod, bool linear_block) {
  bool defined = map.size() == cod.vars.size();
  std::string missing;
  for (auto& v : cod.vars)
    if (!map.count(v)) {
      defined = false;
      missing += " " + v.name;
    }
  for (auto& [v, img] : map)
    if (!involves_only(img, dom)) {
      defined = false;
      missing += " (foreign variables in image of " + v.name + ")";
    }
  out.add(id + ".defined", defined, missing);
  for (auto& v : cod.vars) {
    auto it = map.find(v);
    if (it == map.end()) continue;
    WeightOf w = weight_of(it->second);
    bool pass = w.is(v.weight) && parity_of(it->second).is(v.odd);
    auto& c = out.add(id + ".homogeneous." + v.name, pass);
    c.weight = v.weight.str();
    if (!pass) {
      c.detail = w.kind == WeightOf::Inhomogeneous
                     ? "inhomogeneous image"
                     : "image weight " + w.weight.str() + " or parity differs";
      c.residual = render(it->second);
    }
    if (linear_block && !v.weight.is_zero()) {
      auto& l = out.add(id + ".linear." + v.name, has_linear_term(it->second, v.weight));
      if (l.verdict == Verdict::Fail) l.detail = "no invertible linear block";
    }
  }
}

inline void check_roundtrip(CheckList& out, const std::string& id,
                            const Substitution& there, const Substitution& back,
                            const CoordinateSystem& start) {
  std::string residual;
  for (auto& v : start.vars) {
    auto it = back.find(v);
    if (it == back.end()) continue;
    Poly diff = substitute(it->second, there) - Poly(v);
    if (!diff.is_zero()) {
      if (!residual.empty()) residual += "; ";
      residual += v.name + ": " + render(diff);
    }
  }
  auto& c = out.add(id, residual.empty());
  c.residual = residual;
}

}  // namespace detail

inline CheckList validate(const GradedBundle& b) {
  CheckList out;
  std::size_t n = b.arity();
  for (auto& c : b.charts) {
    std::set<std::string> names;
    bool ok = c.arity == n;
    std::string detail;
    for (auto& v : c.vars) {
      if (v.weight.arity() != n || !v.weight.nonnegative()) {
        ok = false;
        detail += " bad weight on " + v.name;
      }
      if (!names.insert(v.name).second) {
        ok = false;
        detail += " duplicate " + v.name;
      }
    }
    out.add("chart[" + c.name + "].coordinates", ok, detail);
  }
  for (auto& t : b.transitions) {
    std::string id = b.transition_id(t);
    const auto& src = b.charts.at(t.source);
    const auto& dst = b.charts.at(t.target);
    detail::check_images(out, id, t.forward, src, dst, true);
    if (!t.inverse) {
      out.checks.push_back({id + ".roundtrip", Verdict::Skip,
                            "no declared inverse", {}, {}});
      continue;
    }
    detail::check_images(out, id + ".inverse", *t.inverse, dst, src, true);
    detail::check_roundtrip(out, id + ".roundtrip.source", t.forward, *t.inverse, src);
    detail::check_roundtrip(out, id + ".roundtrip.target", *t.inverse, t.forward, dst);
  }
  // cocycle on every declared triple i->j, j->l, i->l
  for (auto& a : b.transitions)
    for (auto& c : b.transitions) {
      if (a.target != c.source || a.source == c.target) continue;
      for (auto& d : b.transitions) {
        if (d.source != a.source || d.target != c.target) continue;
        std::string residual;
        for (auto& [v, img] : d.forward) {
          auto it = c.forward.find(v);
          if (it == c.forward.end()) continue;
          Poly diff = substitute(it->second, a.forward) - img;
          if (!diff.is_zero()) residual += v.name + ": " + render(diff) + "; ";
        }
        auto& chk = out.add("cocycle." + b.transition_id(a) + "." +
                                b.charts[c.target].name,
                            residual.empty());
        chk.residual = residual;
      }
    }
  return out;
}

// ---------------------------------------------------------------- operations

inline Derivation weight_vector_field(const CoordinateSystem& chart,
                                      std::size_t component) {
  if (component >= chart.arity)
    throw std::out_of_range("weight component out of range");
  Derivation d(false, Weight::zero(chart.arity));
  for (auto& v : chart.vars) {
    int w = v.weight[component];
    if (w) d.set(v, Poly(v) * Rational(w));
  }
  return d;
}

/// Keeps the coordinates selected by `keep` in every chart; throws when a kept
/// image depends on a dropped coordinate.
inline GradedBundle project(const GradedBundle& b,
                            const std::function<bool(const Variable&)>& keep) {
  GradedBundle r;
  for (auto& c : b.charts) r.charts.push_back({c.name, c.select(keep), c.arity});
  auto restrict_map = [&](const Substitution& m, const CoordinateSystem& dom,
                          const std::string& id) {
    Substitution out;
    for (auto& [v, img] : m) {
      if (!keep(v)) continue;
      if (!involves_only(img, dom))
        throw IllDefinedProjection("image of " + v.name + " in " + id +
                                   " involves a projected-out coordinate");
      out[v] = img;
    }
    return out;
  };
  for (auto& t : b.transitions) {
    TransitionMap nt{t.source, t.target, {}, std::nullopt};
    std::string id = b.transition_id(t);
    nt.forward = restrict_map(t.forward, r.charts[t.source], id);
    if (t.inverse) nt.inverse = restrict_map(*t.inverse, r.charts[t.target], id);
    r.transitions.push_back(std::move(nt));
  }
  return r;
}

inline GradedBundle project_tower(const GradedBundle& b, int l) {
  if (l < 0 || l > b.degree()) throw std::out_of_range("projection level");
  return project(b, [l](const Variable& v) { return v.weight.total() <= l; });
}

/// F^[i]: coordinates with 0 < w ≤ i set to zero.
inline GradedBundle core_submanifold(const GradedBundle& b, int i) {
  if (i < 0 || i >= std::max(b.degree(), 1)) throw std::out_of_range("core index");
  auto killed = [i](const Variable& v) {
    int w = v.weight.total();
    return w > 0 && w <= i;
  };
  GradedBundle r;
  for (auto& c : b.charts)
    r.charts.push_back({c.name, c.select([&](const Variable& v) { return !killed(v); }),
                        c.arity});
  auto zero_map = [&](const CoordinateSystem& c) {
    Substitution s;
    for (auto& v : c.vars)
      if (killed(v)) s[v] = Poly();
    return s;
  };
  auto restrict_map = [&](const Substitution& m, const CoordinateSystem& dom,
                          const std::string& id) {
    Substitution z = zero_map(dom);
    Substitution out;
    for (auto& [v, img] : m) {
      Poly restricted = substitute(img, z);
      if (killed(v)) {
        if (!restricted.is_zero())
          throw IllDefinedProjection("core of " + id + " is not preserved by " + v.name);
        continue;
      }
      out[v] = restricted;
    }
    return out;
  };
  for (auto& t : b.transitions) {
    TransitionMap nt{t.source, t.target, {}, std::nullopt};
    std::string id = b.transition_id(t);
    nt.forward = restrict_map(t.forward, b.charts[t.source], id);
    if (t.inverse) nt.inverse = restrict_map(*t.inverse, b.charts[t.target], id);
    r.transitions.push_back(std::move(nt));
  }
  return r;
}

// ----------------------------------------------- vertical and tangent lifts

inline std::string dot_name(const std::string& n) { return n + "_dot"; }
inline std::string tangent_name(const std::string& n) { return "d_" + n; }

/// Same variable with weight w promoted to (w, 0).
inline Variable undotted_in_pair(const Variable& v) {
  return Variable(v.name, Weight({v.weight[0], 0}), v.odd);
}

namespace detail {

inline CoordinateSystem lifted_chart(const CoordinateSystem& c, bool vertical) {
  if (c.arity != 1)
    throw std::invalid_argument("lift of an n-tuple bundle with n > 1 is not supported");
  CoordinateSystem r{c.name, {}, 2};
  for (auto& v : c.vars) r.vars.push_back(undotted_in_pair(v));
  for (auto& v : c.vars) {
    int w = v.weight[0];
    if (vertical) {
      if (w == 0) continue;
      r.vars.emplace_back(dot_name(v.name), Weight({w - 1, 1}), v.odd);
    } else {
      r.vars.emplace_back(tangent_name(v.name), Weight({w, 1}), v.odd);
    }
  }
  return r;
}

/// Lifted map: undotted images relabelled; each differential coordinate
/// receives Σ_u du · ∂f/∂u over the lifted directions u.
inline Substitution lift_map(const Substitution& m, const CoordinateSystem& dom,
                             const CoordinateSystem& new_dom,
                             const CoordinateSystem& new_cod, bool vertical) {
  Substitution promote;
  for (auto& v : dom.vars) promote[v] = Poly(*new_dom.find(v.name));
  Substitution r;
  for (auto& [v, img] : m) {
    Poly lifted = substitute(img, promote);
    r[*new_cod.find(v.name)] = lifted;
    if (vertical && v.weight.is_zero()) continue;
    std::string dn = vertical ? dot_name(v.name) : tangent_name(v.name);
    Poly d;
    for (auto& u : dom.vars) {
      if (vertical && u.weight.is_zero()) continue;
      const Variable& uu = *new_dom.find(u.name);
      std::string un = vertical ? dot_name(u.name) : tangent_name(u.name);
      Poly du = partial(lifted, uu);
      if (!du.is_zero()) d += Poly(*new_dom.find(un)) * du;
    }
    r[*new_cod.find(dn)] = d;
  }
  return r;
}

inline GradedBundle lift(const GradedBundle& b, bool vertical) {
  GradedBundle r;
  for (auto& c : b.charts) r.charts.push_back(lifted_chart(c, vertical));
  for (auto& t : b.transitions) {
    TransitionMap nt{t.source, t.target, {}, std::nullopt};
    nt.forward = lift_map(t.forward, b.charts[t.source], r.charts[t.source],
                          r.charts[t.target], vertical);
    if (t.inverse)
      nt.inverse = lift_map(*t.inverse, b.charts[t.target], r.charts[t.target],
                            r.charts[t.source], vertical);
    r.transitions.push_back(std::move(nt));
  }
  return r;
}

}  // namespace detail

/// VF with dotted coordinates of bi-weight (w−1, 1).
inline NTupleBundle vertical_bundle(const GradedBundle& b) {
  if (b.degree() < 1) throw std::invalid_argument("vertical bundle needs degree >= 1");
  return detail::lift(b, true);
}

/// TF with differentials d_v of bi-weight (w, 1).
inline NTupleBundle tangent_bundle(const GradedBundle& b) { return detail::lift(b, false); }

}  // namespace grb
