#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <compare>
#include <initializer_list>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace grb {

using Rational = mpq_class;

inline Rational rational(long num, long den = 1) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

/// Tuple of integer weights. Comparison pads the shorter tuple with zeros,
/// so a constant (empty weight) matches the zero weight of any arity.
class Weight {
 public:
  Weight() = default;
  Weight(std::initializer_list<int> w) : w_(w) {}
  explicit Weight(std::vector<int> w) : w_(std::move(w)) {}

  static Weight zero(std::size_t n) { return Weight(std::vector<int>(n, 0)); }
  static Weight unit(std::size_t n, std::size_t i) {
    Weight w = zero(n);
    w.w_[i] = 1;
    return w;
  }

  std::size_t arity() const { return w_.size(); }
  int operator[](std::size_t i) const { return i < w_.size() ? w_[i] : 0; }
  const std::vector<int>& entries() const { return w_; }

  int total() const {
    int t = 0;
    for (int x : w_) t += x;
    return t;
  }
  bool nonnegative() const {
    return std::all_of(w_.begin(), w_.end(), [](int x) { return x >= 0; });
  }
  bool is_zero() const {
    return std::all_of(w_.begin(), w_.end(), [](int x) { return x == 0; });
  }

  Weight& operator+=(const Weight& o) {
    if (o.w_.size() > w_.size()) w_.resize(o.w_.size(), 0);
    for (std::size_t i = 0; i < o.w_.size(); ++i) w_[i] += o.w_[i];
    return *this;
  }
  Weight& operator-=(const Weight& o) {
    if (o.w_.size() > w_.size()) w_.resize(o.w_.size(), 0);
    for (std::size_t i = 0; i < o.w_.size(); ++i) w_[i] -= o.w_[i];
    return *this;
  }
  Weight operator*(int s) const {
    Weight r = *this;
    for (int& x : r.w_) x *= s;
    return r;
  }
  friend Weight operator+(Weight a, const Weight& b) { return a += b; }
  friend Weight operator-(Weight a, const Weight& b) { return a -= b; }

  friend std::strong_ordering operator<=>(const Weight& a, const Weight& b) {
    std::size_t n = std::max(a.arity(), b.arity());
    for (std::size_t i = 0; i < n; ++i)
      if (auto c = a[i] <=> b[i]; c != 0) return c;
    return std::strong_ordering::equal;
  }
  friend bool operator==(const Weight& a, const Weight& b) {
    return (a <=> b) == 0;
  }

  /// Component-wise partial order.
  bool precedes(const Weight& o) const {
    std::size_t n = std::max(arity(), o.arity());
    for (std::size_t i = 0; i < n; ++i)
      if ((*this)[i] > o[i]) return false;
    return true;
  }

  std::string str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < w_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(w_[i]);
    }
    return s + ")";
  }

 private:
  std::vector<int> w_;
};

struct Variable {
  std::string name;
  Weight weight;
  bool odd = false;

  Variable() = default;
  Variable(std::string n, Weight w, bool o = false)
      : name(std::move(n)), weight(std::move(w)), odd(o) {}

  friend std::strong_ordering operator<=>(const Variable& a,
                                          const Variable& b) {
    if (auto c = a.name <=> b.name; c != 0) return c;
    if (auto c = a.odd <=> b.odd; c != 0) return c;
    if (auto c = a.weight.arity() <=> b.weight.arity(); c != 0) return c;
    return a.weight <=> b.weight;
  }
  friend bool operator==(const Variable& a, const Variable& b) {
    return (a <=> b) == 0;
  }
};

class ParityMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Factor {
  Variable var;
  unsigned exp = 1;
  friend std::strong_ordering operator<=>(const Factor&,
                                          const Factor&) = default;
  friend bool operator==(const Factor&, const Factor&) = default;
};

/// Product of variables in canonical (sorted) order; odd exponents are 1.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(const Variable& v, unsigned e = 1) {
    if (e) f_.push_back({v, e});
  }

  const std::vector<Factor>& factors() const { return f_; }
  bool empty() const { return f_.empty(); }

  unsigned degree() const {
    unsigned d = 0;
    for (auto& f : f_) d += f.exp;
    return d;
  }
  unsigned exponent(const Variable& v) const {
    for (auto& f : f_)
      if (f.var == v) return f.exp;
    return 0;
  }
  bool odd() const {
    bool p = false;
    for (auto& f : f_)
      if (f.var.odd) p = !p;
    return p;
  }
  Weight weight() const {
    Weight w;
    for (auto& f : f_) w += f.var.weight * static_cast<int>(f.exp);
    return w;
  }

  /// Canonical product a*b; returns the Koszul sign, or 0 if it vanishes.
  static int multiply(const Monomial& a, const Monomial& b, Monomial& out) {
    out.f_.clear();
    out.f_.reserve(a.f_.size() + b.f_.size());
    std::size_t odd_left_in_a = 0;
    for (auto& f : a.f_)
      if (f.var.odd) ++odd_left_in_a;
    int sign = 1;
    std::size_t i = 0, j = 0;
    while (i < a.f_.size() || j < b.f_.size()) {
      if (j == b.f_.size() ||
          (i < a.f_.size() && a.f_[i].var < b.f_[j].var)) {
        if (a.f_[i].var.odd) --odd_left_in_a;
        out.f_.push_back(a.f_[i++]);
      } else if (i == a.f_.size() || b.f_[j].var < a.f_[i].var) {
        if (b.f_[j].var.odd && (odd_left_in_a & 1)) sign = -sign;
        out.f_.push_back(b.f_[j++]);
      } else {
        if (a.f_[i].var.odd) return 0;
        out.f_.push_back({a.f_[i].var, a.f_[i].exp + b.f_[j].exp});
        ++i;
        ++j;
      }
    }
    return sign;
  }

  /// Left derivative: coefficient factor and remaining monomial.
  /// Returns false when the variable does not occur.
  bool left_partial(const Variable& v, Rational& coef, Monomial& rest) const {
    return partial_impl(v, coef, rest, true);
  }
  bool right_partial(const Variable& v, Rational& coef, Monomial& rest) const {
    return partial_impl(v, coef, rest, false);
  }

  friend std::strong_ordering operator<=>(const Monomial& a,
                                          const Monomial& b) {
    if (auto c = a.degree() <=> b.degree(); c != 0) return c;
    return a.f_ <=> b.f_;
  }
  friend bool operator==(const Monomial& a, const Monomial& b) {
    return a.f_ == b.f_;
  }

 private:
  bool partial_impl(const Variable& v, Rational& coef, Monomial& rest,
                    bool left) const {
    std::size_t pos = f_.size();
    for (std::size_t k = 0; k < f_.size(); ++k)
      if (f_[k].var == v) pos = k;
    if (pos == f_.size()) return false;
    rest.f_ = f_;
    if (v.odd) {
      std::size_t passed = 0;
      if (left) {
        for (std::size_t k = 0; k < pos; ++k) passed += f_[k].var.odd;
      } else {
        for (std::size_t k = pos + 1; k < f_.size(); ++k)
          passed += f_[k].var.odd;
      }
      coef = (passed & 1) ? -1 : 1;
      rest.f_.erase(rest.f_.begin() + static_cast<long>(pos));
    } else {
      coef = f_[pos].exp;
      if (--rest.f_[pos].exp == 0)
        rest.f_.erase(rest.f_.begin() + static_cast<long>(pos));
    }
    return true;
  }

  std::vector<Factor> f_;
};

/// Result of a homogeneity query.
struct WeightOf {
  enum Kind { Zero, Homogeneous, Inhomogeneous };
  Kind kind = Zero;
  Weight weight;

  bool homogeneous() const { return kind != Inhomogeneous; }
  /// True when homogeneous of weight w (the zero polynomial always is).
  bool is(const Weight& w) const {
    return kind == Zero || (kind == Homogeneous && weight == w);
  }
};

struct ParityOf {
  enum Kind { Zero, Even, Odd, Mixed };
  Kind kind = Zero;
  bool is(bool odd) const {
    return kind == Zero || kind == (odd ? Odd : Even);
  }
};

/// Supercommutative polynomial over the rationals in canonical form.
class Poly {
 public:
  using Terms = std::map<Monomial, Rational>;

  Poly() = default;
  Poly(const Rational& c) {  // NOLINT(implicit)
    if (c != 0) t_.emplace(Monomial(), c);
  }
  Poly(int c) : Poly(Rational(c)) {}  // NOLINT(implicit)
  Poly(const Variable& v) { t_.emplace(Monomial(v), Rational(1)); }  // NOLINT
  Poly(const Monomial& m, const Rational& c) {
    if (c != 0) t_.emplace(m, c);
  }

  const Terms& terms() const { return t_; }
  bool is_zero() const { return t_.empty(); }
  std::size_t size() const { return t_.size(); }

  void add_term(const Monomial& m, const Rational& c) {
    if (c == 0) return;
    auto [it, inserted] = t_.emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) t_.erase(it);
    }
  }

  Rational coefficient(const Monomial& m) const {
    auto it = t_.find(m);
    return it == t_.end() ? Rational(0) : it->second;
  }
  Rational constant_term() const { return coefficient(Monomial()); }

  Poly& operator+=(const Poly& o) {
    for (auto& [m, c] : o.t_) add_term(m, c);
    return *this;
  }
  Poly& operator-=(const Poly& o) {
    for (auto& [m, c] : o.t_) add_term(m, -c);
    return *this;
  }
  Poly& operator*=(const Rational& s) {
    if (s == 0) {
      t_.clear();
    } else {
      for (auto& [m, c] : t_) c *= s;
    }
    return *this;
  }
  Poly operator-() const {
    Poly r = *this;
    for (auto& [m, c] : r.t_) c = -c;
    return r;
  }
  friend Poly operator+(Poly a, const Poly& b) { return a += b; }
  friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
  friend Poly operator*(Poly a, const Rational& s) { return a *= s; }
  friend Poly operator*(const Rational& s, Poly a) { return a *= s; }

  friend Poly operator*(const Poly& a, const Poly& b) {
    Poly r;
    Monomial m;
    for (auto& [ma, ca] : a.t_)
      for (auto& [mb, cb] : b.t_) {
        int s = Monomial::multiply(ma, mb, m);
        if (s == 0) continue;
        Rational c = ca * cb;
        if (s < 0) c = -c;
        r.add_term(m, c);
      }
    return r;
  }
  Poly& operator*=(const Poly& o) { return *this = *this * o; }

  friend bool operator==(const Poly& a, const Poly& b) { return a.t_ == b.t_; }

  std::set<Variable> variables() const {
    std::set<Variable> vs;
    for (auto& [m, c] : t_)
      for (auto& f : m.factors()) vs.insert(f.var);
    return vs;
  }
  bool involves(const Variable& v) const {
    for (auto& [m, c] : t_)
      if (m.exponent(v)) return true;
    return false;
  }

 private:
  Terms t_;
};

inline Poly pow(const Poly& p, unsigned e) {
  Poly r(1);
  for (unsigned i = 0; i < e; ++i) r *= p;
  return r;
}

inline WeightOf weight_of(const Poly& p) {
  WeightOf r;
  for (auto& [m, c] : p.terms()) {
    Weight w = m.weight();
    if (r.kind == WeightOf::Zero) {
      r.kind = WeightOf::Homogeneous;
      r.weight = w;
    } else if (!(w == r.weight)) {
      r.kind = WeightOf::Inhomogeneous;
      return r;
    }
  }
  return r;
}

inline ParityOf parity_of(const Poly& p) {
  ParityOf r;
  for (auto& [m, c] : p.terms()) {
    auto k = m.odd() ? ParityOf::Odd : ParityOf::Even;
    if (r.kind == ParityOf::Zero) {
      r.kind = k;
    } else if (r.kind != k) {
      r.kind = ParityOf::Mixed;
      return r;
    }
  }
  return r;
}

/// Splits p into its even and odd parts.
inline std::pair<Poly, Poly> split_parity(const Poly& p) {
  std::pair<Poly, Poly> r;
  for (auto& [m, c] : p.terms()) (m.odd() ? r.second : r.first).add_term(m, c);
  return r;
}

/// Left derivative.
inline Poly partial(const Poly& p, const Variable& v) {
  Poly r;
  Rational c;
  Monomial rest;
  for (auto& [m, coef] : p.terms())
    if (m.left_partial(v, c, rest)) r.add_term(rest, c * coef);
  return r;
}

inline Poly right_partial(const Poly& p, const Variable& v) {
  Poly r;
  Rational c;
  Monomial rest;
  for (auto& [m, coef] : p.terms())
    if (m.right_partial(v, c, rest)) r.add_term(rest, c * coef);
  return r;
}

using Substitution = std::map<Variable, Poly>;

inline void check_parities(const Substitution& s) {
  for (auto& [v, img] : s)
    if (!parity_of(img).is(v.odd))
      throw ParityMismatch("substitution image for " + v.name +
                           " has the wrong parity");
}

/// Algebra homomorphism fixing every unassigned variable.
inline Poly substitute(const Poly& p, const Substitution& s) {
  check_parities(s);
  std::map<std::pair<Variable, unsigned>, Poly> powers;
  Poly r;
  for (auto& [m, c] : p.terms()) {
    Poly acc(c);
    for (auto& f : m.factors()) {
      auto it = s.find(f.var);
      if (it == s.end()) {
        acc *= Poly(Monomial(f.var, f.exp), Rational(1));
        continue;
      }
      auto key = std::make_pair(f.var, f.exp);
      auto pw = powers.find(key);
      if (pw == powers.end()) pw = powers.emplace(key, pow(it->second, f.exp)).first;
      acc *= pw->second;
      if (acc.is_zero()) break;
    }
    r += acc;
  }
  return r;
}

/// Graded derivation Σ action(v) ∂/∂v (coefficients on the left).
struct Derivation {
  std::map<Variable, Poly> action;
  bool odd = false;
  Weight shift;

  Derivation() = default;
  Derivation(bool is_odd, Weight w) : odd(is_odd), shift(std::move(w)) {}

  void set(const Variable& v, const Poly& p) {
    if (p.is_zero()) {
      action.erase(v);
    } else {
      action[v] = p;
    }
  }
  Poly coefficient(const Variable& v) const {
    auto it = action.find(v);
    return it == action.end() ? Poly() : it->second;
  }
  bool is_zero() const { return action.empty(); }

  Poly operator()(const Poly& p) const {
    Poly r;
    for (auto& [v, c] : action) {
      Poly d = partial(p, v);
      if (!d.is_zero()) r += c * d;
    }
    return r;
  }

  friend bool operator==(const Derivation& a, const Derivation& b) {
    return a.action == b.action;
  }
};

inline Poly apply(const Derivation& d, const Poly& p) { return d(p); }

/// [D1,D2] = D1∘D2 − (−1)^{|D1||D2|} D2∘D1 in coefficient form.
inline Derivation commutator(const Derivation& a, const Derivation& b) {
  Derivation r(a.odd != b.odd, a.shift + b.shift);
  std::set<Variable> vs;
  for (auto& [v, c] : a.action) vs.insert(v);
  for (auto& [v, c] : b.action) vs.insert(v);
  bool minus = !(a.odd && b.odd);
  for (auto& v : vs) {
    Poly c = a(b.coefficient(v));
    Poly d = b(a.coefficient(v));
    r.set(v, minus ? c - d : c + d);
  }
  return r;
}

inline Derivation operator+(const Derivation& a, const Derivation& b) {
  Derivation r = a;
  for (auto& [v, c] : b.action) r.set(v, r.coefficient(v) + c);
  return r;
}

inline Derivation operator*(const Rational& s, const Derivation& a) {
  Derivation r(a.odd, a.shift);
  for (auto& [v, c] : a.action) r.set(v, c * s);
  return r;
}

/// Every nonzero coefficient has weight(v) + shift and parity(v) + parity.
inline bool is_homogeneous(const Derivation& d) {
  for (auto& [v, c] : d.action) {
    if (!weight_of(c).is(v.weight + d.shift)) return false;
    if (!parity_of(c).is(v.odd != d.odd)) return false;
  }
  return true;
}

// ---------------------------------------------------------------- rendering

inline std::string render(const Monomial& m) {
  std::string s;
  for (auto& f : m.factors()) {
    if (!s.empty()) s += "*";
    s += f.var.name;
    if (f.exp != 1) s += "^" + std::to_string(f.exp);
  }
  return s;
}

/// Canonical text form, parseable back by the spec-file reader.
inline std::string render(const Poly& p) {
  if (p.is_zero()) return "0";
  std::string s;
  bool first = true;
  for (auto& [m, c] : p.terms()) {
    Rational a = abs(c);
    bool neg = c < 0;
    if (first) {
      if (neg) s += "-";
    } else {
      s += neg ? " - " : " + ";
    }
    first = false;
    if (m.empty()) {
      s += a.get_str();
    } else {
      if (a != 1) s += a.get_str() + "*";
      s += render(m);
    }
  }
  return s;
}

inline std::string render(const Derivation& d) {
  if (d.is_zero()) return "0";
  std::string s;
  for (auto& [v, c] : d.action) {
    if (!s.empty()) s += " + ";
    s += "(" + render(c) + ")*d/d" + v.name;
  }
  return s;
}

}  // namespace grb
