#pragma once

#include <grb/constructions.hpp>

#include <json.hpp>

#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace grb::cli {

// ------------------------------------------------------------------ errors

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& kind, const std::string& msg, int line, int column)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + kind +
                           ": " + msg),
        line(line), column(column) {}
  int line, column;
};

class SyntaxError : public ParseError {
 public:
  SyntaxError(const std::string& msg, int line, int column)
      : ParseError("syntax error", msg, line, column) {}
};

class UnknownVariable : public ParseError {
 public:
  UnknownVariable(const std::string& name, int line, int column)
      : ParseError("unknown variable", name, line, column) {}
};

class WeightArityMismatch : public ParseError {
 public:
  WeightArityMismatch(const std::string& msg, int line, int column)
      : ParseError("weight arity mismatch", msg, line, column) {}
};

/// The document lacks what a command needs; reported with exit status 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------- document

/// Parsed spec file; `sections` are (Y, Z) pairs written in the lie-tower y coordinates.
struct SpecDocument {
  std::vector<std::pair<std::string, std::string>> task;
  GradedBundle bundle;
  std::optional<StructureConstants> algebra;
  std::optional<AlgebroidData> algebroid;
  std::optional<Derivation> q;
  std::optional<Poly> poisson;
  std::vector<TowerSection> sections;

  std::optional<std::string> get(const std::string& key) const {
    for (auto& [k, v] : task)
      if (k == key) return v;
    return std::nullopt;
  }
  void set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : task)
      if (k == key) {
        v = value;
        return;
      }
    task.emplace_back(key, value);
  }
  /// Degree parameter: task k, else the degree of the bundle.
  int k() const {
    if (auto v = get("k")) return std::stoi(*v);
    return bundle.degree();
  }
};

// ------------------------------------------------------------- expressions

using Scope = std::map<std::string, Variable>;

inline Scope scope_of(const std::vector<Variable>& vs) {
  Scope s;
  for (auto& v : vs) s[v.name] = v;
  return s;
}

namespace detail {

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

/// expr = term {("+"|"-") term}; term = unary {"*" unary}; unary = "-" unary | power;
/// power = primary ["^" integer]; primary = integer ["/" integer] | ident | "(" expr ")".
class ExprParser {
 public:
  ExprParser(std::string_view s, int line, int col, const Scope& scope)
      : s_(s), line_(line), col_(col), scope_(scope) {}

  Poly parse() {
    skip();
    if (at_end()) fail("empty expression");
    Poly p = expr();
    skip();
    if (!at_end()) fail(std::string("unexpected '") + s_[i_] + "'");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& m) { throw SyntaxError(m, line_, col_ + int(i_)); }
  bool at_end() const { return i_ >= s_.size(); }
  void skip() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool eat(char c) {
    skip();
    if (!at_end() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }
  std::string digits() {
    skip();
    std::size_t b = i_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
    if (b == i_) fail("expected an integer");
    return std::string(s_.substr(b, i_ - b));
  }

  Poly expr() {
    Poly r = term();
    for (;;) {
      if (eat('+')) r += term();
      else if (eat('-')) r -= term();
      else return r;
    }
  }
  Poly term() {
    Poly r = unary();
    while (eat('*')) r = r * unary();
    return r;
  }
  Poly unary() {
    if (eat('-')) return -unary();
    return power();
  }
  Poly power() {
    Poly b = primary();
    if (eat('^')) {
      std::string e = digits();
      if (e.size() > 3) fail("exponent too large");
      b = pow(b, static_cast<unsigned>(std::stoi(e)));
    }
    return b;
  }
  Poly primary() {
    skip();
    if (at_end()) fail("unexpected end of expression");
    char c = s_[i_];
    if (c == '(') {
      ++i_;
      Poly p = expr();
      if (!eat(')')) fail("expected ')'");
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      Rational r(digits());
      if (eat('/')) {
        std::size_t at = i_;
        Rational d(digits());
        if (d == 0) {
          i_ = at;
          fail("zero denominator");
        }
        r /= d;
      }
      r.canonicalize();
      return Poly(r);
    }
    if (ident_start(c)) {
      std::size_t b = i_;
      while (!at_end() && ident_char(s_[i_])) ++i_;
      std::string name(s_.substr(b, i_ - b));
      auto it = scope_.find(name);
      if (it == scope_.end()) throw UnknownVariable(name, line_, col_ + int(b));
      return Poly(it->second);
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::string_view s_;
  std::size_t i_ = 0;
  int line_, col_;
  const Scope& scope_;
};

}  // namespace detail

/// Parses one polynomial expression; line and column locate its first character.
inline Poly parse_expression(std::string_view text, const Scope& scope, int line = 1,
                             int column = 1) {
  return detail::ExprParser(text, line, column, scope).parse();
}

// ------------------------------------------------------------------ reader

namespace detail {

struct Entry {
  std::string key, value;
  int line = 0, key_col = 0, value_col = 0;
};

struct Section {
  std::string kind;
  std::vector<std::string> args;
  int line = 0;
  std::vector<Entry> entries;
};

inline std::string trim(std::string_view s, std::size_t* lead = nullptr) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  if (lead) *lead = b;
  return std::string(s.substr(b, e - b));
}

inline std::vector<Section> split_sections(const std::string& text) {
  std::vector<Section> out;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string_view l(raw);
    if (auto h = l.find('#'); h != std::string_view::npos) l = l.substr(0, h);
    std::size_t lead = 0;
    std::string t = trim(l, &lead);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw SyntaxError("section header must end with ']'", line, int(lead + t.size()));
      std::istringstream words(t.substr(1, t.size() - 2));
      Section s;
      s.line = line;
      words >> s.kind;
      if (s.kind.empty()) throw SyntaxError("empty section header", line, int(lead + 1));
      for (std::string w; words >> w;) s.args.push_back(w);
      out.push_back(std::move(s));
      continue;
    }
    if (out.empty()) throw SyntaxError("entry outside of a section", line, int(lead + 1));
    auto eq = l.find('=');
    if (eq == std::string_view::npos) throw SyntaxError("expected 'key = value'", line, int(lead + 1));
    Entry e;
    e.line = line;
    std::size_t klead = 0, vlead = 0;
    e.key = trim(l.substr(0, eq), &klead);
    e.value = trim(l.substr(eq + 1), &vlead);
    e.key_col = int(klead) + 1;
    e.value_col = int(eq + 1 + vlead) + 1;
    if (e.key.empty()) throw SyntaxError("missing key", line, int(eq) + 1);
    if (e.value.empty()) throw SyntaxError("missing value", line, int(eq) + 2);
    out.back().entries.push_back(std::move(e));
  }
  return out;
}

inline bool is_identifier(const std::string& s) {
  if (s.empty() || !ident_start(s[0])) return false;
  for (char c : s)
    if (!ident_char(c)) return false;
  return true;
}

/// stem[i1,i2,...]; indices are trimmed words.
inline std::pair<std::string, std::vector<std::string>> indexed_key(const Entry& e) {
  auto b = e.key.find('[');
  if (b == std::string::npos) return {e.key, {}};
  if (e.key.back() != ']') throw SyntaxError("expected ']' in key", e.line, e.key_col);
  std::vector<std::string> idx;
  std::string body = e.key.substr(b + 1, e.key.size() - b - 2);
  std::size_t start = 0;
  for (;;) {
    auto c = body.find(',', start);
    idx.push_back(trim(std::string_view(body).substr(start, c - start)));
    if (c == std::string::npos) break;
    start = c + 1;
  }
  return {trim(e.key.substr(0, b)), idx};
}

inline std::size_t index_value(const std::string& s, std::size_t n, const Entry& e) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || v < 1 || static_cast<std::size_t>(v) > n)
    throw SyntaxError("index " + s + " out of range 1.." + std::to_string(n), e.line, e.key_col);
  return static_cast<std::size_t>(v - 1);
}

inline int integer_value(const Entry& e, int lo) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(e.value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != e.value.size() || v < lo)
    throw SyntaxError("expected an integer >= " + std::to_string(lo), e.line, e.value_col);
  return v;
}

/// "(w1, ..., wn) [odd|even]".
inline Variable declared_variable(const Entry& e) {
  if (!is_identifier(e.key)) throw SyntaxError("bad coordinate name " + e.key, e.line, e.key_col);
  const std::string& v = e.value;
  auto close = v.find(')');
  if (v.front() != '(' || close == std::string::npos)
    throw SyntaxError("expected a weight tuple '(w1, ...)'", e.line, e.value_col);
  std::vector<int> w;
  std::string body = v.substr(1, close - 1);
  std::size_t start = 0;
  for (;;) {
    auto c = body.find(',', start);
    std::string piece = trim(std::string_view(body).substr(start, c - start));
    std::size_t pos = 0;
    int x = 0;
    try {
      x = std::stoi(piece, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (piece.empty() || pos != piece.size())
      throw SyntaxError("weight components must be integers", e.line, e.value_col + int(start) + 1);
    w.push_back(x);
    if (c == std::string::npos) break;
    start = c + 1;
  }
  std::string rest = trim(std::string_view(v).substr(close + 1));
  bool odd = false;
  if (rest == "odd") odd = true;
  else if (!rest.empty() && rest != "even")
    throw SyntaxError("expected 'odd' or 'even' after the weight", e.line,
                      e.value_col + int(close) + 1);
  return Variable(e.key, Weight(std::move(w)), odd);
}

const char* const task_keys[] = {"command", "construct", "k", "name"};

}  // namespace detail

/// Parses a spec document; sections may appear in any order.
inline SpecDocument parse(const std::string& text) {
  using namespace detail;
  std::vector<Section> secs = split_sections(text);
  SpecDocument doc;
  auto by_kind = [&](const std::string& k) {
    std::vector<const Section*> r;
    for (auto& s : secs)
      if (s.kind == k) r.push_back(&s);
    return r;
  };
  const std::vector<std::string> known = {"task",      "chart",   "transition", "inverse", "algebra",
                                          "algebroid", "q",       "poisson",    "section"};
  for (auto& s : secs)
    if (std::find(known.begin(), known.end(), s.kind) == known.end())
      throw SyntaxError("unknown section [" + s.kind + "]", s.line, 2);
  auto single = [&](const std::string& k) -> const Section* {
    auto v = by_kind(k);
    if (v.size() > 1) throw SyntaxError("duplicate section [" + k + "]", v[1]->line, 1);
    if (!v.empty() && !v[0]->args.empty())
      throw SyntaxError("section [" + k + "] takes no arguments", v[0]->line, 1);
    return v.empty() ? nullptr : v[0];
  };

  if (auto* t = single("task"))
    for (auto& e : t->entries) {
      if (std::find(std::begin(task_keys), std::end(task_keys), e.key) == std::end(task_keys))
        throw SyntaxError("unknown key " + e.key, e.line, e.key_col);
      if (doc.get(e.key)) throw SyntaxError("duplicate key " + e.key, e.line, e.key_col);
      if (e.key == "k") integer_value(e, 0);
      doc.task.emplace_back(e.key, e.value);
    }

  for (auto* s : by_kind("chart")) {
    if (s->args.size() != 1 || !is_identifier(s->args[0]))
      throw SyntaxError("expected [chart NAME]", s->line, 2);
    for (auto& c : doc.bundle.charts)
      if (c.name == s->args[0]) throw SyntaxError("duplicate chart " + c.name, s->line, 2);
    CoordinateSystem c{s->args[0], {}, 0};
    for (auto& e : s->entries) {
      Variable v = declared_variable(e);
      if (c.find(v.name)) throw SyntaxError("duplicate coordinate " + v.name, e.line, e.key_col);
      if (c.arity == 0) c.arity = v.weight.arity();
      if (v.weight.arity() != c.arity)
        throw WeightArityMismatch(v.name + " has " + std::to_string(v.weight.arity()) +
                                      " weight components, chart " + c.name + " has " +
                                      std::to_string(c.arity),
                                  e.line, e.value_col);
      c.vars.push_back(v);
    }
    if (c.vars.empty()) throw SyntaxError("chart " + c.name + " has no coordinates", s->line, 1);
    if (!doc.bundle.charts.empty() && doc.bundle.charts[0].arity != c.arity)
      throw WeightArityMismatch("chart " + c.name + " differs in arity from chart " +
                                    doc.bundle.charts[0].name,
                                s->line, 1);
    doc.bundle.charts.push_back(c);
  }

  auto chart_index = [&](const Section& s) {
    if (s.args.size() != 3 || s.args[1] != "->")
      throw SyntaxError("expected [" + s.kind + " A -> B]", s.line, 2);
    std::pair<std::size_t, std::size_t> r;
    for (int i : {0, 2}) {
      std::size_t j = 0;
      while (j < doc.bundle.charts.size() && doc.bundle.charts[j].name != s.args[i]) ++j;
      if (j == doc.bundle.charts.size())
        throw SyntaxError("unknown chart " + s.args[i], s.line, 2);
      (i == 0 ? r.first : r.second) = j;
    }
    return r;
  };
  // Laws for every coordinate of `to`, written in the coordinates of `from`.
  auto laws = [&](const Section& s, const CoordinateSystem& from, const CoordinateSystem& to) {
    Scope sc = scope_of(from.vars);
    Substitution m;
    for (auto& e : s.entries) {
      const Variable* v = to.find(e.key);
      if (!v) throw UnknownVariable(e.key, e.line, e.key_col);
      if (m.count(*v)) throw SyntaxError("duplicate law for " + e.key, e.line, e.key_col);
      m[*v] = parse_expression(e.value, sc, e.line, e.value_col);
    }
    for (auto& v : to.vars)
      if (!m.count(v)) throw SyntaxError("no law for " + v.name, s.line, 1);
    return m;
  };
  for (auto* s : by_kind("transition")) {
    auto [a, b] = chart_index(*s);
    for (auto& t : doc.bundle.transitions)
      if (t.source == a && t.target == b)
        throw SyntaxError("duplicate transition", s->line, 1);
    doc.bundle.transitions.push_back(
        {a, b, laws(*s, doc.bundle.charts[a], doc.bundle.charts[b]), std::nullopt});
  }
  for (auto* s : by_kind("inverse")) {
    auto [a, b] = chart_index(*s);
    TransitionMap* t = nullptr;
    for (auto& x : doc.bundle.transitions)
      if (x.source == a && x.target == b) t = &x;
    if (!t) throw SyntaxError("inverse without a transition " + s->args[0] + " -> " + s->args[2],
                              s->line, 1);
    if (t->inverse) throw SyntaxError("duplicate inverse", s->line, 1);
    t->inverse = laws(*s, doc.bundle.charts[b], doc.bundle.charts[a]);
  }

  if (auto* s = single("algebra")) {
    std::size_t dim = 0;
    for (auto& e : s->entries)
      if (e.key == "dim") dim = static_cast<std::size_t>(integer_value(e, 1));
    if (dim == 0) throw SyntaxError("[algebra] needs dim", s->line, 1);
    StructureConstants c(dim);
    for (auto& e : s->entries) {
      if (e.key == "dim") continue;
      auto [stem, idx] = indexed_key(e);
      if (stem != "c" || idx.size() != 3) throw SyntaxError("unknown key " + e.key, e.line, e.key_col);
      Poly v = parse_expression(e.value, {}, e.line, e.value_col);
      if (!(v == Poly(v.constant_term())))
        throw SyntaxError("structure constants must be numbers", e.line, e.value_col);
      c.set(index_value(idx[0], dim, e), index_value(idx[1], dim, e), index_value(idx[2], dim, e),
            v.constant_term());
    }
    doc.algebra = c;
  }

  if (auto* s = single("algebroid")) {
    if (doc.bundle.charts.empty()) throw UsageError("[algebroid] needs a base chart");
    const CoordinateSystem& base = doc.bundle.charts[0];
    std::size_t n = 0;
    for (auto& e : s->entries)
      if (e.key == "rank") n = static_cast<std::size_t>(integer_value(e, 1));
    if (n == 0) throw SyntaxError("[algebroid] needs rank", s->line, 1);
    AlgebroidData a;
    a.base.name = base.name;
    for (auto& v : base.vars) {
      if (!v.weight.is_zero())
        throw SyntaxError("algebroid base coordinate " + v.name + " must have weight 0", s->line, 1);
      a.base.vars.push_back(undotted_in_pair(v));
    }
    for (std::size_t i = 0; i < n; ++i) a.fibre.push_back("xi_" + tower_index(i));
    a.anchor.assign(n, std::vector<Poly>(a.base.vars.size()));
    a.bracket.assign(n, std::vector<std::vector<Poly>>(n, std::vector<Poly>(n)));
    Scope sc = scope_of(a.base.vars);
    for (auto& e : s->entries) {
      if (e.key == "rank") continue;
      auto [stem, idx] = indexed_key(e);
      Poly v;
      if (stem == "anchor" && idx.size() == 2) {
        std::size_t i = index_value(idx[0], n, e), j = 0;
        while (j < a.base.vars.size() && a.base.vars[j].name != idx[1]) ++j;
        if (j == a.base.vars.size()) throw UnknownVariable(idx[1], e.line, e.key_col);
        a.anchor[i][j] = parse_expression(e.value, sc, e.line, e.value_col);
      } else if (stem == "bracket" && idx.size() == 3) {
        std::size_t c = index_value(idx[0], n, e), i = index_value(idx[1], n, e),
                    j = index_value(idx[2], n, e);
        Poly p = parse_expression(e.value, sc, e.line, e.value_col);
        a.bracket[c][i][j] = p;
        a.bracket[c][j][i] = -p;
      } else {
        throw SyntaxError("unknown key " + e.key, e.line, e.key_col);
      }
    }
    doc.algebroid = a;
  }

  if (auto* s = single("q")) {
    if (doc.bundle.charts.empty()) throw UsageError("[q] needs a chart");
    CoordinateSystem oc = odd_chart(GLBundle{doc.bundle, doc.k()});
    Scope sc = scope_of(oc.vars);
    Derivation q(true, Weight({0, 1}));
    for (auto& e : s->entries) {
      const Variable* v = oc.find(e.key);
      if (!v) throw UnknownVariable(e.key, e.line, e.key_col);
      if (q.action.count(*v)) throw SyntaxError("duplicate entry " + e.key, e.line, e.key_col);
      Poly p = parse_expression(e.value, sc, e.line, e.value_col);
      q.set(*v, p);
    }
    doc.q = q;
  }

  if (auto* s = single("poisson")) {
    if (doc.bundle.charts.empty()) throw UsageError("[poisson] needs a chart");
    Scope sc;
    for (auto& [x, chi] : cotangent_pairs(doc.bundle.chart(0), doc.bundle.degree() + 1)) {
      sc[x.name] = x;
      sc[chi.name] = chi;
    }
    for (auto& e : s->entries) {
      if (e.key != "P") throw SyntaxError("unknown key " + e.key, e.line, e.key_col);
      if (doc.poisson) throw SyntaxError("duplicate key P", e.line, e.key_col);
      doc.poisson = parse_expression(e.value, sc, e.line, e.value_col);
    }
  }

  auto sec = by_kind("section");
  if (!sec.empty()) {
    if (!doc.algebra) throw UsageError("[section] needs an [algebra]");
    TowerCoordinates t = tower_coordinates(lie_tower(*doc.algebra, doc.k()));
    Scope sc = scope_of(t.y);
    std::vector<std::pair<int, TowerSection>> numbered;
    for (auto* s : sec) {
      if (s->args.size() != 1) throw SyntaxError("expected [section N]", s->line, 2);
      int num = 0;
      try {
        num = std::stoi(s->args[0]);
      } catch (const std::exception&) {
        throw SyntaxError("expected [section N]", s->line, 2);
      }
      if (num != static_cast<int>(numbered.size()) + 1)
        throw SyntaxError("sections must be numbered 1, 2, ... in order", s->line, 2);
      TowerSection ts;
      ts.Y.assign(t.xi.size(), Poly());
      ts.Z.assign(t.y.size(), Poly());
      for (auto& e : s->entries) {
        auto [stem, idx] = indexed_key(e);
        if (stem == "Y" && idx.size() == 1) {
          ts.Y[index_value(idx[0], t.xi.size(), e)] =
              parse_expression(e.value, sc, e.line, e.value_col);
        } else if (stem == "Z" && idx.size() == 1) {
          std::size_t j = 0;
          while (j < t.y.size() && t.y[j].name != idx[0]) ++j;
          if (j == t.y.size()) throw UnknownVariable(idx[0], e.line, e.key_col);
          ts.Z[j] = parse_expression(e.value, sc, e.line, e.value_col);
        } else {
          throw SyntaxError("unknown key " + e.key, e.line, e.key_col);
        }
      }
      numbered.emplace_back(num, ts);
    }
    for (auto& [n, ts] : numbered) doc.sections.push_back(ts);
  }
  return doc;
}

// ------------------------------------------------------------------ writer

/// Canonical text: fixed section order, coordinates in chart order, laws in
/// target-chart order, polynomials in canonical monomial order.
inline std::string render(const SpecDocument& doc) {
  std::ostringstream o;
  auto blank = [&] {
    if (o.tellp() > 0) o << "\n";
  };
  if (!doc.task.empty()) {
    o << "[task]\n";
    for (auto* key : detail::task_keys)
      if (auto v = doc.get(key)) o << key << " = " << *v << "\n";
  }
  for (auto& c : doc.bundle.charts) {
    blank();
    o << "[chart " << c.name << "]\n";
    for (auto& v : c.vars) o << v.name << " = " << v.weight.str() << (v.odd ? " odd" : "") << "\n";
  }
  for (auto& t : doc.bundle.transitions) {
    const auto& a = doc.bundle.charts[t.source];
    const auto& b = doc.bundle.charts[t.target];
    blank();
    o << "[transition " << a.name << " -> " << b.name << "]\n";
    for (auto& v : b.vars) o << v.name << " = " << grb::render(t.forward.at(v)) << "\n";
    if (t.inverse) {
      o << "\n[inverse " << a.name << " -> " << b.name << "]\n";
      for (auto& v : a.vars) o << v.name << " = " << grb::render(t.inverse->at(v)) << "\n";
    }
  }
  if (doc.algebra) {
    const auto& c = *doc.algebra;
    blank();
    o << "[algebra]\ndim = " << c.dim << "\n";
    for (std::size_t k = 0; k < c.dim; ++k)
      for (std::size_t i = 0; i < c.dim; ++i)
        for (std::size_t j = i + 1; j < c.dim; ++j)
          if (c(k, i, j) != 0)
            o << "c[" << k + 1 << "," << i + 1 << "," << j + 1 << "] = "
              << grb::render(Poly(c(k, i, j))) << "\n";
  }
  if (doc.algebroid) {
    const auto& a = *doc.algebroid;
    std::size_t n = a.rank();
    blank();
    o << "[algebroid]\nrank = " << n << "\n";
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < a.base.vars.size(); ++j)
        if (!a.anchor[i][j].is_zero())
          o << "anchor[" << i + 1 << "," << a.base.vars[j].name
            << "] = " << grb::render(a.anchor[i][j]) << "\n";
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          if (!a.bracket[c][i][j].is_zero())
            o << "bracket[" << c + 1 << "," << i + 1 << "," << j + 1
              << "] = " << grb::render(a.bracket[c][i][j]) << "\n";
  }
  if (doc.q) {
    blank();
    o << "[q]\n";
    for (auto& v : doc.bundle.chart(0).vars) {
      Variable ov = v;
      if (is_linear_coordinate(v)) ov.odd = true;
      Poly c = doc.q->coefficient(ov);
      if (!c.is_zero()) o << v.name << " = " << grb::render(c) << "\n";
    }
  }
  if (doc.poisson) {
    blank();
    o << "[poisson]\nP = " << grb::render(*doc.poisson) << "\n";
  }
  if (!doc.sections.empty()) {
    TowerCoordinates t = tower_coordinates(lie_tower(*doc.algebra, doc.k()));
    for (std::size_t s = 0; s < doc.sections.size(); ++s) {
      blank();
      o << "[section " << s + 1 << "]\n";
      const auto& ts = doc.sections[s];
      for (std::size_t a = 0; a < ts.Y.size(); ++a)
        if (!ts.Y[a].is_zero()) o << "Y[" << a + 1 << "] = " << grb::render(ts.Y[a]) << "\n";
      for (std::size_t i = 0; i < ts.Z.size(); ++i)
        if (!ts.Z[i].is_zero()) o << "Z[" << t.y[i].name << "] = " << grb::render(ts.Z[i]) << "\n";
    }
  }
  return o.str();
}

// ------------------------------------------------------------------ report

struct Report {
  std::string command;
  CheckList checks;
  std::vector<std::pair<std::string, std::string>> values;
  std::optional<SpecDocument> output;

  bool ok() const { return checks.ok(); }
  int exit_code() const { return ok() ? 0 : 1; }
};

/// Fixed conventions, printed in every report header.
inline const std::vector<std::pair<std::string, std::string>>& conventions() {
  static const std::vector<std::pair<std::string, std::string>> c = {
      {"derivatives", "left partial derivatives"},
      {"velocities", "x_t<r> = x^(r)/r!"},
      {"homological field", "Q xi^c = -1/2 c^c_ab xi^a xi^b"},
      {"hamiltonian", "Q = -[P, .]"},
      {"derived bracket", "[[s1, P], s2]"},
  };
  return c;
}

inline std::string render_text(const Report& r) {
  std::ostringstream o;
  o << "# command: " << r.command << "\n";
  for (auto& [k, v] : conventions()) o << "# " << k << ": " << v << "\n";
  for (auto& c : r.checks.checks) {
    o << to_string(c.verdict) << " " << c.id;
    if (!c.detail.empty()) o << ": " << c.detail;
    o << "\n";
    if (!c.residual.empty()) o << "  residual: " << c.residual << "\n";
    if (!c.weight.empty()) o << "  weight: " << c.weight << "\n";
  }
  for (auto& [k, v] : r.values) o << k << " = " << v << "\n";
  if (r.output) o << "--- document\n" << render(*r.output);
  return o.str();
}

inline std::string render_json(const Report& r) {
  nlohmann::ordered_json j;
  j["command"] = r.command;
  nlohmann::ordered_json conv = nlohmann::ordered_json::object();
  for (auto& [k, v] : conventions()) conv[k] = v;
  j["conventions"] = conv;
  j["verdicts"] = nlohmann::ordered_json::array();
  for (auto& c : r.checks.checks)
    j["verdicts"].push_back({{"check_id", c.id},
                             {"verdict", to_string(c.verdict)},
                             {"detail", c.detail},
                             {"residual", c.residual},
                             {"weights", c.weight}});
  j["values"] = nlohmann::ordered_json::array();
  for (auto& [k, v] : r.values) j["values"].push_back({{"key", k}, {"value", v}});
  j["document"] = r.output ? nlohmann::ordered_json(render(*r.output)) : nullptr;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- commands

namespace detail {

inline const GradedBundle& need_bundle(const SpecDocument& d) {
  if (d.bundle.charts.empty()) throw UsageError("the document declares no chart");
  return d.bundle;
}

inline SpecDocument bundle_document(const GradedBundle& b, const std::string& command,
                                    std::optional<int> k = {}) {
  SpecDocument d;
  d.task.emplace_back("command", command);
  if (k) d.task.emplace_back("k", std::to_string(*k));
  d.bundle = b;
  return d;
}

inline SpecDocument algebroid_document(const WeightedAlgebroid& a) {
  SpecDocument d = bundle_document(a.carrier.bundle, "check-q", a.carrier.k);
  d.q = a.Q;
  return d;
}

inline void add_kind(Report& r, AlgebroidKind k) { r.values.emplace_back("kind", to_string(k)); }

inline void run_construct(Report& r, const SpecDocument& d, const std::string& what) {
  if (what == "tangent") {
    WeightedAlgebroid a = tangent_algebroid(need_bundle(d));
    AlgebroidReport rep = check_weighted_algebroid(a);
    r.checks = rep.checks;
    add_kind(r, rep.kind);
    r.output = algebroid_document(a);
  } else if (what == "cotangent") {
    if (!d.poisson) throw UsageError("construct cotangent needs a [poisson] section");
    CotangentAlgebroid c = cotangent_algebroid(need_bundle(d), *d.poisson);
    r.checks = c.checks;
    add_kind(r, c.kind);
    r.values.emplace_back("base kind", to_string(c.base_kind));
    r.output = algebroid_document(c.algebroid);
  } else if (what == "tk") {
    const GradedBundle& b = need_bundle(d);
    if (b.charts.size() != 2 || b.transitions.size() != 1)
      throw UsageError("construct tk needs two charts and one transition");
    const TransitionMap& t = b.transitions[0];
    PolynomialDiffeo phi{b.charts[t.source], b.charts[t.target], t.forward, t.inverse};
    int k = d.k();
    GradedBundle tk = higher_tangent(phi, k);
    r.checks = validate(tk);
    if (k >= 1) {
      r.checks.append(higher_tangent_linearisation_check(phi, k));
      r.checks.add("tk.symmetric", is_symmetric(linearise(tk)));
    }
    r.output = bundle_document(tk, "validate");
  } else if (what == "lie-tower") {
    if (!d.algebra) throw UsageError("construct lie-tower needs an [algebra] section");
    WeightedAlgebroid a = lie_tower(*d.algebra, d.k());
    r.checks = weighted_lie_algebra_check(a);
    add_kind(r, check_weighted_algebroid(a).kind);
    r.output = algebroid_document(a);
  } else if (what == "prolong") {
    if (!d.algebroid) throw UsageError("construct prolong needs an [algebroid] section");
    WeightedAlgebroid a = prolongation_algebroid(*d.algebroid, d.k());
    AlgebroidReport rep = check_weighted_algebroid(a);
    r.checks = lie_check(*d.algebroid);
    r.checks.append(rep.checks);
    add_kind(r, rep.kind);
    r.output = algebroid_document(a);
  } else {
    throw UsageError("unknown construction '" + what +
                     "' (expected tangent, cotangent, tk, lie-tower or prolong)");
  }
}

}  // namespace detail

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"validate", "linearise", "dual",    "mironian",
                                             "embed",    "check-q",   "bracket", "construct"};
  return c;
}

/// Runs a command; algebraic failures become FAIL verdicts, missing input is a UsageError.
inline Report run(const std::string& command, const SpecDocument& d,
                  const std::string& sub = {}) {
  using namespace detail;
  if (std::find(commands().begin(), commands().end(), command) == commands().end())
    throw UsageError("unknown command '" + command + "'");
  Report r;
  r.command = command == "construct" ? command + " " + sub : command;
  try {
    if (command == "validate") {
      const GradedBundle& b = need_bundle(d);
      if (d.get("k") && b.arity() == 2) r.checks = validate_gl(GLBundle{b, d.k()});
      else r.checks = validate(b);
    } else if (command == "linearise") {
      GLBundle g = linearise(need_bundle(d));
      r.checks = validate_gl(g);
      r.checks.append(linearisation_diagram_check(d.bundle));
      r.output = bundle_document(g.bundle, "validate", g.k);
    } else if (command == "dual") {
      GLBundle g = linear_dual(need_bundle(d));
      r.checks = validate_gl(g);
      r.checks.append(dual_pairing_check(d.bundle));
      r.checks.append(pairing_check(d.bundle));
      r.output = bundle_document(g.bundle, "validate", g.k);
    } else if (command == "mironian") {
      GLBundle g = mironian(need_bundle(d));
      r.checks = validate_gl(g);
      r.output = bundle_document(g.bundle, "validate", g.k);
    } else if (command == "embed") {
      const GradedBundle& b = need_bundle(d);
      r.checks = embedding_compatibility(b);
      GradedMorphism iota = holonomic_embedding(b);
      for (auto& v : iota.cod().vars)
        r.values.emplace_back(v.name, grb::render(iota.components.at(v)));
    } else if (command == "check-q") {
      if (!d.q) throw UsageError("check-q needs a [q] section");
      WeightedAlgebroid a{GLBundle{need_bundle(d), d.k()}, *d.q};
      r.checks = validate_gl(a.carrier);
      AlgebroidReport rep = check_weighted_algebroid(a);
      r.checks.append(rep.checks);
      add_kind(r, rep.kind);
    } else if (command == "bracket") {
      if (!d.algebra) throw UsageError("bracket needs an [algebra] section");
      if (d.sections.size() != 2) throw UsageError("bracket needs [section 1] and [section 2]");
      WeightedAlgebroid a = lie_tower(*d.algebra, d.k());
      TowerCoordinates t = tower_coordinates(a);
      TowerSection b = reduced_bracket(*d.algebra, t, d.sections[0], d.sections[1]);
      TowerSection db = tower_derived_bracket(a, d.sections[0], d.sections[1]);
      bool agree = true;
      for (std::size_t i = 0; i < b.Y.size(); ++i) agree = agree && db.Y[i] == -b.Y[i];
      for (std::size_t i = 0; i < b.Z.size(); ++i) agree = agree && db.Z[i] == -b.Z[i];
      r.checks.add("bracket.derived", agree,
                   agree ? "" : "derived bracket differs from minus the reduced bracket");
      for (std::size_t i = 0; i < b.Y.size(); ++i)
        r.values.emplace_back("Y[" + tower_index(i) + "]", grb::render(b.Y[i]));
      for (std::size_t i = 0; i < b.Z.size(); ++i)
        r.values.emplace_back("Z[" + t.y[i].name + "]", grb::render(b.Z[i]));
    } else {
      run_construct(r, d, sub.empty() ? d.get("construct").value_or("") : sub);
      if (sub.empty()) r.command = "construct " + d.get("construct").value_or("");
    }
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    r.checks.add(command + ".error", false, e.what());
  }
  return r;
}

}  // namespace grb::cli
