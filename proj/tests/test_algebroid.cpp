#include <grb/algebroid.hpp>
#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace grb;
using namespace grb::testing;

namespace {

bool passes(const CheckList& r) {
  for (auto& c : r.checks)
    if (c.verdict == Verdict::Fail) ADD_FAILURE() << c.id << " " << c.detail << " " << c.residual;
  return r.ok();
}

using Constants = std::vector<std::vector<std::vector<Rational>>>;  // c[k][i][j]

Constants so3() {
  Constants c(3, std::vector<std::vector<Rational>>(3, std::vector<Rational>(3, 0)));
  for (int i = 0; i < 3; ++i) {
    int j = (i + 1) % 3, k = (i + 2) % 3;
    c[k][i][j] = 1;
    c[k][j][i] = -1;
  }
  return c;
}

/// Jacobi identity of the bracket [e_i, e_j] = Σ c[k][i][j] e_k, by brute force.
bool jacobi(const Constants& c) {
  std::size_t n = c.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t d = 0; d < n; ++d)
        for (std::size_t m = 0; m < n; ++m) {
          Rational s = 0;
          for (std::size_t l = 0; l < n; ++l)
            s += c[l][b][d] * c[m][a][l] + c[l][d][a] * c[m][b][l] + c[l][a][b] * c[m][d][l];
          if (s != 0) return false;
        }
  return true;
}

GLBundle algebra_carrier(std::size_t n) {
  CoordinateSystem c{"g", {}, 2};
  for (std::size_t i = 0; i < n; ++i)
    c.vars.emplace_back("xi" + std::to_string(i + 1), Weight({0, 1}), false);
  return {{{c}, {}}, 1};
}

/// Q ξ^k = −½ Σ c[k][i][j] ξ^i ξ^j on Πg.
WeightedAlgebroid algebra(const Constants& c) {
  GLBundle g = algebra_carrier(c.size());
  CoordinateSystem oc = odd_chart(g);
  Derivation q(true, Weight({0, 1}));
  for (std::size_t k = 0; k < c.size(); ++k) {
    Poly img;
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = 0; j < c.size(); ++j)
        img += Poly(oc.vars[i]) * Poly(oc.vars[j]) * (Rational(-1, 2) * c[k][i][j]);
    q.set(oc.vars[k], img);
  }
  return {g, q};
}

/// Tangent algebroid of a two-dimensional base: Q = Σ d_x ∂_x on ΠTM.
WeightedAlgebroid tangent_two() {
  Variable x1("x1", Weight({0, 0})), x2("x2", Weight({0, 0}));
  Variable d1("d_x1", Weight({0, 1})), d2("d_x2", Weight({0, 1}));
  GLBundle g{{{CoordinateSystem{"M", {x1, x2, d1, d2}, 2}}, {}}, 1};
  CoordinateSystem oc = odd_chart(g);
  Derivation q(true, Weight({0, 1}));
  q.set(x1, Poly(oc.at("d_x1")));
  q.set(x2, Poly(oc.at("d_x2")));
  return {g, q};
}

/// Linearisation of a degree-2 bundle over a point (coordinates y, z):
/// D(F_2) has x-free coordinates y (1,0), y_dot (0,1), z_dot (1,1).
GLBundle d_of_f2() {
  Variable y("y", Weight({1, 0})), yd("y_dot", Weight({0, 1})), zd("z_dot", Weight({1, 1}));
  return {{{CoordinateSystem{"F", {y, yd, zd}, 2}}, {}}, 2};
}

/// A random chart of a GL bundle of degree k with a few coordinates of each kind.
CoordinateSystem random_gl_chart(Rng& rng, int k) {
  CoordinateSystem c{"R", {}, 2};
  int n = 0;
  for (int u = 0; u < k; ++u) {
    int nb = rng.uniform(u == 0 ? 1 : 0, 2), nf = rng.uniform(u == 0 ? 1 : 0, 2);
    for (int i = 0; i < nb; ++i) c.vars.emplace_back("b" + std::to_string(n++), Weight({u, 0}));
    for (int i = 0; i < nf; ++i) c.vars.emplace_back("f" + std::to_string(n++), Weight({u, 1}));
  }
  return c;
}

/// Random odd derivation of bi-weight (0,1) on ΠD_k.
WeightedAlgebroid random_algebroid(Rng& rng, int k) {
  GLBundle g{{{random_gl_chart(rng, k)}, {}}, k};
  CoordinateSystem oc = odd_chart(g);
  Derivation q(true, Weight({0, 1}));
  for (auto& v : oc.vars) {
    Poly h = rng.homogeneous(oc.vars, v.weight + Weight({0, 1}), 4, 3);
    auto [e, o] = split_parity(h);
    q.set(v, v.odd ? e : o);
  }
  return {g, q};
}

/// Random section: linear in π with coefficients in the base coordinates.
Poly random_section(Rng& rng, const PhaseSpace& ps, int degree) {
  Poly s;
  for (auto& pi : ps.pi) {
    int need = degree - 1 - pi.weight[0];
    if (need < 0) continue;
    Poly c = rng.homogeneous(ps.base, Weight({need, 0}), 2, 2);
    if (c.is_zero() && need == 0) c = rng.nonzero_rational();
    s += c * Poly(pi);
  }
  return s;
}

}  // namespace

// ------------------------------------------------------------- Schouten

TEST(Schouten, CanonicalPairs) {
  GLBundle g = d_of_f2();
  PhaseSpace ps = phase_space(odd_chart(g), 2);
  ASSERT_EQ(ps.base.size(), 1u);
  ASSERT_EQ(ps.fibre.size(), 2u);
  EXPECT_EQ(schouten(Poly(ps.base[0]), Poly(ps.chi[0]), ps.pairs), Poly(1));
  EXPECT_EQ(schouten(Poly(ps.chi[0]), Poly(ps.base[0]), ps.pairs), Poly(-1));
  for (std::size_t i = 0; i < ps.fibre.size(); ++i) {
    EXPECT_EQ(schouten(Poly(ps.pi[i]), Poly(ps.fibre[i]), ps.pairs), Poly(1));
    EXPECT_EQ(schouten(Poly(ps.fibre[i]), Poly(ps.pi[i]), ps.pairs), Poly(-1));
  }
  EXPECT_TRUE(schouten(Poly(ps.base[0]), Poly(ps.fibre[0]), ps.pairs).is_zero());
}

TEST(Schouten, PhaseSpaceWeights) {
  GLBundle g = d_of_f2();
  PhaseSpace ps = phase_space(odd_chart(g), 2);
  // y (1,0,0) pairs with χ_y of weight (0,1,1); y_dot (0,1,0) with π_y (1,0,1).
  EXPECT_EQ(ps.chi[0].name, "chi_y");
  EXPECT_EQ(ps.chi[0].weight, Weight({0, 1, 1}));
  EXPECT_TRUE(ps.chi[0].odd);
  EXPECT_EQ(ps.pi[0].name, "pi_y");
  EXPECT_EQ(ps.pi[0].weight, Weight({1, 0, 1}));
  EXPECT_FALSE(ps.pi[0].odd);
  EXPECT_EQ(ps.pi[1].name, "pi_z");
  EXPECT_EQ(ps.pi[1].weight, Weight({0, 0, 1}));
}

TEST(Schouten, RejectsForeignVariables) {
  GLBundle g = d_of_f2();
  PhaseSpace ps = phase_space(odd_chart(g), 2);
  Variable w("w", Weight({1, 0}));
  EXPECT_THROW(schouten(Poly(w), Poly(ps.chi[0]), ps.pairs), CoordinateMismatch);
}

TEST(SchoutenProperty, AntisymmetryJacobiLeibniz) {
  Rng rng(404);
  for (int trial = 0; trial < 20; ++trial) {
    int k = rng.uniform(1, 3);
    GLBundle g{{{random_gl_chart(rng, k)}, {}}, k};
    PhaseSpace ps = phase_space(odd_chart(g), k);
    std::vector<Variable> all;
    for (auto& [q, p] : ps.pairs) {
      all.push_back(q);
      all.push_back(p);
    }
    auto pick = [&] {
      return rng.poly_of_parity(all, 3, 3, rng.coin());
    };
    Poly f = pick(), h = pick(), l = pick();
    auto par = [](const Poly& p) { return parity_of(p).kind == ParityOf::Odd ? 1 : 0; };
    int pf = par(f), ph = par(h);
    // [F,G] = −(−1)^{(|F|+1)(|G|+1)} [G,F]
    Poly fg = schouten(f, h, ps.pairs), gf = schouten(h, f, ps.pairs);
    int s = ((pf + 1) * (ph + 1)) % 2 ? 1 : -1;
    EXPECT_EQ(fg, gf * Rational(s)) << render(f) << " | " << render(h);
    // [F,[G,H]] = [[F,G],H] + (−1)^{(|F|+1)(|G|+1)} [G,[F,H]]
    Poly lhs = schouten(f, schouten(h, l, ps.pairs), ps.pairs);
    Poly rhs = schouten(fg, l, ps.pairs) +
               schouten(h, schouten(f, l, ps.pairs), ps.pairs) *
                   Rational(((pf + 1) * (ph + 1)) % 2 ? -1 : 1);
    EXPECT_EQ(lhs, rhs);
    // [F,GH] = [F,G]H + (−1)^{(|F|+1)|G|} G[F,H]
    Poly lb = schouten(f, h * l, ps.pairs);
    Poly lr = fg * l + h * schouten(f, l, ps.pairs) * Rational(((pf + 1) * ph) % 2 ? -1 : 1);
    EXPECT_EQ(lb, lr);
  }
}

// ----------------------------------------------------------------- P and Q

TEST(Hamiltonian, TangentAlgebroid) {
  WeightedAlgebroid a = tangent_two();
  PhaseSpace ps = phase_space(a);
  Poly p = p_from_q(a);
  Poly expected = Poly(ps.fibre[0]) * Poly(ps.chi[0]) + Poly(ps.fibre[1]) * Poly(ps.chi[1]);
  EXPECT_EQ(p, expected);
  EXPECT_EQ(q_from_p(p, ps), a.Q);
  AlgebroidReport r = check_weighted_algebroid(a);
  EXPECT_TRUE(passes(r.checks));
  EXPECT_EQ(r.kind, AlgebroidKind::Lie);
}

TEST(Hamiltonian, QIsMinusHamiltonianVectorField) {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    WeightedAlgebroid a = random_algebroid(rng, rng.uniform(1, 3));
    PhaseSpace ps = phase_space(a);
    Poly p = p_from_q(a);
    CoordinateSystem oc = odd_chart(a.carrier);
    Poly f = rng.poly(oc.vars, 3, 3);
    EXPECT_EQ(a.Q(f), -schouten(p, f, ps.pairs));
  }
}

TEST(Hamiltonian, LieAlgebraStructureConstants) {
  Constants c = so3();
  WeightedAlgebroid a = algebra(c);
  PhaseSpace ps = phase_space(a);
  StructureFunctions s = structure_from_q(a.Q, ps);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) EXPECT_EQ(s.bracket[i][j][k], Poly(-c[k][i][j]));
  // P = ½ Σ c ξ ξ π
  Poly p;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        p += Poly(ps.fibre[i]) * Poly(ps.fibre[j]) * Poly(ps.pi[k]) * (Rational(1, 2) * c[k][i][j]);
  EXPECT_EQ(p_from_q(a), p);
}

TEST(Hamiltonian, MalformedQ) {
  WeightedAlgebroid a = tangent_two();
  WeightedAlgebroid even = a;
  even.Q.odd = false;
  EXPECT_THROW(p_from_q(even), MalformedQ);
  WeightedAlgebroid heavy = a;
  CoordinateSystem oc = odd_chart(a.carrier);
  heavy.Q.set(oc.at("x1"), Poly(oc.at("d_x1")) * Poly(oc.at("x2")) + Poly(oc.at("x1")));
  EXPECT_THROW(p_from_q(heavy), MalformedQ);
  AlgebroidReport r = check_weighted_algebroid(heavy);
  EXPECT_FALSE(r.checks.ok());
  EXPECT_EQ(r.kind, AlgebroidKind::General);
  PhaseSpace ps = phase_space(a);
  EXPECT_THROW(q_from_p(Poly(ps.chi[0]) * Poly(ps.chi[1]), ps), MalformedQ);
}

TEST(Hamiltonian, LieIffJacobi) {
  Constants c = so3();
  AlgebroidReport lie = check_weighted_algebroid(algebra(c));
  EXPECT_TRUE(jacobi(c));
  EXPECT_EQ(lie.kind, AlgebroidKind::Lie);
  EXPECT_TRUE(lie.pp.is_zero());

  Constants bent = c;
  bent[0][0][1] = 1;
  bent[0][1][0] = -1;
  EXPECT_FALSE(jacobi(bent));
  AlgebroidReport skew = check_weighted_algebroid(algebra(bent));
  EXPECT_EQ(skew.kind, AlgebroidKind::Skew);
  EXPECT_FALSE(skew.pp.is_zero());
  EXPECT_EQ(skew.checks.find("q.square")->verdict, Verdict::Fail);
  EXPECT_EQ(skew.checks.find("p.square")->weight, Weight({0, 3, 1}).str());

  // Rescaling one constant of a Lie bracket along its own direction stays Lie.
  Constants scaled = c;
  scaled[2][0][1] = 2;
  scaled[2][1][0] = -2;
  EXPECT_TRUE(jacobi(scaled));
  EXPECT_EQ(check_weighted_algebroid(algebra(scaled)).kind, AlgebroidKind::Lie);
}

TEST(HamiltonianProperty, RoundTripAndEquivalence) {
  Rng rng(2024);
  int lie = 0, skew = 0;
  for (int trial = 0; trial < 40; ++trial) {
    int k = rng.uniform(1, 4);
    WeightedAlgebroid a = random_algebroid(rng, k);
    PhaseSpace ps = phase_space(a);
    Poly p = p_from_q(a);
    EXPECT_EQ(q_from_p(p, ps), a.Q);
    EXPECT_TRUE(weight_of(p).is(Weight({k - 1, 2, 1})));
    AlgebroidReport r = check_weighted_algebroid(a);
    EXPECT_EQ(r.qq.is_zero(), r.pp.is_zero());
    if (!r.pp.is_zero()) {
      EXPECT_TRUE(weight_of(r.pp).is(Weight({k - 1, 3, 1})));
      ++skew;
    } else {
      ++lie;
    }
    // [Q,Q] = 2Q² and Q² = ½[[P,P],·] up to the sign of Q = −[P,·].
    CoordinateSystem oc = odd_chart(a.carrier);
    Poly f = rng.poly(oc.vars, 3, 3);
    EXPECT_EQ(r.qq(f), schouten(r.pp, f, ps.pairs));
  }
  EXPECT_GT(skew, 0);
  EXPECT_GT(lie, 0);
}

// ---------------------------------------------------------- derived bracket

TEST(DerivedBracket, LieAlgebraUpToSign) {
  Constants c = so3();
  WeightedAlgebroid a = algebra(c);
  PhaseSpace ps = phase_space(a);
  Poly p = p_from_q(a);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Poly expected;
      for (int k = 0; k < 3; ++k) expected -= Poly(ps.pi[k]) * c[k][i][j];
      EXPECT_EQ(derived_bracket(Poly(ps.pi[i]), Poly(ps.pi[j]), p, ps), expected);
    }
  EXPECT_EQ(*section_degree(Poly(ps.pi[0])), 1);
}

TEST(DerivedBracket, AnchorLeibniz) {
  WeightedAlgebroid a = tangent_two();
  PhaseSpace ps = phase_space(a);
  Poly p = p_from_q(a);
  Poly x1 = Poly(ps.base[0]), x2 = Poly(ps.base[1]);
  Poly s1 = x2 * Poly(ps.pi[0]), s2 = x1 * Poly(ps.pi[1]);
  Poly f = x1 * x1 + x2;
  // Vector fields X = x2∂1, Y = x1∂2 and the tangent anchor ρ(X)(f) = X(f).
  Poly b = derived_bracket(s1, s2, p, ps);
  Poly bf = derived_bracket(s1, f * s2, p, ps);
  Poly xf = x2 * Rational(2) * x1;
  EXPECT_EQ(bf, f * b - xf * s2);
  // [X,Y] = x2∂2 − x1∂1, so the derived bracket is −(x2 π2 − x1 π1).
  EXPECT_EQ(b, -(x2 * Poly(ps.pi[1]) - x1 * Poly(ps.pi[0])));
}

TEST(DerivedBracket, DegreeUnderflow) {
  GLBundle g = d_of_f2();
  CoordinateSystem oc = odd_chart(g);
  Derivation q(true, Weight({0, 1}));
  q.set(oc.at("y"), Poly(oc.at("z_dot")));
  WeightedAlgebroid a{g, q};
  PhaseSpace ps = phase_space(a);
  Poly p = p_from_q(a);
  Poly low = Poly(ps.pi[1]);  // π_z, degree 1
  EXPECT_EQ(*section_degree(low), 1);
  EXPECT_THROW(derived_bracket(low, low, p, ps), DegreeUnderflow);
  EXPECT_NO_THROW(derived_bracket(Poly(ps.pi[0]), low, p, ps));
  EXPECT_THROW(derived_bracket(Poly(ps.chi[0]), low, p, ps), CoordinateMismatch);
}

TEST(DerivedBracketProperty, DegreeLaw) {
  Rng rng(8);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    int k = rng.uniform(1, 4);
    WeightedAlgebroid a = random_algebroid(rng, k);
    PhaseSpace ps = phase_space(a);
    Poly p = p_from_q(a);
    int r1 = rng.uniform(1, k + 1), r2 = rng.uniform(1, k + 1);
    Poly s1 = random_section(rng, ps, r1), s2 = random_section(rng, ps, r2);
    if (s1.is_zero() || s2.is_zero()) continue;
    if (r1 + r2 - k < 1) {
      EXPECT_THROW(derived_bracket(s1, s2, p, ps), DegreeUnderflow);
      continue;
    }
    Poly b = derived_bracket(s1, s2, p, ps);
    EXPECT_TRUE(weight_of(b).is(Weight({r1 + r2 - k - 1, 0, 1})));
    if (!b.is_zero()) {
      EXPECT_EQ(*section_degree(b), r1 + r2 - k);
    }
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(DerivedBracket, JacobiMatchesQ) {
  Constants c = so3();
  WeightedAlgebroid a = algebra(c);
  PhaseSpace ps = phase_space(a);
  std::vector<Poly> gens(ps.pi.begin(), ps.pi.end());
  EXPECT_TRUE(derived_jacobi_check(gens, p_from_q(a), ps).ok());
  Constants bent = c;
  bent[0][0][1] = 1;
  bent[0][1][0] = -1;
  WeightedAlgebroid b = algebra(bent);
  EXPECT_FALSE(derived_jacobi_check(gens, p_from_q(b), phase_space(b)).ok());
}

// ---------------------------------------------------------------- anchors

TEST(Anchor, TangentIsIdentity) {
  WeightedAlgebroid a = tangent_two();
  AnchorMap rho = anchor(a);
  const CoordinateSystem& c = a.carrier.bundle.chart(0);
  EXPECT_EQ(rho.components.at(rho.target.at("d_x1")), Poly(c.at("d_x1")));
  EXPECT_EQ(rho.components.at(rho.target.at("d_x2")), Poly(c.at("d_x2")));
  EXPECT_FALSE(parity_of(rho.components.at(rho.target.at("d_x1"))).is(true));
}

TEST(Anchor, DegreeTwoHolonomicAnchor) {
  // Q^y = 3 ξ y + 5 θ with ξ = y_dot, θ = z_dot; the composite anchor reads
  // ρ̂₂*(δy) = 2zP + yyP̄ with P = 5, P̄ = 3. Q(θ) = 3ξθ makes Q² vanish.
  GLBundle g = d_of_f2();
  CoordinateSystem oc = odd_chart(g);
  Derivation q(true, Weight({0, 1}));
  q.set(oc.at("y"), Poly(oc.at("y_dot")) * Poly(oc.at("y")) * Rational(3) +
                        Poly(oc.at("z_dot")) * Rational(5));
  q.set(oc.at("z_dot"), Poly(oc.at("y_dot")) * Poly(oc.at("z_dot")) * Rational(3));
  WeightedAlgebroid a{g, q};
  ASSERT_TRUE(passes(check_weighted_algebroid(a).checks));
  AnchorMap rho = anchor(a);
  const CoordinateSystem& c = g.bundle.chart(0);
  EXPECT_EQ(rho.components.at(rho.target.at("d_y")),
            Poly(c.at("y_dot")) * Poly(c.at("y")) * Rational(3) + Poly(c.at("z_dot")) * Rational(5));
  EXPECT_EQ(anchor(a, 1).target.vars.size(), 0u);

  AnchorMap hat = anchor_hat(a, 2);
  Variable y("y", Weight({1})), z("z", Weight({2}));
  Poly expected = Poly(z) * Rational(10) + Poly(y) * Poly(y) * Rational(3);
  EXPECT_EQ(hat.components.at(hat.target.at("d_y")), expected);
  EXPECT_EQ(hat.target.at("d_y").weight, Weight({1, 1}));
}

TEST(Anchor, NeedsALinearisation) {
  Variable x("x", Weight({0, 0})), t("t", Weight({0, 1}));
  GLBundle g{{{CoordinateSystem{"B", {x, t}, 2}}, {}}, 2};
  WeightedAlgebroid a{g, Derivation(true, Weight({0, 1}))};
  EXPECT_THROW(anchor_hat(a, 2), NotALinearisation);
}

// ------------------------------------------------------------ restriction

TEST(Restrict, DegreeTwoToA1) {
  GLBundle g = d_of_f2();
  CoordinateSystem oc = odd_chart(g);
  Derivation q(true, Weight({0, 1}));
  q.set(oc.at("y"), Poly(oc.at("z_dot")));
  RestrictedDifferential r = restrict_to_A1({g, q});
  ASSERT_EQ(r.chart.vars.size(), 1u);
  EXPECT_EQ(r.chart.vars[0].name, "y_dot");
  EXPECT_TRUE(r.d.is_zero());

  Derivation bad(true, Weight({0, 1}));
  bad.set(oc.at("y_dot"), Poly(oc.at("y")));
  EXPECT_THROW(restrict_to_A1({g, bad}), ProjectionObstruction);
}

TEST(RestrictProperty, LeibnizOverA1) {
  Rng rng(91);
  for (int trial = 0; trial < 15; ++trial) {
    int k = rng.uniform(1, 3);
    WeightedAlgebroid a = random_algebroid(rng, k);
    RestrictedDifferential r = restrict_to_A1(a);
    CoordinateSystem oc = odd_chart(a.carrier);
    for (auto& v : r.chart.vars) EXPECT_TRUE(involves_only(r.d.coefficient(v), r.chart));
    Poly alpha = rng.poly_of_parity(r.chart.vars, 3, 2, rng.coin());
    Poly phi = rng.poly(oc.vars, 3, 3);
    EXPECT_TRUE(leibniz_residual(a.Q, r.d, alpha, phi).is_zero());
  }
}

// ---------------------------------------------------------------- epsilon

TEST(Epsilon, LieAlgebraIsCoadjoint) {
  Constants c = so3();
  WeightedAlgebroid a = algebra(c);
  EpsilonMap e = epsilon_components(a);
  ASSERT_EQ(e.dpi.size(), 3u);
  EXPECT_TRUE(e.dx.empty());
  for (int j = 0; j < 3; ++j) {
    Poly expected;
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) expected -= Poly(e.y[i]) * Poly(e.pi[k]) * c[k][i][j];
    EXPECT_EQ(e.components.at(e.dpi[j]), expected);
  }
}

TEST(Epsilon, TangentAlgebroid) {
  WeightedAlgebroid a = tangent_two();
  EpsilonMap e = epsilon_components(a);
  ASSERT_EQ(e.dx.size(), 2u);
  EXPECT_EQ(e.components.at(e.dx[0]), Poly(e.y[0]));
  EXPECT_EQ(e.components.at(e.dx[1]), Poly(e.y[1]));
  EXPECT_EQ(e.components.at(e.dpi[0]), Poly(e.p[0]));
  EXPECT_EQ(e.components.at(e.dpi[1]), Poly(e.p[1]));
}

TEST(EpsilonProperty, WeightPreserving) {
  Rng rng(5);
  for (int trial = 0; trial < 15; ++trial) {
    WeightedAlgebroid a = random_algebroid(rng, rng.uniform(1, 3));
    EpsilonMap e = epsilon_components(a);
    for (auto& [v, img] : e.components) EXPECT_TRUE(weight_of(img).is(v.weight)) << v.name;
  }
}

// ---------------------------------------------------------- special degrees

TEST(SpecialDegrees, WeightedLieAlgebra) {
  EXPECT_TRUE(passes(weighted_lie_algebra_check(algebra(so3()))));
  CheckList t = weighted_lie_algebra_check(tangent_two());
  EXPECT_EQ(t.find("lie_algebra.point_base")->verdict, Verdict::Fail);
}

TEST(SpecialDegrees, DegreeTwoIsVB) {
  GLBundle g = d_of_f2();
  CoordinateSystem oc = odd_chart(g);
  Derivation q(true, Weight({0, 1}));
  q.set(oc.at("y"), Poly(oc.at("y_dot")) * Poly(oc.at("y")) * Rational(3) +
                        Poly(oc.at("z_dot")) * Rational(5));
  q.set(oc.at("z_dot"), Poly(oc.at("y_dot")) * Poly(oc.at("z_dot")) * Rational(3));
  EXPECT_TRUE(passes(vb_algebroid_check({g, q})));
  EXPECT_EQ(vb_algebroid_check(tangent_two()).find("vb.degree")->verdict, Verdict::Fail);
}

TEST(SpecialDegreesProperty, RandomDegreeTwoIsVB) {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    CheckList c = vb_algebroid_check(random_algebroid(rng, 2));
    EXPECT_EQ(c.find("vb.euler.first")->verdict, Verdict::Pass);
    EXPECT_EQ(c.find("vb.euler.second")->verdict, Verdict::Pass);
  }
}
