#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "asdflow/convex_function.hpp"
#include "asdflow/errors.hpp"
#include "asdflow/sampling.hpp"
#include "oracles.hpp"

using namespace asdflow;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

LinearMap mat2(double a, double b, double c, double d) {
  LinearMap m(2, 2);
  m << a, b, c, d;
  return m;
}

// A small zoo of catalog nodes on R^2 with points interior to every domain.
std::vector<ConvexFunction> catalog_zoo() {
  std::vector<ConvexFunction> zoo;
  zoo.push_back(norm_squared(2));
  zoo.push_back(quadratic(mat2(2, 0.5, 0.5, 1), vec({1, -1}), 0.3));
  zoo.push_back(abs_sum(vec({1, 2})));
  zoo.push_back(indicator_box(vec({-1, -1}), vec({1, 1})));
  zoo.push_back(linear_tilt(norm_squared(2, 2.0), vec({0.5, -0.25})));
  zoo.push_back(stack(abs_sum(1, 1.0), norm_squared(1)));
  zoo.push_back(moreau_envelope(abs_sum(2, 1.0), 0.5));
  zoo.push_back(sum_with_quadratic(abs_sum(2, 1.0), mat2(1, 0, 0, 2)));
  return zoo;
}

// A finite point of dom f for each zoo member.
Vector domain_point(const ConvexFunction& f, NormalSampler& rng) {
  Vector x = rng.vector(f.dim());
  if (!eval(f, x).finite()) x = 0.5 * x / std::max(1.0, x.lpNorm<Eigen::Infinity>());
  REQUIRE(eval(f, x).finite());
  return x;
}

}  // namespace

TEST_CASE("eval: closed-form values") {
  CHECK(eval(norm_squared(2), vec({3, 4})).value() == doctest::Approx(12.5));
  CHECK_FALSE(eval(indicator_box(vec({0, 0}), vec({1, 1})), vec({2, 0})).finite());
  CHECK(eval(indicator_box(vec({0, 0}), vec({1, 1})), vec({0.5, 1})).value() == 0.0);
  CHECK(eval(abs_sum(2, 1.0), vec({-2, 1})).value() == doctest::Approx(3.0));
  CHECK_THROWS_AS(eval(norm_squared(2), vec({1})), DimensionError);
}

TEST_CASE("prox: closed forms vs dense-grid minimization oracle") {
  CHECK((prox(norm_squared(2), vec({1, 1}), 1.0) - vec({0.5, 0.5})).norm() < 1e-14);

  Vector soft = prox(abs_sum(1, 1.0), vec({2}), 0.5);
  CHECK(soft[0] == doctest::Approx(1.5).epsilon(1e-12));
  double grid = oracles::grid_prox_1d([](double z) { return std::abs(z); }, 2.0, 0.5);
  CHECK(std::abs(soft[0] - grid) < 2e-4);

  Vector proj = prox(indicator_box(vec({0}), vec({1})), vec({1.7}), 3.0);
  CHECK(proj[0] == doctest::Approx(1.0));
  CHECK((proj - prox(indicator_box(vec({0}), vec({1})), vec({1.7}), 0.01)).norm() == 0.0);
}

TEST_CASE("conj_eval: closed forms vs dense-grid sup oracle") {
  CHECK(conj_eval(norm_squared(2), vec({1, 2})).value() == doctest::Approx(2.5));

  ExtReal cq = conj_eval(quadratic(mat2(2, 0, 0, 2)), vec({2, 0}));
  CHECK(cq.value() == doctest::Approx(1.0).epsilon(1e-10));
  double grid2 = oracles::grid_conjugate_2d(
      [](double x, double y) { return x * x + y * y; }, 2.0, 0.0);
  CHECK(std::abs(cq.value() - grid2) < 1e-4);

  ConvexFunction a = abs_sum(1, 1.0);
  CHECK(conj_eval(a, vec({0.5})).value() == doctest::Approx(0.0));
  CHECK_FALSE(conj_eval(a, vec({1.5})).finite());
  double grid1 = oracles::grid_conjugate_1d([](double z) { return std::abs(z); }, 0.5);
  CHECK(std::abs(conj_eval(a, vec({0.5})).value() - grid1) < 1e-4);
}

TEST_CASE("conj_eval: out-of-range momentum for singular quadratic") {
  // f(x) = x1^2/?: Q = diag(2, 0); conjugate finite only when p2 = 0.
  ConvexFunction f = quadratic(mat2(2, 0, 0, 0));
  CHECK(conj_eval(f, vec({2, 0})).value() == doctest::Approx(1.0));
  CHECK_FALSE(conj_eval(f, vec({0, 1})).finite());
}

TEST_CASE("subgrad: gradients, minimal-norm selection, FD oracle") {
  CHECK((subgrad(norm_squared(2), vec({1, -2})) - vec({1, -2})).norm() < 1e-8);
  CHECK(subgrad(abs_sum(1, 1.0), vec({0})).norm() < 1e-8);

  ConvexFunction q = quadratic(mat2(2, 0, 0, 1), vec({1, 0}));
  Vector g = subgrad(q, vec({1, 1}));
  CHECK((g - vec({3, 1})).norm() < 1e-7);
  CHECK((g - oracles::fd_gradient(q, vec({1, 1}), 1e-5)).norm() < 1e-6);

  CHECK_THROWS_AS(subgrad(indicator_box(vec({0}), vec({1})), vec({1.7})), DomainError);
  // Interior and boundary points of a box both have nonempty subdifferentials;
  // minimal-norm selection returns zero at both.
  CHECK(subgrad(indicator_box(vec({0}), vec({1})), vec({1.0})).norm() < 1e-8);
}

TEST_CASE("moreau_eval: envelope values vs grid oracle") {
  CHECK(moreau_eval(norm_squared(2), vec({1, 0}), 1.0) == doctest::Approx(0.25));
  CHECK(moreau_eval(indicator_box(vec({0}), vec({1})), vec({2}), 1.0) ==
        doctest::Approx(0.5));

  double huber = moreau_eval(abs_sum(1, 1.0), vec({0.3}), 1.0);
  CHECK(huber == doctest::Approx(0.045));
  double grid = oracles::grid_moreau_1d([](double z) { return std::abs(z); }, 0.3, 1.0);
  CHECK(std::abs(huber - grid) < 1e-7);
}

TEST_CASE("fenchel_gap: certificate values") {
  ConvexFunction f = norm_squared(2);
  CHECK(fenchel_gap(f, vec({1, 1}), vec({1, 1})).value() == doctest::Approx(0.0));
  CHECK(fenchel_gap(f, vec({1, 0}), vec({0, 1})).value() == doctest::Approx(1.0));
  CHECK(fenchel_gap(abs_sum(1, 1.0), vec({2}), vec({1})).value() == doctest::Approx(0.0));
  CHECK_FALSE(fenchel_gap(abs_sum(1, 1.0), vec({2}), vec({1.5})).finite());
}

TEST_CASE("split_operator: examples and skewness invariant") {
  auto [s1, a1] = split_operator(mat2(0, 1, -1, 0));
  CHECK(s1.norm() == 0.0);
  CHECK((a1 - mat2(0, 1, -1, 0)).norm() == 0.0);

  auto [s2, a2] = split_operator(mat2(1, 0, 0, 2));
  CHECK((s2 - mat2(1, 0, 0, 2)).norm() == 0.0);
  CHECK(a2.norm() == 0.0);

  auto [s3, a3] = split_operator(mat2(1, 2, 0, 1));
  CHECK((s3 - mat2(1, 1, 1, 1)).norm() == 0.0);
  CHECK((a3 - mat2(0, 1, -1, 0)).norm() == 0.0);
  CHECK(is_skew(a3));
  CHECK(is_positive(s2));
  CHECK_FALSE(is_positive(mat2(-1, 0, 0, 1)));

  NormalSampler rng(kDefaultSeed);
  for (int i = 0; i < 50; ++i) {
    Vector x = rng.vector(2);
    CHECK(std::abs(x.dot(a3 * x)) <= 1e-12 * x.squaredNorm());
  }
}

TEST_CASE("Fenchel-Young inequality across the catalog") {
  NormalSampler rng(kDefaultSeed);
  for (const ConvexFunction& f : catalog_zoo()) {
    for (int i = 0; i < 40; ++i) {
      Vector x = domain_point(f, rng);
      Vector p = rng.vector(f.dim());
      ExtReal lhs = eval(f, x) + conj_eval(f, p);
      if (!lhs.finite()) continue;
      CHECK(lhs.value() - x.dot(p) >= -1e-9);
    }
  }
}

TEST_CASE("biconjugacy on smooth strongly convex nodes") {
  NormalSampler rng(kDefaultSeed);
  std::vector<ConvexFunction> smooth{norm_squared(2, 1.5),
                                     quadratic(mat2(2, 0.5, 0.5, 1), vec({1, -1}), 0.3)};
  for (const ConvexFunction& f : smooth) {
    std::optional<ConvexFunction> fs = conjugate(f);
    REQUIRE(fs.has_value());
    std::optional<ConvexFunction> fss = conjugate(*fs);
    REQUIRE(fss.has_value());
    for (int i = 0; i < 30; ++i) {
      Vector x = rng.vector(2);
      CHECK(std::abs(eval(*fss, x).value() - eval(f, x).value()) <= 1e-6);
    }
  }
}

TEST_CASE("symbolic conjugates match the direct sup on samples") {
  NormalSampler rng(kDefaultSeed);
  for (const ConvexFunction& f : catalog_zoo()) {
    std::optional<ConvexFunction> fs = conjugate(f);
    if (!fs.has_value()) continue;
    for (int i = 0; i < 25; ++i) {
      Vector p = 0.8 * rng.vector(f.dim());
      ExtReal direct = conj_eval(f, p);
      ExtReal symbolic = eval(*fs, p);
      CHECK(direct.finite() == symbolic.finite());
      if (direct.finite()) CHECK(std::abs(direct.value() - symbolic.value()) <= 1e-6);
    }
  }
}

TEST_CASE("prox optimality certificate") {
  NormalSampler rng(kDefaultSeed);
  for (const ConvexFunction& f : catalog_zoo()) {
    for (double lambda : {0.2, 1.0, 5.0}) {
      for (int i = 0; i < 10; ++i) {
        Vector x = rng.vector(f.dim());
        Vector z = prox(f, x, lambda);
        Vector g = (x - z) / lambda;
        CHECK(fenchel_gap(f, z, g).value() <= 1e-7);
      }
    }
  }
}

TEST_CASE("prox is firmly nonexpansive on sampled pairs") {
  NormalSampler rng(kDefaultSeed);
  for (const ConvexFunction& f : catalog_zoo()) {
    for (int i = 0; i < 15; ++i) {
      Vector x = rng.vector(f.dim());
      Vector y = rng.vector(f.dim());
      double lambda = 0.3 + i * 0.1;
      Vector px = prox(f, x, lambda);
      Vector py = prox(f, y, lambda);
      CHECK((px - py).norm() <= (x - y).norm() + 1e-12);
    }
  }
}

TEST_CASE("Moreau envelope is monotone in lambda") {
  NormalSampler rng(kDefaultSeed);
  for (const ConvexFunction& f : catalog_zoo()) {
    for (int i = 0; i < 10; ++i) {
      Vector x = rng.vector(f.dim());
      double a = moreau_eval(f, x, 0.1);
      double b = moreau_eval(f, x, 1.0);
      double c = moreau_eval(f, x, 10.0);
      CHECK(a >= b - 1e-12);
      CHECK(b >= c - 1e-12);
      ExtReal fx = eval(f, x);
      if (fx.finite()) CHECK(a <= fx.value() + 1e-12);
    }
  }
}

TEST_CASE("subgrad vs finite differences decays at first order") {
  ConvexFunction f = quadratic(mat2(2, 0.5, 0.5, 1), vec({1, -1}), 0.3);
  Vector x = vec({0.7, -0.4});
  Vector g = subgrad(f, x);
  double e3 = (g - oracles::fd_gradient(f, x, 1e-3)).norm();
  double e4 = (g - oracles::fd_gradient(f, x, 1e-4)).norm();
  CHECK(e3 <= 1e-2);
  CHECK(e4 <= 1e-3);
  // Smooth non-quadratic node: the Moreau envelope of abs_sum (Huber).
  ConvexFunction h = moreau_envelope(abs_sum(2, 1.0), 0.5);
  Vector y = vec({0.2, -1.4});
  Vector gh = subgrad(h, y);
  CHECK((gh - oracles::fd_gradient(h, y, 1e-4)).norm() <= 1e-3);
}

TEST_CASE("grad / conj_grad agree with subgrad and invert each other") {
  NormalSampler rng(kDefaultSeed);
  ConvexFunction f = quadratic(mat2(2, 0.5, 0.5, 1), vec({1, -1}));
  REQUIRE(is_smooth(f));
  REQUIRE(is_strongly_convex(f));
  REQUIRE(has_conj_grad(f));
  for (int i = 0; i < 20; ++i) {
    Vector x = rng.vector(2);
    Vector g = grad(f, x);
    CHECK((g - subgrad(f, x)).norm() <= 1e-7);
    CHECK((conj_grad(f, g) - x).norm() <= 1e-10);
  }
  CHECK_FALSE(is_smooth(abs_sum(2, 1.0)));
  CHECK_FALSE(is_strongly_convex(abs_sum(2, 1.0)));
}

TEST_CASE("moreau envelope node evaluates to moreau_eval of its base") {
  NormalSampler rng(kDefaultSeed);
  ConvexFunction base = abs_sum(2, 1.0);
  ConvexFunction env = moreau_envelope(base, 0.7);
  for (int i = 0; i < 20; ++i) {
    Vector x = rng.vector(2);
    CHECK(eval(env, x).value() == doctest::Approx(moreau_eval(base, x, 0.7)));
  }
}

TEST_CASE("prox of a Moreau envelope matches grid oracle") {
  // 1-D: e_lambda|.| is Huber; prox checked against dense-grid minimization.
  ConvexFunction env = moreau_envelope(abs_sum(1, 1.0), 0.5);
  for (double x0 : {0.2, 0.6, 2.5, -1.3}) {
    Vector z = prox(env, vec({x0}), 0.8);
    double zg = oracles::grid_prox_1d(
        [](double z1) {
          double a = std::abs(z1);
          return a <= 0.5 ? z1 * z1 / (2 * 0.5) : a - 0.25;
        },
        x0, 0.8, 10.0, 2000001);
    CHECK(std::abs(z[0] - zg) < 5e-5);
  }
}

TEST_CASE("sum_with_quadratic: values, prox, and conjugate") {
  NormalSampler rng(kDefaultSeed);
  LinearMap s = mat2(1, 0, 0, 2);
  ConvexFunction f = sum_with_quadratic(abs_sum(2, 1.0), s);
  for (int i = 0; i < 10; ++i) {
    Vector x = rng.vector(2);
    double expect = std::abs(x[0]) + std::abs(x[1]) + 0.5 * x.dot(s * x);
    CHECK(eval(f, x).value() == doctest::Approx(expect));
    Vector z = prox(f, x, 0.7);
    CHECK(fenchel_gap(f, z, (x - z) / 0.7).value() <= 1e-7);
    // Direct conjugate vs the Fenchel-Young equality at p = subgrad.
    Vector g = subgrad(f, x);
    CHECK(fenchel_gap(f, x, g).value() <= 1e-5);
  }
  // Quadratic base simplifies to a plain quadratic (exact conjugate algebra).
  ConvexFunction fq = sum_with_quadratic(norm_squared(2), s);
  REQUIRE(conjugate(fq).has_value());
  Vector p = vec({1.0, -2.0});
  CHECK(std::abs(eval(*conjugate(fq), p).value() - conj_eval(fq, p).value()) <= 1e-8);
  // Only the symmetric part of the supplied operator enters the value.
  ConvexFunction fskew = sum_with_quadratic(norm_squared(2), mat2(0, 1, -1, 0));
  CHECK(eval(fskew, vec({1, 2})).value() == doctest::Approx(2.5));
}

TEST_CASE("separable_sum validation and slicing") {
  ConvexFunction f = stack(abs_sum(1, 1.0), norm_squared(2));
  CHECK(f.dim() == 3);
  CHECK(eval(f, vec({-2, 1, 1})).value() == doctest::Approx(3.0));
  Vector z = prox(f, vec({2, 1, 1}), 0.5);
  CHECK(z[0] == doctest::Approx(1.5));
  CHECK(z[1] == doctest::Approx(1.0 / 1.5));
  // Overlapping / gapped slices are rejected.
  CHECK_THROWS_AS(separable_sum({{norm_squared(2), 0}, {norm_squared(2), 1}}),
                  DimensionError);
}

TEST_CASE("factory validation: PSD, box bounds, weights") {
  CHECK_THROWS_AS(quadratic(mat2(-1, 0, 0, 1)), DomainError);
  // A non-symmetric Q is replaced by its symmetric part (the form is blind to
  // the skew component).
  ConvexFunction qs = quadratic(mat2(1, 1, 0, 1));
  CHECK(eval(qs, vec({1, 1})).value() ==
        eval(quadratic(mat2(1, 0.5, 0.5, 1)), vec({1, 1})).value());
  CHECK_THROWS_AS(indicator_box(vec({1}), vec({0})), DomainError);
  CHECK_THROWS_AS(abs_sum(vec({-1})), DomainError);
  CHECK_THROWS_AS(norm_squared(2, -1.0), DomainError);
  CHECK_THROWS_AS(moreau_envelope(abs_sum(1, 1.0), 0.0), DomainError);
}

TEST_CASE("ExtReal rejects NaN and -infinity") {
  CHECK_THROWS_AS(ExtReal(std::nan("")), Error);
  CHECK_THROWS_AS(ExtReal(-std::numeric_limits<double>::infinity()), Error);
  ExtReal inf = ExtReal::infinity();
  CHECK_FALSE(inf.finite());
  CHECK((inf + 1.0).finite() == false);
  CHECK_THROWS_AS(inf.value(), Error);
}

TEST_CASE("batched variants agree with per-column calls") {
  NormalSampler rng(kDefaultSeed);
  for (const ConvexFunction& f : catalog_zoo()) {
    Matrix xs(f.dim(), 7);
    for (int c = 0; c < 7; ++c) xs.col(c) = 0.6 * rng.vector(f.dim());
    bool finite = true;
    double total = eval_sum(f, xs, &finite);
    double expect = 0.0;
    bool efinite = true;
    for (int c = 0; c < 7; ++c) {
      ExtReal v = eval(f, xs.col(c));
      if (!v.finite()) efinite = false;
      else expect += v.value();
    }
    CHECK(finite == efinite);
    if (finite) CHECK(total == doctest::Approx(expect).epsilon(1e-10));

    Matrix pz = prox_batch(f, xs, 0.4);
    for (int c = 0; c < 7; ++c)
      CHECK((pz.col(c) - prox(f, xs.col(c), 0.4)).norm() <= 1e-9);

    if (is_smooth(f)) {
      Matrix gz = grad_batch(f, xs);
      for (int c = 0; c < 7; ++c)
        CHECK((gz.col(c) - grad(f, xs.col(c))).norm() <= 1e-9);
    }
    if (has_conj_grad(f)) {
      Matrix cz = conj_grad_batch(f, xs);
      for (int c = 0; c < 7; ++c)
        CHECK((cz.col(c) - conj_grad(f, xs.col(c))).norm() <= 1e-9);
    }
    bool cfinite = true;
    double ctotal = conj_eval_sum(f, xs, &cfinite);
    double cexpect = 0.0;
    bool cef = true;
    for (int c = 0; c < 7; ++c) {
      ExtReal v = conj_eval(f, xs.col(c));
      if (!v.finite()) cef = false;
      else cexpect += v.value();
    }
    CHECK(cfinite == cef);
    if (cfinite) CHECK(ctotal == doctest::Approx(cexpect).epsilon(1e-8));
  }
}
