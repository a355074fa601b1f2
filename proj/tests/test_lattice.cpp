#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sticky/ctmc.hpp"
#include "sticky/lattice.hpp"
#include "sticky/rng.hpp"

using namespace sticky;

TEST_CASE("inner product matches the weighted definition") {
  CHECK(inner_product({1, 1, 1, 1}, {1, 1, 1, 1}) == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(inner_product({1, 0, 0, 0}, {0, 1, 1, 1}) == 0.0);
  DensityProfile f(6, 0.0);
  f[0] = 0.5;
  CHECK(inner_product(f, f) == doctest::Approx(1.0).epsilon(1e-12));  // (1/eps) 0.25, N = 4
  CHECK_THROWS_AS(inner_product({0, 0, 0, 0}, {0, 0, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("inner product is symmetric, bilinear, positive definite") {
  auto rng = make_stream(7, 0);
  const int N = 9;
  for (int rep = 0; rep < 50; ++rep) {
    DensityProfile f(N + 2), g(N + 2), h(N + 2);
    for (int x = 0; x < N + 2; ++x) {
      f[x] = uniform01(rng);
      g[x] = uniform01(rng);
      h[x] = uniform01(rng);
    }
    const double a = uniform01(rng), b = uniform01(rng);
    CHECK(inner_product(f, g) == doctest::Approx(inner_product(g, f)).epsilon(1e-12));
    DensityProfile lin(N + 2);
    for (int x = 0; x < N + 2; ++x) lin[x] = a * f[x] + b * g[x];
    CHECK(inner_product(lin, h) ==
          doctest::Approx(a * inner_product(f, h) + b * inner_product(g, h)).epsilon(1e-12));
    CHECK(inner_product(f, f) > 0.0);
  }
  CHECK(inner_product(DensityProfile(N + 2, 0.0), DensityProfile(N + 2, 0.0)) == 0.0);
}

TEST_CASE("total mass examples and the ones-profile identity") {
  CHECK(total_mass({0.5, 0.25, 0.75, 1.0}) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(total_mass({0, 1, 1, 1, 0}) == doctest::Approx(3.0).epsilon(1e-12));
  for (int N : {2, 5, 17}) {
    const double c = 0.37;
    DensityProfile p(N + 2, c);
    CHECK(total_mass(p) == doctest::Approx(3.0 * c * N).epsilon(1e-12));
    auto rng = make_stream(11, N);
    for (int x = 0; x < N + 2; ++x) p[x] = uniform01(rng);
    CHECK(total_mass(p) ==
          doctest::Approx(inner_product(DensityProfile(N + 2, 1.0), p)).epsilon(1e-12));
  }
}

TEST_CASE("sticky measure: normalization, N=2 values, detailed balance") {
  const DensityProfile mu2 = sticky_measure(LatticeSpec(2));
  CHECK(mu2[0] == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(mu2[1] == doctest::Approx(1.0 / 6).epsilon(1e-14));
  CHECK(mu2[2] == doctest::Approx(1.0 / 6).epsilon(1e-14));
  CHECK(mu2[3] == doctest::Approx(1.0 / 3).epsilon(1e-14));

  for (int N : {2, 3, 10, 50}) {
    const LatticeSpec spec(N);
    const DensityProfile mu = sticky_measure(spec);
    double s = 0.0;
    for (double m : mu) s += m;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));

    // detailed balance mu(x) c(x,y) = mu(y) c(y,x) on every bond
    const GeneratorMatrix gen = build_sticky_generator(spec);
    for (int x = 0; x <= N + 1; ++x)
      for (int y = 0; y <= N + 1; ++y) {
        if (x == y) continue;
        CHECK(mu[x] * gen.Q(x, y) == doctest::Approx(mu[y] * gen.Q(y, x)).epsilon(1e-12));
      }
  }
}

TEST_CASE("discretize_initial places u0 and v0 on the extended lattice") {
  const LatticeSpec spec(4);
  const InitialData init{[](double r) { return r; }, 0.25, 0.75};
  const DensityProfile p = discretize_initial(spec, init);
  CHECK(p[0] == 0.25);
  CHECK(p[2] == doctest::Approx(0.5));
  CHECK(p[4] == doctest::Approx(1.0));
  CHECK(p[5] == 0.75);
  CHECK_THROWS_AS(discretize_initial(spec, InitialData{[](double) { return 2.0; }, 0, 0}),
                  std::invalid_argument);
}
