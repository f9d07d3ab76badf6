#include "locov/core.hpp"

#include <doctest.h>

#include <vector>

#include <set>

using namespace locov;

TEST_SUITE("core") {

TEST_CASE("hoeffding tail matches the high-precision value") {
  CHECK(hoeffding_tail(100, 0.1, 1.0) == doctest::Approx(0.2706705664732254).epsilon(1e-14));
  CHECK(hoeffding_tail(1, 0.01, 1.0) == 1.0);
  CHECK(hoeffding_tail(10, 1e3, 1.0) < 1e-300);
  CHECK_THROWS_AS(hoeffding_tail(0, 0.1, 1.0), InvalidArgument);
  CHECK_THROWS_AS(hoeffding_tail(10, 0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(hoeffding_tail(10, 0.1, 0.0), InvalidArgument);
}

TEST_CASE("hoeffding tail is monotone in n and epsilon") {
  double prev = 2.0;
  for (long n = 1; n <= 400; n += 7) {
    const double v = hoeffding_tail(n, 0.1, 1.0);
    CHECK(v <= prev);
    prev = v;
  }
  prev = 2.0;
  for (int k = 1; k <= 50; ++k) {
    const double v = hoeffding_tail(50, 0.02 * k, 1.0);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("snapped ceiling ignores rounding noise") {
  CHECK(snapped_ceil(240.00000000001) == 240.0);
  CHECK(snapped_ceil(239.99999999999) == 240.0);
  CHECK(snapped_ceil(14.4658) == 15.0);
  CHECK(snapped_ceil(3.0) == 3.0);
  CHECK(snapped_ceil(-0.5) == 0.0);
}

TEST_CASE("ball projection") {
  const auto dom = ConvexDomain::ball(2, 1.0);
  Vec x(2);
  x << 3.0, 4.0;
  const Vec p = dom.project(x);
  CHECK(p[0] == doctest::Approx(0.6));
  CHECK(p[1] == doctest::Approx(0.8));
  Vec inside(2);
  inside << 0.1, -0.2;
  CHECK(dom.project(inside) == inside);
  CHECK(dom.contains(p, 1e-12));
  CHECK(*dom.enclosing_radius() == 1.0);

  Vec c(2);
  c << 2.0, 0.0;
  const auto shifted = ConvexDomain::ball(c, 0.5);
  CHECK(*shifted.enclosing_radius() == doctest::Approx(2.5));
}

TEST_CASE("box, product of balls and whole space") {
  Vec lo(2), hi(2), x(2);
  lo << 0.0, -1.0;
  hi << 4.0, 1.0;
  x << 5.0, -3.0;
  const auto box = ConvexDomain::box(lo, hi);
  const Vec p = box.project(x);
  CHECK(p[0] == 4.0);
  CHECK(p[1] == -1.0);
  CHECK(*box.enclosing_radius() == doctest::Approx(std::sqrt(17.0)));

  const auto prod = ConvexDomain::product_of_balls(2, 2, 1.0);
  Vec y(4);
  y << 2.0, 0.0, 0.3, 0.4;
  const Vec q = prod.project(y);
  CHECK(q[0] == doctest::Approx(1.0));
  CHECK(q[2] == doctest::Approx(0.3));
  CHECK(*prod.enclosing_radius() == doctest::Approx(std::sqrt(2.0)));

  const auto all = ConvexDomain::whole_space(3);
  CHECK_FALSE(all.enclosing_radius().has_value());
  const Vec z = Vec::Constant(3, 1e6);
  CHECK(all.project(z) == z);
}

TEST_CASE("projection is idempotent, nonexpansive and lands in the domain") {
  Rng rng = make_rng(11);
  Vec lo(6), hi(6);
  lo << -1.0, 0.0, -2.0, 0.5, -0.1, -3.0;
  hi << 1.0, 2.0, -1.0, 0.6, 0.1, 3.0;
  const std::vector<ConvexDomain> domains = {
      ConvexDomain::ball(6, 1.0), ConvexDomain::box(lo, hi),
      ConvexDomain::product_of_balls(3, 2, 0.7), ConvexDomain::whole_space(6)};
  for (const auto& dom : domains) {
    int bad = 0;
    for (int k = 0; k < 10000; ++k) {
      const Vec a = 3.0 * standard_normal(rng, 6);
      const Vec b = 3.0 * standard_normal(rng, 6);
      const Vec pa = dom.project(a);
      if ((dom.project(pa) - pa).norm() > 1e-9) ++bad;
      if ((pa - dom.project(b)).norm() > (a - b).norm() + 1e-9) ++bad;
      if (!dom.contains(pa, 1e-9)) ++bad;
    }
    CHECK(bad == 0);
  }
}

TEST_CASE("domain argument checks") {
  CHECK_THROWS_AS(ConvexDomain::ball(2, -1.0), InvalidArgument);
  Vec lo(1), hi(1);
  lo << 1.0;
  hi << 0.0;
  CHECK_THROWS_AS(ConvexDomain::box(lo, hi), InvalidArgument);
  CHECK_THROWS_AS(ConvexDomain::ball(2, 1.0).project(Vec::Zero(3)), DimensionMismatch);
}

TEST_CASE("streams are reproducible and distinct") {
  Rng a = make_rng(5, 1), b = make_rng(5, 1), c = make_rng(5, 2);
  const auto x = a(), y = b(), z = c();
  CHECK(x == y);
  CHECK(x != z);
  CHECK(stream_seed(1, 0) != stream_seed(0, 1));
}

TEST_CASE("uniform draws stay in their domain") {
  Rng rng = make_rng(3);
  const auto ball = ConvexDomain::ball(2, 0.5);
  for (int k = 0; k < 1000; ++k) CHECK(ball.contains(uniform_in_domain(rng, ball), 1e-12));
  Vec lo(1), hi(1);
  lo << 0.0;
  hi << 4.0;
  const auto box = ConvexDomain::box(lo, hi);
  for (int k = 0; k < 1000; ++k) CHECK(box.contains(uniform_in_domain(rng, box), 0.0));
}

TEST_CASE("parallel loop writes every slot once, regardless of threads") {
  for (unsigned threads : {1u, 2u, 4u}) {
    std::vector<int> slots(103, 0);
    parallel_for(slots.size(), threads, [&](std::size_t i) { slots[i] += static_cast<int>(i); });
    for (std::size_t i = 0; i < slots.size(); ++i) CHECK(slots[i] == static_cast<int>(i));
  }
  CHECK_THROWS_AS(parallel_for(10, 2, [](std::size_t i) {
                    if (i == 7) throw InvalidArgument("boom");
                  }),
                  InvalidArgument);
}

TEST_CASE("running stats") {
  RunningStats s;
  for (int k = 0; k < 10; ++k) s.add(0.3);
  CHECK(s.mean() == 0.3);
  CHECK(s.variance() == doctest::Approx(0.0));
  RunningStats t;
  for (double v : {1.0, 2.0, 3.0, 4.0}) t.add(v);
  CHECK(t.mean() == doctest::Approx(2.5));
  CHECK(t.variance() == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a("") == 14695981039346656037ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

}  // TEST_SUITE
