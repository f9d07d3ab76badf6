#include "locov/sgd.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace locov;

namespace {

Vec s1(double x) { return Vec::Constant(1, x); }

LossFamily pm_one() { return quadratic_centers({s1(-1.0), s1(1.0)}, 1.0); }

Dataset pm_data() { return Dataset::from_samples({Sample{s1(-1.0)}, Sample{s1(1.0)}}); }

}  // namespace

TEST_SUITE("sgd") {

TEST_CASE("one projected step") {
  const auto map = UpdateMap::sgd(pm_one(), 0.5);
  CHECK(map.projects());
  CHECK(*map.eta() == 0.5);
  CHECK(sgd_step(map, s1(0.0), 1, pm_data())[0] == doctest::Approx(0.5));
  // -1 - 3(-1 - 1) = 5 leaves the ball and is projected back to 1.
  const auto big = UpdateMap::sgd(pm_one(), 3.0);
  CHECK(sgd_step(big, s1(-1.0), 1, pm_data())[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(sgd_step(map, s1(0.0), 2, pm_data()), InvalidArgument);
  CHECK_THROWS_AS(UpdateMap::sgd(pm_one(), 0.0), InvalidArgument);
}

TEST_CASE("custom update maps run through the same machinery") {
  const auto map = UpdateMap::custom("halve", ConvexDomain::whole_space(1),
                                     [](const Vec& t, const Sample& z) -> Vec { return 0.5 * (t + z.x); });
  CHECK_FALSE(map.eta().has_value());
  SGDConfig cfg;
  cfg.init = s1(0.0);
  cfg.steps = 3;
  cfg.index_source = IndexSource::explicit_sequence({1, 1, 1});
  const Trajectory tr = run_trajectory(map, cfg, pm_data());
  CHECK(tr.final_point()[0] == doctest::Approx(0.875));
}

TEST_CASE("mini-batch averages the raw maps then projects once") {
  const auto map = UpdateMap::sgd(pm_one(), 0.5);
  const Dataset data = pm_data();
  const Vec out = map.apply_batch(s1(0.2), {&data.samples[0], &data.samples[1]});
  CHECK(out[0] == doctest::Approx(0.1));
}

TEST_CASE("trajectories are reproducible and explicit indices win") {
  const auto map = UpdateMap::sgd(pm_one(), 0.3);
  SGDConfig cfg;
  cfg.init = s1(0.7);
  cfg.steps = 50;
  cfg.seed = 42;
  const Trajectory a = run_trajectory(map, cfg, pm_data());
  const Trajectory b = run_trajectory(map, cfg, pm_data());
  CHECK(a.indices == b.indices);
  CHECK(a.indices_digest() == b.indices_digest());
  CHECK(a.final_point() == b.final_point());
  CHECK(a.steps() == 50);
  for (const auto& p : a.points) CHECK(map.domain().contains(p, 1e-12));

  SGDConfig replay = cfg;
  replay.index_source = IndexSource::explicit_sequence(a.indices);
  replay.index_source.scheme = Sampling::Shuffle;
  CHECK(run_trajectory(map, replay, pm_data()).final_point() == a.final_point());
  CHECK(run_endpoint(map, cfg.init, a.indices, pm_data()) == a.final_point());
}

TEST_CASE("sampling schemes") {
  SGDConfig cfg;
  cfg.init = s1(0.0);
  cfg.steps = 10;
  cfg.index_source = IndexSource::of(Sampling::WithoutReplacement);
  const auto idx = realize_indices(cfg, 10);
  CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 10);
  cfg.steps = 11;
  CHECK_THROWS_AS(realize_indices(cfg, 10), InvalidArgument);
  cfg.index_source = IndexSource::of(Sampling::Shuffle);
  cfg.steps = 20;
  const auto sh = realize_indices(cfg, 10);
  CHECK(std::set<std::size_t>(sh.begin(), sh.begin() + 10).size() == 10);
  CHECK(std::set<std::size_t>(sh.begin() + 10, sh.end()).size() == 10);
  cfg.index_source = IndexSource::explicit_sequence({0, 1});
  CHECK_THROWS_AS(realize_indices(cfg, 10), InvalidArgument);
  CHECK(parse_sampling(to_string(Sampling::Shuffle)) == Sampling::Shuffle);
  CHECK_THROWS_AS(parse_sampling("bogus"), InvalidArgument);
}

TEST_CASE("contraction factor") {
  CHECK(contraction_factor(1.0, 1.0, 0.5) == doctest::Approx(0.5));
  CHECK(contraction_factor(1.0, 1.0, 0.1) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(contraction_factor(1.0, 2.0, 0.5) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK_THROWS_AS(contraction_factor(1.0, 1.0, 2.0), InvalidArgument);
  CHECK_THROWS_AS(contraction_factor(2.0, 1.0, 0.5), InvalidArgument);
  for (int k = 1; k < 100; ++k) {
    const double g = contraction_factor(0.5, 2.0, k * 0.0099);
    CHECK(g < 1.0);
    CHECK(g >= 0.0);
  }
}

TEST_CASE("coupled iterates contract at the predicted rate") {
  const std::vector<Vec> centers = {Vec::Zero(2), Vec::Constant(2, 0.5)};
  const auto fam = quadratic_centers(centers, 1.0);
  const Dataset data = Dataset::from_samples({Sample{centers[0]}, Sample{centers[1]}});
  const auto map = UpdateMap::sgd(fam, 0.25, false);
  Vec a(2), b(2);
  a << 0.3, -0.2;
  b << -0.4, 0.1;
  const auto rep = coupled_contraction_ratio(map, a, b, {0, 1, 1, 0, 1}, data);
  REQUIRE(rep.ratios.size() == 5);
  for (double r : rep.ratios) CHECK(r == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_FALSE(rep.coalesced);
  CHECK_THROWS_AS(coupled_contraction_ratio(map, a, a, {0}, data), InvalidArgument);
}

TEST_CASE("coupling flags coalescence at eta = 1") {
  const auto map = UpdateMap::sgd(pm_one(), 1.0);
  const auto rep = coupled_contraction_ratio(map, s1(0.2), s1(-0.3), {1, 0, 0}, pm_data());
  CHECK(rep.coalesced);
  REQUIRE(rep.coalesced_at.has_value());
  CHECK(*rep.coalesced_at == 0);
  for (double r : rep.ratios) CHECK(r == 0.0);
}

TEST_CASE("measured ratios never exceed the contraction factor") {
  Rng rng = make_rng(21);
  std::vector<Vec> centers;
  std::vector<Sample> samples;
  for (int k = 0; k < 8; ++k) {
    centers.push_back(uniform_in_ball(rng, 3, 1.0));
    samples.push_back(Sample{centers.back()});
  }
  const auto fam = quadratic_centers(centers, 1.0);
  const Dataset data = Dataset::from_samples(samples);
  for (double eta : {0.3, 1.7}) {
    CAPTURE(eta);
    const double gamma = contraction_factor(1.0, 1.0, eta);
    const auto map = UpdateMap::sgd(fam, eta);
    double worst = 0.0;
    for (int pair = 0; pair < 1000; ++pair) {
      const Vec a = uniform_in_domain(rng, map.domain()), b = uniform_in_domain(rng, map.domain());
      std::vector<std::size_t> idx(100);
      for (auto& i : idx) i = std::uniform_int_distribution<std::size_t>(0, data.size() - 1)(rng);
      const auto rep = coupled_contraction_ratio(map, a, b, idx, data);
      // Once the pair is within rounding of itself the ratio carries no information.
      for (std::size_t s = 0; s < rep.ratios.size(); ++s)
        if (rep.distances[s] >= 1e-6 * rep.scale) worst = std::max(worst, rep.ratios[s]);
    }
    CHECK(worst <= gamma + 1e-9);
  }
}

TEST_CASE("mini-batch maps contract and projected paths stay in the domain") {
  Rng rng = make_rng(22);
  std::vector<Sample> samples;
  for (int k = 0; k < 6; ++k) samples.push_back(Sample{uniform_in_ball(rng, 2, 1.0)});
  std::vector<Vec> centers;
  for (const auto& z : samples) centers.push_back(z.x);
  const auto fam = quadratic_centers(centers, 1.0);
  const Dataset data = Dataset::from_samples(samples);
  const auto map = UpdateMap::sgd(fam, 0.4);
  const double gamma = contraction_factor(1.0, 1.0, 0.4);
  double worst = 0.0;
  for (int pair = 0; pair < 200; ++pair) {
    const Vec a = 3.0 * standard_normal(rng, 2), b = uniform_in_domain(rng, map.domain());
    std::vector<std::size_t> idx(3 * 20);
    for (auto& i : idx) i = std::uniform_int_distribution<std::size_t>(0, data.size() - 1)(rng);
    const auto rep = coupled_contraction_ratio(map, map.domain().project(a), b, idx, data, 3);
    for (std::size_t s = 0; s < rep.ratios.size(); ++s)
      if (rep.distances[s] >= 1e-6 * rep.scale) worst = std::max(worst, rep.ratios[s]);

    SGDConfig cfg;
    cfg.init = a;
    cfg.steps = 20;
    cfg.batch_size = 3;
    cfg.seed = static_cast<std::uint64_t>(pair);
    const Trajectory tr = run_trajectory(map, cfg, data);
    for (std::size_t s = 1; s < tr.points.size(); ++s) CHECK(map.domain().contains(tr.points[s], 1e-12));
  }
  CHECK(worst <= gamma + 1e-9);
}

}  // TEST_SUITE
