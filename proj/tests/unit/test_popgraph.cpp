#include "doctest.h"

#include <cmath>

#include "ibg/error.hpp"
#include "ibg/popgraph.hpp"
#include "ibg/rng.hpp"

using namespace ibg;

namespace {

Demographics demo(int site, int sex, double age, int hand) {
  Demographics d;
  d.site = site;
  d.sex = sex;
  d.age = age;
  d.handedness = hand;
  return d;
}

Tensor reps_from(const std::vector<std::vector<double>>& rows) {
  Tensor t(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) t(i, j) = rows[i][j];
  }
  return t;
}

}  // namespace

TEST_CASE("categorical compatibility is equality") {
  CompatibilityConfig cc;
  const Demographics a = demo(2, 1, 10.0, 0);
  const Demographics b = demo(2, 0, 14.0, 0);
  CHECK(demographic_compatibility(a, b, Relation::Site, cc) == 1.0);
  CHECK(demographic_compatibility(a, b, Relation::Sex, cc) == 0.0);
  CHECK(demographic_compatibility(a, b, Relation::Hand, cc) == 1.0);
}

TEST_CASE("age gate: window threshold and gaussian kernel") {
  CompatibilityConfig cc;  // tau 2, sigma 1
  SUBCASE("outside the window is zero") {
    CHECK(demographic_compatibility(demo(0, 0, 10.0, 0), demo(0, 0, 13.0, 0), Relation::Age,
                                    cc) == 0.0);
  }
  SUBCASE("zero gap is one") {
    CHECK(demographic_compatibility(demo(0, 0, 10.0, 0), demo(0, 0, 10.0, 0), Relation::Age,
                                    cc) == 1.0);
  }
  SUBCASE("kernel value inside the window") {
    const double got =
        demographic_compatibility(demo(0, 0, 10.0, 0), demo(0, 0, 11.0, 0), Relation::Age, cc);
    CHECK(got == doctest::Approx(std::exp(-0.5)));
  }
}

TEST_CASE("missing fields raise") {
  CompatibilityConfig cc;
  Demographics a = demo(0, 0, 10.0, 0);
  Demographics b = demo(0, 0, 10.0, 0);
  b.site.reset();
  CHECK_THROWS_AS(demographic_compatibility(a, b, Relation::Site, cc), ValidationError);
}

TEST_CASE("biomarker similarity kernel") {
  const Tensor a = Tensor::row({1.0, 2.0});
  const Tensor b = Tensor::row({1.0, 2.0});
  SUBCASE("identical vectors give 1") {
    CHECK(biomarker_similarity(a, b, 0.7, DistanceMetric::Euclidean) == doctest::Approx(1.0));
  }
  SUBCASE("distance equal to the bandwidth gives exp(-1/2)") {
    const Tensor c = Tensor::row({1.0, 2.5});
    CHECK(biomarker_similarity(a, c, 0.5, DistanceMetric::Euclidean) ==
          doctest::Approx(std::exp(-0.5)));
  }
  SUBCASE("symmetric in arguments") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      Tensor x(1, 4), y(1, 4);
      for (std::size_t j = 0; j < 4; ++j) {
        x[j] = rng.normal();
        y[j] = rng.normal();
      }
      CHECK(biomarker_similarity(x, y, 1.1, DistanceMetric::Euclidean) ==
            biomarker_similarity(y, x, 1.1, DistanceMetric::Euclidean));
    }
  }
  SUBCASE("sigma must be positive") {
    CHECK_THROWS_AS(biomarker_similarity(a, b, 0.0, DistanceMetric::Euclidean), ValidationError);
  }
}

TEST_CASE("two subjects at different sites yield a zero site graph") {
  const Tensor reps = reps_from({{0.0, 0.0}, {1.0, 1.0}});
  const std::vector<Demographics> demos = {demo(0, 0, 10.0, 0), demo(1, 0, 10.0, 0)};
  PopGraphConfig cfg;
  const MetaPathGraphSet g = build_metapath_graphs(reps, demos, {"a", "b"}, cfg);
  CHECK(g.adjacencies[0](0, 1) == 0.0);
  CHECK(g.adjacencies[0](1, 0) == 0.0);
  CHECK(g.all_zero[0]);
}

TEST_CASE("same sex and identical biomarkers give weight one") {
  const Tensor reps = reps_from({{0.5, -0.5}, {0.5, -0.5}, {2.0, 1.0}});
  const std::vector<Demographics> demos = {demo(0, 1, 10.0, 0), demo(1, 1, 25.0, 1),
                                           demo(2, 0, 40.0, 0)};
  PopGraphConfig cfg;
  const MetaPathGraphSet g = build_metapath_graphs(reps, demos, {"a", "b", "c"}, cfg);
  CHECK(g.adjacencies[1](0, 1) == doctest::Approx(1.0));
}

TEST_CASE("4-subject fixture matches the elementwise oracle") {
  const Tensor reps = reps_from({{0.0, 0.0}, {1.0, 0.0}, {0.0, 2.0}, {1.5, -0.5}});
  const std::vector<Demographics> demos = {demo(0, 0, 10.0, 0), demo(0, 1, 11.0, 0),
                                           demo(1, 0, 12.5, 1), demo(0, 0, 30.0, 0)};
  PopGraphConfig cfg;
  const MetaPathGraphSet g = build_metapath_graphs(reps, demos, {"a", "b", "c", "d"}, cfg);

  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(g.adjacencies[k](i, i) == 0.0);
      for (std::size_t j = 0; j < 4; ++j) {
        if (i == j) continue;
        double gate = 0.0;
        try {
          gate = demographic_compatibility(demos[i], demos[j], static_cast<Relation>(k),
                                           cfg.compat);
        } catch (const ValidationError&) {
          gate = 0.0;
        }
        Tensor ri(1, 2), rj(1, 2);
        for (std::size_t c = 0; c < 2; ++c) {
          ri[c] = reps(i, c);
          rj[c] = reps(j, c);
        }
        const double expected =
            gate == 0.0
                ? 0.0
                : gate * biomarker_similarity(ri, rj, g.sigma_sim, DistanceMetric::Euclidean);
        CHECK(std::abs(g.adjacencies[k](i, j) - expected) < 1e-12);
      }
    }
  }
}

TEST_CASE("sigma_sim defaults to the median pairwise distance") {
  const Tensor reps = reps_from({{0.0}, {1.0}, {3.0}});
  // pairwise distances: 1, 3, 2 -> median 2
  const std::vector<Demographics> demos = {demo(0, 0, 10.0, 0), demo(0, 0, 10.0, 0),
                                           demo(0, 0, 10.0, 0)};
  PopGraphConfig cfg;
  const MetaPathGraphSet g = build_metapath_graphs(reps, demos, {"a", "b", "c"}, cfg);
  CHECK(g.sigma_sim == doctest::Approx(2.0));
}

TEST_CASE("missing demographics contribute no edge") {
  const Tensor reps = reps_from({{0.0}, {0.0}});
  Demographics a = demo(0, 0, 10.0, 0);
  Demographics b = demo(0, 0, 10.0, 0);
  b.age.reset();
  PopGraphConfig cfg;
  const MetaPathGraphSet g = build_metapath_graphs(reps, {a, b}, {"a", "b"}, cfg);
  CHECK(g.adjacencies[2](0, 1) == 0.0);  // age relation gated out
  CHECK(g.adjacencies[0](0, 1) > 0.0);   // site relation unaffected
}

TEST_CASE("meta-path graph invariants hold on random cohorts") {
  Rng rng(2718);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 6 + rng.below(8);
    Tensor reps(n, 3);
    for (std::size_t i = 0; i < reps.size(); ++i) reps[i] = rng.normal();
    std::vector<Demographics> demos;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) {
      demos.push_back(demo(static_cast<int>(rng.below(3)), static_cast<int>(rng.below(2)),
                           rng.uniform(8.0, 20.0), static_cast<int>(rng.below(2))));
      ids.push_back("s" + std::to_string(i));
    }
    PopGraphConfig cfg;
    const MetaPathGraphSet g = build_metapath_graphs(reps, demos, ids, cfg);
    for (std::size_t k = 0; k < 4; ++k) {
      const Tensor& a = g.adjacencies[k];
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(a(i, i) == 0.0);
        for (std::size_t j = 0; j < n; ++j) {
          CHECK(a(i, j) == a(j, i));
          CHECK(a(i, j) >= 0.0);
          CHECK(a(i, j) <= 1.0);
          if (a(i, j) > 0.0) {
            // demographic gating is absolute
            CHECK(demographic_compatibility(demos[i], demos[j], static_cast<Relation>(k),
                                            cfg.compat) > 0.0);
          }
        }
      }
    }
  }
}

TEST_CASE("reordering subjects permutes all adjacencies consistently") {
  Rng rng(95);
  const std::size_t n = 7;
  Tensor reps(n, 2);
  for (std::size_t i = 0; i < reps.size(); ++i) reps[i] = rng.normal();
  std::vector<Demographics> demos;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    demos.push_back(demo(static_cast<int>(rng.below(2)), static_cast<int>(rng.below(2)),
                         rng.uniform(8.0, 16.0), 0));
    ids.push_back("s" + std::to_string(i));
  }

  const std::vector<std::size_t> perm = {3, 0, 6, 2, 5, 1, 4};
  Tensor reps_p(n, 2);
  std::vector<Demographics> demos_p(n);
  std::vector<std::string> ids_p(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 2; ++j) reps_p(i, j) = reps(perm[i], j);
    demos_p[i] = demos[perm[i]];
    ids_p[i] = ids[perm[i]];
  }

  PopGraphConfig cfg;
  const MetaPathGraphSet g = build_metapath_graphs(reps, demos, ids, cfg);
  const MetaPathGraphSet gp = build_metapath_graphs(reps_p, demos_p, ids_p, cfg);
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(gp.adjacencies[k](i, j) ==
              doctest::Approx(g.adjacencies[k](perm[i], perm[j])).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("increasing biomarker distance never increases the edge weight") {
  PopGraphConfig cfg;
  cfg.sigma_sim_override = 1.0;
  const std::vector<Demographics> demos = {demo(0, 0, 10.0, 0), demo(0, 0, 10.0, 0)};
  double prev = 2.0;
  for (double dist : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    const Tensor reps = reps_from({{0.0}, {dist}});
    const MetaPathGraphSet g = build_metapath_graphs(reps, demos, {"a", "b"}, cfg);
    CHECK(g.adjacencies[0](0, 1) <= prev);
    prev = g.adjacencies[0](0, 1);
  }
}
