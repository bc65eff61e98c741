#include "doctest.h"

#include <cmath>

#include "ibg/connectome.hpp"
#include "ibg/error.hpp"
#include "ibg/rng.hpp"

using namespace ibg;

namespace {

TimeSeries make_ts(std::vector<std::vector<double>> rows, const std::string& id = "s0") {
  TimeSeries ts;
  ts.subject_id = id;
  ts.data = Tensor(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) ts.data(i, j) = rows[i][j];
  }
  return ts;
}

// brute-force two-pass covariance oracle
double corr_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (x[i] - mx) * (y[i] - my);
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
  }
  return cov / std::sqrt(vx * vy);
}

}  // namespace

TEST_CASE("perfectly linear rows correlate at +-1") {
  const Tensor c1 = pearson_fc(make_ts({{1, 2, 3}, {2, 4, 6}}));
  CHECK(c1(0, 1) == doctest::Approx(1.0));
  const Tensor c2 = pearson_fc(make_ts({{1, 2, 3}, {3, 2, 1}}));
  CHECK(c2(0, 1) == doctest::Approx(-1.0));
}

TEST_CASE("reference correlation 0.5 fixture") {
  const Tensor c = pearson_fc(make_ts({{1, 2, 3}, {1, 3, 2}}));
  CHECK(c(0, 1) == doctest::Approx(0.5));
  CHECK(c(0, 1) == doctest::Approx(corr_oracle({1, 2, 3}, {1, 3, 2})));
}

TEST_CASE("pearson matches the brute-force oracle on random matrices") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t v = 3 + rng.below(18);  // up to 20 ROIs
    const std::size_t t = 10 + rng.below(191);  // up to 200 samples
    TimeSeries ts;
    ts.subject_id = "r";
    ts.data = Tensor(v, t);
    for (std::size_t i = 0; i < ts.data.size(); ++i) ts.data[i] = rng.normal();
    const Tensor corr = pearson_fc(ts);
    for (std::size_t i = 0; i < v; ++i) {
      CHECK(corr(i, i) == doctest::Approx(1.0));
      for (std::size_t j = i + 1; j < v; ++j) {
        std::vector<double> x(t), y(t);
        for (std::size_t k = 0; k < t; ++k) {
          x[k] = ts.data(i, k);
          y[k] = ts.data(j, k);
        }
        CHECK(std::abs(corr(i, j) - corr_oracle(x, y)) < 1e-10);
        CHECK(corr(i, j) == corr(j, i));
        CHECK(corr(i, j) >= -1.0);
        CHECK(corr(i, j) <= 1.0);
      }
    }
  }
}

TEST_CASE("constant row is rejected with the ROI index") {
  CHECK_THROWS_WITH_AS(pearson_fc(make_ts({{1, 2, 3}, {5, 5, 5}})),
                       "time series 's0': ROI 1 has zero variance", ValidationError);
}

TEST_CASE("time series shape validation") {
  CHECK_THROWS_AS(pearson_fc(make_ts({{1, 2, 3}})), ValidationError);       // < 2 ROIs
  CHECK_THROWS_AS(pearson_fc(make_ts({{1, 2}, {2, 1}})), ValidationError);  // < 3 samples
}

TEST_CASE("fisher z basics") {
  Tensor corr(2, 2);
  corr(0, 0) = corr(1, 1) = 1.0;
  SUBCASE("zero maps to zero") {
    const ConnectivityMatrix cm = fisher_z(corr, 1e-5);
    CHECK(cm.values(0, 1) == 0.0);
    CHECK(cm.values(0, 0) == 0.0);  // diagonal forced to zero
  }
  SUBCASE("reference value at 0.5") {
    corr(0, 1) = corr(1, 0) = 0.5;
    const ConnectivityMatrix cm = fisher_z(corr, 1e-5);
    CHECK(cm.values(0, 1) == doctest::Approx(std::atanh(0.5)));
    CHECK(cm.values(0, 1) == doctest::Approx(0.549306).epsilon(1e-5));
  }
  SUBCASE("odd and strictly increasing") {
    Rng rng(13);
    double prev_r = -2.0;
    std::vector<double> rs;
    for (int i = 0; i < 50; ++i) rs.push_back(rng.uniform(-0.999, 0.999));
    std::sort(rs.begin(), rs.end());
    double prev_z = -1e300;
    for (double r : rs) {
      Tensor c(2, 2);
      c(0, 0) = c(1, 1) = 1.0;
      c(0, 1) = c(1, 0) = r;
      const double z = fisher_z(c, 1e-5).values(0, 1);
      Tensor cn(2, 2);
      cn(0, 0) = cn(1, 1) = 1.0;
      cn(0, 1) = cn(1, 0) = -r;
      CHECK(fisher_z(cn, 1e-5).values(0, 1) == doctest::Approx(-z).epsilon(1e-12));
      if (prev_r > -2.0 && r > prev_r) CHECK(z > prev_z);
      prev_z = z;
      prev_r = r;
    }
  }
  SUBCASE("extreme correlations are clamped finite") {
    corr(0, 1) = corr(1, 0) = 1.0;
    const ConnectivityMatrix cm = fisher_z(corr, 1e-5);
    CHECK(std::isfinite(cm.values(0, 1)));
  }
}

TEST_CASE("sparsify keeps the strongest positive edges") {
  SUBCASE("keep_fraction 1 on all-positive input is the identity") {
    ConnectivityMatrix cm;
    cm.values = Tensor(3, 3);
    cm.values(0, 1) = cm.values(1, 0) = 0.3;
    cm.values(0, 2) = cm.values(2, 0) = 0.7;
    cm.values(1, 2) = cm.values(2, 1) = 0.1;
    const Tensor adj = sparsify_topk_positive(cm, 1.0);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) CHECK(adj(i, j) == cm.values(i, j));
    }
  }
  SUBCASE("a single positive edge survives any fraction (ceiling)") {
    ConnectivityMatrix cm;
    cm.values = Tensor(3, 3);
    cm.values(0, 1) = cm.values(1, 0) = 0.4;
    cm.values(0, 2) = cm.values(2, 0) = -0.9;
    const Tensor adj = sparsify_topk_positive(cm, 0.5);
    CHECK(adj(0, 1) == 0.4);
    CHECK(adj(0, 2) == 0.0);
  }
  SUBCASE("sort oracle on the 4-node fixture") {
    // weights {0.9, 0.5, 0.1, -0.7}, keep half of the 3 positives -> 2 kept
    ConnectivityMatrix cm;
    cm.values = Tensor(4, 4);
    cm.values(0, 1) = cm.values(1, 0) = 0.9;
    cm.values(0, 2) = cm.values(2, 0) = 0.5;
    cm.values(1, 3) = cm.values(3, 1) = 0.1;
    cm.values(2, 3) = cm.values(3, 2) = -0.7;
    const Tensor adj = sparsify_topk_positive(cm, 0.5);
    CHECK(adj(0, 1) == 0.9);
    CHECK(adj(0, 2) == 0.5);
    CHECK(adj(1, 3) == 0.0);
    CHECK(adj(2, 3) == 0.0);
  }
  SUBCASE("no positive edges is an error") {
    ConnectivityMatrix cm;
    cm.values = Tensor(2, 2);
    cm.values(0, 1) = cm.values(1, 0) = -0.5;
    CHECK_THROWS_AS(sparsify_topk_positive(cm, 0.5), ValidationError);
  }
  SUBCASE("never increases weights, preserves symmetry") {
    Rng rng(47);
    for (int trial = 0; trial < 10; ++trial) {
      ConnectivityMatrix cm;
      cm.values = Tensor(8, 8);
      for (std::size_t i = 0; i < 8; ++i) {
        for (std::size_t j = i + 1; j < 8; ++j) {
          cm.values(i, j) = cm.values(j, i) = rng.uniform(-1.0, 1.0);
        }
      }
      const double frac = rng.uniform(0.1, 1.0);
      const Tensor adj = sparsify_topk_positive(cm, frac);
      for (std::size_t i = 0; i < 8; ++i) {
        CHECK(adj(i, i) == 0.0);
        for (std::size_t j = 0; j < 8; ++j) {
          CHECK(adj(i, j) == adj(j, i));
          CHECK(adj(i, j) >= 0.0);
          CHECK(adj(i, j) <= std::max(0.0, cm.values(i, j)));
        }
      }
    }
  }
}

TEST_CASE("build_brain_graph composes deterministically") {
  Rng rng(3);
  TimeSeries ts;
  ts.subject_id = "det";
  ts.data = Tensor(6, 40);
  for (std::size_t i = 0; i < ts.data.size(); ++i) ts.data[i] = rng.normal();

  ConnectomeConfig cfg;
  const BrainGraph g1 = build_brain_graph(ts, cfg);
  const BrainGraph g2 = build_brain_graph(ts, cfg);
  for (std::size_t i = 0; i < g1.adjacency.size(); ++i) {
    CHECK(g1.adjacency[i] == g2.adjacency[i]);
    CHECK(g1.node_features[i] == g2.node_features[i]);
  }
}

TEST_CASE("atlas-size input yields an atlas-size graph") {
  Rng rng(17);
  TimeSeries ts;
  ts.subject_id = "aal";
  ts.data = Tensor(116, 60);
  for (std::size_t i = 0; i < ts.data.size(); ++i) ts.data[i] = rng.normal();
  const BrainGraph g = build_brain_graph(ts, ConnectomeConfig{});
  CHECK(g.adjacency.rows() == 116);
  CHECK(g.node_features.rows() == 116);
  CHECK(g.roi_names.size() == 116);
}

TEST_CASE("build_brain_graph is equivariant under ROI permutation") {
  Rng rng(29);
  const std::size_t v = 7, t = 50;
  TimeSeries ts;
  ts.subject_id = "perm";
  ts.data = Tensor(v, t);
  for (std::size_t i = 0; i < ts.data.size(); ++i) ts.data[i] = rng.normal();

  std::vector<std::size_t> perm = {2, 5, 0, 6, 1, 4, 3};
  TimeSeries tsp;
  tsp.subject_id = "perm";
  tsp.data = Tensor(v, t);
  for (std::size_t i = 0; i < v; ++i) {
    for (std::size_t j = 0; j < t; ++j) tsp.data(i, j) = ts.data(perm[i], j);
  }

  ConnectomeConfig cfg;
  const BrainGraph g = build_brain_graph(ts, cfg);
  const BrainGraph gp = build_brain_graph(tsp, cfg);
  for (std::size_t i = 0; i < v; ++i) {
    for (std::size_t j = 0; j < v; ++j) {
      CHECK(gp.adjacency(i, j) == doctest::Approx(g.adjacency(perm[i], perm[j])).epsilon(1e-12));
      CHECK(gp.node_features(i, j) ==
            doctest::Approx(g.node_features(perm[i], perm[j])).epsilon(1e-12));
    }
  }
}

TEST_CASE("feature modes select FC profiles or raw series") {
  Rng rng(53);
  TimeSeries ts;
  ts.subject_id = "f";
  ts.data = Tensor(5, 30);
  for (std::size_t i = 0; i < ts.data.size(); ++i) ts.data[i] = rng.normal();

  ConnectomeConfig fc_cfg;
  const BrainGraph g_fc = build_brain_graph(ts, fc_cfg);
  CHECK(g_fc.node_features.cols() == 5);

  ConnectomeConfig raw_cfg;
  raw_cfg.feature_mode = FeatureMode::RawTimeseries;
  const BrainGraph g_raw = build_brain_graph(ts, raw_cfg);
  CHECK(g_raw.node_features.cols() == 30);
  for (std::size_t i = 0; i < ts.data.size(); ++i) CHECK(g_raw.node_features[i] == ts.data[i]);
}
