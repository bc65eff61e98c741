// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. An optional list of criterion names restricts the run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ibg/cli.hpp"
#include "ibg/explain.hpp"
#include "ibg/grad_check.hpp"
#include "ibg/io.hpp"
#include "ibg/synthetic.hpp"
#include "ibg/trainer.hpp"
#include "ibg/variational.hpp"
#include "ibg/wl.hpp"

using namespace ibg;
namespace fs = std::filesystem;

namespace {

// ---- shared fixtures -------------------------------------------------------

// The planted-cohort benchmark: N=120, 90 ROIs, 10 planted, effect 1.5.
const SyntheticCohortSpec kPlantedSpec = [] {
  SyntheticCohortSpec s;
  s.n_subjects = 120;
  s.n_rois = 90;
  s.n_planted_rois = 10;
  s.effect_size = 1.5;
  s.series_length = 150;
  s.seed = 20240401;
  return s;
}();

RunConfig acceptance_config() {
  RunConfig cfg;
  cfg.model.embed_dim = 16;
  cfg.model.biomarker_dim = 8;
  cfg.model.gat_dim = 16;
  cfg.model.attention_dim = 8;
  cfg.model.hetero_dim = 8;
  cfg.train.beta = 0.8;
  cfg.train.beta_hetero = 0.5;
  cfg.train.max_epochs = 120;
  cfg.train.warmup_epochs = 30;
  cfg.train.graph_refresh = 30;
  cfg.train.patience = 20;
  cfg.train.dropout = 0.1;
  cfg.train.edge_dropout = 0.1;
  cfg.train.dv_inner_steps = 2;
  cfg.train.folds = 10;
  cfg.seed = 91;
  cfg.jobs = 1;
  return cfg;
}

struct Context {
  SyntheticCohort planted;
  CohortData cohort;
  bool cohort_ready = false;

  const CohortData& planted_cohort() {
    if (!cohort_ready) {
      planted = generate_synthetic_cohort(kPlantedSpec);
      cohort = cohort_from_synthetic(planted, acceptance_config().connectome);
      cohort_ready = true;
    }
    return cohort;
  }
};

Context g_ctx;

std::string fmt(double v, int prec = 4) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << std::fixed << v;
  return ss.str();
}

// ---- criteria --------------------------------------------------------------

bool crit_paper_numbers(std::string& detail) {
  // Reported dataset accuracies (ABIDE-I 78.64/82.03/80.45, ADHD-200
  // 77.31/82.63/81.94) require the real cohorts, which this artifact does
  // not ship; they are documentation targets only. The property checks
  // below stand in for them.
  detail = "real-dataset accuracies are documented targets, not reproduced here";
  return true;
}

bool crit_gradient_suite(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();

  SyntheticCohortSpec spec;
  spec.n_subjects = 8;
  spec.n_rois = 12;
  spec.n_planted_rois = 3;
  spec.effect_size = 1.5;
  spec.series_length = 60;
  spec.seed = 4242;
  RunConfig cfg;
  cfg.model.embed_dim = 6;
  cfg.model.biomarker_dim = 4;
  cfg.model.gat_dim = 6;
  cfg.model.attention_dim = 4;
  cfg.model.hetero_dim = 4;
  cfg.train.dropout = 0.0;
  cfg.train.edge_dropout = 0.0;
  const CohortData cohort = cohort_from_synthetic(generate_synthetic_cohort(spec),
                                                  cfg.connectome);

  auto model = Model::create(cfg.model, cohort.subjects[0].features.cols(),
                             cohort.demo_features.cols(), cfg.train, 7);
  PopulationState pop = build_population_state(*model, cohort, cfg.popgraph, cfg.train);
  pop.mi = {0.3, 0.05, 0.0, 0.6};  // frozen measured statistics

  Rng noise_rng(99);
  const NoiseBank bank = make_train_noise(cohort, cfg.model, 0.0, 0.0, noise_rng);
  const std::vector<int> labels = cohort.labels();
  const std::vector<std::uint8_t> mask(cohort.size(), 1);

  auto build = [&](ad::Tape& t) {
    return build_total_loss(t, *model, cohort, pop, bank, labels, mask, cfg.train).total;
  };
  const double err = ad::grad_check(build, model->params.all(), 1e-5);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail = "max rel err " + fmt(err, 8) + " over " +
           std::to_string(model->params.entry_count()) + " entries in " + fmt(secs, 1) + "s";
  return err < 1e-4 && secs < 120.0;
}

bool crit_planted_cohort(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const CohortData& cohort = g_ctx.planted_cohort();
  const RunConfig cfg = acceptance_config();
  const CvOutcome cv = cross_validate(cohort, cfg);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail = "mean acc " + fmt(cv.mean.acc) + ", mean auc " + fmt(cv.mean.auc) + ", f1 " +
           fmt(cv.mean.f1) + " in " + fmt(secs, 1) + "s";
  return cv.mean.acc >= 0.90 && cv.mean.auc >= 0.95 && secs < 900.0;
}

bool crit_biomarker_recovery(std::string& detail) {
  const CohortData& cohort = g_ctx.planted_cohort();
  const RunConfig cfg = acceptance_config();
  const std::set<std::size_t> planted(g_ctx.planted.planted_rois.begin(),
                                      g_ctx.planted.planted_rois.end());

  int passing = 0;
  double mean_hits = 0.0;
  std::string per_seed;
  for (int s = 0; s < 5; ++s) {
    const std::uint64_t seed = mix_seed(cfg.seed, 0x7265636f76ULL, static_cast<std::uint64_t>(s));
    const FoldAssignment split = stratified_holdout(cohort.labels(), 0.1, seed);
    const TrainOutcome t = train_model(cohort, cfg, split.train, split.val, seed);
    const auto ranking = explain_biomarkers(*t.model, cohort, cfg.train);
    int hits = 0;
    for (std::size_t i = 0; i < 20 && i < ranking.size(); ++i) {
      if (planted.count(ranking[i].roi) != 0) ++hits;
    }
    mean_hits += hits;
    if (hits >= 7) ++passing;
    per_seed += (s ? "," : "") + std::to_string(hits);
  }
  mean_hits /= 5.0;
  detail = "hits in top-20 per seed [" + per_seed + "], mean " + fmt(mean_hits, 1) + ", " +
           std::to_string(passing) + "/5 seeds >= 7";
  return passing >= 4 && mean_hits >= 7.0;
}

bool crit_wl_oracle(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(13131);

  auto random_graph = [&](std::size_t n, double p) {
    Tensor a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (rng.bernoulli(p)) {
          a(i, j) = 1.0;
          a(j, i) = 1.0;
        }
      }
    }
    return a;
  };
  auto permute = [&](const Tensor& a) {
    std::vector<std::size_t> perm(a.rows());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(perm[i], perm[j]);
    }
    return out;
  };
  auto brute_isomorphic = [](const Tensor& a, const Tensor& b) {
    const std::size_t n = a.rows();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    do {
      bool ok = true;
      for (std::size_t i = 0; i < n && ok; ++i) {
        for (std::size_t j = 0; j < n && ok; ++j) {
          if (a(i, j) != b(perm[i], perm[j])) ok = false;
        }
      }
      if (ok) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
  };

  std::size_t iso_pairs = 0, iso_equivalent = 0, inequivalent = 0, contrapositive_ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 3 + rng.below(6);  // 3..8 nodes
    const double p = rng.uniform(0.2, 0.8);
    const Tensor a = random_graph(n, p);
    if (trial % 2 == 0) {
      const Tensor b = permute(a);
      ++iso_pairs;
      if (wl::wl_equivalent(a, b)) ++iso_equivalent;
    } else {
      const Tensor b = random_graph(n, rng.uniform(0.2, 0.8));
      if (!wl::wl_equivalent(a, b)) {
        ++inequivalent;
        if (!brute_isomorphic(a, b)) ++contrapositive_ok;
      }
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail = std::to_string(iso_equivalent) + "/" + std::to_string(iso_pairs) +
           " isomorphic pairs equivalent; " + std::to_string(contrapositive_ok) + "/" +
           std::to_string(inequivalent) + " inequivalent pairs non-isomorphic; " + fmt(secs, 1) +
           "s";
  return iso_equivalent == iso_pairs && contrapositive_ok == inequivalent && secs < 60.0;
}

bool crit_attention_constraints(std::string& detail) {
  std::size_t checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Rng rng(5000 + trial);
    ad::ParamSet ps;
    HeteroConfig hc;
    hc.biomarker_dim = 4;
    hc.gat_dim = 6;
    hc.attention_dim = 4;
    hc.hetero_dim = 4;
    auto att = make_attention_params(ps, hc, rng);

    ad::Tape t;
    std::array<ad::Var, 4> z;
    for (std::size_t k = 0; k < 4; ++k) {
      Tensor zk(8, 6);
      for (std::size_t i = 0; i < zk.size(); ++i) zk[i] = rng.normal();
      z[k] = t.constant(zk);
    }

    // random equivalence relation from a random partition of {0,1,2,3}
    std::array<int, 4> cls{};
    int next_class = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      cls[i] = (i == 0 || rng.bernoulli(0.5)) ? next_class++ : cls[rng.below(i)];
    }
    wl::EquivalenceMatrix s;
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) s.s[i][j] = (cls[i] == cls[j]) ? 1 : 0;
    }
    std::array<double, 4> mi{rng.uniform(0.0, 3.0), rng.uniform(0.0, 3.0),
                             rng.uniform(0.0, 3.0), rng.uniform(0.0, 3.0)};

    const auto res = metapath_attention(t, att, z, s, mi, rng.uniform(0.0, 2.0));
    const Tensor& alpha = res.alpha.value();
    double sum = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      if (alpha(0, k) < 0.0) {
        detail = "negative weight at trial " + std::to_string(trial);
        return false;
      }
      sum += alpha(0, k);
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      detail = "simplex violated by " + fmt(std::abs(sum - 1.0), 16);
      return false;
    }
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        if (s.at(i, j) && alpha(0, i) != alpha(0, j)) {
          detail = "coupled weights differ at trial " + std::to_string(trial);
          return false;
        }
      }
    }
    ++checked;
  }
  detail = std::to_string(checked) + " random states on the simplex with exact class ties";
  return true;
}

bool crit_kl_oracle(std::string& detail) {
  Rng rng(424242);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 6;
    Tensor mu(1, d), sigma(1, d);
    for (std::size_t i = 0; i < d; ++i) {
      mu[i] = rng.uniform(0.3, 2.0) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
      sigma[i] = rng.uniform(0.5, 2.0);
    }
    const double closed = kl_diag_to_standard(mu, sigma);

    double acc = 0.0;
    const std::size_t samples = 1000000;
    for (std::size_t s = 0; s < samples; ++s) {
      double lr = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double eps = rng.normal();
        const double x = mu[i] + sigma[i] * eps;
        lr += (-0.5 * eps * eps - std::log(sigma[i])) - (-0.5 * x * x);
      }
      acc += lr;
    }
    const double mc = acc / static_cast<double>(samples);
    worst = std::max(worst, std::abs(closed - mc) / closed);
  }
  detail = "worst relative gap " + fmt(worst, 4) + " over 50 pairs, 1e6 samples each";
  return worst < 0.02;
}

bool crit_dv_sanity(std::string& detail) {
  const std::size_t n = 256, d = 8;
  Rng data_rng(777);
  Tensor reps(n, d), indep(n, d);
  for (std::size_t i = 0; i < reps.size(); ++i) reps[i] = data_rng.normal();
  for (std::size_t i = 0; i < indep.size(); ++i) indep[i] = data_rng.normal();

  Rng r1(31337), r2(31337);
  DvEstimator dv_ind(d, d, 32, 1e-3, r1);
  DvEstimator dv_same(d, d, 32, 1e-3, r2);
  Rng t1(2025), t2(2025);
  double est_ind = 0.0, est_same = 0.0;
  for (int round = 0; round < 15; ++round) {
    est_ind = dv_ind.train_and_estimate(reps, indep, 5, t1);
    est_same = dv_same.train_and_estimate(reps, reps, 5, t2);
  }
  detail = "independent " + fmt(est_ind, 4) + " nats, identical " + fmt(est_same, 4) + " nats";
  return est_ind < 0.05 && (est_same - est_ind) >= 0.5;
}

bool crit_compression_monotonicity(std::string& detail) {
  SyntheticCohortSpec spec;
  spec.n_subjects = 40;
  spec.n_rois = 20;
  spec.n_planted_rois = 5;
  spec.effect_size = 1.5;
  spec.series_length = 80;
  spec.seed = 555;
  RunConfig cfg;
  cfg.model.embed_dim = 8;
  cfg.model.biomarker_dim = 4;
  cfg.model.gat_dim = 8;
  cfg.model.attention_dim = 4;
  cfg.model.hetero_dim = 4;
  cfg.train.max_epochs = 60;   // warm-up only: the subject objective trains alone
  cfg.train.warmup_epochs = 60;
  cfg.train.patience = 60;
  cfg.train.dropout = 0.0;
  cfg.train.edge_dropout = 0.0;
  const CohortData cohort = cohort_from_synthetic(generate_synthetic_cohort(spec),
                                                  cfg.connectome);
  const FoldAssignment split = stratified_holdout(cohort.labels(), 0.2, 3);

  std::vector<double> kls;
  for (double beta : {0.1, 1.0, 10.0}) {
    RunConfig c = cfg;
    c.train.beta = beta;
    const TrainOutcome t = train_model(cohort, c, split.train, split.val, 99);
    kls.push_back(t.history.back().subject_kl);
  }
  detail = "trained KL at beta {0.1, 1, 10}: " + fmt(kls[0]) + ", " + fmt(kls[1]) + ", " +
           fmt(kls[2]);
  return kls[1] <= kls[0] * 1.05 && kls[2] <= kls[1] * 1.05;
}

bool crit_determinism(std::string& detail) {
  const fs::path dir = fs::temp_directory_path() / "ibg_acceptance_determinism";
  fs::remove_all(dir);

  auto cli = [&](const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("ibgraph");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
  };

  if (cli({"generate", "--out", (dir / "cohort").string(), "--subjects", "24", "--rois", "16",
           "--planted", "4", "--length", "80", "--seed", "17"}) != 0) {
    detail = "cohort generation failed";
    return false;
  }
  RunConfig cfg;
  cfg.model.embed_dim = 8;
  cfg.model.biomarker_dim = 4;
  cfg.model.gat_dim = 8;
  cfg.model.attention_dim = 4;
  cfg.model.hetero_dim = 4;
  cfg.train.max_epochs = 16;
  cfg.train.warmup_epochs = 6;
  cfg.train.graph_refresh = 5;
  cfg.train.folds = 4;
  cfg.train.dv_inner_steps = 1;
  cfg.seed = 23;
  write_text_file(dir / "config.json", config_to_json(cfg).dump(2) + "\n");

  const std::string manifest = (dir / "cohort" / "manifest.json").string();
  for (const char* run : {"run1", "run2"}) {
    if (cli({"--config", (dir / "config.json").string(), "train", "--manifest", manifest,
             "--out", (dir / run).string()}) != 0) {
      detail = std::string("training run failed (") + run + ")";
      return false;
    }
  }
  const std::string m1 = read_text_file(dir / "run1" / "metrics.json");
  const std::string m2 = read_text_file(dir / "run2" / "metrics.json");
  detail = m1 == m2 ? "metrics.json byte-identical across reruns"
                    : "metrics.json differs between reruns";
  return m1 == m2;
}

bool crit_null_control(std::string& detail) {
  const CohortData& base = g_ctx.planted_cohort();
  CohortData shuffled = base;
  std::vector<int> labels = shuffled.labels();
  Rng rng(mix_seed(4711, 0x6e756c6cULL));
  rng.shuffle(labels);
  for (std::size_t i = 0; i < shuffled.subjects.size(); ++i) {
    shuffled.subjects[i].label = labels[i];
  }

  RunConfig cfg = acceptance_config();
  cfg.train.max_epochs = 70;  // no signal to find; keep the null run lean
  const CvOutcome cv = cross_validate(shuffled, cfg);
  detail = "label-shuffled mean test auc " + fmt(cv.mean.auc);
  return cv.mean.auc >= 0.35 && cv.mean.auc <= 0.65;
}

bool crit_ablation_switches(std::string& detail) {
  const fs::path dir = fs::temp_directory_path() / "ibg_acceptance_ablation";
  fs::remove_all(dir);

  auto cli = [&](const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("ibgraph");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
  };
  if (cli({"generate", "--out", (dir / "cohort").string(), "--subjects", "20", "--rois", "12",
           "--planted", "3", "--length", "60", "--seed", "29"}) != 0) {
    detail = "cohort generation failed";
    return false;
  }
  const std::string manifest = (dir / "cohort" / "manifest.json").string();

  struct Ablation {
    const char* name;
    std::function<void(RunConfig&)> apply;
    std::function<bool(const nlohmann::ordered_json&)> echoed;
  };
  const std::vector<Ablation> ablations = {
      {"no_subject_ib", [](RunConfig& c) { c.train.weights.ib = 0.0; },
       [](const auto& j) { return j.at("train").at("weight_ib").template get<double>() == 0.0; }},
      {"no_population_ib", [](RunConfig& c) { c.train.beta_hetero = 0.0; },
       [](const auto& j) {
         return j.at("train").at("beta_hetero").template get<double>() == 0.0;
       }},
      {"no_struct", [](RunConfig& c) { c.train.weights.structural = 0.0; },
       [](const auto& j) {
         return j.at("train").at("weight_struct").template get<double>() == 0.0;
       }},
      {"no_sparse", [](RunConfig& c) { c.train.weights.sparsity = 0.0; },
       [](const auto& j) {
         return j.at("train").at("weight_sparse").template get<double>() == 0.0;
       }},
      {"no_global_attention",
       [](RunConfig& c) { c.train.disable_global_attention = true; },
       [](const auto& j) {
         return j.at("train").at("disable_global_attention").template get<bool>();
       }},
  };

  for (const auto& ab : ablations) {
    RunConfig cfg;
    cfg.model.embed_dim = 8;
    cfg.model.biomarker_dim = 4;
    cfg.model.gat_dim = 8;
    cfg.model.attention_dim = 4;
    cfg.model.hetero_dim = 4;
    cfg.train.max_epochs = 12;
    cfg.train.warmup_epochs = 5;
    cfg.train.graph_refresh = 4;
    cfg.train.folds = 3;
    cfg.train.dv_inner_steps = 1;
    cfg.seed = 37;
    ab.apply(cfg);
    const fs::path cfg_path = dir / (std::string(ab.name) + ".json");
    write_text_file(cfg_path, config_to_json(cfg).dump(2) + "\n");
    const fs::path out = dir / ab.name;
    if (cli({"--config", cfg_path.string(), "train", "--manifest", manifest, "--out",
             out.string()}) != 0) {
      detail = std::string("ablation '") + ab.name + "' did not run to completion";
      return false;
    }
    const auto echo = nlohmann::ordered_json::parse(read_text_file(out / "config.json"));
    if (!ab.echoed(echo)) {
      detail = std::string("ablation '") + ab.name + "' not reflected in the config echo";
      return false;
    }
    const std::string history = read_text_file(out / "history.csv");
    if (std::count(history.begin(), history.end(), '\n') < 2) {
      detail = std::string("ablation '") + ab.name + "' produced no history";
      return false;
    }
  }
  detail = "5 ablation switches ran to completion with faithful config echoes";
  return true;
}

struct Criterion {
  std::string name;
  std::function<bool(std::string&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> criteria = {
      {"paper-number-disclaimer", crit_paper_numbers},
      {"gradient-suite", crit_gradient_suite},
      {"wl-oracle", crit_wl_oracle},
      {"attention-constraints", crit_attention_constraints},
      {"kl-oracle", crit_kl_oracle},
      {"dv-sanity", crit_dv_sanity},
      {"compression-monotonicity", crit_compression_monotonicity},
      {"determinism", crit_determinism},
      {"ablation-switches", crit_ablation_switches},
      {"planted-cohort", crit_planted_cohort},
      {"biomarker-recovery", crit_biomarker_recovery},
      {"null-control", crit_null_control},
  };

  std::set<std::string> filter;
  for (int i = 1; i < argc; ++i) filter.insert(argv[i]);

  int failures = 0;
  for (const auto& c : criteria) {
    if (!filter.empty() && filter.count(c.name) == 0) continue;
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
      ok = false;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << c.name << " (" << fmt(secs, 1) << "s): "
              << detail << std::endl;
    if (!ok) ++failures;
  }
  if (filter.empty() || failures > 0) {
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
