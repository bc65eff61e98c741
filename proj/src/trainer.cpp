#include "ibg/trainer.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "ibg/error.hpp"
#include "ibg/optim.hpp"

namespace ibg {

double total_loss(double l_cls, double l_ib, double l_hg, double zeta, double omega) {
  if (!std::isfinite(l_cls) || !std::isfinite(l_ib) || !std::isfinite(l_hg)) {
    throw NumericError("total_loss: non-finite component");
  }
  return l_cls + zeta * l_ib + omega * l_hg;
}

namespace {

double value_of(const ad::Var& v) { return v.valid() ? v.value().scalar_value() : 0.0; }

EpochRecord record_from(const LossVars& lv, int epoch, int phase) {
  EpochRecord r;
  r.epoch = epoch;
  r.phase = phase;
  r.total = value_of(lv.total);
  r.cls = value_of(lv.cls);
  r.subject_ib = value_of(lv.subject_ib);
  r.subject_kl = value_of(lv.subject_kl);
  r.population_ib = value_of(lv.population_ib);
  r.population_kl = value_of(lv.population_kl);
  r.structural = value_of(lv.structural);
  r.sparsity = value_of(lv.sparsity);
  r.mi_weighted = value_of(lv.mi_weighted);
  if (lv.alpha.valid()) {
    for (std::size_t k = 0; k < 4; ++k) r.alpha[k] = lv.alpha.value()(0, k);
  }
  return r;
}

double validation_loss(Model& model, const CohortData& cohort, const PopulationState* pop,
                       const std::vector<int>& labels, const std::vector<std::uint8_t>& val_mask,
                       const TrainSettings& ts, bool phase2) {
  ad::Tape t;
  NoiseBank bank = make_infer_noise();
  if (phase2) {
    LossVars lv = build_total_loss(t, model, cohort, *pop, bank, labels, val_mask, ts);
    return lv.total.value().scalar_value();
  }
  StageOne s1 = forward_individual(t, model, cohort, bank, nullptr, ts);
  LossVars lv = build_warmup_loss(t, model, s1, labels, val_mask, ts);
  return lv.total.value().scalar_value();
}

}  // namespace

TrainOutcome train_model(const CohortData& cohort, const RunConfig& cfg,
                         const std::vector<std::uint8_t>& train_mask,
                         const std::vector<std::uint8_t>& val_mask, std::uint64_t seed) {
  const TrainSettings& ts = cfg.train;
  const std::vector<int> labels = cohort.labels();
  const std::size_t feature_dim = cohort.subjects.at(0).features.cols();
  const std::size_t demo_dim = cohort.demo_features.cols();

  TrainOutcome out;
  out.model = Model::create(cfg.model, feature_dim, demo_dim, ts, seed);
  Model& model = *out.model;

  ad::Adam::Settings adam_cfg;
  adam_cfg.lr = ts.lr;
  adam_cfg.weight_decay = ts.weight_decay;
  ad::Adam opt(model.params.all(), adam_cfg);

  const bool has_phase2 = ts.max_epochs > ts.warmup_epochs;
  PopulationState pop;

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_params;
  PopulationState best_pop;
  int best_epoch = -1;
  int stale = 0;

  for (int epoch = 0; epoch < ts.max_epochs; ++epoch) {
    const bool phase2 = epoch >= ts.warmup_epochs;
    if (phase2 && (epoch - ts.warmup_epochs) % ts.graph_refresh == 0) {
      const std::array<double, 4> carried = pop.ready ? pop.mi : std::array<double, 4>{};
      pop = build_population_state(model, cohort, cfg.popgraph, ts);
      pop.mi = carried;
    }

    Rng noise_rng(mix_seed(seed, 0x6e6f697365ULL, static_cast<std::uint64_t>(epoch)));
    NoiseBank bank =
        make_train_noise(cohort, cfg.model, ts.dropout, ts.edge_dropout, noise_rng);

    ad::Tape tape;
    StageOne s1 = forward_individual(tape, model, cohort, bank, phase2 ? &pop : nullptr, ts);

    if (phase2) {
      // discriminators see the current detached representations
      Rng dv_rng(mix_seed(seed, 0x647672756eULL, static_cast<std::uint64_t>(epoch)));
      const Tensor reps = s1.reps.value();
      for (std::size_t k = 0; k < 4; ++k) {
        pop.mi[k] = model.dv[k]->train_and_estimate(reps, s1.z_paths[k].value(),
                                                    ts.dv_inner_steps, dv_rng);
      }
    }

    LossVars lv = phase2
                      ? finish_total_loss(tape, model, s1, cohort, pop, bank, labels, train_mask,
                                          ts)
                      : build_warmup_loss(tape, model, s1, labels, train_mask, ts);

    const double train_total = lv.total.value().scalar_value();
    if (!std::isfinite(train_total)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch));
    }

    model.params.zero_grads();
    tape.backward(lv.total);
    opt.step();

    EpochRecord rec = record_from(lv, epoch, phase2 ? 2 : 1);
    if (phase2) {
      for (std::size_t k = 0; k < 4; ++k) rec.mi[k] = std::max(0.0, pop.mi[k]);
    }
    rec.val_loss =
        validation_loss(model, cohort, phase2 ? &pop : nullptr, labels, val_mask, ts, phase2);
    out.history.push_back(rec);

    // early stopping engages in the final phase only
    const bool stopping_phase = has_phase2 ? phase2 : true;
    if (stopping_phase) {
      if (rec.val_loss < best_val - 1e-12) {
        best_val = rec.val_loss;
        best_params = model.snapshot_values();
        best_pop = pop;
        best_epoch = epoch;
        stale = 0;
      } else {
        ++stale;
        if (stale >= ts.patience) break;
      }
    }
  }

  if (best_epoch >= 0) {
    model.restore_values(best_params);
    pop = best_pop;
  }
  out.pop = pop;
  out.best_epoch = best_epoch;
  return out;
}

CvOutcome cross_validate(const CohortData& cohort, const RunConfig& cfg) {
  const std::vector<int> labels = cohort.labels();
  const auto folds = stratified_kfold(labels, cfg.train.folds, cfg.seed);

  CvOutcome out;
  out.folds.resize(folds.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t f = next.fetch_add(1);
      if (f >= folds.size()) return;
      const std::uint64_t fold_seed = mix_seed(cfg.seed, 0x666f6c64ULL, f);
      TrainOutcome t = train_model(cohort, cfg, folds[f].train, folds[f].val, fold_seed);
      InferenceResult inf = infer(*t.model, cohort, t.pop, cfg.train);
      std::vector<double> scores(inf.scores.rows());
      for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = inf.scores(i, 0);
      out.folds[f] = FoldMetrics{static_cast<int>(f),
                                 compute_metrics(scores, labels, folds[f].test)};
    }
  };

  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  auto agg = [&](auto pick) {
    double mean = 0.0;
    for (const auto& f : out.folds) mean += pick(f.test);
    mean /= static_cast<double>(out.folds.size());
    double var = 0.0;
    for (const auto& f : out.folds) {
      const double d = pick(f.test) - mean;
      var += d * d;
    }
    var /= static_cast<double>(out.folds.size());
    return std::make_pair(mean, std::sqrt(var));
  };
  std::tie(out.mean.acc, out.stddev.acc) = agg([](const Metrics& m) { return m.acc; });
  std::tie(out.mean.auc, out.stddev.auc) = agg([](const Metrics& m) { return m.auc; });
  std::tie(out.mean.f1, out.stddev.f1) = agg([](const Metrics& m) { return m.f1; });
  return out;
}

}  // namespace ibg
