#include "ibg/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "ibg/error.hpp"
#include "ibg/io.hpp"

namespace ibg {

namespace fs = std::filesystem;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool force = false;
};

RunConfig resolve_config(const GlobalOpts& g, const std::string& preset) {
  RunConfig cfg;
  if (!g.config_path.empty()) {
    cfg = config_from_json(nlohmann::ordered_json::parse(read_text_file(g.config_path)));
  }
  if (!preset.empty()) apply_preset(cfg, preset);
  if (g.seed) cfg.seed = *g.seed;
  if (g.jobs) cfg.jobs = *g.jobs;
  validate_config(cfg);
  return cfg;
}

void ensure_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!force) throw IoError("output path '" + dir.string() + "' exists (use --force)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

int cmd_generate(const GlobalOpts& g, const std::string& out_dir, SyntheticCohortSpec spec) {
  if (g.seed) spec.seed = *g.seed;
  const SyntheticCohort cohort = generate_synthetic_cohort(spec);
  if (fs::exists(out_dir) && !g.force) {
    throw IoError("output path '" + out_dir + "' exists (use --force)");
  }
  write_cohort_directory(out_dir, cohort, g.force);
  std::cout << "wrote " << cohort.series.size() << " subjects to " << out_dir << "\n";
  return 0;
}

int cmd_connectome(const GlobalOpts& g, const std::string& manifest_path,
                   const std::string& out_dir) {
  const CohortManifest m = read_manifest(manifest_path);
  const RunConfig cfg = resolve_config(g, "");
  if (m.entries.empty()) {
    std::cerr << "warning: manifest has no subjects, nothing to do\n";
    return 0;
  }
  ensure_out_dir(out_dir, g.force);
  const fs::path base = fs::path(manifest_path).parent_path();
  for (const auto& e : m.entries) {
    const fs::path ts_path = fs::path(e.timeseries_path).is_absolute()
                                 ? fs::path(e.timeseries_path)
                                 : base / e.timeseries_path;
    const TimeSeries ts = read_timeseries_csv(ts_path, e.subject_id);
    const Tensor corr = pearson_fc(ts);
    const ConnectivityMatrix cm = fisher_z(corr, cfg.connectome.clamp_eps);
    std::vector<std::string> roi_names;
    for (std::size_t i = 0; i < ts.roi_count(); ++i) {
      roi_names.push_back("ROI_" + std::to_string(i));
    }
    write_connectivity_csv(fs::path(out_dir) / (e.subject_id + "_fc.csv"), cm.values, roi_names);
  }
  std::cout << "wrote " << m.entries.size() << " connectivity matrices to " << out_dir << "\n";
  return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& preset, const std::string& manifest_path,
              const std::string& out_dir) {
  const RunConfig cfg = resolve_config(g, preset);
  const CohortData cohort = load_cohort(manifest_path, cfg.connectome);

  ensure_out_dir(out_dir, g.force);
  const fs::path out(out_dir);
  write_text_file(out / "config.json", config_to_json(cfg).dump(2) + "\n");

  const CvOutcome cv = cross_validate(cohort, cfg);
  write_metrics_json(out / "metrics.json", cv);

  // canonical full-cohort fit backs the explain pipeline and the bundle
  const FoldAssignment holdout =
      stratified_holdout(cohort.labels(), 0.1, mix_seed(cfg.seed, 0x66696e616cULL));
  TrainOutcome fit = train_model(cohort, cfg, holdout.train, holdout.val,
                                 mix_seed(cfg.seed, 0x66697473ULL));
  if (!fit.pop.ready) {
    fit.pop = build_population_state(*fit.model, cohort, cfg.popgraph, cfg.train);
  }

  write_history_csv(out / "history.csv", fit.history);
  save_model(out / "model.json", *fit.model, fit.pop, cfg, cohort);

  const InferenceResult inf = infer(*fit.model, cohort, fit.pop, cfg.train);
  write_embeddings_csv(out / "embeddings.csv", cohort.ids(), inf.z_h);
  write_representations_csv(out / "representations.csv", inf.reps);

  const auto biomarkers = explain_biomarkers(*fit.model, cohort, cfg.train);
  write_biomarkers_csv(out / "biomarkers.csv", biomarkers, cohort.roi_names);
  const AttentionReport att = explain_attention(*fit.model, cohort, fit.pop, cfg.train);
  write_attention_json(out / "attention.json", att);

  std::cout << "cv mean: acc=" << format_double(cv.mean.acc) << " auc=" << format_double(cv.mean.auc)
            << " f1=" << format_double(cv.mean.f1) << "\n"
            << "bundle written to " << out_dir << "\n";
  return 0;
}

int cmd_evaluate(const GlobalOpts& g, const std::string& model_path,
                 const std::string& manifest_path, const std::string& out_path) {
  LoadedModel lm = load_model(model_path);
  if (g.jobs) lm.cfg.jobs = *g.jobs;
  const CohortData cohort = load_cohort(manifest_path, lm.cfg.connectome);
  if (cohort.ids() != lm.subject_ids) {
    throw ValidationError("evaluate: cohort subjects do not match the model bundle");
  }
  const InferenceResult inf = infer(*lm.model, cohort, lm.pop, lm.cfg.train);
  std::vector<double> scores(inf.scores.rows());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = inf.scores(i, 0);
  const std::vector<std::uint8_t> all(cohort.size(), 1);
  const Metrics m = compute_metrics(scores, cohort.labels(), all);
  std::cout << "acc=" << format_double(m.acc) << " auc=" << format_double(m.auc)
            << " f1=" << format_double(m.f1) << "\n";
  if (!out_path.empty()) {
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["acc"] = m.acc;
    j["auc"] = m.auc;
    j["f1"] = m.f1;
    write_text_file(out_path, j.dump(2) + "\n");
  }
  return 0;
}

int cmd_explain(const GlobalOpts& g, const std::string& model_path,
                const std::string& manifest_path, const std::string& out_dir, int top_k) {
  LoadedModel lm = load_model(model_path);
  const CohortData cohort = load_cohort(manifest_path, lm.cfg.connectome);
  if (cohort.ids() != lm.subject_ids) {
    throw ValidationError("explain: cohort subjects do not match the model bundle");
  }
  ensure_out_dir(out_dir, g.force);

  const auto biomarkers = explain_biomarkers(*lm.model, cohort, lm.cfg.train);
  write_biomarkers_csv(fs::path(out_dir) / "biomarkers.csv", biomarkers, cohort.roi_names);
  const AttentionReport att = explain_attention(*lm.model, cohort, lm.pop, lm.cfg.train);
  write_attention_json(fs::path(out_dir) / "attention.json", att);

  std::cout << "top " << top_k << " ROIs by occlusion shift:\n";
  for (int i = 0; i < top_k && i < static_cast<int>(biomarkers.size()); ++i) {
    std::cout << "  " << (i + 1) << ". " << cohort.roi_names[biomarkers[i].roi] << " "
              << format_double(biomarkers[i].score) << "\n";
  }
  std::cout << "alpha:";
  for (std::size_t k = 0; k < 4; ++k) {
    std::cout << " " << kRelationNames[k] << "=" << format_double(att.alpha[k]);
  }
  std::cout << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"information-bottleneck brain/population graph pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalOpts g;
  std::uint64_t seed_arg = 0;
  int jobs_arg = 0;
  app.add_option("--config", g.config_path, "JSON configuration file");
  auto* seed_opt = app.add_option("--seed", seed_arg, "override the config seed");
  auto* jobs_opt = app.add_option("--jobs", jobs_arg, "override fold parallelism");
  app.add_flag("--force", g.force, "overwrite existing outputs");

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic planted-biomarker cohort");
  std::string gen_out = "cohort";
  SyntheticCohortSpec spec;
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--subjects", spec.n_subjects, "cohort size");
  gen->add_option("--rois", spec.n_rois, "ROI count");
  gen->add_option("--planted", spec.n_planted_rois, "planted ROI count");
  gen->add_option("--effect", spec.effect_size, "planted coupling strength");
  gen->add_option("--length", spec.series_length, "samples per ROI");
  gen->add_option("--sites", spec.n_sites, "site count");
  gen->add_option("--skew", spec.demo_skew, "class-sex mixing skew");

  // connectome
  auto* conn = app.add_subcommand("connectome", "export Fisher-z connectivity matrices");
  std::string conn_manifest, conn_out = "fc";
  conn->add_option("--manifest", conn_manifest, "cohort manifest")->required();
  conn->add_option("--out", conn_out, "output directory");

  // train
  auto* tr = app.add_subcommand("train", "cross-validate and write a results bundle");
  std::string tr_manifest, tr_out = "results", tr_preset;
  tr->add_option("--manifest", tr_manifest, "cohort manifest")->required();
  tr->add_option("--out", tr_out, "results bundle directory");
  tr->add_option("--preset", tr_preset, "beta preset (abide-like or adhd-like)");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "score a trained model on a cohort");
  std::string ev_model, ev_manifest, ev_out;
  ev->add_option("--model", ev_model, "model bundle (model.json)")->required();
  ev->add_option("--manifest", ev_manifest, "cohort manifest")->required();
  ev->add_option("--out", ev_out, "optional metrics JSON path");

  // explain
  auto* ex = app.add_subcommand("explain", "biomarker and attention attribution");
  std::string ex_model, ex_manifest, ex_out = "explain";
  int ex_top = 20;
  ex->add_option("--model", ex_model, "model bundle (model.json)")->required();
  ex->add_option("--manifest", ex_manifest, "cohort manifest")->required();
  ex->add_option("--out", ex_out, "output directory");
  ex->add_option("--top", ex_top, "ROIs to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*seed_opt) g.seed = seed_arg;
  if (*jobs_opt) g.jobs = jobs_arg;

  try {
    if (gen->parsed()) return cmd_generate(g, gen_out, spec);
    if (conn->parsed()) return cmd_connectome(g, conn_manifest, conn_out);
    if (tr->parsed()) return cmd_train(g, tr_preset, tr_manifest, tr_out);
    if (ev->parsed()) return cmd_evaluate(g, ev_model, ev_manifest, ev_out);
    if (ex->parsed()) return cmd_explain(g, ex_model, ex_manifest, ex_out, ex_top);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace ibg
