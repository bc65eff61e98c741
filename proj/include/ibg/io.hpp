#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "ibg/config.hpp"
#include "ibg/connectome.hpp"
#include "ibg/explain.hpp"
#include "ibg/model.hpp"
#include "ibg/synthetic.hpp"
#include "ibg/trainer.hpp"

namespace ibg {

// shortest round-trip decimal form, '.' separator
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& p);
void write_text_file(const std::filesystem::path& p, const std::string& content);

// Time-series CSV: header row of sample indices, then one ROI per row.
void write_timeseries_csv(const std::filesystem::path& p, const TimeSeries& ts);
TimeSeries read_timeseries_csv(const std::filesystem::path& p, const std::string& subject_id);

// Square matrix CSV with ROI names as header row and first column.
void write_connectivity_csv(const std::filesystem::path& p, const Tensor& matrix,
                            const std::vector<std::string>& roi_names);

struct ManifestEntry {
  std::string subject_id;
  int label = 0;
  Demographics demo;
  std::string timeseries_path;  // relative to the manifest directory
};

struct CohortManifest {
  std::vector<ManifestEntry> entries;
};

CohortManifest read_manifest(const std::filesystem::path& p);
void write_manifest(const std::filesystem::path& p, const CohortManifest& m);

// Manifest -> validated time series -> brain graphs -> model-ready cohort.
CohortData load_cohort(const std::filesystem::path& manifest_path, const ConnectomeConfig& cc);

// Same assembly for an in-memory synthetic cohort.
CohortData cohort_from_synthetic(const SyntheticCohort& syn, const ConnectomeConfig& cc);

// Synthetic cohort directory: manifest.json, planted.json, one CSV per
// subject. Fails if the directory exists unless force is set.
void write_cohort_directory(const std::filesystem::path& dir, const SyntheticCohort& syn,
                            bool force);

// --- results bundle ---
void write_history_csv(const std::filesystem::path& p, const std::vector<EpochRecord>& history);
void write_metrics_json(const std::filesystem::path& p, const CvOutcome& cv);
void write_biomarkers_csv(const std::filesystem::path& p,
                          const std::vector<BiomarkerScore>& scores,
                          const std::vector<std::string>& roi_names);
void write_attention_json(const std::filesystem::path& p, const AttentionReport& rep);
void write_embeddings_csv(const std::filesystem::path& p, const std::vector<std::string>& ids,
                          const Tensor& z_h);
void write_representations_csv(const std::filesystem::path& p,
                               const std::vector<BiomarkerRep>& reps);

// --- trained model bundle ---
void save_model(const std::filesystem::path& p, const Model& m, const PopulationState& pop,
                const RunConfig& cfg, const CohortData& cohort);

struct LoadedModel {
  std::unique_ptr<Model> model;
  PopulationState pop;
  RunConfig cfg;
  std::vector<std::string> subject_ids;
};

LoadedModel load_model(const std::filesystem::path& p);

}  // namespace ibg
