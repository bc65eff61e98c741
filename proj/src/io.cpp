#include "ibg/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "ibg/error.hpp"

namespace ibg {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string read_text_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open '" + p.string() + "' for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + p.string() + "' for writing");
  f << content;
  if (!f) throw IoError("write failed for '" + p.string() + "'");
}

namespace {

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ValidationError("cannot parse number '" + s + "' in " + where);
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> read_lines(const fs::path& p) {
  const std::string text = read_text_file(p);
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

}  // namespace

void write_timeseries_csv(const fs::path& p, const TimeSeries& ts) {
  std::string out;
  for (std::size_t j = 0; j < ts.length(); ++j) {
    if (j > 0) out += ',';
    out += std::to_string(j);
  }
  out += '\n';
  for (std::size_t i = 0; i < ts.roi_count(); ++i) {
    for (std::size_t j = 0; j < ts.length(); ++j) {
      if (j > 0) out += ',';
      out += format_double(ts.data(i, j));
    }
    out += '\n';
  }
  write_text_file(p, out);
}

TimeSeries read_timeseries_csv(const fs::path& p, const std::string& subject_id) {
  const auto lines = read_lines(p);
  if (lines.size() < 2) {
    throw ValidationError("time series '" + p.string() + "': header plus data rows required");
  }
  const std::size_t t = split_csv_line(lines[0]).size();
  const std::size_t v = lines.size() - 1;
  TimeSeries ts;
  ts.subject_id = subject_id;
  ts.data = Tensor(v, t);
  for (std::size_t i = 0; i < v; ++i) {
    const auto cells = split_csv_line(lines[i + 1]);
    if (cells.size() != t) {
      throw ValidationError("time series '" + p.string() + "': row " + std::to_string(i) +
                            " has " + std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(t));
    }
    for (std::size_t j = 0; j < t; ++j) {
      ts.data(i, j) = parse_double(cells[j], p.string());
    }
  }
  ts.validate();
  return ts;
}

void write_connectivity_csv(const fs::path& p, const Tensor& matrix,
                            const std::vector<std::string>& roi_names) {
  if (matrix.rows() != matrix.cols() || roi_names.size() != matrix.rows()) {
    throw ShapeError("write_connectivity_csv: matrix/names mismatch");
  }
  std::string out = "roi";
  for (const auto& n : roi_names) out += "," + n;
  out += '\n';
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    out += roi_names[i];
    for (std::size_t j = 0; j < matrix.cols(); ++j) out += "," + format_double(matrix(i, j));
    out += '\n';
  }
  write_text_file(p, out);
}

namespace {

ordered_json demo_to_json(const Demographics& d) {
  ordered_json j;
  j["site"] = d.site ? ordered_json(*d.site) : ordered_json(nullptr);
  j["sex"] = d.sex ? ordered_json(*d.sex) : ordered_json(nullptr);
  j["age"] = d.age ? ordered_json(*d.age) : ordered_json(nullptr);
  j["handedness"] = d.handedness ? ordered_json(*d.handedness) : ordered_json(nullptr);
  return j;
}

void require_field(const ordered_json& j, const char* key, const std::string& subject) {
  if (!j.contains(key)) {
    throw ValidationError("manifest: subject '" + subject + "' is missing field '" + key + "'");
  }
}

}  // namespace

CohortManifest read_manifest(const fs::path& p) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_text_file(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("manifest '" + p.string() + "': " + e.what());
  }
  if (!j.is_object() || !j.contains("subjects") || !j.at("subjects").is_array()) {
    throw ValidationError("manifest '" + p.string() + "': expected {schema_version, subjects:[]}");
  }
  CohortManifest m;
  std::set<std::string> seen;
  for (const auto& e : j.at("subjects")) {
    ManifestEntry entry;
    if (!e.contains("subject_id")) {
      throw ValidationError("manifest: subject entry is missing field 'subject_id'");
    }
    entry.subject_id = e.at("subject_id").get<std::string>();
    for (const char* key : {"label", "timeseries_path", "site", "sex", "age", "handedness"}) {
      require_field(e, key, entry.subject_id);
    }
    entry.label = e.at("label").get<int>();
    if (entry.label != 0 && entry.label != 1) {
      throw ValidationError("manifest: subject '" + entry.subject_id + "' label must be 0 or 1");
    }
    entry.timeseries_path = e.at("timeseries_path").get<std::string>();
    if (!e.at("site").is_null()) entry.demo.site = e.at("site").get<int>();
    if (!e.at("sex").is_null()) entry.demo.sex = e.at("sex").get<int>();
    if (!e.at("age").is_null()) entry.demo.age = e.at("age").get<double>();
    if (!e.at("handedness").is_null()) entry.demo.handedness = e.at("handedness").get<int>();
    entry.demo.validate(entry.subject_id);
    if (!seen.insert(entry.subject_id).second) {
      throw ValidationError("manifest: duplicate subject id '" + entry.subject_id + "'");
    }
    m.entries.push_back(std::move(entry));
  }
  return m;
}

void write_manifest(const fs::path& p, const CohortManifest& m) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["subjects"] = ordered_json::array();
  for (const auto& e : m.entries) {
    ordered_json s;
    s["subject_id"] = e.subject_id;
    s["label"] = e.label;
    const ordered_json d = demo_to_json(e.demo);
    s["site"] = d.at("site");
    s["sex"] = d.at("sex");
    s["age"] = d.at("age");
    s["handedness"] = d.at("handedness");
    s["timeseries_path"] = e.timeseries_path;
    j["subjects"].push_back(std::move(s));
  }
  write_text_file(p, j.dump(2) + "\n");
}

CohortData load_cohort(const fs::path& manifest_path, const ConnectomeConfig& cc) {
  const CohortManifest m = read_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();

  CohortData cohort;
  for (const auto& e : m.entries) {
    const fs::path ts_path = e.timeseries_path.empty() || fs::path(e.timeseries_path).is_absolute()
                                 ? fs::path(e.timeseries_path)
                                 : base / e.timeseries_path;
    if (!fs::exists(ts_path)) {
      throw ValidationError("manifest: subject '" + e.subject_id + "' time series not found at '" +
                            ts_path.string() + "'");
    }
    const TimeSeries ts = read_timeseries_csv(ts_path, e.subject_id);
    BrainGraph g = build_brain_graph(ts, cc);
    if (cohort.roi_names.empty()) cohort.roi_names = g.roi_names;
    SubjectData s;
    s.id = e.subject_id;
    s.label = e.label;
    s.features = std::move(g.node_features);
    s.adjacency = std::move(g.adjacency);
    cohort.subjects.push_back(std::move(s));
    cohort.demos.push_back(e.demo);
  }
  if (cohort.subjects.empty()) {
    throw ValidationError("manifest '" + manifest_path.string() + "': no subjects");
  }
  finalize_cohort(cohort);
  return cohort;
}

CohortData cohort_from_synthetic(const SyntheticCohort& syn, const ConnectomeConfig& cc) {
  CohortData cohort;
  for (std::size_t i = 0; i < syn.series.size(); ++i) {
    BrainGraph g = build_brain_graph(syn.series[i], cc);
    if (cohort.roi_names.empty()) cohort.roi_names = g.roi_names;
    SubjectData s;
    s.id = syn.ids[i];
    s.label = syn.labels[i];
    s.features = std::move(g.node_features);
    s.adjacency = std::move(g.adjacency);
    cohort.subjects.push_back(std::move(s));
    cohort.demos.push_back(syn.demos[i]);
  }
  finalize_cohort(cohort);
  return cohort;
}

void write_cohort_directory(const fs::path& dir, const SyntheticCohort& syn, bool force) {
  if (fs::exists(dir)) {
    if (!force) throw IoError("output path '" + dir.string() + "' exists (use --force)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);

  CohortManifest m;
  for (std::size_t i = 0; i < syn.series.size(); ++i) {
    const std::string rel = "timeseries/" + syn.ids[i] + ".csv";
    write_timeseries_csv(dir / rel, syn.series[i]);
    ManifestEntry e;
    e.subject_id = syn.ids[i];
    e.label = syn.labels[i];
    e.demo = syn.demos[i];
    e.timeseries_path = rel;
    m.entries.push_back(std::move(e));
  }
  write_manifest(dir / "manifest.json", m);

  ordered_json planted;
  planted["schema_version"] = kSchemaVersion;
  planted["planted_rois"] = syn.planted_rois;
  write_text_file(dir / "planted.json", planted.dump(2) + "\n");
}

void write_history_csv(const fs::path& p, const std::vector<EpochRecord>& history) {
  std::string out =
      "epoch,phase,loss_total,loss_cls,loss_subject_ib,kl_subject,loss_population_ib,"
      "kl_population,loss_struct,loss_sparse,loss_mi,alpha_site,alpha_sex,alpha_age,alpha_hand,"
      "mi_site,mi_sex,mi_age,mi_hand,val_loss\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + "," + std::to_string(r.phase);
    for (double v : {r.total, r.cls, r.subject_ib, r.subject_kl, r.population_ib,
                     r.population_kl, r.structural, r.sparsity, r.mi_weighted}) {
      out += "," + format_double(v);
    }
    for (double v : r.alpha) out += "," + format_double(v);
    for (double v : r.mi) out += "," + format_double(v);
    out += "," + format_double(r.val_loss) + "\n";
  }
  write_text_file(p, out);
}

void write_metrics_json(const fs::path& p, const CvOutcome& cv) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["folds"] = ordered_json::array();
  for (const auto& f : cv.folds) {
    j["folds"].push_back({{"fold", f.fold}, {"acc", f.test.acc}, {"auc", f.test.auc},
                          {"f1", f.test.f1}});
  }
  j["mean"] = {{"acc", cv.mean.acc}, {"auc", cv.mean.auc}, {"f1", cv.mean.f1}};
  j["std"] = {{"acc", cv.stddev.acc}, {"auc", cv.stddev.auc}, {"f1", cv.stddev.f1}};
  write_text_file(p, j.dump(2) + "\n");
}

void write_biomarkers_csv(const fs::path& p, const std::vector<BiomarkerScore>& scores,
                          const std::vector<std::string>& roi_names) {
  std::string out = "roi,score,rank\n";
  for (std::size_t rank = 0; rank < scores.size(); ++rank) {
    const auto& s = scores[rank];
    out += roi_names.at(s.roi) + "," + format_double(s.score) + "," +
           std::to_string(rank + 1) + "\n";
  }
  write_text_file(p, out);
}

void write_attention_json(const fs::path& p, const AttentionReport& rep) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["relations"] = kRelationNames;
  ordered_json alpha, mi, delta;
  for (std::size_t k = 0; k < 4; ++k) {
    alpha[kRelationNames[k]] = rep.alpha[k];
    mi[kRelationNames[k]] = rep.mi[k];
    delta[kRelationNames[k]] = rep.ablation_delta[k];
  }
  j["alpha"] = alpha;
  j["mi"] = mi;
  j["base_acc"] = rep.base_acc;
  j["ablation_delta"] = delta;
  ordered_json eq = ordered_json::array();
  for (std::size_t i = 0; i < 4; ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t k = 0; k < 4; ++k) row.push_back(rep.equivalence.at(i, k) ? 1 : 0);
    eq.push_back(row);
  }
  j["equivalence"] = eq;
  write_text_file(p, j.dump(2) + "\n");
}

void write_embeddings_csv(const fs::path& p, const std::vector<std::string>& ids,
                          const Tensor& z_h) {
  if (ids.size() != z_h.rows()) throw ShapeError("write_embeddings_csv: ids/rows mismatch");
  std::string out = "subject_id";
  for (std::size_t j = 0; j < z_h.cols(); ++j) out += ",z_" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < z_h.rows(); ++i) {
    out += ids[i];
    for (std::size_t j = 0; j < z_h.cols(); ++j) out += "," + format_double(z_h(i, j));
    out += '\n';
  }
  write_text_file(p, out);
}

void write_representations_csv(const fs::path& p, const std::vector<BiomarkerRep>& reps) {
  if (reps.empty()) throw ValidationError("write_representations_csv: empty");
  std::string out = "subject_id";
  for (std::size_t j = 0; j < reps.front().rep.cols(); ++j) out += ",t_" + std::to_string(j + 1);
  out += '\n';
  for (const auto& r : reps) {
    out += r.subject_id;
    for (std::size_t j = 0; j < r.rep.cols(); ++j) out += "," + format_double(r.rep(0, j));
    out += '\n';
  }
  write_text_file(p, out);
}

namespace {

ordered_json tensor_to_json(const Tensor& t) {
  ordered_json j;
  j["rows"] = t.rows();
  j["cols"] = t.cols();
  j["values"] = t.values();
  return j;
}

Tensor tensor_from_json(const ordered_json& j) {
  return Tensor(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("values").get<std::vector<double>>());
}

}  // namespace

void save_model(const fs::path& p, const Model& m, const PopulationState& pop,
                const RunConfig& cfg, const CohortData& cohort) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["config"] = config_to_json(cfg);
  j["feature_dim"] = m.feature_dim;
  j["demo_dim"] = m.demo_dim;
  j["subject_ids"] = cohort.ids();
  j["n_sites"] = cohort.n_sites;
  j["age_min"] = cohort.age_min;
  j["age_max"] = cohort.age_max;

  ordered_json params;
  for (const auto& param : m.params.owned()) params[param->name] = tensor_to_json(param->value);
  j["params"] = params;

  ordered_json popj;
  popj["ready"] = pop.ready;
  if (pop.ready) {
    popj["sigma_sim"] = pop.graphs.sigma_sim;
    popj["metric"] = pop.graphs.metric == DistanceMetric::Euclidean ? "euclidean" : "cosine";
    popj["mi"] = pop.mi;
    ordered_json eq = ordered_json::array();
    for (std::size_t i = 0; i < 4; ++i) {
      ordered_json row = ordered_json::array();
      for (std::size_t k = 0; k < 4; ++k) row.push_back(pop.equivalence.at(i, k) ? 1 : 0);
      eq.push_back(row);
    }
    popj["equivalence"] = eq;
    ordered_json adjs;
    for (std::size_t k = 0; k < 4; ++k) {
      adjs[kRelationNames[k]] = tensor_to_json(pop.graphs.adjacencies[k]);
    }
    popj["adjacencies"] = adjs;
  }
  j["population"] = popj;
  write_text_file(p, j.dump() + "\n");
}

LoadedModel load_model(const fs::path& p) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_text_file(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("model bundle '" + p.string() + "': " + e.what());
  }

  LoadedModel out;
  out.cfg = config_from_json(j.at("config"));
  const auto feature_dim = j.at("feature_dim").get<std::size_t>();
  const auto demo_dim = j.at("demo_dim").get<std::size_t>();
  out.subject_ids = j.at("subject_ids").get<std::vector<std::string>>();

  out.model = Model::create(out.cfg.model, feature_dim, demo_dim, out.cfg.train, out.cfg.seed);
  for (const auto& param : out.model->params.owned()) {
    if (!j.at("params").contains(param->name)) {
      throw ValidationError("model bundle: missing parameter '" + param->name + "'");
    }
    Tensor v = tensor_from_json(j.at("params").at(param->name));
    if (!v.same_shape(param->value)) {
      throw ValidationError("model bundle: parameter '" + param->name + "' has shape " +
                            v.shape_str() + ", expected " + param->value.shape_str());
    }
    param->value = std::move(v);
  }

  const auto& popj = j.at("population");
  out.pop.ready = popj.at("ready").get<bool>();
  if (out.pop.ready) {
    out.pop.graphs.sigma_sim = popj.at("sigma_sim").get<double>();
    out.pop.graphs.metric = popj.at("metric").get<std::string>() == "cosine"
                                ? DistanceMetric::Cosine
                                : DistanceMetric::Euclidean;
    out.pop.graphs.subject_order = out.subject_ids;
    out.pop.mi = popj.at("mi").get<std::array<double, 4>>();
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t k = 0; k < 4; ++k) {
        out.pop.equivalence.s[i][k] =
            popj.at("equivalence").at(i).at(k).get<int>() != 0 ? 1 : 0;
      }
    }
    for (std::size_t k = 0; k < 4; ++k) {
      out.pop.graphs.adjacencies[k] =
          tensor_from_json(popj.at("adjacencies").at(kRelationNames[k]));
    }
  }
  return out;
}

}  // namespace ibg
