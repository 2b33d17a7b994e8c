#include <cmath>
#include <fstream>
#include <set>

#include "io.hpp"
#include "json.hpp"

namespace avds {
namespace {

using json = nlohmann::ordered_json;

// Rejects keys outside `allowed`, naming the offending key and section.
void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  require(obj.is_object(), ErrorCode::Parse, where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    require(allowed.count(it.key()) == 1, ErrorCode::Parse,
            "unknown key '" + it.key() + "' in " + where);
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, where + "." + key + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  return obj.contains(key) ? get<T>(obj, key, where) : fallback;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

MaskMode parse_mode(const std::string& text) {
  if (text == "distinct") return MaskMode::DistinctUntilBudget;
  if (text == "iid") return MaskMode::IidWithReplacement;
  fail(ErrorCode::Parse, "unknown mask mode '" + text + "' (expected distinct or iid)");
}

void parse_weights(const json& w, const std::filesystem::path& base, ExperimentConfig& cfg) {
  const std::string where = "weights";
  const auto source = get<std::string>(w, "source", where);
  WeightConfig& wc = cfg.weights;
  if (source == "uniform") {
    check_keys(w, {"source", "sparsity"}, where);
    wc.source = WeightSource::Uniform;
    wc.sparsity = get<double>(w, "sparsity", where);
  } else if (source == "levels") {
    check_keys(w, {"source", "sparsity", "decay", "asymmetry"}, where);
    wc.source = WeightSource::Levels;
    wc.sparsity = get<double>(w, "sparsity", where);
    wc.decay = get_or<double>(w, "decay", 1.0, where);
    wc.asymmetry = get_or<double>(w, "asymmetry", 1.0, where);
  } else if (source == "file") {
    check_keys(w, {"source", "path"}, where);
    wc.source = WeightSource::File;
    wc.values = read_tensor(resolve(base, get<std::string>(w, "path", where))).as_real();
  } else if (source == "corpus") {
    check_keys(w, {"source", "dir", "threshold", "relative"}, where);
    wc.source = WeightSource::Corpus;
    wc.corpus = load_corpus(resolve(base, get<std::string>(w, "dir", where)), cfg.spec);
    wc.threshold = get<double>(w, "threshold", where);
    wc.threshold_mode = get_or<bool>(w, "relative", false, where) ? ThresholdMode::RelativeToMax
                                                                  : ThresholdMode::Absolute;
  } else {
    fail(ErrorCode::Parse,
         "weights.source '" + source + "' is not one of uniform, levels, file, corpus");
  }
}

json finite_or_string(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json embed_config(const std::string& config_json) {
  if (config_json.empty()) return nullptr;
  return json::parse(config_json);
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::Parse, std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc,
             {"schema_version", "spec", "partition", "weights", "estimation", "densities",
              "fraction", "m", "mode", "trials", "seed", "threads", "flip", "polynomial_exponent",
              "magnitude_spread", "test_image", "peak", "solver", "report", "diagnostics",
              "phase_transition"},
             "config");
  RunConfig rc;
  rc.schema_version = get_or<int>(doc, "schema_version", 1, "config");
  require(rc.schema_version == 1, ErrorCode::Parse,
          "unsupported config schema_version " + std::to_string(rc.schema_version));
  rc.source_text = doc.dump();

  ExperimentConfig& cfg = rc.experiment;
  cfg.spec = parse_operator_spec(get<std::string>(doc, "spec", "config"));
  cfg.partition = get_or<std::string>(doc, "partition", "singletons", "config");
  parse_weights(doc.contains("weights") ? doc.at("weights") : json{{"source", "uniform"}}, base_dir,
                cfg);

  if (doc.contains("estimation")) {
    const json& e = doc.at("estimation");
    check_keys(e, {"corpus_size", "floor", "threshold"}, "estimation");
    cfg.estimation.size = get<std::size_t>(e, "corpus_size", "estimation");
    cfg.estimation.floor = get_or<double>(e, "floor", cfg.estimation.floor, "estimation");
    cfg.estimation.threshold = get_or<double>(e, "threshold", cfg.estimation.threshold, "estimation");
  }
  if (doc.contains("densities")) {
    cfg.densities.clear();
    for (const auto& d : get<std::vector<std::string>>(doc, "densities", "config"))
      cfg.densities.push_back(parse_compared_density(d));
  }
  cfg.fraction = get_or<double>(doc, "fraction", cfg.fraction, "config");
  cfg.m = get_or<std::size_t>(doc, "m", 0, "config");
  cfg.mode = parse_mode(get_or<std::string>(doc, "mode", "distinct", "config"));
  cfg.trials = get_or<int>(doc, "trials", cfg.trials, "config");
  cfg.seed = get_or<std::uint64_t>(doc, "seed", cfg.seed, "config");
  cfg.threads = get_or<int>(doc, "threads", cfg.threads, "config");
  cfg.flip = get_or<bool>(doc, "flip", false, "config");
  cfg.polynomial_exponent = get_or<double>(doc, "polynomial_exponent", 2.5, "config");
  cfg.magnitude_spread = get_or<double>(doc, "magnitude_spread", 0.0, "config");
  cfg.peak = get_or<double>(doc, "peak", 0.0, "config");
  if (doc.contains("test_image")) {
    const Image img = read_pgm(resolve(base_dir, get<std::string>(doc, "test_image", "config")));
    require(img.rows == cfg.spec.side && img.cols == cfg.spec.side && cfg.spec.is_2d(),
            ErrorCode::DimensionMismatch,
            "test image is " + std::to_string(img.rows) + "x" + std::to_string(img.cols) +
                ", operator expects " + std::to_string(cfg.spec.side) + "x" +
                std::to_string(cfg.spec.side));
    cfg.test_image = img.column_major();
  }
  if (doc.contains("solver")) {
    const json& s = doc.at("solver");
    check_keys(s, {"continuation_steps", "mu_final_relative", "tolerance", "max_inner_iterations"},
               "solver");
    SolverParams& p = cfg.solver;
    p.continuation_steps = get_or<int>(s, "continuation_steps", p.continuation_steps, "solver");
    p.mu_final_relative = get_or<double>(s, "mu_final_relative", p.mu_final_relative, "solver");
    p.tolerance = get_or<double>(s, "tolerance", p.tolerance, "solver");
    p.max_inner_iterations =
        get_or<int>(s, "max_inner_iterations", p.max_inner_iterations, "solver");
  }
  if (doc.contains("report")) {
    const json& r = doc.at("report");
    check_keys(r, {"path", "figures", "include_densities", "include_masks", "timing"}, "report");
    if (r.contains("path")) rc.report_path = resolve(base_dir, get<std::string>(r, "path", "report"));
    if (r.contains("figures"))
      rc.figures_dir = resolve(base_dir, get<std::string>(r, "figures", "report"));
    cfg.include_densities = get_or<bool>(r, "include_densities", true, "report");
    cfg.include_masks = get_or<bool>(r, "include_masks", true, "report");
    cfg.timing = get_or<bool>(r, "timing", false, "report");
  }
  if (doc.contains("diagnostics")) {
    const json& d = doc.at("diagnostics");
    check_keys(d, {"density", "m", "draws", "epsilon"}, "diagnostics");
    DiagnosticsOptions opt;
    opt.density = parse_compared_density(get_or<std::string>(d, "density", "adapted", "diagnostics"));
    opt.m_values = get<std::vector<std::size_t>>(d, "m", "diagnostics");
    opt.draws = get_or<int>(d, "draws", opt.draws, "diagnostics");
    opt.epsilon = get_or<double>(d, "epsilon", opt.epsilon, "diagnostics");
    rc.diagnostics = opt;
  }
  if (doc.contains("phase_transition")) {
    const json& p = doc.at("phase_transition");
    const std::string where = "phase_transition";
    check_keys(p, {"m_start", "m_step", "m_stop", "trials", "success_tolerance", "target",
                   "stop_at_target"},
               where);
    PhaseTransitionOptions opt;
    opt.m_start = get<std::size_t>(p, "m_start", where);
    opt.m_step = get<std::size_t>(p, "m_step", where);
    opt.m_stop = get<std::size_t>(p, "m_stop", where);
    opt.trials = get_or<int>(p, "trials", opt.trials, where);
    opt.success_tolerance = get_or<double>(p, "success_tolerance", opt.success_tolerance, where);
    opt.target = get_or<double>(p, "target", opt.target, where);
    opt.stop_at_target = get_or<bool>(p, "stop_at_target", opt.stop_at_target, where);
    rc.phase = opt;
  }
  validate(cfg);
  return rc;
}

RunConfig read_run_config(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const std::string text(bytes.begin(), bytes.end());
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  try {
    return parse_run_config(text, base);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Parse) fail(ErrorCode::Parse, path.string() + ": " + e.what());
    throw;
  }
}

DiagnosticsConfig make_diagnostics_config(const RunConfig& rc) {
  require(rc.diagnostics.has_value(), ErrorCode::InvalidArgument,
          "config has no diagnostics section");
  const ExperimentConfig& cfg = rc.experiment;
  const Operator op(cfg.spec);
  const BlockPartition partition = BlockPartition::parse(cfg.partition, op.size(), cfg.spec.side);
  const ResolvedWeights w = resolve_weights(cfg);
  DiagnosticsConfig d;
  d.spec = cfg.spec;
  d.partition = cfg.partition;
  d.weights = w.truth;
  d.pi = compute_density(rc.diagnostics->density, op, partition, w.density, cfg.polynomial_exponent).pi;
  d.m_values = rc.diagnostics->m_values;
  d.draws = rc.diagnostics->draws;
  d.seed = cfg.seed;
  d.epsilon = rc.diagnostics->epsilon;
  return d;
}

PhaseTransitionConfig make_phase_transition_config(const RunConfig& rc) {
  require(rc.phase.has_value(), ErrorCode::InvalidArgument,
          "config has no phase_transition section");
  PhaseTransitionConfig p;
  p.base = rc.experiment;
  p.m_start = rc.phase->m_start;
  p.m_step = rc.phase->m_step;
  p.m_stop = rc.phase->m_stop;
  p.trials = rc.phase->trials;
  p.success_tolerance = rc.phase->success_tolerance;
  p.target = rc.phase->target;
  p.stop_at_target = rc.phase->stop_at_target;
  return p;
}

std::string report_to_json(const ExperimentReport& report, const std::string& config_json) {
  const ExperimentConfig& cfg = report.config;
  json out;
  out["schema_version"] = kReportSchemaVersion;
  out["report"] = "experiment";
  out["config"] = embed_config(config_json);
  out["resolved"] = {
      {"spec", to_string(cfg.spec)},
      {"partition", report.partition_name},
      {"budget_blocks", report.budget},
      {"weight_sum", report.weight_sum},
      {"mode", cfg.mode == MaskMode::DistinctUntilBudget ? "distinct" : "iid"},
      {"trials", cfg.trials},
      {"master_seed", cfg.seed},
      {"flip", cfg.flip},
      {"psnr_peak", cfg.peak > 0.0 ? json(cfg.peak) : json("max_abs_reference")},
      {"psnr_domain", "image"},
  };

  json summaries = json::array();
  for (const KindSummary& s : report.summaries) {
    summaries.push_back({{"density", to_string(s.kind)},
                         {"mean_psnr", finite_or_string(s.mean_psnr)},
                         {"sd_psnr", finite_or_string(s.sd_psnr)},
                         {"mean_relative_error", finite_or_string(s.mean_relative_error)},
                         {"nonconverged", s.nonconverged}});
  }
  out["summary"] = summaries;

  json trials = json::array();
  for (const TrialRecord& t : report.trials) {
    json results = json::array();
    for (const KindTrial& k : t.kinds) {
      json r = {{"density", to_string(k.kind)},
                {"mask_seed", k.mask_seed},
                {"psnr", finite_or_string(k.psnr)},
                {"relative_error", finite_or_string(k.relative_error)},
                {"converged", k.converged},
                {"iterations", k.iterations},
                {"measured_fraction", k.measured_fraction}};
      if (cfg.include_masks) r["mask"] = k.mask;
      results.push_back(std::move(r));
    }
    trials.push_back({{"trial", t.trial},
                      {"signal_seed", t.signal_seed},
                      {"support_size", t.support_size},
                      {"results", std::move(results)}});
  }
  out["trials"] = std::move(trials);

  if (cfg.include_densities) {
    json dens = json::object();
    for (const KindSummary& s : report.summaries) dens[to_string(s.kind)] = s.density;
    out["densities"] = std::move(dens);
  }
  if (report.elapsed_seconds) out["timing"] = {{"elapsed_seconds", *report.elapsed_seconds}};
  return out.dump(1) + "\n";
}

std::string diagnostics_to_json(const Diagnostics& d, const std::string& config_json) {
  json out;
  out["schema_version"] = kReportSchemaVersion;
  out["report"] = "diagnostics";
  out["config"] = embed_config(config_json);
  out["coherence_ratio"] = finite_or_string(d.coherence_ratio);
  out["gram_ratio"] = finite_or_string(d.gram_ratio);
  out["m_threshold"] = {
      {"coherence", finite_or_string(d.m_threshold_coherence)},
      {"gram", finite_or_string(d.m_threshold_gram)},
      {"coherence_explicit", finite_or_string(d.m_threshold_coherence_explicit)},
      {"gram_explicit", finite_or_string(d.m_threshold_gram_explicit)},
  };
  json points = json::array();
  for (const DiagnosticsPoint& p : d.points)
    points.push_back({{"m", p.m},
                      {"mu", finite_or_string(p.mu)},
                      {"lambda_mean", finite_or_string(p.lambda_mean)},
                      {"lambda_max", finite_or_string(p.lambda_max)},
                      {"gram_tail", p.gram_tail},
                      {"gram_deviation_mean", p.gram_deviation_mean}});
  out["points"] = std::move(points);
  return out.dump(1) + "\n";
}

std::string phase_transition_to_json(const PhaseTransitionTable& t,
                                     const std::string& config_json) {
  json out;
  out["schema_version"] = kReportSchemaVersion;
  out["report"] = "phase_transition";
  out["config"] = embed_config(config_json);
  json kinds = json::array();
  for (ComparedDensity k : t.kinds) kinds.push_back(to_string(k));
  out["densities"] = kinds;
  json rows = json::array();
  for (const PhaseTransitionRow& r : t.rows) {
    json success = json::array();
    for (double s : r.success) success.push_back(finite_or_string(s));
    rows.push_back({{"m", r.m}, {"success", std::move(success)}});
  }
  out["rows"] = std::move(rows);
  json first = json::object();
  for (std::size_t d = 0; d < t.kinds.size(); ++d)
    first[to_string(t.kinds[d])] =
        t.first_reaching_target[d] ? json(*t.first_reaching_target[d]) : json(nullptr);
  out["first_m_reaching_target"] = std::move(first);
  return out.dump(1) + "\n";
}

void write_report_figures(const ExperimentReport& report, const std::filesystem::path& dir) {
  const ExperimentConfig& cfg = report.config;
  require(cfg.spec.is_2d(), ErrorCode::Unsupported, "figures need a 2D operator");
  require(cfg.include_densities, ErrorCode::InvalidArgument,
          "figures need densities in the report");
  std::filesystem::create_directories(dir);
  const std::size_t n = cfg.spec.side;
  const BlockPartition partition = BlockPartition::parse(cfg.partition, n * n, n);
  for (std::size_t d = 0; d < report.summaries.size(); ++d) {
    const KindSummary& s = report.summaries[d];
    const std::string name = to_string(s.kind);
    RVec per_row(n * n, 0.0);
    for (std::size_t k = 0; k < partition.count(); ++k)
      for (std::size_t idx : partition.block(k)) per_row[idx] = s.density[k];
    write_pgm(dir / ("density_" + name + ".pgm"), log_scale_image(per_row, n, n));
    if (cfg.include_masks && !report.trials.empty()) {
      RVec mask(n * n, 0.0);
      for (std::size_t k : report.trials.front().kinds[d].mask)
        for (std::size_t idx : partition.block(k)) mask[idx] = 1.0;
      write_pgm(dir / ("mask_" + name + ".pgm"), Image::from_column_major(mask, n, n));
    }
  }
}

}  // namespace avds
