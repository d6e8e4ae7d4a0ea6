#include "lfpca/cli/commands.hpp"

#include "lfpca/cli/model_io.hpp"
#include "lfpca/csv.hpp"
#include "lfpca/error.hpp"
#include "lfpca/panel_file.hpp"
#include "lfpca/parallel.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

namespace lfpca::cli {
namespace fs = std::filesystem;

namespace {

constexpr double kSliceBytes = 256.0 * 1024 * 1024;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Index default_slice_count(Index p, Index n) {
  const Index rows = std::max<Index>(1, static_cast<Index>(kSliceBytes / (8.0 * std::max<Index>(n, 1))));
  return std::max<Index>(1, (p + rows - 1) / rows);
}

void require_file(const std::string& path, const std::string& what) {
  require(!path.empty(), ErrorKind::validation, what + " is required");
  require(fs::is_regular_file(path), ErrorKind::validation, what + " not found: " + path);
}

std::optional<Index> parse_order(const std::string& text, const char* flag) {
  if (text == "auto") return std::nullopt;
  long long value = 0;
  try {
    value = parse_integer(text, flag);
  } catch (const Error&) {
    fail(ErrorKind::validation, std::string(flag) + " must be a positive integer or 'auto', got '" + text + "'");
  }
  require(value >= 1, ErrorKind::validation,
          std::string(flag) + " must be >= 1 or 'auto', got " + text);
  return static_cast<Index>(value);
}

void check_fraction(double value, const char* flag) {
  require(value > 0.0 && value <= 1.0, ErrorKind::validation,
          std::string(flag) + " must lie in (0, 1]");
}

// Re-slices a file panel: explicit request, else the stored layout when its
// slices fit the memory budget, else the default budget.
DataPanel sliced(const DataPanel& panel, std::optional<Index> slices) {
  if (slices) {
    require(*slices >= 1, ErrorKind::validation, "--slices must be >= 1");
    return panel.with_slices(std::min(*slices, std::max<Index>(panel.p(), 1)));
  }
  const double stored = static_cast<double>(panel.layout().max_slice_rows()) * 8.0 * static_cast<double>(panel.n());
  if (stored <= kSliceBytes) return panel;
  return panel.with_slices(default_slice_count(panel.p(), panel.n()));
}

void add_threads(CLI::App& app, std::optional<int>& threads) {
  app.add_option("--threads", threads, "Worker threads (default: LFPCA_THREADS, else all cores)")
      ->check(CLI::PositiveNumber);
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string data;
  std::string meta;
  std::string out;
  std::string nx = "auto";
  std::string nw = "auto";
  double var_threshold = 0.9;
  double rank_threshold = 0.9999;
  std::string rank = "full";
  std::optional<Index> slices;
  std::string model = "general";
  std::string backend = "dense";
  std::uint64_t power_seed = PowerIterationOptions{}.seed;
  bool no_normalize = false;
  std::optional<int> threads;
};

void setup_fit(CLI::App& app, FitArgs& a) {
  app.add_option("--data", a.data, "Panel file (.lfpb)")->required();
  app.add_option("--meta", a.meta, "Visit metadata CSV")->required();
  app.add_option("--out", a.out, "Output directory")->required();
  app.add_option("--nx", a.nx, "Subject-level components: N or auto");
  app.add_option("--nw", a.nw, "Visit-level components: N or auto");
  app.add_option("--var-threshold", a.var_threshold,
                 "Spectrum mass reached by automatically chosen orders");
  app.add_option("--rank", a.rank, "Retained rank: full, auto or N");
  app.add_option("--rank-threshold", a.rank_threshold, "Gram eigenvalue mass kept by --rank auto");
  app.add_option("--slices", a.slices, "Row slices used to stream the panel");
  app.add_option("--model", a.model, "Moment model: general or intercept-slope")
      ->check(CLI::IsMember({"general", "intercept-slope"}));
  app.add_option("--backend", a.backend, "Gram eigensolver: dense or power")
      ->check(CLI::IsMember({"dense", "power"}));
  app.add_option("--power-seed", a.power_seed, "Start-block seed of the power backend");
  app.add_flag("--no-normalize", a.no_normalize, "Use the covariates as given");
  add_threads(app, a.threads);
}

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  FitOptions options;
  options.orders.nx = parse_order(a.nx, "--nx");
  options.orders.nw = parse_order(a.nw, "--nw");
  check_fraction(a.var_threshold, "--var-threshold");
  check_fraction(a.rank_threshold, "--rank-threshold");
  options.orders.threshold = a.var_threshold;
  options.rank.threshold = a.rank_threshold;
  if (a.rank == "auto") {
    options.auto_rank = true;
  } else if (a.rank != "full") {
    options.rank.rank = parse_order(a.rank, "--rank");
    require(options.rank.rank.has_value(), ErrorKind::validation, "--rank must be full, auto or N");
  }
  options.form = a.model == "intercept-slope" ? ModelForm::intercept_slope : ModelForm::general;
  options.backend = a.backend == "power" ? GramBackend::power : GramBackend::dense;
  options.power.seed = a.power_seed;
  options.normalize_covariates = !a.no_normalize;
  options.threads = resolve_threads(a.threads);

  require_file(a.data, "panel file");
  require_file(a.meta, "metadata file");
  const StudyDesign design = read_metadata_csv(a.meta);
  const DataPanel panel = sliced(open_panel(a.data), a.slices);
  require(panel.n() == design.total_visits(), ErrorKind::validation,
          "panel has " + std::to_string(panel.n()) + " columns but the metadata lists " +
              std::to_string(design.total_visits()) + " visits");
  const double read_seconds = seconds_since(start);

  const auto fit_start = Clock::now();
  const FitResult fit = fit_model(panel, design, options);
  const double fit_seconds = seconds_since(fit_start);

  FitArtifacts artifacts;
  artifacts.config = {{"nx", a.nx},
                      {"nw", a.nw},
                      {"var_threshold", a.var_threshold},
                      {"rank", a.rank},
                      {"rank_threshold", a.rank_threshold},
                      {"slices", panel.slice_count()},
                      {"model", a.model},
                      {"backend", a.backend},
                      {"power_seed", a.power_seed},
                      {"normalize", !a.no_normalize},
                      {"threads", options.threads},
                      {"order_cap", options.orders.cap},
                      {"rank_epsilon", kRankEpsilon},
                      {"blup_condition_limit", kBlupConditionLimit}};
  artifacts.inputs = {{"data", {{"path", a.data}, {"sha256", sha256_file(a.data)}}},
                      {"meta", {{"path", a.meta}, {"sha256", sha256_file(a.meta)}}}};
  const auto write_start = Clock::now();
  artifacts.timing = {{"read_seconds", read_seconds}, {"fit_seconds", fit_seconds}};
  write_fit_directory(a.out, fit, artifacts);
  // the manifest is rewritten once the output time is known
  json manifest = read_json(fs::path(a.out) / "manifest.json");
  manifest["timing"]["write_seconds"] = seconds_since(write_start);
  manifest["timing"]["total_seconds"] = seconds_since(start);
  write_json(fs::path(a.out) / "manifest.json", manifest);

  const FittedModel& m = fit.model;
  out << "fit: p=" << m.p << " n=" << design.total_visits() << " r=" << m.r << " N_X=" << m.nx()
      << " N_W=" << m.nw() << " sigma2=" << format_double(m.sigma2)
      << " clipped=" << m.clipped_count << " -> " << a.out << '\n';
  if (m.clipped_count > 0)
    out << "warning: " << m.clipped_count << " retained eigenvalue(s) were negative and set to 0\n";
  if (fit.scores && fit.scores->any_rank_deficient())
    out << "warning: some subjects have a rank-deficient score system; minimum-norm scores written\n";
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario = "1";
  std::optional<Index> p;
  std::optional<double> sigma2;
  std::uint64_t seed = 1;
  long long reps = 1;
  std::string out;
  std::optional<Index> slices;
  std::optional<std::string> law;
  std::optional<Index> subjects;
  std::optional<Index> visits;
  std::string model;
  std::string meta;
};

void setup_simulate(CLI::App& app, SimulateArgs& a) {
  app.add_option("--scenario", a.scenario, "1, 2 or model")
      ->check(CLI::IsMember({"1", "2", "model"}));
  app.add_option("--p", a.p, "Voxels (scenario 1)");
  app.add_option("--sigma2", a.sigma2, "White-noise variance");
  app.add_option("--seed", a.seed, "Base seed; replication i uses seed + i");
  app.add_option("--reps", a.reps, "Replications");
  app.add_option("--out", a.out, "Output directory")->required();
  app.add_option("--slices", a.slices, "Row slices of the written panels");
  app.add_option("--law", a.law, "Score law: normal, mixture or zero");
  app.add_option("--subjects", a.subjects, "Subjects (scenarios 1 and 2)");
  app.add_option("--visits", a.visits, "Visits per subject (scenarios 1 and 2)");
  app.add_option("--model", a.model, "Fit directory used as the generating model");
  app.add_option("--meta", a.meta, "Template design for --scenario model (default: the fit's design)");
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  require(a.reps >= 1, ErrorKind::validation, "--reps must be >= 1");
  require(!a.sigma2 || *a.sigma2 >= 0.0, ErrorKind::validation, "--sigma2 must be >= 0");
  require(!a.subjects || *a.subjects >= 1, ErrorKind::validation, "--subjects must be >= 1");
  require(!a.visits || *a.visits >= 1, ErrorKind::validation, "--visits must be >= 1");
  std::optional<ScoreLaw> law;
  if (a.law) law = parse_law(*a.law);

  std::optional<SavedModel> model;
  StudyDesign template_design;
  if (a.scenario == "model") {
    require(!a.model.empty(), ErrorKind::validation, "--scenario model needs --model DIR");
    require(!a.p, ErrorKind::validation, "--p is fixed by the model");
    model = load_model(a.model);
    if (a.meta.empty()) {
      template_design = read_metadata_csv(fs::path(a.model) / "design.csv");
    } else {
      require_file(a.meta, "metadata file");
      const StudyDesign raw = read_metadata_csv(a.meta);
      require(raw.q() == model->model.q, ErrorKind::validation,
              "template design has q=" + std::to_string(raw.q()) + " but the model has q=" +
                  std::to_string(model->model.q));
      template_design = raw.with_covariates(model->transform.apply(raw.stacked_covariates()));
    }
  } else {
    require(a.model.empty() && a.meta.empty(), ErrorKind::validation,
            "--model and --meta apply to --scenario model only");
    require(a.scenario == "1" || !a.p || *a.p == kScenario2Voxels, ErrorKind::validation,
            "scenario 2 has a fixed lattice of " + std::to_string(kScenario2Voxels) + " voxels");
    require(!a.p || *a.p >= 2, ErrorKind::validation, "--p must be >= 2");
  }

  const fs::path root(a.out);
  fs::create_directories(root);
  const int width = std::max(3, static_cast<int>(std::to_string(a.reps - 1).size()));
  json names = json::array();
  Index p = 0;
  double sigma2 = 0.0;
  ScoreLaw used_law = ScoreLaw::normal;
  for (long long i = 0; i < a.reps; ++i) {
    const std::uint64_t seed = derive_seed(a.seed, static_cast<std::uint64_t>(i));
    SimulatedStudy study;
    if (model) {
      ModelSimulationOptions options;
      options.law = law.value_or(ScoreLaw::mixture);
      options.sigma2 = a.sigma2.value_or(0.0);
      options.seed = seed;
      study = generate_from_model(model->model, template_design, options);
    } else {
      ScenarioSpec spec = a.scenario == "1" ? scenario1_spec(a.p.value_or(750), a.sigma2.value_or(1e-4), seed)
                                            : scenario2_spec(seed);
      if (a.scenario == "2" && a.sigma2) spec.sigma2 = *a.sigma2;
      if (law) spec.law = *law;
      if (a.subjects) spec.subjects = *a.subjects;
      if (a.visits) spec.visits = *a.visits;
      study = spec.scenario == 1 ? generate_scenario1(spec) : generate_scenario2(spec);
    }
    p = study.panel.p();
    sigma2 = study.truth.sigma2;
    used_law = study.truth.law;
    std::string index = std::to_string(i);
    const std::string name = "rep_" + std::string(static_cast<std::size_t>(width) - std::min(index.size(), static_cast<std::size_t>(width)), '0') + index;
    json extra = {{"replicate", i}, {"base_seed", a.seed}};
    if (model) extra["model"] = a.model;
    const Index slices = a.slices ? std::min(std::max<Index>(*a.slices, 1), p)
                                  : default_slice_count(p, study.panel.n());
    write_replicate_directory(root / name, study, extra, slices);
    names.push_back(name);
  }

  json manifest = {{"kind", "simulation"},
                   {"command", "simulate"},
                   {"version", kVersion},
                   {"scenario", a.scenario},
                   {"p", p},
                   {"sigma2", sigma2},
                   {"law", law_name(used_law)},
                   {"seed", a.seed},
                   {"reps", a.reps},
                   {"rng", "mt19937_64"},
                   {"replicates", names}};
  write_json(root / "manifest.json", manifest);
  out << "simulate: scenario " << a.scenario << ", " << a.reps << " replication(s), p=" << p
      << " -> " << a.out << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string truth;
  std::string fit;
  std::string out;
};

void setup_evaluate(CLI::App& app, EvaluateArgs& a) {
  app.add_option("--truth", a.truth, "Simulation or replication directory")->required();
  app.add_option("--fit", a.fit, "Fit directory, or a directory of fits named like the replications")
      ->required();
  app.add_option("--out", a.out, "Metrics CSV")->required();
}

std::string kind_of(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.json";
  if (!fs::is_regular_file(manifest)) return "";
  return read_json(manifest).value("kind", "");
}

// Three decimals with trailing zeros removed, the layout of published tables.
std::string table_number(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.3f", value);
  std::string s = buffer;
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const fs::path truth_root(a.truth);
  const fs::path fit_root(a.fit);
  require(fs::is_directory(truth_root), ErrorKind::validation, "truth directory not found: " + a.truth);
  require(fs::is_directory(fit_root), ErrorKind::validation, "fit directory not found: " + a.fit);

  std::vector<std::pair<std::string, std::pair<fs::path, fs::path>>> pairs;
  const std::string truth_kind = kind_of(truth_root);
  if (truth_kind == "replicate") {
    require(kind_of(fit_root) == "fit", ErrorKind::validation,
            "fit directory " + a.fit + " has no fit manifest");
    pairs.push_back({truth_root.filename().string(), {truth_root, fit_root}});
  } else if (truth_kind == "simulation") {
    const json manifest = read_json(truth_root / "manifest.json");
    for (const auto& name : manifest.at("replicates")) {
      const std::string rep = name.get<std::string>();
      const fs::path fit_dir = fit_root / rep;
      require(kind_of(fit_dir) == "fit", ErrorKind::validation,
              "no fit for replication " + rep + " in " + a.fit);
      pairs.push_back({rep, {truth_root / rep, fit_dir}});
    }
    require(!pairs.empty(), ErrorKind::validation, "simulation lists no replications");
  } else {
    fail(ErrorKind::validation, a.truth + " is neither a simulation nor a replication directory");
  }

  std::vector<std::string> header{"replicate"};
  std::vector<std::vector<double>> rows;
  Index blocks = -1, nx = -1, nw = -1;
  for (const auto& [name, dirs] : pairs) {
    const GroundTruth truth = load_truth(dirs.first);
    const FittedComponents fitted = load_components(dirs.second);
    require(fitted.phi_x.front().rows() == truth.phi_w.rows(), ErrorKind::validation,
            name + ": fitted p=" + std::to_string(fitted.phi_x.front().rows()) + " but truth p=" +
                std::to_string(truth.phi_w.rows()));
    if (blocks < 0) {
      blocks = static_cast<Index>(truth.phi_x.size());
      nx = truth.nx();
      nw = truth.nw();
      for (Index k = 0; k < blocks; ++k)
        for (Index m = 1; m <= nx; ++m) header.push_back("phi_x" + std::to_string(k) + "_" + std::to_string(m));
      for (Index l = 1; l <= nw; ++l) header.push_back("phi_w_" + std::to_string(l));
      for (Index m = 1; m <= nx; ++m) header.push_back("lambda_x_" + std::to_string(m));
      for (Index l = 1; l <= nw; ++l) header.push_back("lambda_w_" + std::to_string(l));
      for (Index m = 1; m <= nx; ++m) header.push_back("xi_" + std::to_string(m) + "_median");
      for (Index l = 1; l <= nw; ++l) header.push_back("zeta_" + std::to_string(l) + "_median");
    }
    require(static_cast<Index>(truth.phi_x.size()) == blocks && truth.nx() == nx && truth.nw() == nw,
            ErrorKind::validation, name + ": replication dimensions differ from the first one");
    require(fitted.scores.has_value(), ErrorKind::validation, name + ": fit has no scores.csv");
    const EvaluationMetrics metrics = evaluate(truth, fitted);
    std::vector<double> row;
    for (Index k = 0; k < blocks; ++k)
      for (Index m = 0; m < nx; ++m) row.push_back(metrics.x_distance(k, m));
    for (Index l = 0; l < nw; ++l) row.push_back(metrics.w_distance(l));
    for (Index m = 0; m < nx; ++m) row.push_back(metrics.x_eigen_error(m));
    for (Index l = 0; l < nw; ++l) row.push_back(metrics.w_eigen_error(l));
    for (const auto& e : metrics.xi_errors) row.push_back(e.quantiles[2]);
    for (const auto& e : metrics.zeta_errors) row.push_back(e.quantiles[2]);
    rows.push_back(std::move(row));
  }

  std::ofstream csv(a.out);
  require(static_cast<bool>(csv), ErrorKind::io, "cannot write " + a.out);
  for (std::size_t c = 0; c < header.size(); ++c) csv << (c ? "," : "") << header[c];
  csv << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    csv << pairs[r].first;
    for (double v : rows[r]) csv << ',' << format_double(v);
    csv << '\n';
  }
  csv << "mean (sd)";
  const std::size_t columns = header.size() - 1;
  const double count = static_cast<double>(rows.size());
  for (std::size_t c = 0; c < columns; ++c) {
    double mean = 0.0;
    for (const auto& row : rows) mean += row[c];
    mean /= count;
    double ss = 0.0;
    for (const auto& row : rows) ss += (row[c] - mean) * (row[c] - mean);
    const double sd = rows.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
    csv << ',' << table_number(mean) << " (" << table_number(sd) << ')';
  }
  csv << '\n';
  csv.flush();
  require(static_cast<bool>(csv), ErrorKind::io, "write failed: " + a.out);
  out << "evaluate: " << rows.size() << " replication(s) -> " << a.out << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- scores

struct ScoresArgs {
  std::string model;
  std::string data;
  std::string meta;
  std::string out;
  std::optional<Index> slices;
  std::optional<int> threads;
};

void setup_scores(CLI::App& app, ScoresArgs& a) {
  app.add_option("--model", a.model, "Fit directory")->required();
  app.add_option("--data", a.data, "Panel file (.lfpb)")->required();
  app.add_option("--meta", a.meta, "Visit metadata CSV with raw covariates")->required();
  app.add_option("--out", a.out, "Scores CSV")->required();
  app.add_option("--slices", a.slices, "Row slices used to stream the panel");
  add_threads(app, a.threads);
}

int cmd_scores(const ScoresArgs& a, std::ostream& out) {
  require(fs::is_directory(a.model), ErrorKind::validation, "model directory not found: " + a.model);
  require_file(a.data, "panel file");
  require_file(a.meta, "metadata file");
  const SavedModel saved = load_model(a.model);
  const DataPanel raw = sliced(open_panel(a.data), a.slices);
  require(raw.p() == saved.model.p, ErrorKind::validation,
          "panel has p=" + std::to_string(raw.p()) + " but the model has p=" +
              std::to_string(saved.model.p));
  const StudyDesign raw_design = read_metadata_csv(a.meta);
  require(raw_design.q() == saved.model.q, ErrorKind::validation,
          "metadata has q=" + std::to_string(raw_design.q()) + " but the model has q=" +
              std::to_string(saved.model.q));
  require(raw.n() == raw_design.total_visits(), ErrorKind::validation,
          "panel has " + std::to_string(raw.n()) + " columns but the metadata lists " +
              std::to_string(raw_design.total_visits()) + " visits");
  const StudyDesign design =
      raw_design.with_covariates(saved.transform.apply(raw_design.stacked_covariates()));

  auto mean = std::make_shared<const Vector>(*saved.model.mean);
  const DataPanel centered(std::make_shared<CenteredSource>(raw.source(), mean), *mean, true);
  const int threads = resolve_threads(a.threads);
  const ScorePanel scores = solve_scores(lifted_score_system(saved.model, centered, threads), design);
  write_scores_csv(a.out, scores);
  out << "scores: " << design.subject_count() << " subject(s) -> " << a.out << '\n';
  if (scores.any_rank_deficient())
    out << "warning: some subjects have a rank-deficient score system; minimum-norm scores written\n";
  return kExitOk;
}

// ---------------------------------------------------------------- convert

struct ConvertArgs {
  std::string in;
  std::string out;
  std::optional<Index> slices;
};

void setup_convert(CLI::App& app, ConvertArgs& a) {
  app.add_option("--in", a.in, "Input panel (.lfpb or .csv)")->required();
  app.add_option("--out", a.out, "Output panel (.lfpb or .csv)")->required();
  app.add_option("--slices", a.slices, "Slices of a written .lfpb file");
}

int cmd_convert(const ConvertArgs& a, std::ostream& out) {
  require_file(a.in, "input panel");
  auto is_csv = [](const fs::path& p) { return p.extension() == ".csv"; };
  DataPanel panel = is_csv(a.in) ? DataPanel::from_matrix(read_matrix_csv(a.in)) : open_panel(a.in);
  if (is_csv(a.out)) {
    write_matrix_csv(a.out, panel.to_dense());
  } else {
    if (a.slices) {
      require(*a.slices >= 1, ErrorKind::validation, "--slices must be >= 1");
      panel = panel.with_slices(std::min(*a.slices, std::max<Index>(panel.p(), 1)));
    }
    write_panel(a.out, panel);
  }
  out << "convert: " << panel.p() << " x " << panel.n() << " -> " << a.out << '\n';
  return kExitOk;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::io: return kExitValidation;
    case ErrorKind::identifiability: return kExitIdentifiability;
    case ErrorKind::numerical: return kExitNumerical;
  }
  return kExitInternal;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Longitudinal functional principal component analysis for high-dimensional data", "lfpca"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  FitArgs fit;
  SimulateArgs simulate;
  EvaluateArgs evaluate_args;
  ScoresArgs scores;
  ConvertArgs convert;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit the model to a panel and write its artifacts");
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "Write simulated replications with ground truth");
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "Compare fits with simulation ground truth");
  CLI::App* scores_cmd = app.add_subcommand("scores", "Score a panel under a saved model");
  CLI::App* convert_cmd = app.add_subcommand("convert", "Convert panels between .lfpb and .csv");
  setup_fit(*fit_cmd, fit);
  setup_simulate(*simulate_cmd, simulate);
  setup_evaluate(*evaluate_cmd, evaluate_args);
  setup_scores(*scores_cmd, scores);
  setup_convert(*convert_cmd, convert);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit, out);
    if (*simulate_cmd) return cmd_simulate(simulate, out);
    if (*evaluate_cmd) return cmd_evaluate(evaluate_args, out);
    if (*scores_cmd) return cmd_scores(scores, out);
    if (*convert_cmd) return cmd_convert(convert, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed manifest: " << e.what() << '\n';
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::bad_alloc&) {
    err << "error: out of memory (try more --slices)\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace lfpca::cli
