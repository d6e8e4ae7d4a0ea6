#include "lfpca/cli/model_io.hpp"

#include "lfpca/csv.hpp"
#include "lfpca/error.hpp"
#include "lfpca/panel_file.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <memory>

namespace lfpca::cli {
namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
  return out;
}

void check_written(std::ofstream& out, const fs::path& path) {
  out.flush();
  require(static_cast<bool>(out), ErrorKind::io, "write failed: " + path.string());
}

std::string phi_x_name(Index k) { return "phi_x_" + std::to_string(k) + ".lfpb"; }

void write_eigenvalues(const fs::path& path, const IntrinsicEigen& eigen) {
  auto out = open_output(path);
  out << "family,component,eigenvalue,raw_eigenvalue,retained\n";
  auto rows = [&](const char* family, const Vector& spectrum, const Vector& kept) {
    for (Index m = 0; m < spectrum.size(); ++m) {
      const bool retained = m < kept.size();
      out << family << ',' << m + 1 << ','
          << format_double(retained ? kept(m) : std::max(spectrum(m), 0.0)) << ','
          << format_double(spectrum(m)) << ',' << (retained ? 1 : 0) << '\n';
    }
  };
  rows("X", eigen.spectrum_X, eigen.lambda_X);
  rows("W", eigen.spectrum_W, eigen.lambda_W);
  check_written(out, path);
}

void write_variance(const fs::path& path, const FittedModel& model) {
  const VarianceTable table = variance_explained(model);
  auto out = open_output(path);
  out << "component";
  for (Index k = 0; k <= model.q; ++k) out << ",X" << k;
  out << ",W,cumulative\n";
  for (std::size_t m = 0; m < table.rows.size(); ++m) {
    const VarianceRow& row = table.rows[m];
    out << m + 1;
    for (double share : row.x_shares) out << ',' << format_double(share);
    out << ',' << format_double(row.w_share) << ',' << format_double(row.cumulative) << '\n';
  }
  out << "total";
  for (double share : table.x_totals) out << ',' << format_double(share);
  out << ',' << format_double(table.w_total) << ',' << format_double(table.cumulative()) << '\n';
  check_written(out, path);
}

void write_decomposition(const fs::path& dir, const IntrinsicDecomposition& d) {
  {
    const fs::path path = dir / "u.csv";
    auto out = open_output(path);
    for (Index c = 0; c < d.rank(); ++c) out << (c ? "," : "") << "u_" << c + 1;
    out << '\n';
    for (Index i = 0; i < d.U.rows(); ++i) {
      for (Index c = 0; c < d.rank(); ++c) out << (c ? "," : "") << format_double(d.U(i, c));
      out << '\n';
    }
    check_written(out, path);
  }
  const fs::path path = dir / "s.csv";
  auto out = open_output(path);
  out << "component,gram_eigenvalue,singular_value\n";
  for (Index c = 0; c < d.rank(); ++c)
    out << c + 1 << ',' << format_double(d.S(c)) << ',' << format_double(std::sqrt(d.S(c))) << '\n';
  check_written(out, path);
}

Matrix dense_file(const fs::path& path) {
  require(fs::exists(path), ErrorKind::validation, "missing file " + path.string());
  return open_panel(path).to_dense();
}

json block_json(const LatticeBlock& b) {
  return {{"family", b.family},
          {"component", b.component},
          {"lo", {b.lo[0], b.lo[1], b.lo[2]}},
          {"hi", {b.hi[0], b.hi[1], b.hi[2]}}};
}

const json& member(const json& manifest, const char* key, const fs::path& where) {
  require(manifest.contains(key), ErrorKind::validation,
          where.string() + ": manifest lacks '" + key + "'");
  return manifest.at(key);
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  require(ctx && EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) == 1, ErrorKind::io,
          "SHA-256 unavailable");
  std::vector<char> buffer(1 << 20);
  while (in) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &length);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::validation, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, path.string() + ": invalid JSON: " + e.what());
  }
}

void write_json(const fs::path& path, const json& value) {
  auto out = open_output(path);
  out << value.dump(2) << '\n';
  check_written(out, path);
}

json to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from_json(const json& value, const std::string& what) {
  require(value.is_array(), ErrorKind::validation, what + " must be an array");
  Vector v(static_cast<Index>(value.size()));
  for (std::size_t i = 0; i < value.size(); ++i) {
    require(value[i].is_number(), ErrorKind::validation, what + " must hold numbers");
    v(static_cast<Index>(i)) = value[i].get<double>();
  }
  return v;
}

void write_scores_csv(const fs::path& path, const ScorePanel& scores) {
  auto out = open_output(path);
  out << "subject_id,score_type,visit_index,component,value\n";
  for (const auto& s : scores.subjects) {
    for (Index m = 0; m < s.xi.size(); ++m)
      out << s.subject_id << ",xi,," << m + 1 << ',' << format_double(s.xi(m)) << '\n';
    for (Index j = 0; j < s.zeta.rows(); ++j)
      for (Index l = 0; l < s.zeta.cols(); ++l)
        out << s.subject_id << ",zeta," << j << ',' << l + 1 << ',' << format_double(s.zeta(j, l))
            << '\n';
  }
  check_written(out, path);
}

ScorePanel read_scores_csv(const fs::path& path, const StudyDesign& design, Index nx, Index nw) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::validation, "cannot read " + path.string());
  std::map<std::string, Index> index;
  ScorePanel panel;
  for (Index i = 0; i < design.subject_count(); ++i) {
    index[design.subject(i).id] = i;
    SubjectScores s;
    s.subject_id = design.subject(i).id;
    s.xi = Vector::Constant(nx, std::numeric_limits<double>::quiet_NaN());
    s.zeta = Matrix::Constant(design.visit_count(i), nw, std::numeric_limits<double>::quiet_NaN());
    panel.subjects.push_back(std::move(s));
  }
  std::string line;
  std::getline(in, line);
  require(split_csv_line(line) == std::vector<std::string>{"subject_id", "score_type", "visit_index",
                                                           "component", "value"},
          ErrorKind::validation, path.string() + ": unexpected score header");
  const std::string where = path.string();
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    require(f.size() == 5, ErrorKind::validation, where + ": score rows need 5 fields");
    const auto it = index.find(f[0]);
    require(it != index.end(), ErrorKind::validation, where + ": unknown subject '" + f[0] + "'");
    SubjectScores& s = panel.subjects[it->second];
    const Index component = parse_integer(f[3], where) - 1;
    const double value = parse_double(f[4], where);
    if (f[1] == "xi") {
      require(component >= 0 && component < nx, ErrorKind::validation, where + ": xi component out of range");
      s.xi(component) = value;
    } else if (f[1] == "zeta") {
      const Index visit = parse_integer(f[2], where);
      require(component >= 0 && component < nw && visit >= 0 && visit < s.zeta.rows(),
              ErrorKind::validation, where + ": zeta index out of range");
      s.zeta(visit, component) = value;
    } else {
      fail(ErrorKind::validation, where + ": score_type must be xi or zeta");
    }
  }
  for (const auto& s : panel.subjects)
    require(s.xi.allFinite() && s.zeta.allFinite(), ErrorKind::validation,
            where + ": scores missing for subject '" + s.subject_id + "'");
  return panel;
}

void write_fit_directory(const fs::path& dir, const FitResult& fit, const FitArtifacts& artifacts) {
  fs::create_directories(dir);
  const FittedModel& model = fit.model;
  json files = json::object();
  for (Index k = 0; k <= model.q; ++k) {
    write_panel(dir / phi_x_name(k), model.phi_x[static_cast<std::size_t>(k)]);
    files["phi_x_" + std::to_string(k)] = phi_x_name(k);
  }
  write_panel(dir / "phi_w.lfpb", *model.phi_w);
  files["phi_w"] = "phi_w.lfpb";
  {
    auto mean = std::make_shared<const Matrix>(*model.mean);
    write_panel(dir / "mean.lfpb", MemorySource(mean, fit.centered.layout()));
    files["mean"] = "mean.lfpb";
  }
  write_eigenvalues(dir / "eigenvalues.csv", fit.eigen);
  write_variance(dir / "variance_explained.csv", model);
  write_decomposition(dir, fit.decomposition);
  write_metadata_csv(dir / "design.csv", fit.design);
  files["eigenvalues"] = "eigenvalues.csv";
  files["variance_explained"] = "variance_explained.csv";
  files["u"] = "u.csv";
  files["s"] = "s.csv";
  files["design"] = "design.csv";
  bool rank_deficient = false;
  if (fit.scores) {
    write_scores_csv(dir / "scores.csv", *fit.scores);
    files["scores"] = "scores.csv";
    rank_deficient = fit.scores->any_rank_deficient();
  }

  json manifest;
  manifest["kind"] = "fit";
  manifest["command"] = "fit";
  manifest["version"] = kVersion;
  manifest["config"] = artifacts.config;
  manifest["inputs"] = artifacts.inputs;
  manifest["timing"] = artifacts.timing;
  manifest["results"] = {{"p", model.p},
                         {"n", fit.design.total_visits()},
                         {"subjects", fit.design.subject_count()},
                         {"q", model.q},
                         {"r", model.r},
                         {"nx", model.nx()},
                         {"nw", model.nw()},
                         {"lambda_x", to_json(model.lambda_X)},
                         {"lambda_w", to_json(model.lambda_W)},
                         {"sigma2", model.sigma2},
                         {"clipped_count", model.clipped_count},
                         {"trace_KX", model.trace_KX},
                         {"trace_KW", model.trace_KW},
                         {"gram_trace", fit.decomposition.total_gram_trace},
                         {"mom_rank", fit.mom.F.rows()},
                         {"scores_rank_deficient", rank_deficient}};
  manifest["transform"] = {{"shift", to_json(fit.transform.shift)},
                           {"scale", to_json(fit.transform.scale)}};
  manifest["rng"] = fit.decomposition.power_seed
                        ? json{{"generator", "mt19937_64"}, {"power_seed", *fit.decomposition.power_seed}}
                        : json(nullptr);
  manifest["files"] = files;
  write_json(dir / "manifest.json", manifest);
}

SavedModel load_model(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  require(fs::exists(manifest_path), ErrorKind::validation,
          "model directory " + dir.string() + " has no manifest.json");
  SavedModel saved;
  saved.manifest = read_json(manifest_path);
  const json& m = saved.manifest;
  require(m.value("kind", "") == "fit", ErrorKind::validation,
          manifest_path.string() + " is not a fit manifest");
  const json& results = member(m, "results", manifest_path);
  FittedModel& model = saved.model;
  model.q = results.at("q").get<Index>();
  model.r = results.at("r").get<Index>();
  model.p = results.at("p").get<Index>();
  model.lambda_X = vector_from_json(results.at("lambda_x"), "lambda_x");
  model.lambda_W = vector_from_json(results.at("lambda_w"), "lambda_w");
  model.sigma2 = results.at("sigma2").get<double>();
  model.trace_KX = results.at("trace_KX").get<double>();
  model.trace_KW = results.at("trace_KW").get<double>();
  model.clipped_count = results.at("clipped_count").get<Index>();

  auto open_checked = [&](const fs::path& path, Index cols) {
    require(fs::exists(path), ErrorKind::validation, "missing model file " + path.string());
    DataPanel panel = open_panel(path);
    require(panel.p() == model.p && panel.n() == cols, ErrorKind::validation,
            path.string() + " does not match the manifest dimensions");
    return panel;
  };
  for (Index k = 0; k <= model.q; ++k) model.phi_x.push_back(open_checked(dir / phi_x_name(k), model.nx()));
  model.phi_w = open_checked(dir / "phi_w.lfpb", model.nw());
  model.mean = open_checked(dir / "mean.lfpb", 1).to_dense().col(0);

  const json& transform = member(m, "transform", manifest_path);
  saved.transform.shift = vector_from_json(transform.at("shift"), "transform.shift");
  saved.transform.scale = vector_from_json(transform.at("scale"), "transform.scale");
  require(saved.transform.shift.size() == model.q && saved.transform.scale.size() == model.q,
          ErrorKind::validation, "transform width does not match q");
  return saved;
}

FittedComponents load_components(const fs::path& dir) {
  SavedModel saved = load_model(dir);
  std::optional<ScorePanel> scores;
  if (fs::exists(dir / "scores.csv")) {
    const StudyDesign design = read_metadata_csv(dir / "design.csv");
    scores = read_scores_csv(dir / "scores.csv", design, saved.model.nx(), saved.model.nw());
  }
  return dense_components(saved.model, scores);
}

void write_replicate_directory(const fs::path& dir, const SimulatedStudy& study, const json& extra,
                               Index slice_count) {
  fs::create_directories(dir);
  const GroundTruth& truth = study.truth;
  const Index p = study.panel.p();
  const SliceLayout layout = SliceLayout::uniform(p, slice_count);
  write_panel(dir / "panel.lfpb", study.panel.with_layout(layout));
  write_metadata_csv(dir / "meta.csv", study.design);
  json files = {{"panel", "panel.lfpb"}, {"meta", "meta.csv"}, {"scores", "truth_scores.csv"}};
  for (std::size_t k = 0; k < truth.phi_x.size(); ++k) {
    const std::string name = "truth_phi_x_" + std::to_string(k) + ".lfpb";
    write_panel(dir / name, DataPanel::from_matrix(truth.phi_x[k]).with_layout(layout));
    files["phi_x_" + std::to_string(k)] = name;
  }
  write_panel(dir / "truth_phi_w.lfpb", DataPanel::from_matrix(truth.phi_w).with_layout(layout));
  files["phi_w"] = "truth_phi_w.lfpb";
  write_scores_csv(dir / "truth_scores.csv", truth.scores);

  json manifest = extra;
  manifest["kind"] = "replicate";
  manifest["version"] = kVersion;
  manifest["scenario"] = truth.scenario;
  manifest["seed"] = truth.seed;
  manifest["rng"] = "mt19937_64";
  manifest["p"] = p;
  manifest["n"] = study.panel.n();
  manifest["q"] = study.design.q();
  manifest["subjects"] = study.design.subject_count();
  manifest["sigma2"] = truth.sigma2;
  manifest["law"] = law_name(truth.law);
  manifest["lambda_x"] = to_json(truth.lambda_x);
  manifest["lambda_w"] = to_json(truth.lambda_w);
  json blocks = json::array();
  for (const auto& b : truth.blocks) blocks.push_back(block_json(b));
  manifest["blocks"] = blocks;
  manifest["files"] = files;
  write_json(dir / "manifest.json", manifest);
}

GroundTruth load_truth(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  require(fs::exists(manifest_path), ErrorKind::validation,
          "truth directory " + dir.string() + " has no manifest.json");
  const json m = read_json(manifest_path);
  require(m.value("kind", "") == "replicate", ErrorKind::validation,
          manifest_path.string() + " is not a replication manifest");
  GroundTruth truth;
  truth.scenario = m.at("scenario").get<int>();
  truth.seed = m.at("seed").get<std::uint64_t>();
  truth.sigma2 = m.at("sigma2").get<double>();
  truth.law = parse_law(m.at("law").get<std::string>());
  truth.lambda_x = vector_from_json(m.at("lambda_x"), "lambda_x");
  truth.lambda_w = vector_from_json(m.at("lambda_w"), "lambda_w");
  const Index q = m.at("q").get<Index>();
  for (Index k = 0; k <= q; ++k) truth.phi_x.push_back(dense_file(dir / ("truth_phi_x_" + std::to_string(k) + ".lfpb")));
  truth.phi_w = dense_file(dir / "truth_phi_w.lfpb");
  const StudyDesign design = read_metadata_csv(dir / "meta.csv");
  truth.scores = read_scores_csv(dir / "truth_scores.csv", design, truth.nx(), truth.nw());
  return truth;
}

std::string law_name(ScoreLaw law) {
  switch (law) {
    case ScoreLaw::normal: return "normal";
    case ScoreLaw::mixture: return "mixture";
    case ScoreLaw::zero: return "zero";
  }
  return "normal";
}

ScoreLaw parse_law(const std::string& name) {
  if (name == "normal") return ScoreLaw::normal;
  if (name == "mixture") return ScoreLaw::mixture;
  if (name == "zero") return ScoreLaw::zero;
  fail(ErrorKind::validation, "unknown score law '" + name + "' (normal, mixture or zero)");
}

}  // namespace lfpca::cli
