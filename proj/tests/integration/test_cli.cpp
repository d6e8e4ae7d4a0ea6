#include "lfpca/cli/commands.hpp"
#include "lfpca/cli/model_io.hpp"
#include "lfpca/csv.hpp"
#include "lfpca/panel_file.hpp"
#include "support/helpers.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <regex>
#include <sstream>

namespace lfpca::cli {
namespace {

namespace fs = std::filesystem;
using lfpca::testing::TempDir;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome lfpca(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file()) files[fs::relative(entry.path(), root).string()] = slurp(entry.path());
  return files;
}

// Small Scenario 1 replication with a fit next to it.
class FittedReplicate : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(lfpca({"simulate", "--scenario", "1", "--p", "120", "--sigma2", "1e-4", "--seed", "3",
                     "--reps", "1", "--out", (dir / "sim").string()})
                  .code,
              0);
    ASSERT_EQ(lfpca({"fit", "--data", panel().string(), "--meta", meta().string(), "--nx", "4", "--nw",
                     "4", "--out", fit_dir().string(), "--threads", "1"})
                  .code,
              0);
  }
  fs::path rep() const { return dir / "sim" / "rep_000"; }
  fs::path panel() const { return rep() / "panel.lfpb"; }
  fs::path meta() const { return rep() / "meta.csv"; }
  fs::path fit_dir() const { return dir / "fit" / "rep_000"; }

  TempDir dir{"cli"};
};

TEST(Cli, HelpExitsZero) {
  EXPECT_EQ(lfpca({"--help"}).code, 0);
  EXPECT_EQ(lfpca({"fit", "--help"}).code, 0);
}

TEST(Cli, MissingSubcommandOrFlagExitsTwo) {
  EXPECT_EQ(lfpca({}).code, 2);
  EXPECT_EQ(lfpca({"fit", "--data", "x.lfpb"}).code, 2);
  EXPECT_EQ(lfpca({"frobnicate"}).code, 2);
}

TEST(Cli, SimulateScenarioOneShape) {
  TempDir dir("cli_shape");
  const Outcome r = lfpca({"simulate", "--scenario", "1", "--p", "750", "--sigma2", "1e-4", "--seed", "7",
                           "--out", dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const PanelFileHeader header = read_panel_header(dir / "rep_000/panel.lfpb");
  EXPECT_EQ(header.rows, 750u);
  EXPECT_EQ(header.cols, 400u);
  const json manifest = read_json(dir / "rep_000/manifest.json");
  EXPECT_EQ(manifest.at("seed").get<std::uint64_t>(), 7u);
  EXPECT_EQ(manifest.at("law").get<std::string>(), "mixture");
}

TEST(Cli, SimulateZeroRepsExitsTwo) {
  TempDir dir("cli_reps");
  EXPECT_EQ(lfpca({"simulate", "--reps", "0", "--out", dir.path().string()}).code, 2);
}

TEST(Cli, SimulateIsByteReproducible) {
  TempDir a("cli_det_a"), b("cli_det_b");
  for (const TempDir* d : {&a, &b})
    ASSERT_EQ(lfpca({"simulate", "--scenario", "1", "--p", "60", "--seed", "11", "--reps", "3", "--slices",
                     "4", "--out", d->path().string()})
                  .code,
              0);
  const auto ta = tree(a.path());
  EXPECT_EQ(ta.size(), 1u + 3u * 7u);
  EXPECT_EQ(ta, tree(b.path()));
}

TEST(Cli, SimulateScenarioTwoRejectsOtherSizes) {
  TempDir dir("cli_s2");
  EXPECT_EQ(lfpca({"simulate", "--scenario", "2", "--p", "100", "--out", dir.path().string()}).code, 2);
}

TEST_F(FittedReplicate, WritesEveryArtifact) {
  for (const char* name : {"eigenvalues.csv", "variance_explained.csv", "phi_x_0.lfpb", "phi_x_1.lfpb",
                           "phi_w.lfpb", "u.csv", "s.csv", "scores.csv", "manifest.json", "mean.lfpb",
                           "design.csv"})
    EXPECT_TRUE(fs::exists(fit_dir() / name)) << name;
  const json m = read_json(fit_dir() / "manifest.json");
  EXPECT_EQ(m.at("command"), "fit");
  EXPECT_EQ(m.at("results").at("nx").get<int>(), 4);
  EXPECT_EQ(m.at("results").at("nw").get<int>(), 4);
  EXPECT_TRUE(m.at("results").contains("sigma2"));
  EXPECT_TRUE(m.at("results").contains("clipped_count"));
  EXPECT_EQ(m.at("inputs").at("data").at("sha256").get<std::string>(), sha256_file(panel()));
  EXPECT_TRUE(m.at("timing").contains("total_seconds"));
  EXPECT_EQ(read_panel_header(fit_dir() / "phi_x_1.lfpb").cols, 4u);
}

TEST_F(FittedReplicate, CsvValuesRoundTrip) {
  std::ifstream in(fit_dir() / "eigenvalues.csv");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  const auto fields = split_csv_line(line);
  const double value = std::stod(fields[2]);
  EXPECT_EQ(format_double(value), fields[2]);
  const json m = read_json(fit_dir() / "manifest.json");
  EXPECT_EQ(value, m.at("results").at("lambda_x")[0].get<double>());
}

TEST_F(FittedReplicate, SlicedFitMatches) {
  const fs::path other = dir / "fit17";
  ASSERT_EQ(lfpca({"fit", "--data", panel().string(), "--meta", meta().string(), "--nx", "4", "--nw", "4",
                   "--slices", "17", "--out", other.string()})
                .code,
            0);
  const Matrix a = open_panel(fit_dir() / "phi_x_0.lfpb").to_dense();
  const Matrix b = open_panel(other / "phi_x_0.lfpb").to_dense();
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);
}

TEST_F(FittedReplicate, MissingMetadataExitsTwo) {
  const Outcome r = lfpca({"fit", "--data", panel().string(), "--meta", (dir / "nope.csv").string(), "--out",
                           (dir / "x").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("metadata file not found"), std::string::npos) << r.err;
}

TEST_F(FittedReplicate, ZeroOrderExitsTwo) {
  const Outcome r = lfpca({"fit", "--data", panel().string(), "--meta", meta().string(), "--nx", "0", "--out",
                           (dir / "x").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--nx"), std::string::npos) << r.err;
}

TEST_F(FittedReplicate, TwoVisitDesignExitsThree) {
  // keep the first two visits of every subject
  std::ifstream in(meta());
  std::ofstream out(dir / "two.csv");
  std::string line;
  std::getline(in, line);
  out << line << '\n';
  std::vector<Index> keep;
  while (std::getline(in, line)) {
    const auto f = split_csv_line(line);
    if (std::stoi(f[1]) < 2) {
      keep.push_back(static_cast<Index>(keep.size()));
      out << f[0] << ',' << f[1] << ',' << keep.size() - 1 << ',' << f[3] << ',' << f[4] << '\n';
    }
  }
  out.close();
  const Matrix full = open_panel(panel()).to_dense();
  Matrix two(full.rows(), static_cast<Index>(keep.size()));
  for (Index c = 0, s = 0; s < full.cols() / 4; ++s)
    for (Index j = 0; j < 2; ++j) two.col(c++) = full.col(4 * s + j);
  write_panel(dir / "two.lfpb", DataPanel::from_matrix(two));
  const Outcome r = lfpca({"fit", "--data", (dir / "two.lfpb").string(), "--meta", (dir / "two.csv").string(),
                           "--out", (dir / "x").string()});
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_NE(r.err.find("three or more visits"), std::string::npos) << r.err;
}

TEST_F(FittedReplicate, ConstantPanelExitsFour) {
  write_panel(dir / "flat.lfpb", DataPanel::from_matrix(Matrix::Ones(120, 400)));
  const Outcome r = lfpca({"fit", "--data", (dir / "flat.lfpb").string(), "--meta", meta().string(), "--nx",
                           "1", "--nw", "1", "--out", (dir / "x").string()});
  EXPECT_EQ(r.code, 4) << r.err;
}

TEST_F(FittedReplicate, ScoringTrainingPanelReproducesFitScores) {
  const fs::path out = dir / "scores.csv";
  ASSERT_EQ(lfpca({"scores", "--model", fit_dir().string(), "--data", panel().string(), "--meta",
                   meta().string(), "--out", out.string(), "--slices", "5"})
                .code,
            0);
  const StudyDesign design = read_metadata_csv(meta());
  const ScorePanel fit = read_scores_csv(fit_dir() / "scores.csv", design, 4, 4);
  const ScorePanel again = read_scores_csv(out, design, 4, 4);
  double worst = 0.0;
  for (std::size_t i = 0; i < fit.subjects.size(); ++i) {
    worst = std::max(worst, (fit.subjects[i].xi - again.subjects[i].xi).cwiseAbs().maxCoeff());
    worst = std::max(worst, (fit.subjects[i].zeta - again.subjects[i].zeta).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-10);
}

TEST_F(FittedReplicate, MeanPanelScoresZero) {
  const SavedModel saved = load_model(fit_dir());
  const Matrix flat = saved.model.mean->replicate(1, 400);
  write_panel(dir / "mean.lfpb", DataPanel::from_matrix(flat));
  const fs::path out = dir / "zero.csv";
  ASSERT_EQ(lfpca({"scores", "--model", fit_dir().string(), "--data", (dir / "mean.lfpb").string(), "--meta",
                   meta().string(), "--out", out.string()})
                .code,
            0);
  const ScorePanel scores = read_scores_csv(out, read_metadata_csv(meta()), 4, 4);
  for (const auto& s : scores.subjects) {
    EXPECT_EQ(s.xi.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(s.zeta.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST_F(FittedReplicate, HeldOutExactModelScores) {
  const SavedModel saved = load_model(fit_dir());
  const StudyDesign normalized = read_metadata_csv(fit_dir() / "design.csv");
  ModelSimulationOptions options;
  options.law = ScoreLaw::normal;
  options.seed = 99;
  const SimulatedStudy study = generate_from_model(saved.model, normalized, options);
  write_panel(dir / "new.lfpb", study.panel);
  // the scores command expects raw covariates and applies the training transform itself
  write_metadata_csv(dir / "new.csv",
                     normalized.with_covariates(saved.transform.invert(normalized.stacked_covariates())));
  const fs::path out = dir / "new_scores.csv";
  ASSERT_EQ(lfpca({"scores", "--model", fit_dir().string(), "--data", (dir / "new.lfpb").string(), "--meta",
                   (dir / "new.csv").string(), "--out", out.string()})
                .code,
            0);
  const ScorePanel got = read_scores_csv(out, normalized, 4, 4);
  const auto& want = study.truth.scores.subjects;
  for (std::size_t i = 0; i < want.size(); ++i) {
    const double scale = std::max(want[i].xi.cwiseAbs().maxCoeff(), want[i].zeta.cwiseAbs().maxCoeff());
    EXPECT_LE((got.subjects[i].xi - want[i].xi).cwiseAbs().maxCoeff(), 1e-8 * scale);
    EXPECT_LE((got.subjects[i].zeta - want[i].zeta).cwiseAbs().maxCoeff(), 1e-8 * scale);
  }
}

TEST_F(FittedReplicate, ScoresRejectOtherVoxelCount) {
  write_panel(dir / "small.lfpb", DataPanel::from_matrix(Matrix::Zero(50, 400)));
  const Outcome r = lfpca({"scores", "--model", fit_dir().string(), "--data", (dir / "small.lfpb").string(),
                           "--meta", meta().string(), "--out", (dir / "s.csv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("p=50"), std::string::npos) << r.err;
}

TEST_F(FittedReplicate, EvaluateWritesTableLayout) {
  const fs::path out = dir / "eval.csv";
  const Outcome r = lfpca({"evaluate", "--truth", (dir / "sim").string(), "--fit", (dir / "fit").string(),
                           "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(out);
  std::string header, row, aggregate;
  std::getline(in, header);
  std::getline(in, row);
  std::getline(in, aggregate);
  EXPECT_EQ(split_csv_line(header)[1], "phi_x0_1");
  EXPECT_EQ(split_csv_line(row)[0], "rep_000");
  const auto cells = split_csv_line(aggregate);
  EXPECT_EQ(cells[0], "mean (sd)");
  EXPECT_EQ(cells.size(), split_csv_line(header).size());
  const std::regex table_cell(R"(-?\d+(\.\d{1,3})? \(\d+(\.\d{1,3})?\))");
  for (std::size_t c = 1; c < cells.size(); ++c) EXPECT_TRUE(std::regex_match(cells[c], table_cell)) << cells[c];
}

TEST_F(FittedReplicate, EvaluateModelAgainstItself) {
  // ground truth generated from the fit's own basis: the fit recovers it exactly
  const fs::path truth = dir / "self";
  ASSERT_EQ(lfpca({"simulate", "--scenario", "model", "--model", fit_dir().string(), "--seed", "5", "--out",
                   truth.string()})
                .code,
            0);
  const fs::path out = dir / "self.csv";
  ASSERT_EQ(lfpca({"evaluate", "--truth", (truth / "rep_000").string(), "--fit", fit_dir().string(), "--out",
                   out.string()})
                .code,
            0);
  std::ifstream in(out);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  const auto names = split_csv_line(header);
  const auto values = split_csv_line(row);
  for (std::size_t c = 1; c < names.size(); ++c)
    if (names[c].rfind("phi_", 0) == 0 || names[c].rfind("lambda_", 0) == 0)
      EXPECT_LT(std::abs(std::stod(values[c])), 1e-6) << names[c];
}

TEST_F(FittedReplicate, EvaluateRejectsEmptyFitDirectory) {
  fs::create_directories(dir / "empty");
  EXPECT_EQ(lfpca({"evaluate", "--truth", (dir / "sim").string(), "--fit", (dir / "empty").string(), "--out",
                   (dir / "e.csv").string()})
                .code,
            2);
}

TEST_F(FittedReplicate, EvaluateRejectsComponentMismatch) {
  ASSERT_EQ(lfpca({"fit", "--data", panel().string(), "--meta", meta().string(), "--nx", "3", "--nw", "4",
                   "--out", (dir / "fit3" / "rep_000").string()})
                .code,
            0);
  const Outcome r = lfpca({"evaluate", "--truth", (dir / "sim").string(), "--fit", (dir / "fit3").string(),
                           "--out", (dir / "e.csv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("do not match"), std::string::npos) << r.err;
}

TEST(Cli, ConvertRoundTrip) {
  TempDir dir("cli_convert");
  Rng rng(4);
  const Matrix m = lfpca::testing::random_matrix(rng, 13, 5);
  write_panel(dir / "a.lfpb", DataPanel::from_matrix(m, 3));
  ASSERT_EQ(lfpca({"convert", "--in", (dir / "a.lfpb").string(), "--out", (dir / "a.csv").string()}).code, 0);
  ASSERT_EQ(lfpca({"convert", "--in", (dir / "a.csv").string(), "--out", (dir / "b.lfpb").string(), "--slices",
                   "3"})
                .code,
            0);
  EXPECT_EQ(slurp(dir / "a.lfpb"), slurp(dir / "b.lfpb"));
}

}  // namespace
}  // namespace lfpca::cli
