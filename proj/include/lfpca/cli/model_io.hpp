#pragma once

#include "lfpca/evaluate.hpp"
#include "lfpca/pipeline.hpp"
#include "lfpca/simulate.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace lfpca::cli {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

std::string sha256_file(const std::filesystem::path& path);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& value);

json to_json(const Vector& v);
Vector vector_from_json(const json& value, const std::string& what);

// subject_id,score_type,visit_index,component,value with components 1-based
// and visit_index blank for the subject-level scores.
void write_scores_csv(const std::filesystem::path& path, const ScorePanel& scores);
ScorePanel read_scores_csv(const std::filesystem::path& path, const StudyDesign& design,
                           Index nx, Index nw);

// Fit artifacts. The directory doubles as a saved model for `lfpca scores`.
struct FitArtifacts {
  json config;  // echoed into the manifest
  json inputs;
  json timing;
};
void write_fit_directory(const std::filesystem::path& dir, const FitResult& fit,
                         const FitArtifacts& artifacts);

struct SavedModel {
  FittedModel model;  // bases opened from disk, mean loaded
  CovariateTransform transform;
  json manifest;
};
SavedModel load_model(const std::filesystem::path& dir);

// Dense bases, eigenvalues and (when present) scores of a fit directory.
FittedComponents load_components(const std::filesystem::path& dir);

// Replication directory of `lfpca simulate`.
void write_replicate_directory(const std::filesystem::path& dir, const SimulatedStudy& study,
                               const json& extra, Index slice_count);
GroundTruth load_truth(const std::filesystem::path& dir);

std::string law_name(ScoreLaw law);
ScoreLaw parse_law(const std::string& name);

}  // namespace lfpca::cli
