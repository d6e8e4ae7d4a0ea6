#pragma once

#include "lfpca/linalg.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace lfpca {

struct Subject {
  std::string id;
  // visit_count x (q+1); column 0 is the intercept and is identically 1.
  Matrix covariates;

  Index visit_count() const { return covariates.rows(); }
};

// Subjects, visits and covariates of a longitudinal study. The data column of
// visit (i, j) is column_offset(i) + j, with subjects in stored order.
class StudyDesign {
 public:
  StudyDesign() = default;
  // Throws validation errors if a subject has no visits, covariate widths
  // differ, q < 1, or Z0 is not identically 1.
  explicit StudyDesign(std::vector<Subject> subjects);

  // Intercept/slope design: Z = (1, T).
  static StudyDesign from_times(const std::vector<std::string>& ids,
                                const std::vector<std::vector<double>>& times);

  Index subject_count() const { return static_cast<Index>(subjects_.size()); }
  Index visit_count(Index i) const { return subjects_[i].visit_count(); }
  Index total_visits() const { return total_visits_; }
  Index q() const { return q_; }
  Index covariate_width() const { return q_ + 1; }
  // Sum of J_i^2, the number of within-subject ordered visit pairs.
  Index pair_count() const;
  Index max_visits() const;

  const Subject& subject(Index i) const { return subjects_[i]; }
  const std::vector<Subject>& subjects() const { return subjects_; }

  Index column_offset(Index i) const { return offsets_[i]; }
  Index column(Index i, Index j) const { return offsets_[i] + j; }

  struct VisitRef {
    Index subject;
    Index visit;
  };
  VisitRef visit_of_column(Index col) const;

  // n x (q+1) covariates in column order.
  Matrix stacked_covariates() const;
  StudyDesign with_covariates(const Matrix& stacked) const;

  // Reorders subjects; visits keep their within-subject order.
  StudyDesign permuted(const std::vector<Index>& subject_order) const;

 private:
  std::vector<Subject> subjects_;
  std::vector<Index> offsets_;
  Index total_visits_ = 0;
  Index q_ = 0;
};

struct ValidationReport {
  bool ok = true;
  Index mom_rank = 0;
  Index mom_rows = 0;
  std::vector<std::string> failures;
};

// Identifiability preconditions: full row rank of the moment design matrix
// and at least one subject with three or more visits.
ValidationReport validate_design(const StudyDesign& design);

// Affine map applied to each non-intercept covariate: z -> (z - shift) / scale.
struct CovariateTransform {
  Vector shift;
  Vector scale;

  Matrix apply(const Matrix& stacked) const;
  Matrix invert(const Matrix& normalized) const;
};

struct NormalizedDesign {
  StudyDesign design;
  CovariateTransform transform;
};

// Pooled over all n visits: each non-intercept column gets mean 0 and sample
// variance 1 (divisor n-1).
NormalizedDesign normalize_covariates(const StudyDesign& design);

// Metadata CSV: subject_id,visit_index,col,Z0,...,Zq with one row per visit.
StudyDesign read_metadata_csv(const std::filesystem::path& path);
void write_metadata_csv(const std::filesystem::path& path, const StudyDesign& design);

}  // namespace lfpca
