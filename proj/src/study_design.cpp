#include "lfpca/study_design.hpp"

#include "lfpca/csv.hpp"
#include "lfpca/error.hpp"
#include "lfpca/mom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace lfpca {

StudyDesign::StudyDesign(std::vector<Subject> subjects) : subjects_(std::move(subjects)) {
  require(!subjects_.empty(), ErrorKind::validation, "design has no subjects");
  const Index width = subjects_.front().covariates.cols();
  require(width >= 2, ErrorKind::validation,
          "design needs at least one non-intercept covariate (q >= 1)");
  q_ = width - 1;
  offsets_.reserve(subjects_.size());
  for (const auto& s : subjects_) {
    require(s.visit_count() >= 1, ErrorKind::validation,
            "subject '" + s.id + "' has no visits");
    require(s.covariates.cols() == width, ErrorKind::validation,
            "subject '" + s.id + "' has a different number of covariates");
    require(s.covariates.allFinite(), ErrorKind::validation,
            "subject '" + s.id + "' has non-finite covariates");
    for (Index j = 0; j < s.visit_count(); ++j) {
      require(s.covariates(j, 0) == 1.0, ErrorKind::validation,
              "subject '" + s.id + "': intercept covariate Z0 must be 1");
    }
    offsets_.push_back(total_visits_);
    total_visits_ += s.visit_count();
  }
}

StudyDesign StudyDesign::from_times(const std::vector<std::string>& ids,
                                    const std::vector<std::vector<double>>& times) {
  require(ids.size() == times.size(), ErrorKind::validation, "ids and times differ in length");
  std::vector<Subject> subjects;
  subjects.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    Matrix z(static_cast<Index>(times[i].size()), 2);
    for (std::size_t j = 0; j < times[i].size(); ++j) {
      z(static_cast<Index>(j), 0) = 1.0;
      z(static_cast<Index>(j), 1) = times[i][j];
    }
    subjects.push_back({ids[i], std::move(z)});
  }
  return StudyDesign(std::move(subjects));
}

Index StudyDesign::pair_count() const {
  Index m = 0;
  for (const auto& s : subjects_) m += s.visit_count() * s.visit_count();
  return m;
}

Index StudyDesign::max_visits() const {
  Index best = 0;
  for (const auto& s : subjects_) best = std::max(best, s.visit_count());
  return best;
}

StudyDesign::VisitRef StudyDesign::visit_of_column(Index col) const {
  require(col >= 0 && col < total_visits_, ErrorKind::validation,
          "column " + std::to_string(col) + " is outside the design");
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), col);
  const Index i = static_cast<Index>(it - offsets_.begin()) - 1;
  return {i, col - offsets_[i]};
}

Matrix StudyDesign::stacked_covariates() const {
  Matrix z(total_visits_, q_ + 1);
  for (std::size_t i = 0; i < subjects_.size(); ++i) {
    z.middleRows(offsets_[i], subjects_[i].visit_count()) = subjects_[i].covariates;
  }
  return z;
}

StudyDesign StudyDesign::with_covariates(const Matrix& stacked) const {
  require(stacked.rows() == total_visits_ && stacked.cols() == q_ + 1, ErrorKind::validation,
          "covariate matrix does not match the design");
  std::vector<Subject> subjects = subjects_;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    subjects[i].covariates = stacked.middleRows(offsets_[i], subjects[i].visit_count());
  }
  return StudyDesign(std::move(subjects));
}

StudyDesign StudyDesign::permuted(const std::vector<Index>& subject_order) const {
  require(subject_order.size() == subjects_.size(), ErrorKind::validation,
          "permutation length does not match the subject count");
  std::vector<Subject> subjects;
  subjects.reserve(subjects_.size());
  for (Index i : subject_order) subjects.push_back(subjects_.at(static_cast<std::size_t>(i)));
  return StudyDesign(std::move(subjects));
}

ValidationReport validate_design(const StudyDesign& design) {
  ValidationReport report;
  const MomDesign mom = build_f(design);
  report.mom_rows = mom.parameter_count();

  // Rank of F from the spectrum of F F', relative to its largest eigenvalue.
  const Matrix ffT = mom.F * mom.F.transpose();
  const SymmetricEigen eig = symmetric_eigen_descending(symmetrized(ffT));
  const double top = eig.values.size() > 0 ? eig.values(0) : 0.0;
  Index rank = 0;
  for (Index k = 0; k < eig.values.size(); ++k) {
    if (top > 0 && eig.values(k) > top / kMomConditionLimit) ++rank;
  }
  report.mom_rank = rank;
  if (rank < report.mom_rows) {
    report.ok = false;
    std::ostringstream msg;
    msg << "moment design matrix F has rank " << rank << " < " << report.mom_rows
        << " (covariate products and the same-visit indicator are not separable)";
    report.failures.push_back(msg.str());
  }
  if (design.max_visits() < 3) {
    report.ok = false;
    report.failures.push_back(
        "no subject has three or more visits; random-effect and visit-level covariances "
        "are not identifiable");
  }
  return report;
}

Matrix CovariateTransform::apply(const Matrix& stacked) const {
  Matrix out = stacked;
  for (Index c = 0; c < shift.size(); ++c) {
    out.col(c + 1) = (stacked.col(c + 1).array() - shift(c)) / scale(c);
  }
  return out;
}

Matrix CovariateTransform::invert(const Matrix& normalized) const {
  Matrix out = normalized;
  for (Index c = 0; c < shift.size(); ++c) {
    out.col(c + 1) = normalized.col(c + 1).array() * scale(c) + shift(c);
  }
  return out;
}

NormalizedDesign normalize_covariates(const StudyDesign& design) {
  const Matrix z = design.stacked_covariates();
  const Index n = z.rows();
  require(n >= 2, ErrorKind::validation, "covariate normalization needs at least two visits");
  CovariateTransform transform;
  transform.shift.resize(design.q());
  transform.scale.resize(design.q());
  for (Index c = 1; c <= design.q(); ++c) {
    const double mean = z.col(c).mean();
    const double var = (z.col(c).array() - mean).square().sum() / static_cast<double>(n - 1);
    require(var > 0.0, ErrorKind::validation,
            "covariate Z" + std::to_string(c) + " has zero variance");
    transform.shift(c - 1) = mean;
    transform.scale(c - 1) = std::sqrt(var);
  }
  return {design.with_covariates(transform.apply(z)), transform};
}

StudyDesign read_metadata_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::validation, "cannot open metadata file " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::validation,
          "metadata file " + path.string() + " is empty");
  const auto header = split_csv_line(line);
  require(header.size() >= 5 && header[0] == "subject_id" && header[1] == "visit_index" &&
              header[2] == "col",
          ErrorKind::validation,
          "metadata header must be subject_id,visit_index,col,Z0,Z1,...");
  const std::size_t width = header.size() - 3;
  for (std::size_t c = 0; c < width; ++c) {
    require(header[3 + c] == "Z" + std::to_string(c), ErrorKind::validation,
            "metadata header column " + std::to_string(3 + c) + " must be Z" + std::to_string(c));
  }

  struct Row {
    std::string id;
    long long visit;
    long long col;
    std::vector<double> z;
  };
  std::vector<Row> rows;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    const std::string ctx = path.filename().string() + ":" + std::to_string(line_no);
    require(f.size() == header.size(), ErrorKind::validation, ctx + ": wrong field count");
    Row row{f[0], parse_integer(f[1], ctx), parse_integer(f[2], ctx), {}};
    for (std::size_t c = 0; c < width; ++c) row.z.push_back(parse_double(f[3 + c], ctx));
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), ErrorKind::validation, "metadata file has no visits");
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.col < b.col; });

  std::vector<Subject> subjects;
  std::map<std::string, bool> seen;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Row& row = rows[k];
    require(row.col == static_cast<long long>(k), ErrorKind::validation,
            "metadata columns must be exactly 0..n-1");
    if (subjects.empty() || subjects.back().id != row.id) {
      require(!seen[row.id], ErrorKind::validation,
              "visits of subject '" + row.id + "' are not in contiguous columns");
      seen[row.id] = true;
      subjects.push_back({row.id, Matrix(0, static_cast<Index>(width))});
    }
    Matrix& z = subjects.back().covariates;
    require(row.visit == z.rows(), ErrorKind::validation,
            "subject '" + row.id + "': visit_index must count 0,1,2,... in column order");
    z.conservativeResize(z.rows() + 1, Eigen::NoChange);
    for (std::size_t c = 0; c < width; ++c) z(z.rows() - 1, static_cast<Index>(c)) = row.z[c];
  }
  return StudyDesign(std::move(subjects));
}

void write_metadata_csv(const std::filesystem::path& path, const StudyDesign& design) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::io, "cannot write " + path.string());
  out << "subject_id,visit_index,col";
  for (Index c = 0; c <= design.q(); ++c) out << ",Z" << c;
  out << '\n';
  for (Index i = 0; i < design.subject_count(); ++i) {
    const Subject& s = design.subject(i);
    for (Index j = 0; j < s.visit_count(); ++j) {
      out << s.id << ',' << j << ',' << design.column(i, j);
      for (Index c = 0; c <= design.q(); ++c) out << ',' << format_double(s.covariates(j, c));
      out << '\n';
    }
  }
  require(out.good(), ErrorKind::io, "failed writing " + path.string());
}

}  // namespace lfpca
