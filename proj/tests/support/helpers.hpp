#pragma once

#include "lfpca/rng.hpp"
#include "lfpca/study_design.hpp"
#include "oracles.hpp"

#include <filesystem>
#include <string>

#include <unistd.h>

namespace lfpca::testing {

// Random times (and for q = 2 an extra visit-level covariate) for subjects
// with between min_visits and max_visits visits.
inline StudyDesign random_design(Rng& rng, Index subjects, Index min_visits, Index max_visits,
                                 Index q = 1) {
  std::vector<Subject> out;
  for (Index i = 0; i < subjects; ++i) {
    const Index span = max_visits - min_visits + 1;
    const Index J = min_visits + static_cast<Index>(rng.uniform() * static_cast<double>(span));
    Matrix z(J, q + 1);
    double t = rng.uniform();
    for (Index j = 0; j < J; ++j) {
      z(j, 0) = 1.0;
      z(j, 1) = t;
      for (Index k = 2; k <= q; ++k) z(j, k) = rng.normal();
      t += rng.uniform();
    }
    out.push_back({"s" + std::to_string(i), z});
  }
  return StudyDesign(std::move(out));
}

inline Matrix random_matrix(Rng& rng, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = rng.normal();
  return m;
}

inline oracle::Covariates covariates_of(const StudyDesign& design) {
  oracle::Covariates z;
  for (const auto& s : design.subjects()) z.push_back(s.covariates);
  return z;
}

// Orthonormal p x k columns.
inline Matrix random_orthonormal(Rng& rng, Index p, Index k) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, p, k));
  return qr.householderQ() * Matrix::Identity(p, k);
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("lfpca_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static int& counter() {
    static int value = 0;
    return value;
  }
  std::filesystem::path path_;
};

}  // namespace lfpca::testing
