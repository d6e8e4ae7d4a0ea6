#pragma once

#include "lfpca/mom.hpp"
#include "lfpca/panel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lfpca {

struct OrderPolicy {
  std::optional<Index> nx;
  std::optional<Index> nw;
  double threshold = 0.9;
  Index cap = 30;
};

struct ModelOrders {
  Index nx = 0;
  Index nw = 0;
};

struct IntrinsicEigen {
  Matrix A_X;        // (q+1) r x N_X, orthonormal columns
  Vector lambda_X;   // N_X, descending, clipped at 0
  Matrix A_W;        // r x N_W
  Vector lambda_W;
  Vector spectrum_X;  // all eigenvalues of K_U^X, descending, unclipped
  Vector spectrum_W;
  Index clipped_count = 0;
};

// Top N eigenpairs of each intrinsic covariance; retained negative
// eigenvalues are set to zero and counted. Columns follow the sign convention
// of canonicalize_signs.
IntrinsicEigen decompose_intrinsic(const IntrinsicCovariances& cov, Index nx, Index nw);

// As above with N_X, N_W chosen by select_orders on the full spectra.
IntrinsicEigen decompose_intrinsic(const IntrinsicCovariances& cov, const OrderPolicy& policy);

struct FittedModel {
  Index q = 0;
  Index r = 0;
  Index p = 0;
  Matrix A_X;
  Vector lambda_X;
  Matrix A_W;
  Vector lambda_W;
  double sigma2 = 0.0;
  double trace_KX = 0.0;  // raw trace of the intrinsic covariances
  double trace_KW = 0.0;
  Index clipped_count = 0;

  // Lifted eigenvectors Phi^{X,k} (p x N_X, one per covariate) and Phi^W.
  std::vector<DataPanel> phi_x;
  std::optional<DataPanel> phi_w;
  std::optional<Vector> mean;

  Index nx() const { return lambda_X.size(); }
  Index nw() const { return lambda_W.size(); }
  // Rows k r .. (k+1) r - 1 of A_X.
  Matrix a_x_block(Index k) const { return A_X.middleRows(k * r, r); }
  bool has_basis() const { return phi_w.has_value() && static_cast<Index>(phi_x.size()) == q + 1; }
};

// Phi = V A slice by slice.
DataPanel lift(const DataPanel& left_vectors, const Matrix& A);

// Lifts every block of A_X and A_W into the model.
void lift_model(FittedModel& model, const DataPanel& left_vectors);

// max{(tr K_U^W - sum_k lambda^W_k) / (p - N_W), 0}
double estimate_sigma2(const IntrinsicCovariances& cov, const Vector& lambda_W, Index p);

struct VarianceRow {
  std::vector<double> x_shares;  // one per covariate block, percent
  double w_share = 0.0;          // percent, 0 when beyond N_W
  double cumulative = 0.0;
};

struct VarianceTable {
  double total = 0.0;
  std::vector<VarianceRow> rows;  // max(N_X, N_W) rows
  std::vector<double> x_totals;    // column sums, percent
  double w_total = 0.0;

  double cumulative() const { return rows.empty() ? 0.0 : rows.back().cumulative; }
};

// Shares of tr(K^X) + tr(K^W): component m of block k contributes
// lambda^X_m ||A^{X,k}_m||^2, component l of W contributes lambda^W_l.
VarianceTable variance_explained(const FittedModel& model);

// Smallest N whose leading eigenvalues reach `threshold` of the nonnegative
// spectrum mass, capped; explicit orders always win.
ModelOrders select_orders(const Vector& spectrum_X, const Vector& spectrum_W,
                          const OrderPolicy& policy);
Index select_order(const Vector& spectrum, double threshold, Index cap);

}  // namespace lfpca
