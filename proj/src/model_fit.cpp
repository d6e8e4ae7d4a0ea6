#include "lfpca/model_fit.hpp"

#include "lfpca/error.hpp"

#include <algorithm>

namespace lfpca {
namespace {

void take_leading(const SymmetricEigen& eig, Index count, Matrix& vectors, Vector& values,
                  Index& clipped) {
  vectors = eig.vectors.leftCols(count);
  canonicalize_signs(vectors);
  values = eig.values.head(count);
  for (Index k = 0; k < count; ++k) {
    if (values(k) < 0.0) {
      values(k) = 0.0;
      ++clipped;
    }
  }
}

}  // namespace

IntrinsicEigen decompose_intrinsic(const IntrinsicCovariances& cov, Index nx, Index nw) {
  return decompose_intrinsic(cov, OrderPolicy{nx, nw});
}

IntrinsicEigen decompose_intrinsic(const IntrinsicCovariances& cov, const OrderPolicy& policy) {
  const SymmetricEigen x = symmetric_eigen_descending(cov.KX);
  const SymmetricEigen w = symmetric_eigen_descending(cov.KW);
  const ModelOrders orders = select_orders(x.values, w.values, policy);
  const Index nx = orders.nx;
  const Index nw = orders.nw;
  require(nx >= 0 && nx <= cov.KX.rows(), ErrorKind::validation,
          "N_X = " + std::to_string(nx) + " exceeds the intrinsic dimension " +
              std::to_string(cov.KX.rows()));
  require(nw >= 0 && nw <= cov.KW.rows(), ErrorKind::validation,
          "N_W = " + std::to_string(nw) + " exceeds the intrinsic dimension " +
              std::to_string(cov.KW.rows()));
  IntrinsicEigen out;
  out.spectrum_X = x.values;
  out.spectrum_W = w.values;
  take_leading(x, nx, out.A_X, out.lambda_X, out.clipped_count);
  take_leading(w, nw, out.A_W, out.lambda_W, out.clipped_count);
  return out;
}

DataPanel lift(const DataPanel& left_vectors, const Matrix& A) {
  require(A.rows() == left_vectors.n(), ErrorKind::validation,
          "eigenvector coefficients have " + std::to_string(A.rows()) + " rows, expected " +
              std::to_string(left_vectors.n()));
  return multiply_right(left_vectors, A);
}

void lift_model(FittedModel& model, const DataPanel& left_vectors) {
  require(left_vectors.n() == model.r, ErrorKind::validation,
          "left singular vectors do not match the model rank");
  model.phi_x.clear();
  for (Index k = 0; k <= model.q; ++k) model.phi_x.push_back(lift(left_vectors, model.a_x_block(k)));
  model.phi_w = lift(left_vectors, model.A_W);
  model.p = left_vectors.p();
}

double estimate_sigma2(const IntrinsicCovariances& cov, const Vector& lambda_W, Index p) {
  const Index nw = lambda_W.size();
  require(p > nw, ErrorKind::validation, "white-noise variance needs p > N_W");
  return std::max((cov.trace_KW_raw - lambda_W.sum()) / static_cast<double>(p - nw), 0.0);
}

VarianceTable variance_explained(const FittedModel& model) {
  VarianceTable table;
  table.total = std::max(model.trace_KX + model.trace_KW, 0.0);
  require(table.total > 0.0, ErrorKind::numerical,
          "total variance is not positive; nothing to decompose");
  const Index blocks = model.q + 1;
  const Index rows = std::max(model.nx(), model.nw());
  table.x_totals.assign(static_cast<std::size_t>(blocks), 0.0);
  double running = 0.0;
  for (Index m = 0; m < rows; ++m) {
    VarianceRow row;
    row.x_shares.assign(static_cast<std::size_t>(blocks), 0.0);
    if (m < model.nx()) {
      for (Index k = 0; k < blocks; ++k) {
        const double norm2 = model.A_X.col(m).segment(k * model.r, model.r).squaredNorm();
        row.x_shares[k] = 100.0 * model.lambda_X(m) * norm2 / table.total;
        table.x_totals[k] += row.x_shares[k];
        running += row.x_shares[k];
      }
    }
    if (m < model.nw()) {
      row.w_share = 100.0 * model.lambda_W(m) / table.total;
      table.w_total += row.w_share;
      running += row.w_share;
    }
    row.cumulative = running;
    table.rows.push_back(std::move(row));
  }
  return table;
}

Index select_order(const Vector& spectrum, double threshold, Index cap) {
  require(threshold > 0.0 && threshold <= 1.0, ErrorKind::validation,
          "order-selection threshold must lie in (0, 1]");
  const double total = spectrum.cwiseMax(0.0).sum();
  if (total <= 0.0) return 0;
  double cumulative = 0.0;
  Index n = 0;
  while (n < spectrum.size()) {
    cumulative += std::max(spectrum(n), 0.0);
    ++n;
    if (cumulative >= threshold * total) break;
  }
  return std::min(n, cap);
}

ModelOrders select_orders(const Vector& spectrum_X, const Vector& spectrum_W,
                          const OrderPolicy& policy) {
  ModelOrders orders;
  orders.nx = policy.nx ? *policy.nx : select_order(spectrum_X, policy.threshold, policy.cap);
  orders.nw = policy.nw ? *policy.nw : select_order(spectrum_W, policy.threshold, policy.cap);
  return orders;
}

}  // namespace lfpca
