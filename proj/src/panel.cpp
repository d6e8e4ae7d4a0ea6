#include "lfpca/panel.hpp"

#include "lfpca/error.hpp"
#include "lfpca/parallel.hpp"

#include <algorithm>

namespace lfpca {

SliceLayout::SliceLayout(std::vector<Index> offsets) : offsets_(std::move(offsets)) {
  require(offsets_.size() >= 2 && offsets_.front() == 0, ErrorKind::validation,
          "slice layout needs offsets starting at 0 and at least one slice");
  require(std::is_sorted(offsets_.begin(), offsets_.end()), ErrorKind::validation,
          "slice offsets must be nondecreasing");
}

SliceLayout SliceLayout::uniform(Index rows, Index slice_count) {
  require(rows >= 0 && slice_count >= 1, ErrorKind::validation,
          "slice count must be at least 1");
  const Index step = rows == 0 ? 0 : (rows + slice_count - 1) / slice_count;
  std::vector<Index> offsets(static_cast<std::size_t>(slice_count) + 1);
  for (Index l = 0; l <= slice_count; ++l) offsets[l] = std::min(rows, l * step);
  return SliceLayout(std::move(offsets));
}

Index SliceLayout::max_slice_rows() const {
  Index best = 0;
  for (Index l = 0; l < slice_count(); ++l) best = std::max(best, slice_rows(l));
  return best;
}

MemorySource::MemorySource(std::shared_ptr<const Matrix> data, SliceLayout layout)
    : data_(std::move(data)), layout_(std::move(layout)) {
  require(layout_.rows() == data_->rows(), ErrorKind::validation,
          "slice layout does not cover the panel rows");
}

Matrix MemorySource::read_slice(Index l) const {
  return data_->middleRows(layout_.begin(l), layout_.slice_rows(l));
}

PanelSourcePtr MemorySource::with_layout(const SliceLayout& layout) const {
  return std::make_shared<MemorySource>(data_, layout);
}

CenteredSource::CenteredSource(PanelSourcePtr base, std::shared_ptr<const Vector> mean)
    : base_(std::move(base)), mean_(std::move(mean)) {
  require(mean_->size() == base_->rows(), ErrorKind::validation,
          "mean length does not match the panel rows");
}

Matrix CenteredSource::read_slice(Index l) const {
  Matrix slice = base_->read_slice(l);
  slice.colwise() -= mean_->segment(layout().begin(l), layout().slice_rows(l));
  return slice;
}

PanelSourcePtr CenteredSource::with_layout(const SliceLayout& layout) const {
  return std::make_shared<CenteredSource>(base_->with_layout(layout), mean_);
}

ProductSource::ProductSource(PanelSourcePtr base, std::shared_ptr<const Matrix> factor)
    : base_(std::move(base)), factor_(std::move(factor)) {
  require(factor_->rows() == base_->cols(), ErrorKind::validation,
          "right factor rows do not match the panel columns");
}

Matrix ProductSource::read_slice(Index l) const { return base_->read_slice(l) * *factor_; }

PanelSourcePtr ProductSource::with_layout(const SliceLayout& layout) const {
  return std::make_shared<ProductSource>(base_->with_layout(layout), factor_);
}

DataPanel::DataPanel(PanelSourcePtr source, std::optional<Vector> mean, bool centered)
    : source_(std::move(source)), mean_(std::move(mean)), centered_(centered) {
  require(source_ != nullptr, ErrorKind::validation, "panel has no source");
}

DataPanel DataPanel::from_matrix(Matrix data, Index slice_count) {
  const Index rows = data.rows();
  auto shared = std::make_shared<const Matrix>(std::move(data));
  return DataPanel(std::make_shared<MemorySource>(shared, SliceLayout::uniform(rows, slice_count)));
}

DataPanel DataPanel::with_slices(Index slice_count) const {
  return with_layout(SliceLayout::uniform(p(), slice_count));
}

DataPanel DataPanel::with_layout(const SliceLayout& layout) const {
  require(layout.rows() == p(), ErrorKind::validation, "layout rows do not match the panel");
  return DataPanel(source_->with_layout(layout), mean_, centered_);
}

Matrix DataPanel::to_dense() const {
  Matrix out(p(), n());
  for (Index l = 0; l < slice_count(); ++l) {
    out.middleRows(layout().begin(l), layout().slice_rows(l)) = slice(l);
  }
  return out;
}

DataPanel center_panel(const DataPanel& panel, int threads) {
  require(!panel.centered(), ErrorKind::validation, "panel is already centered");
  const Index n = panel.n();
  auto mean = std::make_shared<Vector>(Vector::Zero(panel.p()));
  if (n > 0) {
    const auto& layout = panel.layout();
    ordered_parallel_for(static_cast<std::size_t>(panel.slice_count()), threads,
                         [&](std::size_t l) {
                           const Matrix slice = panel.slice(static_cast<Index>(l));
                           // Column-by-column adds keep each row's summation order
                           // fixed; a vectorized rowwise().sum() depends on alignment.
                           Vector sum = Vector::Zero(slice.rows());
                           for (Index c = 0; c < n; ++c) sum += slice.col(c);
                           mean->segment(layout.begin(l), layout.slice_rows(l)) =
                               sum / static_cast<double>(n);
                         });
  }
  std::shared_ptr<const Vector> frozen = mean;
  return DataPanel(std::make_shared<CenteredSource>(panel.source(), frozen), *frozen, true);
}

DataPanel multiply_right(const DataPanel& panel, const Matrix& factor) {
  return DataPanel(
      std::make_shared<ProductSource>(panel.source(), std::make_shared<const Matrix>(factor)));
}

Matrix cross_product(const DataPanel& panel, const DataPanel& other, int threads) {
  require(panel.p() == other.p(), ErrorKind::validation,
          "cross product of panels with different row counts");
  const DataPanel aligned = other.layout() == panel.layout() ? other : other.with_layout(panel.layout());
  Matrix total = Matrix::Zero(panel.n(), other.n());
  const std::size_t L = static_cast<std::size_t>(panel.slice_count());
  const std::size_t wave = static_cast<std::size_t>(std::max(1, threads));
  std::vector<Matrix> partial(std::min(L, wave));
  ordered_parallel_for(
      L, threads,
      [&](std::size_t l) {
        partial[l % wave] = panel.slice(static_cast<Index>(l)).transpose() *
                            aligned.slice(static_cast<Index>(l));
      },
      [&](std::size_t l) { total += partial[l % wave]; });
  return total;
}

Vector column_sums(const DataPanel& panel, int threads) {
  Vector total = Vector::Zero(panel.n());
  const std::size_t L = static_cast<std::size_t>(panel.slice_count());
  const std::size_t wave = static_cast<std::size_t>(std::max(1, threads));
  std::vector<Vector> partial(std::min(L, wave));
  ordered_parallel_for(
      L, threads,
      [&](std::size_t l) {
        partial[l % wave] = panel.slice(static_cast<Index>(l)).colwise().sum().transpose();
      },
      [&](std::size_t l) { total += partial[l % wave]; });
  return total;
}

}  // namespace lfpca
