#pragma once

#include "lfpca/linalg.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace lfpca {

// Row partition of a p x n matrix into L contiguous slices.
class SliceLayout {
 public:
  SliceLayout() = default;
  // offsets: L+1 nondecreasing row offsets from 0 to p.
  explicit SliceLayout(std::vector<Index> offsets);

  // Slice l holds rows [l * ceil(p/L), min((l+1) * ceil(p/L), p)).
  static SliceLayout uniform(Index rows, Index slice_count);

  Index rows() const { return offsets_.empty() ? 0 : offsets_.back(); }
  Index slice_count() const { return static_cast<Index>(offsets_.size()) - 1; }
  Index begin(Index l) const { return offsets_[l]; }
  Index end(Index l) const { return offsets_[l + 1]; }
  Index slice_rows(Index l) const { return end(l) - begin(l); }
  Index max_slice_rows() const;
  const std::vector<Index>& offsets() const { return offsets_; }

  bool operator==(const SliceLayout&) const = default;

 private:
  std::vector<Index> offsets_{0};
};

// A p x n matrix that is only ever accessed one row slice at a time.
class PanelSource {
 public:
  virtual ~PanelSource() = default;

  virtual Index cols() const = 0;
  virtual const SliceLayout& layout() const = 0;
  virtual Matrix read_slice(Index l) const = 0;
  // Same matrix, different row partition.
  virtual std::shared_ptr<const PanelSource> with_layout(const SliceLayout& layout) const = 0;

  Index rows() const { return layout().rows(); }
  Index slice_count() const { return layout().slice_count(); }
};

using PanelSourcePtr = std::shared_ptr<const PanelSource>;

class MemorySource final : public PanelSource {
 public:
  MemorySource(std::shared_ptr<const Matrix> data, SliceLayout layout);

  Index cols() const override { return data_->cols(); }
  const SliceLayout& layout() const override { return layout_; }
  Matrix read_slice(Index l) const override;
  PanelSourcePtr with_layout(const SliceLayout& layout) const override;

 private:
  std::shared_ptr<const Matrix> data_;
  SliceLayout layout_;
};

// base slice minus the row means.
class CenteredSource final : public PanelSource {
 public:
  CenteredSource(PanelSourcePtr base, std::shared_ptr<const Vector> mean);

  Index cols() const override { return base_->cols(); }
  const SliceLayout& layout() const override { return base_->layout(); }
  Matrix read_slice(Index l) const override;
  PanelSourcePtr with_layout(const SliceLayout& layout) const override;

 private:
  PanelSourcePtr base_;
  std::shared_ptr<const Vector> mean_;
};

// base slice times a fixed right factor: slice_l = base_l * factor.
class ProductSource final : public PanelSource {
 public:
  ProductSource(PanelSourcePtr base, std::shared_ptr<const Matrix> factor);

  Index cols() const override { return factor_->cols(); }
  const SliceLayout& layout() const override { return base_->layout(); }
  Matrix read_slice(Index l) const override;
  PanelSourcePtr with_layout(const SliceLayout& layout) const override;

 private:
  PanelSourcePtr base_;
  std::shared_ptr<const Matrix> factor_;
};

// A voxel x visit data matrix with its estimated mean once centered.
class DataPanel {
 public:
  DataPanel() = default;
  explicit DataPanel(PanelSourcePtr source, std::optional<Vector> mean = std::nullopt,
                     bool centered = false);

  static DataPanel from_matrix(Matrix data, Index slice_count = 1);

  Index p() const { return source_->rows(); }
  Index n() const { return source_->cols(); }
  Index slice_count() const { return source_->slice_count(); }
  const SliceLayout& layout() const { return source_->layout(); }
  Matrix slice(Index l) const { return source_->read_slice(l); }

  const PanelSourcePtr& source() const { return source_; }
  const std::optional<Vector>& mean() const { return mean_; }
  bool centered() const { return centered_; }

  DataPanel with_slices(Index slice_count) const;
  DataPanel with_layout(const SliceLayout& layout) const;

  // Concatenates all slices. Only for panels that fit in memory.
  Matrix to_dense() const;

 private:
  PanelSourcePtr source_;
  std::optional<Vector> mean_;
  bool centered_ = false;
};

// One pass computes the row means (the average of the n columns); the returned
// panel subtracts them slice by slice on every read.
DataPanel center_panel(const DataPanel& panel, int threads = 1);

// Panel whose columns are `panel` times `factor` (p x n times n x k).
DataPanel multiply_right(const DataPanel& panel, const Matrix& factor);

// Panel' * other, accumulated over slices in ascending order. Both panels must
// share row count; their layouts are aligned to `panel`'s.
Matrix cross_product(const DataPanel& panel, const DataPanel& other, int threads = 1);

// 1' * panel, slices combined in ascending order.
Vector column_sums(const DataPanel& panel, int threads = 1);

}  // namespace lfpca
