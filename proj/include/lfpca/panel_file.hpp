#pragma once

#include "lfpca/panel.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>

namespace lfpca {

// LFPB panel file, all integers and floats little-endian:
//   "LFPB" | u32 version | u64 p | u64 n | u32 L | u64 offsets[L+1] | payload
// The payload is the p x n matrix in row-major float64, slice after slice,
// which makes it contiguous row-major overall.
inline constexpr std::uint32_t kPanelFormatVersion = 1;

struct PanelFileHeader {
  std::uint32_t version = kPanelFormatVersion;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  SliceLayout layout;

  std::uint64_t byte_size() const;  // header bytes
};

PanelFileHeader read_panel_header(const std::filesystem::path& path);

// Reads row slices on demand; any layout over the stored rows can be used
// since the payload is contiguous. Each read opens its own stream, so
// concurrent reads are safe.
class FileSource final : public PanelSource {
 public:
  explicit FileSource(std::filesystem::path path);
  FileSource(std::filesystem::path path, PanelFileHeader header, SliceLayout layout);

  Index cols() const override { return static_cast<Index>(header_.cols); }
  const SliceLayout& layout() const override { return layout_; }
  Matrix read_slice(Index l) const override;
  PanelSourcePtr with_layout(const SliceLayout& layout) const override;

  const PanelFileHeader& header() const { return header_; }

 private:
  std::filesystem::path path_;
  PanelFileHeader header_;
  SliceLayout layout_;
};

DataPanel open_panel(const std::filesystem::path& path);

// Streams slices to disk in ascending order.
class PanelWriter {
 public:
  PanelWriter(const std::filesystem::path& path, Index cols, const SliceLayout& layout);
  void write_slice(const Matrix& slice);
  // Throws unless every slice was written.
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  Index cols_;
  SliceLayout layout_;
  Index next_ = 0;
};

void write_panel(const std::filesystem::path& path, const PanelSource& source);
void write_panel(const std::filesystem::path& path, const DataPanel& panel);

// Plain CSV (one matrix row per line) for small debugging panels.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

}  // namespace lfpca
