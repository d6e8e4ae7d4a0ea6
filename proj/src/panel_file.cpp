#include "lfpca/panel_file.hpp"

#include "lfpca/csv.hpp"
#include "lfpca/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <sstream>

namespace lfpca {
namespace {

constexpr std::array<char, 4> kMagic = {'L', 'F', 'P', 'B'};

template <typename T>
T byteswap_if_big(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

template <typename T>
void put(std::ostream& out, T value) {
  value = byteswap_if_big(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  require(in.gcount() == static_cast<std::streamsize>(sizeof(T)), ErrorKind::validation,
          "truncated panel header in " + path.string());
  return byteswap_if_big(value);
}

// Rows moved between disk and a column-major slice per block, so a slice is
// never held twice.
constexpr std::size_t kBlockBytes = std::size_t{1} << 22;

Index block_rows(Index cols) {
  return std::max<Index>(1, static_cast<Index>(kBlockBytes / (sizeof(double) * std::max<Index>(cols, 1))));
}

}  // namespace

std::uint64_t PanelFileHeader::byte_size() const {
  return 4 + 4 + 8 + 8 + 4 + 8 * static_cast<std::uint64_t>(layout.offsets().size());
}

PanelFileHeader read_panel_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::validation, "cannot open panel file " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  require(in.gcount() == 4 && magic == kMagic, ErrorKind::validation,
          path.string() + " is not an LFPB panel file");
  PanelFileHeader header;
  header.version = get<std::uint32_t>(in, path);
  require(header.version == kPanelFormatVersion, ErrorKind::validation,
          "unsupported panel format version " + std::to_string(header.version));
  header.rows = get<std::uint64_t>(in, path);
  header.cols = get<std::uint64_t>(in, path);
  const std::uint32_t slices = get<std::uint32_t>(in, path);
  require(slices >= 1, ErrorKind::validation, "panel file declares zero slices");
  std::vector<Index> offsets(slices + 1);
  for (auto& o : offsets) o = static_cast<Index>(get<std::uint64_t>(in, path));
  require(offsets.back() == static_cast<Index>(header.rows), ErrorKind::validation,
          "slice offsets of " + path.string() + " do not end at p");
  header.layout = SliceLayout(std::move(offsets));

  const auto expected = header.byte_size() + header.rows * header.cols * sizeof(double);
  const auto actual = std::filesystem::file_size(path);
  if (actual != expected) {
    std::ostringstream msg;
    msg << path.string() << ": declared " << header.rows << " x " << header.cols
        << " panel needs " << expected << " bytes, file has " << actual;
    fail(ErrorKind::validation, msg.str());
  }
  return header;
}

FileSource::FileSource(std::filesystem::path path) : path_(std::move(path)) {
  header_ = read_panel_header(path_);
  layout_ = header_.layout;
}

FileSource::FileSource(std::filesystem::path path, PanelFileHeader header, SliceLayout layout)
    : path_(std::move(path)), header_(std::move(header)), layout_(std::move(layout)) {
  require(layout_.rows() == static_cast<Index>(header_.rows), ErrorKind::validation,
          "layout rows do not match the panel file");
}

Matrix FileSource::read_slice(Index l) const {
  const Index rows = layout_.slice_rows(l);
  const Index cols = this->cols();
  const std::size_t count = static_cast<std::size_t>(rows * cols);
  if (count == 0) return Matrix(rows, cols);
  std::ifstream in(path_, std::ios::binary);
  require(in.good(), ErrorKind::io, "cannot open panel file " + path_.string());
  const auto offset = header_.byte_size() +
                      static_cast<std::uint64_t>(layout_.begin(l)) * header_.cols * sizeof(double);
  in.seekg(static_cast<std::streamoff>(offset));
  Matrix slice(rows, cols);
  const Index step = block_rows(cols);
  RowMajorMatrix block(std::min(step, rows), cols);
  for (Index r = 0; r < rows; r += step) {
    const Index k = std::min(step, rows - r);
    const auto bytes = static_cast<std::streamsize>(k * cols * static_cast<Index>(sizeof(double)));
    in.read(reinterpret_cast<char*>(block.data()), bytes);
    require(in.gcount() == bytes, ErrorKind::io, "short read from " + path_.string());
    if constexpr (std::endian::native != std::endian::little) {
      for (Index e = 0; e < k * cols; ++e) block.data()[e] = byteswap_if_big(block.data()[e]);
    }
    slice.middleRows(r, k) = block.topRows(k);
  }
  return slice;
}

PanelSourcePtr FileSource::with_layout(const SliceLayout& layout) const {
  return std::make_shared<FileSource>(path_, header_, layout);
}

DataPanel open_panel(const std::filesystem::path& path) {
  return DataPanel(std::make_shared<FileSource>(path));
}

PanelWriter::PanelWriter(const std::filesystem::path& path, Index cols, const SliceLayout& layout)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), cols_(cols), layout_(layout) {
  require(out_.good(), ErrorKind::io, "cannot write panel file " + path.string());
  out_.write(kMagic.data(), 4);
  put<std::uint32_t>(out_, kPanelFormatVersion);
  put<std::uint64_t>(out_, static_cast<std::uint64_t>(layout_.rows()));
  put<std::uint64_t>(out_, static_cast<std::uint64_t>(cols_));
  put<std::uint32_t>(out_, static_cast<std::uint32_t>(layout_.slice_count()));
  for (Index o : layout_.offsets()) put<std::uint64_t>(out_, static_cast<std::uint64_t>(o));
}

void PanelWriter::write_slice(const Matrix& slice) {
  require(next_ < layout_.slice_count(), ErrorKind::validation,
          "more slices written than the layout declares");
  require(slice.rows() == layout_.slice_rows(next_) && slice.cols() == cols_,
          ErrorKind::validation, "slice dimension mismatch while writing " + path_.string());
  const Index step = block_rows(cols_);
  RowMajorMatrix block(std::min(step, slice.rows()), cols_);
  for (Index r = 0; r < slice.rows(); r += step) {
    const Index k = std::min(step, slice.rows() - r);
    block.topRows(k) = slice.middleRows(r, k);
    if constexpr (std::endian::native != std::endian::little) {
      for (Index e = 0; e < k * cols_; ++e) block.data()[e] = byteswap_if_big(block.data()[e]);
    }
    out_.write(reinterpret_cast<const char*>(block.data()),
               static_cast<std::streamsize>(k * cols_ * static_cast<Index>(sizeof(double))));
  }
  require(out_.good(), ErrorKind::io, "failed writing " + path_.string());
  ++next_;
}

void PanelWriter::close() {
  require(next_ == layout_.slice_count(), ErrorKind::validation,
          "panel file " + path_.string() + " closed before all slices were written");
  out_.close();
  require(!out_.fail(), ErrorKind::io, "failed closing " + path_.string());
}

void write_panel(const std::filesystem::path& path, const PanelSource& source) {
  PanelWriter writer(path, source.cols(), source.layout());
  for (Index l = 0; l < source.slice_count(); ++l) writer.write_slice(source.read_slice(l));
  writer.close();
}

void write_panel(const std::filesystem::path& path, const DataPanel& panel) {
  write_panel(path, *panel.source());
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::validation, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    std::vector<double> row;
    for (const auto& f : fields) {
      row.push_back(parse_double(f, path.filename().string() + ":" + std::to_string(line_no)));
    }
    require(rows.empty() || row.size() == rows.front().size(), ErrorKind::validation,
            path.string() + ": ragged rows");
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows[0].size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::io, "cannot write " + path.string());
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  require(out.good(), ErrorKind::io, "failed writing " + path.string());
}

}  // namespace lfpca
