#include "softgem/idx.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "softgem/errors.hpp"

namespace softgem {

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t> &bytes, std::size_t offset,
                        const std::filesystem::path &path) {
  if (bytes.size() < offset + 4)
    throw TruncatedFile(path.string() + ": header ends early");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ofstream &out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                         static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(bytes, 4);
}

} // namespace

Eigen::MatrixXd read_idx_images(const std::filesystem::path &path) {
  const auto bytes = slurp(path);
  const auto magic = read_be32(bytes, 0, path);
  if (magic != kIdxImageMagic)
    throw BadMagic(path.string() + ": expected image magic 0x00000803");
  const auto count = read_be32(bytes, 4, path);
  const auto rows = read_be32(bytes, 8, path);
  const auto cols = read_be32(bytes, 12, path);
  const std::size_t pixels = std::size_t{rows} * cols;
  if (bytes.size() < 16 + pixels * count)
    throw TruncatedFile(path.string() + ": payload shorter than " + std::to_string(count) +
                        " images of " + std::to_string(pixels) + " pixels");
  Eigen::MatrixXd images(static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t p = 0; p < pixels; ++p)
      images(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) =
          bytes[16 + i * pixels + p] / 255.0;
  return images;
}

std::vector<int> read_idx_labels(const std::filesystem::path &path) {
  const auto bytes = slurp(path);
  const auto magic = read_be32(bytes, 0, path);
  if (magic != kIdxLabelMagic)
    throw BadMagic(path.string() + ": expected label magic 0x00000801");
  const auto count = read_be32(bytes, 4, path);
  if (bytes.size() < 8 + std::size_t{count})
    throw TruncatedFile(path.string() + ": payload shorter than " + std::to_string(count) + " labels");
  return {bytes.begin() + 8, bytes.begin() + 8 + count};
}

Dataset load_idx_dataset(const std::filesystem::path &images, const std::filesystem::path &labels) {
  Dataset out;
  out.inputs = read_idx_images(images);
  out.labels = read_idx_labels(labels);
  if (out.inputs.cols() != out.size())
    throw TruncatedFile("image count " + std::to_string(out.inputs.cols()) +
                        " differs from label count " + std::to_string(out.size()));
  out.num_classes = out.labels.empty() ? 0 : *std::max_element(out.labels.begin(), out.labels.end()) + 1;
  return out;
}

void write_idx_images(const std::filesystem::path &path, const std::vector<std::uint8_t> &pixels,
                      std::uint32_t count, std::uint32_t rows, std::uint32_t cols) {
  if (pixels.size() != std::size_t{count} * rows * cols)
    throw ShapeMismatch("pixel buffer does not match count x rows x cols");
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());
  put_be32(out, kIdxImageMagic);
  put_be32(out, count);
  put_be32(out, rows);
  put_be32(out, cols);
  out.write(reinterpret_cast<const char *>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::filesystem::path &path, const std::vector<std::uint8_t> &labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());
  put_be32(out, kIdxLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char *>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

} // namespace softgem
