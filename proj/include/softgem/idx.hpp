#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "softgem/dataset.hpp"

namespace softgem {

// IDX container (the MNIST distribution format): big-endian u32 magic whose
// low byte is the rank, one big-endian u32 per dimension, then raw u8 data.
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// Images as columns of pixel/255 values.
Eigen::MatrixXd read_idx_images(const std::filesystem::path &path);
std::vector<int> read_idx_labels(const std::filesystem::path &path);

// Pairs an image file with its label file; num_classes = max label + 1.
Dataset load_idx_dataset(const std::filesystem::path &images, const std::filesystem::path &labels);

void write_idx_images(const std::filesystem::path &path, const std::vector<std::uint8_t> &pixels,
                      std::uint32_t count, std::uint32_t rows, std::uint32_t cols);
void write_idx_labels(const std::filesystem::path &path, const std::vector<std::uint8_t> &labels);

} // namespace softgem
