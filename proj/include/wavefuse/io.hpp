#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "wavefuse/feature_map.hpp"

namespace wavefuse {

// On-disk tensor: "WMT1", u32 rank, rank x u32 dims, then float32 payload.
// Every integer and float is little-endian; payload is row-major.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

inline constexpr char kTensorMagic[4] = {'W', 'M', 'T', '1'};

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

Tensor to_tensor(const FeatureMap& x);
// Accepts rank 2 (H x W, one channel), rank 3, or rank 4 with leading 1.
FeatureMap to_feature_map(const Tensor& t);

void write_feature_map(const std::filesystem::path& path, const FeatureMap& x);
FeatureMap read_feature_map(const std::filesystem::path& path);

// Writes x to path and reads it back.
FeatureMap tensor_roundtrip(const FeatureMap& x, const std::filesystem::path& path);

// 8-bit grayscale or RGB image (PGM P2/P5, PPM P3/P6, PNG) scaled to [0, 1].
FeatureMap load_image(const std::filesystem::path& path);

// Binary PGM (1 channel) or PPM (3 channels); values are clamped to [0, 1].
void save_pnm(const std::filesystem::path& path, const FeatureMap& x);

// Tensor file when the file starts with the tensor magic, image otherwise.
FeatureMap load_input(const std::filesystem::path& path);

}  // namespace wavefuse
