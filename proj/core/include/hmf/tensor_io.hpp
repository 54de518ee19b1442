#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hmf {

// Dense row-major float64 array.
struct Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::uint64_t> s);
  std::size_t size() const;
};

// File layout: 8 byte magic "HMFTNSR1", uint32 dtype (1 = float64), uint32
// rank, rank x uint64 dims, then the payload. All little endian.
void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

// Sidecar metadata lives next to the tensor as "<path>.json".
void write_sidecar(const std::filesystem::path& path, const std::string& json_text);
std::string read_sidecar(const std::filesystem::path& path);

std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(const std::string& text);

}  // namespace hmf
