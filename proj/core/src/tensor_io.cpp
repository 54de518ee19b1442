#include "hmf/tensor_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "hmf/error.hpp"

namespace hmf {

namespace {

constexpr char kMagic[8] = {'H', 'M', 'F', 'T', 'N', 'S', 'R', '1'};
constexpr std::uint32_t kFloat64 = 1;

template <class T>
void put_le(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  os.write(reinterpret_cast<const char*>(b.data()), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> b;
  is.read(reinterpret_cast<char*>(b.data()), sizeof(T));
  if (!is) throw IoError("truncated tensor file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

std::string hex(const unsigned char* d, unsigned n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < n; ++i) {
    out.push_back(digits[d[i] >> 4]);
    out.push_back(digits[d[i] & 15]);
  }
  return out;
}

std::string sha256_bytes(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  return hex(md, len);
}

}  // namespace

Tensor::Tensor(std::vector<std::uint64_t> s) : shape(std::move(s)) { data.assign(size(), 0.0); }

std::size_t Tensor::size() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  if (t.size() != t.data.size()) throw ShapeMismatch("tensor payload does not match shape");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(os, kFloat64);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape.size()));
  for (auto d : t.shape) put_le<std::uint64_t>(os, d);
  for (double x : t.data) put_le<double>(os, x);
  if (!os) throw IoError("write failed for " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw IoError(path.string() + " is not a tensor file");
  if (get_le<std::uint32_t>(is) != kFloat64) throw IoError("unsupported dtype in " + path.string());
  const auto rank = get_le<std::uint32_t>(is);
  std::vector<std::uint64_t> shape(rank);
  for (auto& d : shape) d = get_le<std::uint64_t>(is);
  Tensor t(std::move(shape));
  for (auto& x : t.data) x = get_le<double>(is);
  return t;
}

void write_sidecar(const std::filesystem::path& path, const std::string& json_text) {
  std::ofstream os(path.string() + ".json");
  if (!os) throw IoError("cannot write sidecar for " + path.string());
  os << json_text << '\n';
}

std::string read_sidecar(const std::filesystem::path& path) {
  std::ifstream is(path.string() + ".json");
  if (!is) throw IoError("missing sidecar for " + path.string());
  return std::string(std::istreambuf_iterator<char>(is), {});
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return sha256_bytes(ss.str());
}

std::string sha256_text(const std::string& text) { return sha256_bytes(text); }

}  // namespace hmf
