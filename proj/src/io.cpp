#include "wavefuse/io.hpp"

#include <algorithm>
#include <cmath>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include <png.h>

namespace wavefuse {

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes[offset + i]} << (8 * i);
  return v;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

std::uint64_t element_count(const std::vector<std::uint32_t>& dims) {
  std::uint64_t n = 1;
  for (std::uint32_t d : dims) {
    if (d == 0) throw Error("tensor: zero-sized dimension");
    if (n > std::numeric_limits<std::uint64_t>::max() / 4 / d) {
      throw Error("tensor: dimension product overflows");
    }
    n *= d;
  }
  return n;
}

// Minimal PNM tokenizer: whitespace separated, '#' comments to end of line.
class PnmReader {
 public:
  PnmReader(std::span<const std::uint8_t> bytes, std::string name)
      : bytes_(bytes), name_(std::move(name)) {}

  std::string token() {
    skip_space();
    std::string t;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#') {
      t.push_back(static_cast<char>(bytes_[pos_++]));
    }
    if (t.empty()) fail("truncated header");
    return t;
  }

  unsigned long number() {
    const std::string t = token();
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      fail("bad header field '" + t + "'");
    }
    if (t.size() > 9) fail("header value too large");
    return std::stoul(t);
  }

  // Binary payload starts after exactly one whitespace byte.
  std::span<const std::uint8_t> raster(std::size_t n) {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail("malformed header");
    ++pos_;
    if (bytes_.size() - pos_ < n) fail("truncated pixel data");
    return bytes_.subspan(pos_, n);
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw Error("decode error in " + name_ + ": " + why);
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

FeatureMap decode_pnm(std::span<const std::uint8_t> bytes, const std::string& name) {
  PnmReader r(bytes, name);
  const std::string magic = r.token();
  std::size_t channels = 0;
  bool ascii = false;
  if (magic == "P2" || magic == "P5") channels = 1;
  if (magic == "P3" || magic == "P6") channels = 3;
  if (channels == 0) r.fail("unsupported PNM type '" + magic + "'");
  ascii = magic == "P2" || magic == "P3";

  const std::size_t width = r.number();
  const std::size_t height = r.number();
  const unsigned long maxval = r.number();
  if (width == 0 || height == 0) r.fail("zero-sized image");
  if (maxval == 0 || maxval > 255) r.fail("only 8-bit images are supported");

  const std::size_t n = width * height * channels;
  std::vector<unsigned long> samples(n);
  if (ascii) {
    for (auto& s : samples) {
      s = r.number();
      if (s > maxval) r.fail("sample exceeds maxval");
    }
  } else {
    const auto raw = r.raster(n);
    std::copy(raw.begin(), raw.end(), samples.begin());
  }

  // Interleaved pixels to planar channels.
  FeatureMap out(channels, height, width);
  const float inv = 1.0f / static_cast<float>(maxval);
  for (std::size_t p = 0; p < width * height; ++p) {
    for (std::size_t c = 0; c < channels; ++c) {
      out.channel(c)[p] = std::min(1.0f, static_cast<float>(samples[p * channels + c]) * inv);
    }
  }
  return out;
}

FeatureMap decode_png(std::span<const std::uint8_t> bytes, const std::string& name) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error("decode error in " + name + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t channels = color ? 3 : 1;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error("decode error in " + name + ": " + msg);
  }
  FeatureMap out(channels, image.height, image.width);
  const std::size_t plane = std::size_t{image.height} * image.width;
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < channels; ++c) {
      out.channel(c)[p] = static_cast<float>(pixels[p * channels + c]) / 255.0f;
    }
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.dims.empty() || t.dims.size() > 4) {
    throw Error("tensor rank must be in [1, 4], got " + std::to_string(t.dims.size()));
  }
  const std::uint64_t n = element_count(t.dims);
  if (n != t.data.size()) {
    throw Error("tensor payload has " + std::to_string(t.data.size()) +
                " values, dims require " + std::to_string(n));
  }
  std::vector<std::uint8_t> out(kTensorMagic, kTensorMagic + 4);
  out.reserve(8 + 4 * t.dims.size() + 4 * t.data.size());
  put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (std::uint32_t d : t.dims) put_u32(out, d);
  for (float v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kTensorMagic, 4) != 0) {
    throw Error("tensor file: bad magic (expected WMT1)");
  }
  if (bytes.size() < 8) throw Error("tensor file: truncated header");
  const std::uint32_t rank = get_u32(bytes, 4);
  if (rank < 1 || rank > 4) {
    throw Error("tensor file: rank must be in [1, 4], got " + std::to_string(rank));
  }
  if (bytes.size() < 8 + 4 * std::size_t{rank}) {
    throw Error("tensor file: truncated header");
  }
  Tensor t;
  for (std::uint32_t i = 0; i < rank; ++i) t.dims.push_back(get_u32(bytes, 8 + 4 * i));
  const std::uint64_t n = element_count(t.dims);
  const std::size_t offset = 8 + 4 * std::size_t{rank};
  if (bytes.size() - offset != 4 * n) {
    throw Error("tensor file: payload has " + std::to_string(bytes.size() - offset) +
                " bytes, dims require " + std::to_string(4 * n));
  }
  t.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.data[i] = std::bit_cast<float>(get_u32(bytes, offset + 4 * i));
  }
  return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  write_file(path, encode_tensor(t));
}

Tensor read_tensor(const std::filesystem::path& path) {
  try {
    return decode_tensor(read_file(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

Tensor to_tensor(const FeatureMap& x) {
  const auto narrow = [](std::size_t v) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
      throw Error("tensor dimension exceeds 32 bits");
    }
    return static_cast<std::uint32_t>(v);
  };
  return Tensor{{narrow(x.channels()), narrow(x.height()), narrow(x.width())},
                x.values()};
}

FeatureMap to_feature_map(const Tensor& t) {
  Shape s;
  if (t.dims.size() == 2) {
    s = {1, t.dims[0], t.dims[1]};
  } else if (t.dims.size() == 3) {
    s = {t.dims[0], t.dims[1], t.dims[2]};
  } else if (t.dims.size() == 4 && t.dims[0] == 1) {
    s = {t.dims[1], t.dims[2], t.dims[3]};
  } else {
    throw Error("tensor of rank " + std::to_string(t.dims.size()) +
                " is not a feature map");
  }
  return FeatureMap(s, t.data);
}

void write_feature_map(const std::filesystem::path& path, const FeatureMap& x) {
  write_tensor(path, to_tensor(x));
}

FeatureMap read_feature_map(const std::filesystem::path& path) {
  try {
    return to_feature_map(read_tensor(path));
  } catch (const Error& e) {
    const std::string what = e.what();
    if (what.rfind(path.string(), 0) == 0) throw;
    throw Error(path.string() + ": " + what);
  }
}

FeatureMap tensor_roundtrip(const FeatureMap& x, const std::filesystem::path& path) {
  write_feature_map(path, x);
  return read_feature_map(path);
}

FeatureMap load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) {
    return decode_png(bytes, path.string());
  }
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pnm(bytes, path.string());
  throw Error("decode error in " + path.string() +
              ": unsupported image format (expected PNG, PGM or PPM)");
}

void save_pnm(const std::filesystem::path& path, const FeatureMap& x) {
  if (x.channels() != 1 && x.channels() != 3) {
    throw Error("save_pnm: need 1 or 3 channels, got " + std::to_string(x.channels()));
  }
  const std::string header = std::string(x.channels() == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(x.width()) + " " +
                             std::to_string(x.height()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  const std::size_t plane = x.shape().plane();
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const float v = std::clamp(x.channel(c)[p], 0.0f, 1.0f);
      bytes.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0f)));
    }
  }
  write_file(path, bytes);
}

FeatureMap load_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char head[4] = {};
  in.read(head, 4);
  if (in.gcount() == 4 && std::memcmp(head, kTensorMagic, 4) == 0) {
    return read_feature_map(path);
  }
  return load_image(path);
}

}  // namespace wavefuse
