#include "earthvox/svox.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "earthvox/error.hpp"

namespace earthvox {

namespace {

constexpr char kMagic[4] = {'S', 'V', 'X', '1'};

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    using U = std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint32_t>;
    static_assert(sizeof(T) == sizeof(U));
    const auto bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& in, std::size_t pos) : in_(in), pos_(pos) {}

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint32_t>;
    if (pos_ + sizeof(U) > in_.size()) throw FormatError("svox: truncated payload");
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      bits |= static_cast<U>(static_cast<U>(in_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }

  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_;
};

}  // namespace

std::vector<std::uint8_t> encode_svox(const SparseVoxelGrid& g) {
  if (g.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error("svox: too many voxels");
  }
  if (g.channels() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error("svox: too many channels");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kSvoxHeaderSize + g.size() * 12 + g.features().size() * 4);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  Writer w(out);
  w.put(kSvoxVersion);
  w.put(g.resolution());
  w.put(g.voxel_size());
  w.put(static_cast<std::uint32_t>(g.size()));
  w.put(static_cast<std::uint16_t>(g.channels()));
  w.put(std::uint16_t{0});
  for (const auto& c : g.coords()) {
    w.put(c.x);
    w.put(c.y);
    w.put(c.z);
  }
  for (float f : g.features()) w.put(f);
  return out;
}

SparseVoxelGrid decode_svox(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("svox: bad magic");
  }
  Reader r(bytes, sizeof(kMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kSvoxVersion) {
    throw FormatError("svox: version mismatch (file " + std::to_string(version) +
                      ", expected " + std::to_string(kSvoxVersion) + ")");
  }
  GridSpec spec;
  spec.resolution = r.get<std::uint32_t>();
  spec.voxel_size = r.get<float>();
  const auto n = r.get<std::uint32_t>();
  const auto channels = r.get<std::uint16_t>();
  if (r.get<std::uint16_t>() != 0) throw FormatError("svox: reserved field is nonzero");

  const std::size_t expected =
      static_cast<std::size_t>(n) * 12 + static_cast<std::size_t>(n) * channels * 4;
  if (r.remaining() < expected) throw FormatError("svox: truncated payload");
  if (r.remaining() > expected) throw FormatError("svox: trailing bytes after payload");

  std::vector<Coord3> coords(n);
  for (auto& c : coords) {
    c.x = r.get<std::int32_t>();
    c.y = r.get<std::int32_t>();
    c.z = r.get<std::int32_t>();
  }
  for (std::size_t i = 1; i < coords.size(); ++i) {
    if (!(coords[i - 1] < coords[i])) {
      throw FormatError("svox: non-canonical coordinate order at index " +
                        std::to_string(i));
    }
  }
  for (const auto& c : coords) {
    if (!spec.contains(c)) throw FormatError("svox: coordinate outside grid bounds");
  }
  std::vector<float> features(static_cast<std::size_t>(n) * channels);
  for (auto& f : features) f = r.get<float>();
  return SparseVoxelGrid::from_canonical(std::move(coords), std::move(features),
                                         channels, spec);
}

void write_svox(const SparseVoxelGrid& g, const std::filesystem::path& path) {
  const auto bytes = encode_svox(g);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("svox: cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("svox: write failed for " + path.string());
}

SparseVoxelGrid read_svox(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("svox: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_svox(bytes);
}

}  // namespace earthvox
