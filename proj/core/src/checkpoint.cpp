#include "forumtag/numerics/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace forumtag::num {
namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff),
                         static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& source) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw ParseError(source, 0, "truncated checkpoint");
  }
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

std::string get_bytes(std::istream& in, std::size_t n, const std::string& source) {
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw ParseError(source, 0, "truncated checkpoint");
  }
  return s;
}

}  // namespace

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(ckpt.metadata_json.size()));
  out.write(ckpt.metadata_json.data(), static_cast<std::streamsize>(ckpt.metadata_json.size()));
  put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(out, static_cast<std::uint32_t>(t.value.rank()));
    for (std::size_t d : t.value.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.value.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out) throw IoError("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in, const std::string& source) {
  const std::string magic = get_bytes(in, sizeof(kCheckpointMagic), source);
  if (std::memcmp(magic.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw ParseError(source, 0, "not a checkpoint (bad magic)");
  }
  const std::uint32_t version = get_u32(in, source);
  if (version != kCheckpointVersion) {
    throw ParseError(source, 0, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.metadata_json = get_bytes(in, get_u32(in, source), source);
  const std::uint32_t count = get_u32(in, source);
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor t;
    t.name = get_bytes(in, get_u32(in, source), source);
    const std::uint32_t rank = get_u32(in, source);
    if (rank > 2) throw ParseError(source, 0, "tensor " + t.name + " has rank " + std::to_string(rank));
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(get_u32(in, source));
    std::vector<float> values(shape_size(shape));
    for (float& v : values) v = std::bit_cast<float>(get_u32(in, source));
    t.value = Tensor<float>(std::move(shape), std::move(values));
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_checkpoint(in, path);
}

}  // namespace forumtag::num
