#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "forumtag/numerics/tensor.hpp"

namespace forumtag::num {

// Binary layout, all integers little-endian u32:
//   magic "FTAGCKPT" | version | json length | json bytes |
//   tensor count | { name length | name | rank | dims... | f32 values } ...
inline constexpr char kCheckpointMagic[8] = {'F', 'T', 'A', 'G', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor<float> value;
};

struct Checkpoint {
  std::string metadata_json;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in, const std::string& source = "<stream>");

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace forumtag::num
