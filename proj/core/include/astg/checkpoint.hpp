#pragma once

// Text checkpoint format, version 1:
//
//   astg-checkpoint
//   format_version 1
//   meta <key> <value>            (zero or more; value runs to end of line)
//   tensor <name> <rows> <cols>
//   <rows*cols values, %.17g, whitespace separated>
//   ...
//   end
//
// Values are written with 17 significant digits so a save/load cycle restores
// every double bit-for-bit.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "astg/autodiff.hpp"

namespace astg::ad {

inline constexpr int kCheckpointFormatVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<NamedTensor> tensors;

  const Tensor* find(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws LoadError on I/O failure, malformed content, or version mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace astg::ad
