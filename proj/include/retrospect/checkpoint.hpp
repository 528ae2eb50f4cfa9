#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace retrospect {

// Flat numeric checkpoint:
//
//   retrospect-checkpoint 1
//   kind <kind>
//   shape <rows> <cols>
//   array <name> <count>
//   <value>            (one per line, 17 significant digits)
//   ...
struct Checkpoint {
  std::string kind;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::pair<std::string, std::vector<double>>> arrays;

  const std::vector<double>& array(std::string_view name) const;
};

std::string checkpoint_to_text(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_text(std::string_view text);
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
// kCheckpointMissing when the file does not exist.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace retrospect
