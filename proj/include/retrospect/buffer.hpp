#pragma once

#include <cstdint>
#include <cstdio>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "retrospect/core.hpp"

namespace retrospect {

enum class RatingFilter { kAny, kPositive, kNonPositive, kNegative };

bool passes(RatingFilter filter, double rating);

// One record per line. Reals use 17 significant digits so a round trip is
// bit-exact.
std::string record_to_json(const ReflectionRecord& record);
ReflectionRecord record_from_json(std::string_view line);

// Replay buffer D_RL backed by a JSONL file whose first line is
//   {"schema":"retrospect.replay","version":1}
// An empty path keeps the buffer in memory only. Records already in the file
// are loaded when the buffer is opened; appends go through one mutex so
// concurrent writers never interleave lines.
class ReplayBuffer {
 public:
  ReplayBuffer() = default;
  explicit ReplayBuffer(std::string path);
  ~ReplayBuffer();

  ReplayBuffer(const ReplayBuffer&) = delete;
  ReplayBuffer& operator=(const ReplayBuffer&) = delete;

  // Validates the record (kValidation) and persists it (kPersistFailed).
  void append(const ReflectionRecord& record);
  void append(std::span<const ReflectionRecord> records);

  std::vector<ReflectionRecord> records() const;
  std::size_t size() const;
  const std::string& path() const { return path_; }

  // kEmptyBuffer when nothing passes the filter. Draws without replacement
  // unless fewer than batch_size records pass.
  std::vector<ReflectionRecord> sample_batch(RatingFilter filter, std::size_t batch_size,
                                             std::uint64_t seed) const;

 private:
  void write_line(const std::string& line);

  std::string path_;
  std::FILE* file_ = nullptr;
  mutable std::mutex mutex_;
  std::vector<ReflectionRecord> records_;
};

// Reads every record of a buffer file; kPersistFailed if it cannot be opened,
// kParse on a bad header or line.
std::vector<ReflectionRecord> read_buffer(const std::string& path);

std::vector<ReflectionRecord> sample_batch(std::span<const ReflectionRecord> records, RatingFilter filter,
                                           std::size_t batch_size, std::uint64_t seed);

struct PreferenceSet {
  std::vector<PreferencePair> pairs;
  std::size_t ties = 0;
};

// A group is a maximal run of consecutive records sharing (env_id, task_id,
// trial_index); repeated collection passes over the same task therefore form
// separate groups. Each group must hold exactly two responses
// (kMalformedGroup); the higher-rated one is accepted and tied groups are
// skipped.
PreferenceSet build_preferences(std::span<const ReflectionRecord> records);

}  // namespace retrospect
