#include "retrospect/buffer.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "retrospect/rng.hpp"

namespace retrospect {

namespace {

constexpr const char* kHeader = R"({"schema":"retrospect.replay","version":1})";

std::string quote(const std::string& s) { return nlohmann::json(s).dump(); }

void check_header(const std::string& line, const std::string& path) {
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, path + ": bad header: " + e.what());
  }
  if (header.value("schema", "") != "retrospect.replay" || header.value("version", 0) != 1) {
    throw Error(ErrorKind::kParse, path + ": not a version-1 replay buffer");
  }
}

}  // namespace

bool passes(RatingFilter filter, double rating) {
  switch (filter) {
    case RatingFilter::kAny:
      return true;
    case RatingFilter::kPositive:
      return rating > 0.0;
    case RatingFilter::kNonPositive:
      return rating <= 0.0;
    case RatingFilter::kNegative:
      return rating < 0.0;
  }
  return false;
}

std::string record_to_json(const ReflectionRecord& r) {
  std::string out = "{";
  out += "\"env_id\":" + quote(r.env_id);
  out += ",\"task_id\":" + quote(r.task_id);
  out += ",\"trial_index\":" + std::to_string(r.trial_index);
  out += ",\"instruction\":" + quote(r.instruction);
  out += ",\"response_id\":" + std::to_string(r.response_id);
  out += ",\"response_text\":" + quote(r.response_text);
  out += ",\"return_before\":" + format_exact(r.return_before);
  out += ",\"return_after\":" + format_exact(r.return_after);
  out += ",\"rating\":" + format_exact(r.rating);
  out += ",\"behavior_logprob\":" + format_exact(r.behavior_logprob);
  out += "}";
  return out;
}

ReflectionRecord record_from_json(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    ReflectionRecord r;
    r.env_id = j.at("env_id").get<std::string>();
    r.task_id = j.at("task_id").get<std::string>();
    r.trial_index = j.at("trial_index").get<int>();
    r.instruction = j.at("instruction").get<std::string>();
    r.response_id = j.at("response_id").get<int>();
    r.response_text = j.at("response_text").get<std::string>();
    r.return_before = j.at("return_before").get<double>();
    r.return_after = j.at("return_after").get<double>();
    r.rating = j.at("rating").get<double>();
    r.behavior_logprob = j.at("behavior_logprob").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("bad replay record: ") + e.what());
  }
}

std::vector<ReflectionRecord> read_buffer(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kPersistFailed, "cannot open buffer " + path);
  std::string line;
  if (!std::getline(in, line)) return {};
  check_header(line, path);
  std::vector<ReflectionRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(record_from_json(line));
  }
  return records;
}

ReplayBuffer::ReplayBuffer(std::string path) : path_(std::move(path)) {
  if (path_.empty()) return;
  const bool fresh = !std::filesystem::exists(path_) || std::filesystem::file_size(path_) == 0;
  if (!fresh) records_ = read_buffer(path_);
  file_ = std::fopen(path_.c_str(), "ab");
  if (file_ == nullptr) throw Error(ErrorKind::kPersistFailed, "cannot open buffer " + path_ + " for append");
  if (fresh) write_line(kHeader);
}

ReplayBuffer::~ReplayBuffer() {
  if (file_ != nullptr) std::fclose(file_);
}

void ReplayBuffer::write_line(const std::string& line) {
  const std::string data = line + "\n";
  if (std::fwrite(data.data(), 1, data.size(), file_) != data.size() || std::fflush(file_) != 0) {
    throw Error(ErrorKind::kPersistFailed, "write to " + path_ + " failed");
  }
}

void ReplayBuffer::append(const ReflectionRecord& record) {
  validate(record);
  const std::string line = record_to_json(record);
  std::lock_guard lock(mutex_);
  if (file_ != nullptr) write_line(line);
  records_.push_back(record);
}

void ReplayBuffer::append(std::span<const ReflectionRecord> records) {
  for (const auto& r : records) append(r);
}

std::vector<ReflectionRecord> ReplayBuffer::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::size_t ReplayBuffer::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

std::vector<ReflectionRecord> ReplayBuffer::sample_batch(RatingFilter filter, std::size_t batch_size,
                                                         std::uint64_t seed) const {
  return retrospect::sample_batch(records(), filter, batch_size, seed);
}

std::vector<ReflectionRecord> sample_batch(std::span<const ReflectionRecord> records, RatingFilter filter,
                                           std::size_t batch_size, std::uint64_t seed) {
  if (batch_size == 0) throw Error(ErrorKind::kInvalidArgument, "batch size must be positive");
  std::vector<const ReflectionRecord*> pool;
  for (const auto& r : records) {
    if (passes(filter, r.rating)) pool.push_back(&r);
  }
  if (pool.empty()) throw Error(ErrorKind::kEmptyBuffer, "no records pass the rating filter");

  CounterRng rng(seed);
  std::vector<ReflectionRecord> batch;
  batch.reserve(batch_size);
  if (pool.size() >= batch_size) {
    // Partial Fisher-Yates: the first batch_size slots become the sample.
    for (std::size_t i = 0; i < batch_size; ++i) {
      const std::size_t j = i + rng.index(pool.size() - i);
      std::swap(pool[i], pool[j]);
      batch.push_back(*pool[i]);
    }
  } else {
    for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(*pool[rng.index(pool.size())]);
  }
  return batch;
}

PreferenceSet build_preferences(std::span<const ReflectionRecord> records) {
  auto same_key = [](const ReflectionRecord& a, const ReflectionRecord& b) {
    return a.env_id == b.env_id && a.task_id == b.task_id && a.trial_index == b.trial_index;
  };
  std::vector<std::vector<const ReflectionRecord*>> groups;
  for (const auto& r : records) {
    if (groups.empty() || !same_key(*groups.back().front(), r)) groups.emplace_back();
    groups.back().push_back(&r);
  }

  PreferenceSet out;
  for (const auto& group : groups) {
    if (group.size() != 2) {
      throw Error(ErrorKind::kMalformedGroup, group.front()->env_id + "/" + group.front()->task_id + " trial " +
                                                  std::to_string(group.front()->trial_index) + " has " +
                                                  std::to_string(group.size()) + " responses");
    }
    const ReflectionRecord& a = *group[0];
    const ReflectionRecord& b = *group[1];
    if (a.rating == b.rating) {
      ++out.ties;
      continue;
    }
    const bool first_wins = a.rating > b.rating;
    const ReflectionRecord& win = first_wins ? a : b;
    const ReflectionRecord& lose = first_wins ? b : a;
    out.pairs.push_back({a.instruction, win.response_id, lose.response_id, win.rating, lose.rating});
  }
  return out;
}

}  // namespace retrospect
