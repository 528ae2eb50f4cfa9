#include "retrospect/checkpoint.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "retrospect/core.hpp"

namespace retrospect {

namespace {
constexpr const char* kMagic = "retrospect-checkpoint";
constexpr int kVersion = 1;
}  // namespace

const std::vector<double>& Checkpoint::array(std::string_view name) const {
  for (const auto& [n, values] : arrays) {
    if (n == name) return values;
  }
  throw Error(ErrorKind::kParse, "checkpoint has no array " + std::string(name));
}

std::string checkpoint_to_text(const Checkpoint& checkpoint) {
  std::string out = std::string(kMagic) + " " + std::to_string(kVersion) + "\n";
  out += "kind " + checkpoint.kind + "\n";
  out += "shape " + std::to_string(checkpoint.rows) + " " + std::to_string(checkpoint.cols) + "\n";
  for (const auto& [name, values] : checkpoint.arrays) {
    out += "array " + name + " " + std::to_string(values.size()) + "\n";
    for (double v : values) out += format_exact(v) + "\n";
  }
  return out;
}

Checkpoint checkpoint_from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic || version != kVersion) {
    throw Error(ErrorKind::kParse, "not a version-1 checkpoint");
  }
  Checkpoint cp;
  std::string word;
  if (!(in >> word) || word != "kind" || !(in >> cp.kind)) throw Error(ErrorKind::kParse, "missing kind");
  if (!(in >> word) || word != "shape" || !(in >> cp.rows >> cp.cols)) {
    throw Error(ErrorKind::kParse, "missing shape");
  }
  while (in >> word) {
    if (word != "array") throw Error(ErrorKind::kParse, "unexpected token " + word);
    std::string name;
    std::size_t count = 0;
    if (!(in >> name >> count)) throw Error(ErrorKind::kParse, "bad array header");
    std::vector<double> values(count);
    for (auto& v : values) {
      std::string token;
      if (!(in >> token)) throw Error(ErrorKind::kParse, "truncated array " + name);
      char* end = nullptr;
      v = std::strtod(token.c_str(), &end);
      if (*end != '\0') throw Error(ErrorKind::kParse, "bad number " + token);
    }
    cp.arrays.emplace_back(std::move(name), std::move(values));
  }
  return cp;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << checkpoint_to_text(checkpoint);
  if (!out) throw Error(ErrorKind::kPersistFailed, "cannot write checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::kCheckpointMissing, path);
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_text(ss.str());
}

}  // namespace retrospect
