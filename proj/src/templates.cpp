#include "retrospect/templates.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace retrospect {

std::string ReflectionTemplate::marker() const {
  const auto brace = pattern.find('{');
  return brace == std::string::npos ? pattern : pattern.substr(0, brace);
}

TemplateLibrary::TemplateLibrary(std::vector<ReflectionTemplate> templates)
    : templates_(std::move(templates)) {
  if (templates_.size() < 6) {
    throw Error(ErrorKind::kValidation, "template library needs at least 6 templates");
  }
  std::set<std::string> markers;
  for (std::size_t i = 0; i < templates_.size(); ++i) {
    const auto& t = templates_[i];
    if (t.id != static_cast<int>(i)) {
      throw Error(ErrorKind::kValidation, "template ids must be 0..K-1 in order");
    }
    const std::string m = t.marker();
    if (m.empty() || !markers.insert(m).second) {
      throw Error(ErrorKind::kValidation, "template " + std::to_string(i) + " has an empty or duplicate marker");
    }
  }
  for (FailureMode mode : kAllFailureModes) {
    if (mode == FailureMode::kNone) continue;
    int count = 0;
    for (const auto& t : templates_) count += (t.corrects == mode) ? 1 : 0;
    if (count != 1) {
      throw Error(ErrorKind::kValidation,
                  "failure mode " + std::string(to_string(mode)) + " needs exactly one corrective template");
    }
  }
}

TemplateLibrary TemplateLibrary::standard() {
  return TemplateLibrary({
      {0,
       "I committed to a final action before completing every sub-goal. Next time I will carry out each "
       "intermediate step and act on its result instead of stopping at {last_action}.",
       FailureMode::kPrematureFinish, false},
      {1,
       "I acted on the wrong target. Next time I will use the exact name given in the task rather than "
       "{first_action}.",
       FailureMode::kWrongEntity, false},
      {2,
       "I kept repeating the same action without making progress. Next time I will switch to a different "
       "action as soon as {last_action} returns nothing new.",
       FailureMode::kLoopRepeat, false},
      {3,
       "I skipped inspecting the item I had found. Next time I will open or look up the relevant details "
       "before I decide what to do after {first_action}.",
       FailureMode::kMissedLookup, false},
      {4,
       "I chose options that did not match the request. Next time I will select every requested option "
       "exactly as written before buying.",
       FailureMode::kWrongOption, false},
      {5,
       "My plan was right but I gave up too early. Next time I will repeat {first_action} until it "
       "succeeds.",
       std::nullopt, true},
      {6, "I should be more careful and think step by step next time.", std::nullopt, false},
      {7, "The task was hard and my return was only {return}. I will try again with the same approach.",
       std::nullopt, false},
  });
}

TemplateLibrary TemplateLibrary::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("template library: ") + e.what());
  }
  std::vector<ReflectionTemplate> templates;
  for (const auto& item : doc.at("templates")) {
    ReflectionTemplate t;
    t.id = item.at("id").get<int>();
    t.pattern = item.at("pattern").get<std::string>();
    if (item.contains("corrects") && !item.at("corrects").is_null()) {
      auto mode = parse_failure_mode(item.at("corrects").get<std::string>());
      if (!mode) throw Error(ErrorKind::kParse, "unknown failure mode in template " + std::to_string(t.id));
      t.corrects = *mode;
    }
    t.harmful = item.value("harmful", false);
    templates.push_back(std::move(t));
  }
  return TemplateLibrary(std::move(templates));
}

TemplateLibrary TemplateLibrary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kParse, "cannot open template library " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string TemplateLibrary::to_json() const {
  nlohmann::ordered_json doc;
  doc["schema"] = "retrospect.templates";
  doc["version"] = 1;
  doc["templates"] = nlohmann::ordered_json::array();
  for (const auto& t : templates_) {
    nlohmann::ordered_json item;
    item["id"] = t.id;
    item["pattern"] = t.pattern;
    item["corrects"] = t.corrects ? nlohmann::ordered_json(std::string(to_string(*t.corrects)))
                                  : nlohmann::ordered_json(nullptr);
    item["harmful"] = t.harmful;
    doc["templates"].push_back(std::move(item));
  }
  return doc.dump(2) + "\n";
}

const ReflectionTemplate& TemplateLibrary::at(int id) const {
  if (id < 0 || id >= static_cast<int>(templates_.size())) {
    throw Error(ErrorKind::kInvalidArgument, "template id " + std::to_string(id) + " out of range");
  }
  return templates_[static_cast<std::size_t>(id)];
}

std::string TemplateLibrary::render(int id, const SlotValues& slots) const {
  const std::string& pattern = at(id).pattern;
  std::string out;
  std::size_t pos = 0;
  while (pos < pattern.size()) {
    const auto open = pattern.find('{', pos);
    if (open == std::string::npos) {
      out.append(pattern, pos, std::string::npos);
      break;
    }
    const auto close = pattern.find('}', open);
    if (close == std::string::npos) {
      out.append(pattern, pos, std::string::npos);
      break;
    }
    out.append(pattern, pos, open - pos);
    const std::string slot = pattern.substr(open + 1, close - open - 1);
    if (slot == "first_action") {
      out += slots.first_action;
    } else if (slot == "last_action") {
      out += slots.last_action;
    } else if (slot == "return") {
      out += slots.return_text;
    } else {
      out.append(pattern, open, close - open + 1);
    }
    pos = close + 1;
  }
  return out;
}

std::optional<int> TemplateLibrary::corrective_for(FailureMode mode) const {
  for (const auto& t : templates_) {
    if (mode != FailureMode::kNone && t.corrects == mode) return t.id;
  }
  return std::nullopt;
}

bool TemplateLibrary::matches(std::string_view reflection, int id) const {
  return reflection.find(at(id).marker()) != std::string_view::npos;
}

}  // namespace retrospect
