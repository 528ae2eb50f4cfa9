#include "retrospect/features.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <string>
#include <vector>

namespace retrospect {

namespace {

struct ParsedPrompt {
  std::string env_id;
  std::string goal;
  std::vector<std::string> observations;  // state each action was taken in
  std::vector<std::string> actions;
  std::string final_observation;
  bool terminated = true;
  double episode_return = 0.0;

  // Observation produced by action t (0-based).
  const std::string& after(std::size_t t) const {
    return t + 1 < observations.size() ? observations[t + 1] : final_observation;
  }
};

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

std::string_view value_after(std::string_view line, std::string_view prefix) {
  return line.substr(prefix.size());
}

// Lines look like "Observation 3: text"; returns the text after ": ".
std::string_view numbered_value(std::string_view line) {
  const auto colon = line.find(": ");
  return colon == std::string_view::npos ? std::string_view{} : line.substr(colon + 2);
}

ParsedPrompt parse(std::string_view text) {
  ParsedPrompt p;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (starts_with(line, "Environment: ")) {
      p.env_id = std::string(value_after(line, "Environment: "));
    } else if (starts_with(line, "Task: ")) {
      p.goal = std::string(value_after(line, "Task: "));
    } else if (starts_with(line, "Observation ")) {
      p.observations.emplace_back(numbered_value(line));
    } else if (starts_with(line, "Action ")) {
      p.actions.emplace_back(numbered_value(line));
    } else if (starts_with(line, "Final observation: ")) {
      p.final_observation = std::string(value_after(line, "Final observation: "));
    } else if (starts_with(line, "Terminated: ")) {
      p.terminated = value_after(line, "Terminated: ") == "yes";
    } else if (starts_with(line, "Episode return: ")) {
      p.episode_return = std::strtod(std::string(value_after(line, "Episode return: ")).c_str(), nullptr);
    }
    if (end == text.size()) break;
  }
  return p;
}

std::size_t count_prefix(const std::vector<std::string>& actions, std::string_view prefix) {
  return static_cast<std::size_t>(
      std::count_if(actions.begin(), actions.end(), [&](const std::string& a) { return starts_with(a, prefix); }));
}

// Splits `list` on `sep` and trims spaces.
std::vector<std::string> split_list(std::string_view list, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    auto end = list.find(sep, pos);
    if (end == std::string_view::npos) end = list.size();
    std::string_view item = list.substr(pos, end - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.emplace_back(item);
    pos = end + 1;
  }
  return out;
}

// Text between `open` and the next `close` after it.
std::string_view between(std::string_view text, std::string_view open, std::string_view close) {
  const auto b = text.find(open);
  if (b == std::string_view::npos) return {};
  const auto start = b + open.size();
  const auto e = text.find(close, start);
  return text.substr(start, e == std::string_view::npos ? std::string_view::npos : e - start);
}

void qa_signals(const ParsedPrompt& p, FeatureVector& f) {
  std::size_t found_searches = 0;
  bool not_found = false;
  for (std::size_t t = 0; t < p.actions.size(); ++t) {
    if (!starts_with(p.actions[t], "Search[")) continue;
    if (starts_with(p.after(t), "Could not find")) {
      not_found = true;
    } else {
      ++found_searches;
    }
  }
  const bool finished = p.terminated && !p.actions.empty() && starts_with(p.actions.back(), "Finish[");
  const std::size_t lookups = count_prefix(p.actions, "Lookup[");
  f[kWrongTarget] = not_found ? 1.0 : 0.0;
  f[kPrematureTerminal] = (finished && !not_found && found_searches == 1 && lookups == 1) ? 1.0 : 0.0;
  f[kSkippedInspection] = (finished && found_searches >= 1 && lookups == 0) ? 1.0 : 0.0;
}

void house_signals(const ParsedPrompt& p, FeatureVector& f) {
  // Goal: "put a <state> <type> in <target>."
  std::string goal_type;
  if (starts_with(p.goal, "put a ")) {
    const auto words = split_list(p.goal.substr(6), ' ');
    if (words.size() >= 2) goal_type = words[1];
  }
  for (std::size_t t = 0; t < p.actions.size(); ++t) {
    const std::string& obs = p.after(t);
    if (starts_with(obs, "You pick up the ")) {
      const auto object = obs.substr(16);
      const auto type = object.substr(0, object.find(' '));
      if (!goal_type.empty() && type != goal_type) f[kWrongTarget] = 1.0;
    }
    if (starts_with(p.actions[t], "take[") && starts_with(obs, "Nothing happens.")) {
      f[kSkippedInspection] = 1.0;
    }
  }
  const bool processed = count_prefix(p.actions, "clean[") + count_prefix(p.actions, "heat[") +
                             count_prefix(p.actions, "cool[") > 0;
  f[kPrematureTerminal] = (p.terminated && !processed) ? 1.0 : 0.0;
}

void shop_signals(const ParsedPrompt& p, FeatureVector& f) {
  const auto wanted_attrs = split_list(between(p.goal, "with attributes: ", ". Options: "), ',');
  const auto wanted_opts = split_list(between(p.goal, ". Options: ", ". Price"), ';');
  const std::set<std::string> wanted_options(wanted_opts.begin(), wanted_opts.end());

  std::string last_page;
  bool selected_any = false;
  for (std::size_t t = 0; t < p.actions.size(); ++t) {
    const std::string& obs = p.after(t);
    if (obs.find(" | Attributes: ") != std::string::npos) last_page = obs;
    if (starts_with(obs, "You selected ")) {
      selected_any = true;
      std::string value = obs.substr(13);
      if (!value.empty() && value.back() == '.') value.pop_back();
      if (!wanted_options.count(value)) f[kOptionMismatch] = 1.0;
    }
  }
  if (!last_page.empty()) {
    const auto listed = split_list(between(last_page, " | Attributes: ", " | "), ',');
    for (const auto& a : wanted_attrs) {
      if (std::find(listed.begin(), listed.end(), a) == listed.end()) f[kWrongTarget] = 1.0;
    }
  }
  const bool bought = p.terminated && !p.actions.empty() && p.actions.back() == "Choose[buy]";
  f[kPrematureTerminal] = (bought && !selected_any) ? 1.0 : 0.0;
}

}  // namespace

std::string_view feature_name(std::size_t feature) {
  static constexpr std::string_view kNames[kFeatureCount] = {
      "bias",          "return_zero",   "return_partial",     "repeated_action",
      "truncated",     "wrong_target",  "premature_terminal", "skipped_inspection",
      "option_mismatch", "invalid_action", "env_house",        "env_shop",
  };
  return feature < kFeatureCount ? kNames[feature] : std::string_view{"unknown"};
}

FeatureVector extract_features(std::string_view prompt_text) {
  const ParsedPrompt p = parse(prompt_text);
  FeatureVector f{};
  f[kBias] = 1.0;
  f[kReturnZero] = p.episode_return == 0.0 ? 1.0 : 0.0;
  f[kReturnPartial] = (p.episode_return > 0.0 && p.episode_return < 1.0) ? 1.0 : 0.0;
  f[kTruncated] = p.terminated ? 0.0 : 1.0;
  for (std::size_t t = 1; t < p.actions.size(); ++t) {
    if (p.actions[t] == p.actions[t - 1]) f[kRepeatedAction] = 1.0;
  }
  for (std::size_t t = 0; t < p.actions.size(); ++t) {
    if (starts_with(p.after(t), "Invalid action")) f[kInvalidAction] = 1.0;
  }
  if (p.env_id == "synthqa") {
    qa_signals(p, f);
  } else if (p.env_id == "synthhouse") {
    f[kEnvHouse] = 1.0;
    house_signals(p, f);
  } else if (p.env_id == "synthshop") {
    f[kEnvShop] = 1.0;
    shop_signals(p, f);
  }
  return f;
}

}  // namespace retrospect
