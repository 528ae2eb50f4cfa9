#include <algorithm>
#include <cctype>
#include <set>
#include <tuple>

#include "gen_util.hpp"
#include "retrospect/envs.hpp"
#include "retrospect/rewards.hpp"

namespace retrospect::envs {

namespace {

const std::vector<std::string> kFirstNames = {
    "Aldor", "Brenn", "Cyra",  "Dovel", "Esker", "Fenn",  "Galen", "Hollis",
    "Ivor",  "Jessa", "Korr",  "Lumen", "Maren", "Nyle",  "Orin",  "Pell",
    "Quill", "Rhea",  "Sable", "Tamsin", "Ulric", "Vesna", "Wick", "Yara",
};
const std::vector<std::string> kSecondNames = {
    "Vale", "Harbor", "Ridge", "Crossing", "Hollow", "Ford", "Spire", "Marsh", "Reach", "Gate",
};
const std::vector<std::string> kKinds = {"guild", "township", "observatory", "library", "order"};
const std::vector<std::string> kRegions = {"northern", "eastern", "southern", "western", "central"};

constexpr int kEntityCount = 20;

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string invalid_action(std::string_view action) {
  return "Invalid action: " + std::string(action) +
         ". Valid actions are Search[entity], Lookup[keyword] and Finish[answer].";
}

}  // namespace

const std::vector<std::string>& SynthQa::relation_names() {
  static const std::vector<std::string> names = {"founder", "mentor", "rival", "patron", "successor"};
  return names;
}

std::vector<QaEntity> SynthQa::generate_world(std::uint64_t world_seed) {
  CounterRng rng(derive_seed({world_seed, 0x71617764}));
  std::vector<std::string> firsts = kFirstNames;
  detail::shuffle(firsts, rng);
  firsts.resize(kEntityCount);

  std::vector<QaEntity> entities(kEntityCount);
  for (int i = 0; i < kEntityCount; ++i) {
    auto& e = entities[static_cast<std::size_t>(i)];
    e.name = firsts[static_cast<std::size_t>(i)] + " " + detail::pick(kSecondNames, rng);
    e.kind = detail::pick(kKinds, rng);
    e.region = detail::pick(kRegions, rng);
  }
  auto other = [&](std::size_t self) {
    std::size_t j = rng.index(kEntityCount - 1);
    if (j >= self) ++j;
    return entities[j].name;
  };
  for (std::size_t i = 0; i < entities.size(); ++i) {
    entities[i].neighbor = other(i);
    for (const auto& rel : relation_names()) entities[i].relations[rel] = other(i);
  }
  return entities;
}

SynthQa::SynthQa(std::uint64_t world_seed, std::vector<TaskSpec> tasks)
    : Environment(world_seed, std::move(tasks)), entities_(generate_world(world_seed)) {}

std::unique_ptr<SynthQa> SynthQa::generate(std::uint64_t world_seed, int n_train, int n_validation) {
  auto env = std::make_unique<SynthQa>(world_seed, std::vector<TaskSpec>{});
  const auto& entities = env->entities();
  const auto modes = failure_modes_for(kId);
  CounterRng rng(derive_seed({world_seed, 0x71617461}));
  std::set<std::tuple<std::string, std::string, std::string>> used;

  for (int i = 0; i < n_train + n_validation; ++i) {
    const bool train = i < n_train;
    const int local = train ? i : i - n_train;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) throw Error(ErrorKind::kInvalidArgument, "cannot generate synthqa task");
      const QaEntity& start = detail::pick(entities, rng);
      const std::string rel1 = detail::pick(relation_names(), rng);
      const std::string rel2 = detail::pick(relation_names(), rng);
      if (used.count({start.name, rel1, rel2})) continue;
      const QaEntity* bridge = env->find_entity(start.relations.at(rel1));
      const std::string answer = bridge->relations.at(rel2);
      if (answer == start.name || answer == bridge->name || start.neighbor == answer) continue;

      TaskSpec task;
      task.env_id = std::string(kId);
      task.task_id = detail::task_id('q', i + 1);
      task.split = train ? "train" : "validation";
      task.goal_text = "What is the " + rel2 + " of the " + rel1 + " of " + start.name + "?";
      task.hidden_answer = QaAnswer{answer, start.name, bridge->name, {rel1, rel2}};
      task.failure_mode = modes[static_cast<std::size_t>(local) % modes.size()];
      task.gold_actions = {"Search[" + start.name + "]", "Lookup[" + rel1 + "]",
                           "Search[" + bridge->name + "]", "Lookup[" + rel2 + "]",
                           "Finish[" + answer + "]"};
      const auto space = start.name.find(' ');
      const std::string swapped = start.name.substr(space + 1) + " " + start.name.substr(0, space);
      task.failure_actions[FailureMode::kPrematureFinish] = {
          "Search[" + start.name + "]", "Lookup[" + rel1 + "]", "Finish[" + bridge->name + "]"};
      task.failure_actions[FailureMode::kWrongEntity] = {"Search[" + swapped + "]",
                                                         "Finish[" + start.name + "]"};
      task.failure_actions[FailureMode::kLoopRepeat] = {"Search[" + start.name + "]"};
      task.failure_actions[FailureMode::kMissedLookup] = {"Search[" + start.name + "]",
                                                          "Finish[" + start.neighbor + "]"};
      if (!env->plans_behave(task)) continue;
      used.insert({start.name, rel1, rel2});
      env->tasks_.push_back(std::move(task));
      break;
    }
  }
  return env;
}

const QaEntity* SynthQa::find_entity(std::string_view name) const {
  const std::string key = lower(trim(name));
  for (const auto& e : entities_) {
    if (lower(e.name) == key) return &e;
  }
  return nullptr;
}

std::vector<std::string> SynthQa::page_sentences(const QaEntity& entity) const {
  std::vector<std::string> sentences = {
      entity.name + " is a " + entity.kind + " in the " + entity.region + " region.",
      "It is often mentioned alongside " + entity.neighbor + ".",
  };
  for (const auto& rel : relation_names()) {
    sentences.push_back("The " + rel + " of " + entity.name + " is " + entity.relations.at(rel) + ".");
  }
  return sentences;
}

EnvState SynthQa::initial_state(const TaskSpec& task) const {
  EnvState state;
  state.observation_text =
      task.goal_text + " Available actions: Search[entity], Lookup[keyword], Finish[answer].";
  state.raw = QaPayload{};
  return state;
}

Transition SynthQa::transition(const TaskSpec& task, const EnvState& state,
                               std::string_view action) const {
  Transition next{state, 0.0};
  auto& payload = std::get<QaPayload>(next.state.raw);
  const auto parsed = parse_action(action);
  if (!parsed) {
    next.state.observation_text = invalid_action(action);
    return next;
  }
  const auto& [verb, arg] = *parsed;
  if (verb == "Search") {
    if (const QaEntity* e = find_entity(arg)) {
      payload.page = e->name;
      payload.keyword.clear();
      payload.cursor = 0;
      const auto sentences = page_sentences(*e);
      next.state.observation_text = sentences[0] + " " + sentences[1];
    } else {
      std::vector<std::string> similar;
      const auto wanted = rewards::normalize_tokens(arg);
      for (const auto& e : entities_) {
        const auto tokens = rewards::normalize_tokens(e.name);
        const bool shares = std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
          return std::find(wanted.begin(), wanted.end(), t) != wanted.end();
        });
        if (shares) similar.push_back(e.name);
      }
      std::sort(similar.begin(), similar.end());
      if (similar.size() > 5) similar.resize(5);
      next.state.observation_text =
          "Could not find [" + arg + "]. Similar: [" + detail::join(similar, ", ") + "].";
    }
  } else if (verb == "Lookup") {
    const QaEntity* e = payload.page.empty() ? nullptr : find_entity(payload.page);
    if (!e) {
      next.state.observation_text = "No page is loaded. Search for an entity first.";
      return next;
    }
    const std::string key = lower(arg);
    if (key != payload.keyword) {
      payload.keyword = key;
      payload.cursor = 0;
    }
    std::vector<std::string> hits;
    for (const auto& s : page_sentences(*e)) {
      if (!key.empty() && lower(s).find(key) != std::string::npos) hits.push_back(s);
    }
    if (payload.cursor < static_cast<int>(hits.size())) {
      const auto k = static_cast<std::size_t>(payload.cursor);
      next.state.observation_text = "(Result " + std::to_string(k + 1) + " / " +
                                    std::to_string(hits.size()) + ") " + hits[k];
      ++payload.cursor;
    } else {
      next.state.observation_text = "No more results.";
    }
  } else if (verb == "Finish") {
    payload.answer = arg;
    next.state.terminal = true;
    next.reward = rewards::f1_reward(arg, std::get<QaAnswer>(task.hidden_answer).answer);
    next.state.observation_text = "Answer submitted: " + arg + ". Episode finished.";
  } else {
    next.state.observation_text = invalid_action(action);
  }
  return next;
}

double SynthQa::final_reward(const TaskSpec& task, const EnvState& state) const {
  const auto* payload = std::get_if<QaPayload>(&state.raw);
  if (!payload || !payload->answer) return 0.0;
  return rewards::f1_reward(*payload->answer, std::get<QaAnswer>(task.hidden_answer).answer);
}

}  // namespace retrospect::envs
