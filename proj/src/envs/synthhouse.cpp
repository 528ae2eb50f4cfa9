#include <algorithm>
#include <set>
#include <tuple>

#include "gen_util.hpp"
#include "retrospect/envs.hpp"
#include "retrospect/rewards.hpp"

namespace retrospect::envs {

namespace {

const std::vector<std::string> kObjectTypes = {"mug",   "apple",  "knife", "spatula", "tomato", "plate",
                                               "bowl",  "potato", "egg",   "cup",     "pan",    "spoon"};
constexpr int kInstancesPerType = 3;

struct ApplianceSpec {
  const char* name;
  const char* state;
  const char* verb;
};
constexpr ApplianceSpec kAppliances[] = {
    {"sinkbasin 1", "clean", "clean"},
    {"microwave 1", "hot", "heat"},
    {"fridge 1", "cool", "cool"},
};

const char* verb_for_state(std::string_view state) {
  for (const auto& a : kAppliances) {
    if (state == a.state) return a.verb;
  }
  return "";
}

std::string object_type(std::string_view object) {
  const auto space = object.find(' ');
  return std::string(object.substr(0, space));
}

std::string invalid_action(std::string_view action) {
  return "Invalid action: " + std::string(action) +
         ". Valid actions are goto[location], open[receptacle], close[receptacle], take[object], "
         "put[object], clean[object], heat[object], cool[object], toggle[object] and look[].";
}

constexpr const char* kNothing = "Nothing happens.";

}  // namespace

HouseWorld SynthHouse::generate_world(std::uint64_t world_seed) {
  CounterRng rng(derive_seed({world_seed, 0x686f7573}));
  HouseWorld world;
  std::vector<HouseReceptacle> list;
  auto add = [&](const std::string& base, int count, bool openable) {
    for (int i = 1; i <= count; ++i) list.push_back({base + " " + std::to_string(i), 0, 0, openable, ""});
  };
  add("drawer", 6, true);
  add("cabinet", 6, true);
  add("safe", 1, true);
  add("shelf", 4, false);
  add("countertop", 3, false);
  add("desk", 2, false);
  for (const auto& a : kAppliances) list.push_back({a.name, 0, 0, false, a.state});

  // Lay the 25 receptacles out on the 5x5 grid in a seeded order.
  detail::shuffle(list, rng);
  for (std::size_t i = 0; i < list.size(); ++i) {
    list[i].row = static_cast<int>(i / 5) + 1;
    list[i].col = static_cast<int>(i % 5) + 1;
  }
  std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  world.receptacles = list;

  std::vector<std::string> storage;
  for (const auto& r : world.receptacles) {
    if (r.appliance_state.empty()) storage.push_back(r.name);
  }
  for (const auto& type : kObjectTypes) {
    for (int i = 1; i <= kInstancesPerType; ++i) {
      world.object_location[type + " " + std::to_string(i)] = detail::pick(storage, rng);
    }
  }
  return world;
}

SynthHouse::SynthHouse(std::uint64_t world_seed, std::vector<TaskSpec> tasks)
    : Environment(world_seed, std::move(tasks)), world_(generate_world(world_seed)) {}

std::unique_ptr<SynthHouse> SynthHouse::generate(std::uint64_t world_seed, int n_train, int n_validation) {
  auto env = std::make_unique<SynthHouse>(world_seed, std::vector<TaskSpec>{});
  const HouseWorld& world = env->world();
  const auto modes = failure_modes_for(kId);
  CounterRng rng(derive_seed({world_seed, 0x686f7461}));

  std::vector<std::string> objects;
  for (const auto& [object, where] : world.object_location) objects.push_back(object);
  std::vector<std::string> targets;
  for (const auto& r : world.receptacles) {
    if (!r.openable && r.appliance_state.empty()) targets.push_back(r.name);
  }
  std::set<std::tuple<std::string, std::string, std::string>> used;

  for (int i = 0; i < n_train + n_validation; ++i) {
    const bool train = i < n_train;
    const int local = train ? i : i - n_train;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) throw Error(ErrorKind::kInvalidArgument, "cannot generate synthhouse task");
      const std::string& object = detail::pick(objects, rng);
      const std::string& source = world.object_location.at(object);
      const HouseReceptacle* src = env->find_receptacle(source);
      if (!src->openable) continue;
      std::string distractor;
      for (const auto& [other, where] : world.object_location) {
        if (where == source && object_type(other) != object_type(object)) {
          distractor = other;
          break;
        }
      }
      if (distractor.empty()) continue;
      const std::string& target = detail::pick(targets, rng);
      const ApplianceSpec& appliance = kAppliances[rng.index(std::size(kAppliances))];
      const std::string type = object_type(object);
      if (used.count({type, appliance.state, target})) continue;

      TaskSpec task;
      task.env_id = std::string(kId);
      task.task_id = detail::task_id('h', i + 1);
      task.split = train ? "train" : "validation";
      task.goal_text = "put a " + std::string(appliance.state) + " " + type + " in " + target + ".";
      task.hidden_answer = HouseGoal{type, appliance.state, target};
      task.failure_mode = modes[static_cast<std::size_t>(local) % modes.size()];

      const std::string verb = appliance.verb;
      auto plan = [&](const std::string& obj, bool open_source, bool process) {
        std::vector<std::string> p = {"goto[" + source + "]"};
        if (open_source) p.push_back("open[" + source + "]");
        p.push_back("take[" + obj + "]");
        if (process) {
          p.push_back("goto[" + std::string(appliance.name) + "]");
          p.push_back(verb + "[" + obj + "]");
        }
        p.push_back("goto[" + target + "]");
        p.push_back("put[" + obj + "]");
        return p;
      };
      task.gold_actions = plan(object, true, true);
      task.failure_actions[FailureMode::kPrematureFinish] = plan(object, true, false);
      task.failure_actions[FailureMode::kWrongEntity] = plan(distractor, true, true);
      task.failure_actions[FailureMode::kLoopRepeat] = {"goto[" + source + "]"};
      task.failure_actions[FailureMode::kMissedLookup] = plan(object, false, true);
      if (!env->plans_behave(task)) continue;
      used.insert({type, appliance.state, target});
      env->tasks_.push_back(std::move(task));
      break;
    }
  }
  return env;
}

const HouseReceptacle* SynthHouse::find_receptacle(std::string_view name) const {
  for (const auto& r : world_.receptacles) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::string SynthHouse::describe(const HousePayload& payload, const HouseReceptacle& where) const {
  const std::string at = "You arrive at " + where.name + " (room " + std::to_string(where.row) + "," +
                         std::to_string(where.col) + "). ";
  if (where.openable && !payload.opened.count(where.name)) return at + "The " + where.name + " is closed.";
  std::vector<std::string> here;
  for (const auto& [object, location] : payload.object_location) {
    if (location == where.name) here.push_back(object);
  }
  return at + "On the " + where.name + ", you see " + (here.empty() ? "nothing" : detail::join(here, ", ")) +
         ".";
}

EnvState SynthHouse::initial_state(const TaskSpec& task) const {
  std::vector<std::string> names;
  for (const auto& r : world_.receptacles) names.push_back(r.name);
  EnvState state;
  state.observation_text = "You are in the middle of a house. Around you are: " + detail::join(names, ", ") +
                           ". Your task is to: " + task.goal_text;
  HousePayload payload;
  payload.object_location = world_.object_location;
  state.raw = std::move(payload);
  return state;
}

Transition SynthHouse::transition(const TaskSpec& task, const EnvState& state,
                                  std::string_view action) const {
  Transition next{state, 0.0};
  auto& p = std::get<HousePayload>(next.state.raw);
  std::string& obs = next.state.observation_text;
  const auto parsed = parse_action(action);
  if (!parsed) {
    obs = invalid_action(action);
    return next;
  }
  const auto& [verb, arg] = *parsed;
  const HouseReceptacle* here = p.location.empty() ? nullptr : find_receptacle(p.location);
  const bool accessible = here && (!here->openable || p.opened.count(here->name));
  const auto& goal = std::get<HouseGoal>(task.hidden_answer);

  if (verb == "goto") {
    const HouseReceptacle* dest = find_receptacle(arg);
    if (!dest) {
      obs = kNothing;
    } else {
      p.location = dest->name;
      obs = describe(p, *dest);
    }
  } else if (verb == "look") {
    obs = here ? describe(p, *here) : "You are in the middle of a house.";
  } else if (verb == "open" || verb == "close") {
    const bool opening = verb == "open";
    if (here && here->name == arg && here->openable && (p.opened.count(arg) != 0) != opening) {
      if (opening) {
        p.opened.insert(arg);
        obs = "You open the " + arg + ". " + describe(p, *here);
      } else {
        p.opened.erase(arg);
        obs = "You close the " + arg + ".";
      }
    } else {
      obs = kNothing;
    }
  } else if (verb == "take") {
    auto it = p.object_location.find(arg);
    if (p.holding.empty() && accessible && it != p.object_location.end() && it->second == here->name) {
      p.object_location.erase(it);
      p.holding = arg;
      obs = "You pick up the " + arg + " from the " + here->name + ".";
    } else {
      obs = kNothing;
    }
  } else if (verb == "put") {
    const bool at_target = here && here->name == goal.target;
    if (!p.holding.empty() && p.holding == arg && accessible) {
      p.object_location[arg] = here->name;
      p.holding.clear();
      obs = "You put the " + arg + " in/on the " + here->name + ".";
    } else {
      obs = kNothing;
    }
    if (at_target) {
      p.goal_satisfied = false;
      for (const auto& [object, location] : p.object_location) {
        const auto states = p.object_states.find(object);
        if (location == goal.target && object_type(object) == goal.object_type &&
            states != p.object_states.end() && states->second.count(goal.required_state)) {
          p.goal_satisfied = true;
        }
      }
      next.state.terminal = true;
      next.reward = rewards::binary_reward(p.goal_satisfied);
      obs += " Episode finished.";
    }
  } else if (verb == "clean" || verb == "heat" || verb == "cool") {
    const bool usable = here && !here->appliance_state.empty() && verb_for_state(here->appliance_state) == verb;
    if (usable && p.holding == arg) {
      p.object_states[arg].insert(here->appliance_state);
      obs = "You " + verb + " the " + arg + " using the " + here->name + ".";
    } else {
      obs = kNothing;
    }
  } else if (verb == "toggle") {
    obs = kNothing;
  } else {
    obs = invalid_action(action);
  }
  return next;
}

double SynthHouse::final_reward(const TaskSpec&, const EnvState& state) const {
  const auto* payload = std::get_if<HousePayload>(&state.raw);
  return rewards::binary_reward(payload && payload->goal_satisfied);
}

}  // namespace retrospect::envs
