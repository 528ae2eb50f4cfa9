#include <fstream>
#include <sstream>

#include <json.hpp>

#include "retrospect/envs.hpp"

namespace retrospect::envs {

namespace {

using ojson = nlohmann::ordered_json;

ojson hidden_to_json(const HiddenAnswer& hidden) {
  ojson out;
  if (const auto* qa = std::get_if<QaAnswer>(&hidden)) {
    out["answer"] = qa->answer;
    out["start_entity"] = qa->start_entity;
    out["bridge_entity"] = qa->bridge_entity;
    out["relations"] = qa->relations;
  } else if (const auto* house = std::get_if<HouseGoal>(&hidden)) {
    out["object_type"] = house->object_type;
    out["required_state"] = house->required_state;
    out["target"] = house->target;
  } else if (const auto* shop = std::get_if<ShopGoal>(&hidden)) {
    out["product_title"] = shop->product_title;
    out["type_text"] = shop->target.type_text;
    out["attributes"] = shop->target.attributes;
    out["options"] = shop->target.options;
    out["price_limit"] = shop->target.price_limit;
  }
  return out;
}

HiddenAnswer hidden_from_json(std::string_view env_id, const nlohmann::json& j) {
  if (env_id == SynthQa::kId) {
    return QaAnswer{j.at("answer").get<std::string>(), j.at("start_entity").get<std::string>(),
                    j.at("bridge_entity").get<std::string>(),
                    j.at("relations").get<std::vector<std::string>>()};
  }
  if (env_id == SynthHouse::kId) {
    return HouseGoal{j.at("object_type").get<std::string>(), j.at("required_state").get<std::string>(),
                     j.at("target").get<std::string>()};
  }
  ShopGoal goal;
  goal.product_title = j.at("product_title").get<std::string>();
  goal.target.type_text = j.at("type_text").get<std::string>();
  goal.target.attributes = j.at("attributes").get<std::set<std::string>>();
  goal.target.options = j.at("options").get<std::set<std::string>>();
  goal.target.price_limit = j.at("price_limit").get<double>();
  return goal;
}

FailureMode mode_from(const std::string& name) {
  auto mode = parse_failure_mode(name);
  if (!mode) throw Error(ErrorKind::kParse, "unknown failure mode " + name);
  return *mode;
}

}  // namespace

std::string task_set_to_json(const Environment& env) {
  ojson doc;
  doc["schema"] = "retrospect.tasks";
  doc["version"] = 1;
  doc["env_id"] = std::string(env.id());
  doc["world_seed"] = env.world_seed();
  doc["tasks"] = ojson::array();
  for (const auto& t : env.tasks()) {
    ojson item;
    item["task_id"] = t.task_id;
    item["split"] = t.split;
    item["goal_text"] = t.goal_text;
    item["failure_mode"] = std::string(to_string(t.failure_mode));
    item["hidden_answer"] = hidden_to_json(t.hidden_answer);
    item["gold_actions"] = t.gold_actions;
    ojson failures = ojson::object();
    for (const auto& [mode, plan] : t.failure_actions) failures[std::string(to_string(mode))] = plan;
    item["failure_actions"] = failures;
    doc["tasks"].push_back(std::move(item));
  }
  return doc.dump(2) + "\n";
}

std::unique_ptr<Environment> task_set_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("schema") != "retrospect.tasks" || doc.at("version") != 1) {
      throw Error(ErrorKind::kParse, "not a version-1 task set");
    }
    const auto env_id = doc.at("env_id").get<std::string>();
    const auto world_seed = doc.at("world_seed").get<std::uint64_t>();
    std::vector<TaskSpec> tasks;
    for (const auto& item : doc.at("tasks")) {
      TaskSpec t;
      t.env_id = env_id;
      t.task_id = item.at("task_id").get<std::string>();
      t.split = item.at("split").get<std::string>();
      t.goal_text = item.at("goal_text").get<std::string>();
      t.failure_mode = mode_from(item.at("failure_mode").get<std::string>());
      t.hidden_answer = hidden_from_json(env_id, item.at("hidden_answer"));
      t.gold_actions = item.at("gold_actions").get<std::vector<std::string>>();
      for (const auto& [name, plan] : item.at("failure_actions").items()) {
        t.failure_actions[mode_from(name)] = plan.get<std::vector<std::string>>();
      }
      tasks.push_back(std::move(t));
    }
    if (env_id == SynthQa::kId) return std::make_unique<SynthQa>(world_seed, std::move(tasks));
    if (env_id == SynthHouse::kId) return std::make_unique<SynthHouse>(world_seed, std::move(tasks));
    if (env_id == SynthShop::kId) return std::make_unique<SynthShop>(world_seed, std::move(tasks));
    throw Error(ErrorKind::kParse, "unknown environment " + env_id);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("task set: ") + e.what());
  }
}

void save_task_set(const Environment& env, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  out << task_set_to_json(env);
  if (!out) throw Error(ErrorKind::kPersistFailed, "cannot write " + path);
}

std::unique_ptr<Environment> load_task_set(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kParse, "cannot open task set " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return task_set_from_json(ss.str());
}

}  // namespace retrospect::envs
