#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "retrospect/actor.hpp"
#include "retrospect/core.hpp"
#include "retrospect/task.hpp"

namespace retrospect::envs {

struct QaPayload {
  std::string page;  // entity of the last successful Search, empty before one
  std::string keyword;
  int cursor = 0;
  std::optional<std::string> answer;
};

struct HousePayload {
  std::string location;
  std::string holding;
  std::set<std::string> opened;
  std::map<std::string, std::string> object_location;
  std::map<std::string, std::set<std::string>> object_states;
  bool goal_satisfied = false;
};

struct ShopPayload {
  enum class Page { kSearch, kResults, kProduct, kDone };
  Page page = Page::kSearch;
  std::vector<std::string> results;
  std::string product;
  std::map<std::string, std::string> selected;  // option slot -> chosen value
  double reward = 0.0;
};

using EnvPayload = std::variant<std::monostate, QaPayload, HousePayload, ShopPayload>;

struct EnvState {
  std::string env_id;
  std::string task_id;
  std::uint64_t seed = 0;
  std::string observation_text;  // always a single line
  bool terminal = false;
  EnvPayload raw;
};

struct Transition {
  EnvState state;
  double reward = 0.0;
};

// An environment is an immutable world plus a registry of its tasks, so one
// instance can serve concurrent episodes.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string_view id() const = 0;
  virtual int default_max_steps() const = 0;

  // Initial observation for `task`; kTaskNotFound unless the task is
  // registered with this environment.
  EnvState reset(const TaskSpec& task, std::uint64_t seed) const;

  // kEpisodeOver on a terminal state. Malformed actions produce an
  // "Invalid action" observation and zero reward.
  Transition step(const EnvState& state, std::string_view action) const;

  // The reward function evaluated on the final state.
  double episode_return(const EnvState& state) const;

  double success_threshold() const { return 1.0; }

  std::uint64_t world_seed() const { return world_seed_; }
  const std::vector<TaskSpec>& tasks() const { return tasks_; }
  std::vector<TaskSpec> tasks(std::string_view split) const;
  const TaskSpec& task(std::string_view task_id) const;

 protected:
  Environment(std::uint64_t world_seed, std::vector<TaskSpec> tasks);

  virtual EnvState initial_state(const TaskSpec& task) const = 0;
  virtual Transition transition(const TaskSpec& task, const EnvState& state,
                                std::string_view action) const = 0;
  virtual double final_reward(const TaskSpec& task, const EnvState& state) const = 0;

  // Runs every scripted plan of a freshly generated task and checks that the
  // gold plan succeeds and every failure plan does not.
  bool plans_behave(const TaskSpec& task) const;

  std::uint64_t world_seed_;
  std::vector<TaskSpec> tasks_;
};

// Splits "Name[argument]" into its parts; nullopt when the text is not of
// that shape.
std::optional<std::pair<std::string, std::string>> parse_action(std::string_view action);

std::string trim(std::string_view text);

// ---------------------------------------------------------------------------
// synthqa: multi-hop questions over a generated entity-fact graph.

struct QaEntity {
  std::string name;
  std::string kind;
  std::string region;
  std::string neighbor;
  std::map<std::string, std::string> relations;
};

class SynthQa : public Environment {
 public:
  static constexpr std::string_view kId = "synthqa";
  static constexpr int kMaxSteps = 8;
  static const std::vector<std::string>& relation_names();

  static std::vector<QaEntity> generate_world(std::uint64_t world_seed);
  static std::unique_ptr<SynthQa> generate(std::uint64_t world_seed, int n_train, int n_validation);

  SynthQa(std::uint64_t world_seed, std::vector<TaskSpec> tasks);

  std::string_view id() const override { return kId; }
  int default_max_steps() const override { return kMaxSteps; }

  const std::vector<QaEntity>& entities() const { return entities_; }
  const QaEntity* find_entity(std::string_view name) const;
  std::vector<std::string> page_sentences(const QaEntity& entity) const;

 protected:
  EnvState initial_state(const TaskSpec& task) const override;
  Transition transition(const TaskSpec& task, const EnvState& state,
                        std::string_view action) const override;
  double final_reward(const TaskSpec& task, const EnvState& state) const override;

 private:
  std::vector<QaEntity> entities_;
};

// ---------------------------------------------------------------------------
// synthhouse: object manipulation on a 5x5 grid of receptacles.

struct HouseReceptacle {
  std::string name;
  int row = 0;
  int col = 0;
  bool openable = false;
  std::string appliance_state;  // "clean", "hot" or "cool" for appliances
};

struct HouseWorld {
  std::vector<HouseReceptacle> receptacles;
  std::map<std::string, std::string> object_location;  // object -> receptacle
};

class SynthHouse : public Environment {
 public:
  static constexpr std::string_view kId = "synthhouse";
  static constexpr int kMaxSteps = 20;

  static HouseWorld generate_world(std::uint64_t world_seed);
  static std::unique_ptr<SynthHouse> generate(std::uint64_t world_seed, int n_train, int n_validation);

  SynthHouse(std::uint64_t world_seed, std::vector<TaskSpec> tasks);

  std::string_view id() const override { return kId; }
  int default_max_steps() const override { return kMaxSteps; }

  const HouseWorld& world() const { return world_; }
  const HouseReceptacle* find_receptacle(std::string_view name) const;

 protected:
  EnvState initial_state(const TaskSpec& task) const override;
  Transition transition(const TaskSpec& task, const EnvState& state,
                        std::string_view action) const override;
  double final_reward(const TaskSpec& task, const EnvState& state) const override;

 private:
  std::string describe(const HousePayload& payload, const HouseReceptacle& where) const;

  HouseWorld world_;
};

// ---------------------------------------------------------------------------
// synthshop: a product catalog with search results and product pages.

struct ShopProduct {
  std::string title;
  std::string type_text;
  std::vector<std::string> attributes;
  std::vector<std::pair<std::string, std::vector<std::string>>> option_slots;  // slot -> values
  double price = 0.0;

  std::string slot_of(std::string_view option_value) const;
};

class SynthShop : public Environment {
 public:
  static constexpr std::string_view kId = "synthshop";
  static constexpr int kMaxSteps = 10;
  static constexpr std::size_t kResultsPerPage = 5;

  static std::vector<ShopProduct> generate_catalog(std::uint64_t world_seed);
  static std::unique_ptr<SynthShop> generate(std::uint64_t world_seed, int n_train, int n_validation);

  SynthShop(std::uint64_t world_seed, std::vector<TaskSpec> tasks);

  std::string_view id() const override { return kId; }
  int default_max_steps() const override { return kMaxSteps; }

  const std::vector<ShopProduct>& catalog() const { return catalog_; }
  const ShopProduct* find_product(std::string_view title) const;
  std::vector<std::string> search(std::string_view query) const;
  std::string product_page(const ShopProduct& product) const;

 protected:
  EnvState initial_state(const TaskSpec& task) const override;
  Transition transition(const TaskSpec& task, const EnvState& state,
                        std::string_view action) const override;
  double final_reward(const TaskSpec& task, const EnvState& state) const override;

 private:
  std::vector<ShopProduct> catalog_;
};

// ---------------------------------------------------------------------------

inline constexpr std::string_view kEnvironmentIds[] = {SynthQa::kId, SynthHouse::kId, SynthShop::kId};

// Failure modes each environment's tasks are cycled through.
std::vector<FailureMode> failure_modes_for(std::string_view env_id);

std::unique_ptr<Environment> make_environment(std::string_view env_id, std::uint64_t world_seed,
                                              int n_train = 50, int n_validation = 30);

// Task-set fixture: {schema, version, env_id, world_seed, tasks[]}. The world
// is regenerated from world_seed on load.
std::string task_set_to_json(const Environment& env);
std::unique_ptr<Environment> task_set_from_json(std::string_view text);
void save_task_set(const Environment& env, const std::string& path);
std::unique_ptr<Environment> load_task_set(const std::string& path);

class RolloutAborted : public Error {
 public:
  RolloutAborted(const std::string& message, Trajectory partial)
      : Error(ErrorKind::kRolloutAborted, message), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

struct RolloutOptions {
  int max_steps = 0;  // 0 selects the environment default
  int trial_index = 1;
  std::uint64_t seed = 0;
  std::size_t prompt_budget = kDefaultPromptBudget;
};

// Alternates actor and environment until a terminal state or max_steps.
Trajectory rollout(const Environment& env, const TaskSpec& task, const ActorPolicy& actor,
                   std::span<const std::string> reflections, const RolloutOptions& options = {});

}  // namespace retrospect::envs
