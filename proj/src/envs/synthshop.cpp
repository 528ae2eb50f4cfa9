#include <algorithm>
#include <cstdio>
#include <set>

#include "gen_util.hpp"
#include "retrospect/envs.hpp"
#include "retrospect/rewards.hpp"

namespace retrospect::envs {

namespace {

const std::vector<std::string> kTypes = {"vegan butter", "plant-based meat", "green tea",  "running shoes",
                                         "wool socks",   "phone case",       "desk lamp",  "face cream",
                                         "dog food",     "coffee beans"};
const std::vector<std::string> kBrands = {"Acme", "Borealis", "Cobalt", "Dune"};
const std::vector<std::string> kAttributes = {"organic",     "non-gmo",    "cruelty-free", "gluten-free",
                                              "recyclable",  "waterproof", "lightweight",  "handmade",
                                              "fair-trade",  "unscented",  "sugar-free",   "long-lasting"};
const std::vector<std::pair<std::string, std::vector<std::string>>> kSlots = {
    {"size", {"size: small", "size: large"}},
    {"color", {"color: red", "color: blue"}},
    {"pack", {"pack: 1", "pack: 2"}},
    {"style", {"style: classic", "style: modern"}},
};

std::string money(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

std::string invalid_action(std::string_view action) {
  return "Invalid action: " + std::string(action) + ". Valid actions are Search[query] and Choose[button].";
}

std::string results_text(const std::vector<std::string>& titles, const SynthShop& shop) {
  std::vector<std::string> items;
  for (const auto& t : titles) items.push_back("[" + t + "] $" + money(shop.find_product(t)->price));
  return "Search results: " + (items.empty() ? std::string("none") : detail::join(items, " | ")) + ".";
}

}  // namespace

std::string ShopProduct::slot_of(std::string_view option_value) const {
  for (const auto& [slot, values] : option_slots) {
    if (std::find(values.begin(), values.end(), option_value) != values.end()) return slot;
  }
  return {};
}

std::vector<ShopProduct> SynthShop::generate_catalog(std::uint64_t world_seed) {
  CounterRng rng(derive_seed({world_seed, 0x73686f70}));
  std::vector<ShopProduct> catalog;
  for (const auto& type : kTypes) {
    // Option slots are a property of the product type.
    auto slots = kSlots;
    detail::shuffle(slots, rng);
    slots.resize(1 + rng.index(3));
    for (const auto& brand : kBrands) {
      ShopProduct p;
      p.title = brand + " " + type;
      p.type_text = type;
      auto attrs = kAttributes;
      detail::shuffle(attrs, rng);
      attrs.resize(2 + rng.index(3));
      std::sort(attrs.begin(), attrs.end());
      p.attributes = attrs;
      p.option_slots = slots;
      p.price = static_cast<double>(1000 + rng.index(8000)) / 100.0;
      catalog.push_back(std::move(p));
    }
  }
  return catalog;
}

SynthShop::SynthShop(std::uint64_t world_seed, std::vector<TaskSpec> tasks)
    : Environment(world_seed, std::move(tasks)), catalog_(generate_catalog(world_seed)) {}

std::unique_ptr<SynthShop> SynthShop::generate(std::uint64_t world_seed, int n_train, int n_validation) {
  auto env = std::make_unique<SynthShop>(world_seed, std::vector<TaskSpec>{});
  const auto& catalog = env->catalog();
  const auto modes = failure_modes_for(kId);
  CounterRng rng(derive_seed({world_seed, 0x73686174}));
  std::set<std::string> used;

  for (int i = 0; i < n_train + n_validation; ++i) {
    const bool train = i < n_train;
    const int local = train ? i : i - n_train;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) throw Error(ErrorKind::kInvalidArgument, "cannot generate synthshop task");
      const ShopProduct& product = detail::pick(catalog, rng);
      std::vector<std::string> wanted = product.attributes;
      if (wanted.size() > 3) wanted.resize(3);
      std::vector<std::string> options;
      std::vector<std::string> wrong_options;
      for (const auto& [slot, values] : product.option_slots) {
        const std::size_t k = rng.index(values.size());
        options.push_back(values[k]);
        wrong_options.push_back(values[1 - k]);
      }
      const double limit = product.price + static_cast<double>(1 + rng.index(10));
      std::string key = product.title + "|" + detail::join(options, ",");
      if (used.count(key)) continue;

      // A same-type product that misses at least one wanted attribute.
      const ShopProduct* distractor = nullptr;
      for (const auto& other : catalog) {
        if (other.type_text != product.type_text || other.title == product.title) continue;
        const bool misses = std::any_of(wanted.begin(), wanted.end(), [&](const std::string& a) {
          return std::find(other.attributes.begin(), other.attributes.end(), a) == other.attributes.end();
        });
        if (misses) {
          distractor = &other;
          break;
        }
      }
      if (!distractor) continue;

      ShopGoal goal;
      goal.product_title = product.title;
      goal.target.type_text = product.type_text;
      goal.target.attributes = {wanted.begin(), wanted.end()};
      goal.target.options = {options.begin(), options.end()};
      goal.target.price_limit = limit;

      TaskSpec task;
      task.env_id = std::string(kId);
      task.task_id = detail::task_id('s', i + 1);
      task.split = train ? "train" : "validation";
      task.goal_text = "Find a " + product.type_text + " with attributes: " + detail::join(wanted, ", ") +
                       ". Options: " + detail::join(options, "; ") + ". Price lower than " + money(limit) +
                       " dollars.";
      task.hidden_answer = goal;
      task.failure_mode = modes[static_cast<std::size_t>(local) % modes.size()];

      const std::string query = "Search[" + product.type_text + " " + detail::join(wanted, " ") + "]";
      auto plan = [&](const std::string& title, const std::vector<std::string>& picks) {
        std::vector<std::string> p = {query, "Choose[" + title + "]"};
        for (const auto& o : picks) p.push_back("Choose[" + o + "]");
        p.push_back("Choose[buy]");
        return p;
      };
      task.gold_actions = plan(product.title, options);
      task.failure_actions[FailureMode::kPrematureFinish] = plan(product.title, {});
      task.failure_actions[FailureMode::kWrongEntity] = plan(distractor->title, options);
      task.failure_actions[FailureMode::kLoopRepeat] = {query};
      task.failure_actions[FailureMode::kWrongOption] = plan(product.title, wrong_options);
      if (!env->plans_behave(task)) continue;
      used.insert(key);
      env->tasks_.push_back(std::move(task));
      break;
    }
  }
  return env;
}

const ShopProduct* SynthShop::find_product(std::string_view title) const {
  for (const auto& p : catalog_) {
    if (p.title == title) return &p;
  }
  return nullptr;
}

std::vector<std::string> SynthShop::search(std::string_view query) const {
  const auto q = rewards::normalize_tokens(query);
  std::vector<std::pair<int, std::string>> scored;
  for (const auto& p : catalog_) {
    auto tokens = rewards::normalize_tokens(p.title + " " + detail::join(p.attributes, " "));
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    int score = 0;
    for (const auto& t : tokens) score += std::count(q.begin(), q.end(), t) > 0 ? 1 : 0;
    if (score > 0) scored.emplace_back(-score, p.title);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<std::string> titles;
  for (std::size_t i = 0; i < scored.size() && i < kResultsPerPage; ++i) titles.push_back(scored[i].second);
  return titles;
}

std::string SynthShop::product_page(const ShopProduct& product) const {
  std::vector<std::string> slots;
  for (const auto& [slot, values] : product.option_slots) slots.push_back(detail::join(values, ", "));
  return "[" + product.title + "] Price: $" + money(product.price) +
         " | Attributes: " + detail::join(product.attributes, ", ") + " | Options: " + detail::join(slots, "; ") +
         " | Buttons: [buy] [back to search]";
}

EnvState SynthShop::initial_state(const TaskSpec& task) const {
  EnvState state;
  state.observation_text = "WebShop. Instruction: " + task.goal_text + " [Search]";
  state.raw = ShopPayload{};
  return state;
}

Transition SynthShop::transition(const TaskSpec& task, const EnvState& state,
                                 std::string_view action) const {
  using Page = ShopPayload::Page;
  Transition next{state, 0.0};
  auto& p = std::get<ShopPayload>(next.state.raw);
  std::string& obs = next.state.observation_text;
  const auto parsed = parse_action(action);
  if (!parsed) {
    obs = invalid_action(action);
    return next;
  }
  const auto& [verb, arg] = *parsed;
  if (verb == "Search") {
    p.results = search(arg);
    p.page = Page::kResults;
    p.product.clear();
    p.selected.clear();
    obs = results_text(p.results, *this);
  } else if (verb == "Choose") {
    if (p.page == Page::kResults &&
        std::find(p.results.begin(), p.results.end(), arg) != p.results.end()) {
      p.page = Page::kProduct;
      p.product = arg;
      p.selected.clear();
      obs = product_page(*find_product(arg));
    } else if (p.page == Page::kProduct && arg == "back to search") {
      p.page = Page::kResults;
      p.product.clear();
      p.selected.clear();
      obs = results_text(p.results, *this);
    } else if (p.page == Page::kProduct && arg == "buy") {
      const ShopProduct& product = *find_product(p.product);
      rewards::ShopChoice choice;
      choice.attributes = {product.attributes.begin(), product.attributes.end()};
      for (const auto& [slot, value] : p.selected) choice.options.insert(value);
      choice.price = product.price;
      choice.type_text = product.type_text;
      p.reward = rewards::shop_reward(std::get<ShopGoal>(task.hidden_answer).target, choice);
      p.page = Page::kDone;
      next.state.terminal = true;
      next.reward = p.reward;
      std::vector<std::string> picked;
      for (const auto& [slot, value] : p.selected) picked.push_back(value);
      obs = "You bought [" + product.title + "] with options: " +
            (picked.empty() ? std::string("none") : detail::join(picked, "; ")) + ". Episode finished.";
    } else if (p.page == Page::kProduct && !find_product(p.product)->slot_of(arg).empty()) {
      p.selected[find_product(p.product)->slot_of(arg)] = arg;
      obs = "You selected " + arg + ".";
    } else {
      obs = invalid_action(action);
    }
  } else {
    obs = invalid_action(action);
  }
  return next;
}

double SynthShop::final_reward(const TaskSpec&, const EnvState& state) const {
  const auto* payload = std::get_if<ShopPayload>(&state.raw);
  return payload && payload->page == ShopPayload::Page::kDone ? payload->reward : 0.0;
}

}  // namespace retrospect::envs
