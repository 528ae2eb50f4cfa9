#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "retrospect/core.hpp"

namespace retrospect {

// A reflection template. Patterns may reference the slots {first_action},
// {last_action} and {return}; the literal text before the first slot is the
// template's marker, which is how a rendered reflection is recognized inside
// an actor prompt.
struct ReflectionTemplate {
  int id = 0;
  std::string pattern;
  std::optional<FailureMode> corrects;
  bool harmful = false;

  std::string marker() const;
};

struct SlotValues {
  std::string first_action;
  std::string last_action;
  std::string return_text;
};

class TemplateLibrary {
 public:
  // Requires ids 0..K-1 in order, K >= 6, distinct non-empty markers and one
  // corrective template for every failure mode other than kNone.
  explicit TemplateLibrary(std::vector<ReflectionTemplate> templates);

  // The eight-template library used throughout: five corrective, one
  // harmful (induces repetition), two neutral.
  static TemplateLibrary standard();

  static TemplateLibrary from_json(std::string_view text);
  static TemplateLibrary load(const std::string& path);
  std::string to_json() const;

  std::size_t size() const { return templates_.size(); }
  const ReflectionTemplate& at(int id) const;
  const std::vector<ReflectionTemplate>& templates() const { return templates_; }

  std::string render(int id, const SlotValues& slots) const;

  std::optional<int> corrective_for(FailureMode mode) const;

  // True when `reflection` is a rendering of template `id`.
  bool matches(std::string_view reflection, int id) const;

 private:
  std::vector<ReflectionTemplate> templates_;
};

}  // namespace retrospect
