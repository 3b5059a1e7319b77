#pragma once

// The four-machine token-ring case study: the seven synthesis templates and
// the three concrete protocols reported for them.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bms/ir.hpp"

namespace bms {

enum class TemplateName {
  single_rule,
  single_rule_BR,
  single_rule_B_blocks_initialized,
  two_rules_general,
  two_rules_reduced,
  two_rules_reduced_BR,
  two_rules_reduced_BR_simpl_values,
};

inline constexpr std::array kAllTemplates = {
    TemplateName::single_rule,       TemplateName::single_rule_BR,       TemplateName::single_rule_B_blocks_initialized,
    TemplateName::two_rules_general, TemplateName::two_rules_reduced,    TemplateName::two_rules_reduced_BR,
    TemplateName::two_rules_reduced_BR_simpl_values,
};

std::string_view to_string(TemplateName t);
std::optional<TemplateName> template_from_string(std::string_view name);

TemplateModel build_template(TemplateName t);

enum class KnownSolutionName { section2_solution, initialized_solution, section42_first_solution };

inline constexpr std::array kAllKnownSolutions = {
    KnownSolutionName::section2_solution,
    KnownSolutionName::initialized_solution,
    KnownSolutionName::section42_first_solution,
};

std::string_view to_string(KnownSolutionName s);
std::optional<KnownSolutionName> known_solution_from_string(std::string_view name);

/// None of the candidate readings of a printed protocol satisfies FG(legitimate).
class AmbiguityUnresolved : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KnownSolution {
  TemplateModel model;          // concrete protocol, rules as printed
  TemplateName template_name;   // template the protocol was synthesized from
  /// Instance of that template with the same enabledness and moves under
  /// positional rule counting; nullopt when the reading has no such instance.
  std::optional<Instantiation> inst;
  std::string reading;          // which reading of the printed text was used
  std::vector<std::string> rejected;  // readings tried first that failed
};

/// One way of reading the printed protocol text.
struct SolutionReading {
  std::string label;
  std::string dsl;                    // concrete model source
  std::optional<Instantiation> inst;  // equivalent instance of the home template
};

/// Every candidate reading, in the order they are tried.
std::vector<SolutionReading> known_solution_readings(KnownSolutionName name);

/// Template the protocol was synthesized from.
TemplateName home_template(KnownSolutionName name);

/// Builds the printed protocol. Where the text admits several readings they
/// are tried in a fixed order and the first one satisfying FG(legitimate)
/// wins; a text with a single reading is returned as printed.
KnownSolution known_solution(KnownSolutionName name);

}  // namespace bms
