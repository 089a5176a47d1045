#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ruleplan/engine.hpp"
#include "ruleplan/model.hpp"

namespace ruleplan::learning {

/// One expert-labelled training scene. The scene is stated over the
/// maneuver-layer schema; the two labels give the expected consequent of
/// each layer and must share one maneuver.
struct LabelledScene {
  Scene scene;
  Behaviour maneuver_label;
  Behaviour final_label;

  const Behaviour& label(LayerId layer) const {
    return layer == LayerId::Maneuver ? maneuver_label : final_label;
  }
};

using Dataset = std::vector<LabelledScene>;

// Throws ValidationError on mismatched label maneuvers, scenes outside the
// maneuver schema, or identical scenes carrying different labels.
void validate_dataset(const Dataset& data, const EngineConfig& cfg);

/// Constraint-selection heuristics. With p / n counting scenes the refined
/// rule fires on whose label matches / differs from the rule's consequent,
/// p0 / n0 the same counts for the unrefined rule, and P / N the dataset's
/// label-match / label-mismatch totals for that consequent:
///
///   laplace              (p + 1) / (p + n + 2)
///   precision            p / (p + n), 0 when the rule fires nowhere
///   coverage_difference  (p - p0) + (n0 - n)
///   rate_difference      (p - p0) / P + (n0 - n) / N, 0-denominator terms
///                        dropped
///
/// The difference heuristics are the textbook separate-and-conquer
/// refinement deltas stated against the parent rule.
enum class Heuristic { Laplace, Precision, CoverageDifference, RateDifference };

const char* to_string(Heuristic h);
std::optional<Heuristic> heuristic_from_string(const std::string& s);

/// Deterministic random stream: a fixed-width mt19937_64 with an unbiased
/// bounded draw, so identical seeds reproduce identical runs everywhere.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform draw from [0, n); n must be positive.
  std::size_t bounded(std::size_t n);

private:
  std::mt19937_64 engine_;
};

struct ConstraintOptions {
  bool eq = true;
  bool le = true;
  bool ge = true;
  bool feature_feature = false;
};

/// Constraints derivable from observed properties: equality for every
/// property (including undefined ones), plus <= / >= relaxations of numeric
/// properties, plus optional feature-vs-feature forms. Canonically sorted
/// and deduplicated.
std::vector<Constraint> generate_constraints(
    const std::vector<Property>& props,
    const ConstraintOptions& options = ConstraintOptions());

/// Candidate constraints for one refinement together with the properties
/// they were derived from.
struct CandidatePool {
  std::vector<Constraint> constraints;
  std::vector<Property> source_properties;
};

/// Indices of training scenes that trigger rule `r`: the rule fires on the
/// layer's transformed scene and its consequent survives the layer's
/// resolution of theory `t`. Scenes whose transformation fails count as not
/// covered. A parameter theory that is still inconsistent (rules of several
/// maneuvers firing at once) is judged after narrowing to its most
/// conservative maneuver, which coincides with the plain resolution on
/// every well-formed output.
std::set<std::size_t> coverage(const Rule& r, const Theory& t, LayerId layer,
                               const EngineConfig& cfg, const Dataset& data);

/// Scores appending `c` to `r` under the given heuristic (see Heuristic).
double score_constraint(const Constraint& c, const Rule& r,
                        const Dataset& data, LayerId layer,
                        const EngineConfig& cfg, Heuristic heuristic);

/// Mutable learner bookkeeping shared by the selection step: the evolving
/// theory, the rejected no-coverage rules, and the seeded random stream.
struct LearnerState {
  Theory theory;
  std::vector<Rule> bad_rules;
  Rng rng;
  Heuristic heuristic = Heuristic::Laplace;
  // When set, selection prefers candidates that hold on the misclassified
  // scene's transformed input, falling back to the global argmax.
  bool hold_on_scene = false;
};

/// Picks the best-scoring candidate from the pool for refining `r`, breaking
/// ties from the state's random stream. `transformed_scene` may be null when
/// the misclassified scene has no transformed input.
Constraint select_constraint(const CandidatePool& pool, const Rule& r,
                             const Scene* transformed_scene,
                             const Dataset& data, LayerId layer,
                             const EngineConfig& cfg, LearnerState& state);

/// Indices of scenes whose layer label is absent from the layer's resolved
/// output under theory `t`. Transformation and resolution failures count as
/// misclassification.
std::set<std::size_t> misclassified(const Theory& t, LayerId layer,
                                    const EngineConfig& cfg,
                                    const Dataset& data);

struct LearnerOptions {
  std::uint64_t seed = 0;
  Heuristic heuristic = Heuristic::Laplace;
  std::uint64_t max_outer_iterations = 1'000'000;
  bool hold_on_scene = false;
  ConstraintOptions constraints;
};

/// Per-iteration instrumentation of one rule_update run.
struct UpdateLog {
  enum class Action {
    AddMostGeneral,   // inserted the most general rule for a label
    Refine,           // appended a constraint and reinserted the rule
    MarkBad,          // refined rule fires on no scene; banned
    DropExhausted,    // no candidate constraints left; learner rule banned
    Reinsert,         // no candidates for a most-general rule; kept as-is
  };

  struct Iteration {
    std::uint64_t index = 0;
    std::size_t misclassified_count = 0;
    std::size_t rule_count = 0;
    std::size_t bad_count = 0;            // at the loop head
    bool bad_disjoint = true;             // bad set shares no logic with R
    Action action = Action::AddMostGeneral;
    std::size_t parent_antecedent_size = 0;  // refinement actions only
    std::size_t child_antecedent_size = 0;
    std::size_t scene_index = 0;             // the misclassified scene picked
    Maneuver consequent = Maneuver::TrackSpeed;  // of the touched rule
  };

  std::vector<Iteration> iterations;
  std::uint64_t outer_iterations = 0;
  std::size_t bad_rule_count = 0;  // final size of the bad set
};

/// Separate-and-conquer update of one layer's theory until every training
/// scene's label survives resolution: pick a random misclassified scene,
/// insert the most general rule when nothing produces its label, otherwise
/// refine a randomly chosen triggering rule by one constraint generated
/// from the properties of the scenes that trigger it, enforcing novelty
/// against the union of the theory and the bad set.
///
/// Constraint choice ranks candidates by relative coverage progress over
/// the scenes the rule is responsible for (still misclassified, or covered
/// by no other rule), with scenes labelled more conservatively than the
/// consequent kept neutral in the maneuver layer; the configured heuristic
/// breaks ties, and by default candidates that release the misclassified
/// scene are preferred (hold_on_scene inverts that). Refinements that fire
/// on no scene join the bad set; a learner-generated rule whose candidate
/// pool runs dry is banned likewise.
///
/// Throws BadBaseRulesError when a rule of the base theory exhausts every
/// derivable constraint, and BudgetExceededError past max_outer_iterations
/// (unreachable on consistent, realizable labels).
Theory rule_update(const Dataset& data, const Theory& base, LayerId layer,
                   const EngineConfig& cfg, const LearnerOptions& options,
                   UpdateLog* log = nullptr);

struct EngineUpdateResult {
  EngineConfig config;
  UpdateLog maneuver_log;
  UpdateLog parameter_log;
};

/// Updates the maneuver layer first, then the parameter layer against the
/// updated maneuver theory, consuming one random stream across both passes.
EngineUpdateResult rule_engine_update(const Dataset& data,
                                      const EngineConfig& base,
                                      const LearnerOptions& options);

}  // namespace ruleplan::learning
