#include "ruleplan/learning.hpp"

#include <algorithm>
#include <map>
#include <utility>

namespace ruleplan::learning {

const char* to_string(Heuristic h) {
  switch (h) {
    case Heuristic::Laplace: return "laplace";
    case Heuristic::Precision: return "precision";
    case Heuristic::CoverageDifference: return "coverage_difference";
    case Heuristic::RateDifference: return "rate_difference";
  }
  return "";
}

std::optional<Heuristic> heuristic_from_string(const std::string& s) {
  if (s == "laplace") return Heuristic::Laplace;
  if (s == "precision") return Heuristic::Precision;
  if (s == "coverage_difference") return Heuristic::CoverageDifference;
  if (s == "rate_difference") return Heuristic::RateDifference;
  return std::nullopt;
}

std::size_t Rng::bounded(std::size_t n) {
  // Lemire's unbiased multiply-shift reduction.
  std::uint64_t range = n;
  std::uint64_t x = engine_();
  __uint128_t m = static_cast<__uint128_t>(x) * range;
  auto low = static_cast<std::uint64_t>(m);
  if (low < range) {
    std::uint64_t threshold = -range % range;
    while (low < threshold) {
      x = engine_();
      m = static_cast<__uint128_t>(x) * range;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

void validate_dataset(const Dataset& data, const EngineConfig& cfg) {
  const LayerSchema& schema = cfg.maneuver_theory().schema();
  const LayerSchema& par_schema = cfg.parameter_theory().schema();
  const SchemaPtr& out_schema = cfg.parameter_theory().output_schema_ptr();
  std::map<Assignment, std::pair<std::size_t, const LabelledScene*>> seen;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const LabelledScene& entry = data[i];
    if (entry.maneuver_label.maneuver != entry.final_label.maneuver) {
      throw ValidationError(
          "label", "scene " + std::to_string(i) +
                       ": maneuver and final labels use different maneuvers");
    }
    auto validity = validate_scene(entry.scene, schema);
    if (!validity.ok()) {
      throw ValidationError("schema",
                            "scene " + std::to_string(i) + ": " +
                                validity.violations.front().message);
    }
    Feature marker = maneuver_feature(entry.maneuver_label.maneuver);
    if (!par_schema.contains(marker)) {
      throw ValidationError("unknown-feature",
                            "scene " + std::to_string(i) +
                                ": the parameter schema lacks the maneuver "
                                "marker " +
                                marker.to_string());
    }
    for (const auto& [feature, value] : entry.maneuver_label.parameter) {
      if (!par_schema.contains(feature)) {
        throw ValidationError("unknown-feature",
                              "scene " + std::to_string(i) +
                                  ": maneuver label parameter " +
                                  feature.to_string() +
                                  " is not in the parameter schema");
      }
    }
    for (const auto& [feature, value] : entry.final_label.parameter) {
      if (!out_schema || !out_schema->contains(feature)) {
        throw ValidationError("unknown-feature",
                              "scene " + std::to_string(i) +
                                  ": final label parameter " +
                                  feature.to_string() +
                                  " is not in the output schema");
      }
    }
    auto [it, inserted] = seen.emplace(entry.scene.assignment(),
                                       std::make_pair(i, &entry));
    if (!inserted) {
      const auto& [first_index, first] = it->second;
      if (first->maneuver_label != entry.maneuver_label ||
          first->final_label != entry.final_label) {
        throw ValidationError(
            "label-conflict",
            "scenes " + std::to_string(first_index) + " and " +
                std::to_string(i) + " are identical but labelled differently");
      }
    }
  }
}

std::vector<Constraint> generate_constraints(
    const std::vector<Property>& props, const ConstraintOptions& options) {
  std::vector<Property> unique(props.begin(), props.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

  std::vector<Constraint> out;
  for (const Property& prop : unique) {
    if (options.eq) {
      out.push_back(
          Constraint::feature_value(prop.feature, ConstraintOp::Eq, prop.value));
    }
    if (prop.value.is_number()) {
      if (options.le) {
        out.push_back(Constraint::feature_value(prop.feature, ConstraintOp::Le,
                                                prop.value));
      }
      if (options.ge) {
        out.push_back(Constraint::feature_value(prop.feature, ConstraintOp::Ge,
                                                prop.value));
      }
    }
  }
  if (options.feature_feature) {
    for (std::size_t i = 0; i < unique.size(); ++i) {
      for (std::size_t j = i + 1; j < unique.size(); ++j) {
        const Property& a = unique[i];
        const Property& b = unique[j];
        if (a.feature == b.feature) continue;
        if (a.value.is_number() && b.value.is_number()) {
          if (options.eq) {
            out.push_back(Constraint::feature_feature(
                a.feature, ConstraintOp::Eq, b.feature));
          }
          if (options.le) {
            out.push_back(Constraint::feature_feature(
                a.feature, ConstraintOp::Le, b.feature));
          }
          if (options.ge) {
            out.push_back(Constraint::feature_feature(
                a.feature, ConstraintOp::Ge, b.feature));
          }
        } else if (a.value.kind() == b.value.kind() && options.eq) {
          out.push_back(Constraint::feature_feature(a.feature, ConstraintOp::Eq,
                                                    b.feature));
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

// Per-layer learning view: every scene's transformed input (absent when the
// upstream pipeline fails on it) and its layer label.
struct Ctx {
  LayerId layer;
  const EngineConfig* cfg;
  const Dataset* data;
  std::vector<std::optional<Scene>> transformed;

  const Behaviour& label(std::size_t i) const {
    return (*data)[i].label(layer);
  }
  std::size_t size() const { return data->size(); }
};

Ctx make_ctx(LayerId layer, const EngineConfig& cfg, const Dataset& data) {
  Ctx ctx{layer, &cfg, &data, {}};
  ctx.transformed.reserve(data.size());
  for (const LabelledScene& entry : data) {
    if (layer == LayerId::Maneuver) {
      ctx.transformed.emplace_back(entry.scene);
      continue;
    }
    try {
      auto candidates = apply_theory(cfg.maneuver_theory(), entry.scene);
      auto resolved = resolve_maneuver(candidates, cfg.order());
      if (resolved.empty()) {
        ctx.transformed.emplace_back(std::nullopt);
      } else {
        ctx.transformed.emplace_back(transform_parameter(
            resolved, cfg.parameter_theory().schema_ptr()));
      }
    } catch (const EngineError&) {
      ctx.transformed.emplace_back(std::nullopt);
    }
  }
  return ctx;
}

// Resolved output of one layer's theory on one transformed scene.
//
// `strict` is the layer's real resolution; for the parameter layer a mixed
// maneuver or parameter conflict leaves it empty, which keeps such scenes
// misclassified until the theory is truly consistent. `triggered` is the
// coverage view used while the theory is still under construction: it first
// narrows a mixed output to its most conservative maneuver, exactly like
// the maneuver layer's own resolution, and coincides with `strict` on
// every well-formed output.
struct LayerResolution {
  std::vector<Behaviour> strict;
  std::vector<Behaviour> triggered;
};

LayerResolution resolve_layer(const Theory& t, const Scene& input,
                              LayerId layer,
                              const ConservativenessOrder& order) {
  auto output = apply_theory(t, input);
  if (layer == LayerId::Maneuver) {
    auto resolved = resolve_maneuver(output, order);
    return {resolved, resolved};
  }
  LayerResolution resolution;
  if (output.empty()) return resolution;
  try {
    resolution.strict = {resolve_parameter(output)};
    resolution.triggered = resolution.strict;
    return resolution;
  } catch (const EngineError&) {
  }
  try {
    resolution.triggered = {
        resolve_parameter(resolve_maneuver(output, order))};
  } catch (const EngineError&) {
  }
  return resolution;
}

std::vector<LayerResolution> resolve_all(const Ctx& ctx, const Theory& t) {
  std::vector<LayerResolution> resolved;
  resolved.reserve(ctx.size());
  for (const auto& scene : ctx.transformed) {
    if (!scene) {
      resolved.emplace_back();
    } else {
      resolved.push_back(resolve_layer(t, *scene, ctx.layer, ctx.cfg->order()));
    }
  }
  return resolved;
}

bool contains_behaviour(const std::vector<Behaviour>& bs, const Behaviour& b) {
  return std::find(bs.begin(), bs.end(), b) != bs.end();
}

std::set<std::size_t> misclassified_in(
    const Ctx& ctx, const std::vector<LayerResolution>& resolved) {
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    if (!ctx.transformed[i] ||
        !contains_behaviour(resolved[i].strict, ctx.label(i))) {
      out.insert(i);
    }
  }
  return out;
}

std::set<std::size_t> coverage_in(
    const Ctx& ctx, const std::vector<LayerResolution>& resolved,
    const Rule& r) {
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    if (!ctx.transformed[i]) continue;
    if (!eval_antecedent(r.antecedent, *ctx.transformed[i])) continue;
    if (contains_behaviour(resolved[i].triggered, r.consequent)) out.insert(i);
  }
  return out;
}

// In the maneuver layer a rule may freely fire on scenes whose label is
// more conservative than its consequent: resolution keeps those labels on
// top regardless. Such scenes are neutral here, so that a condition truly
// delimiting the consequent's concept scores as pure. The parameter layer
// merges exactly, so every fired mismatch counts against the rule.
bool counts_against(const Ctx& ctx, std::size_t i, const Behaviour& consequent) {
  const Behaviour& label = ctx.label(i);
  if (label == consequent) return false;
  return ctx.layer != LayerId::Maneuver ||
         !ctx.cfg->order().more_conservative(label.maneuver,
                                             consequent.maneuver);
}

// Scoring view for one refinement. The public scoring operation counts
// every fired label match as a positive; the learner's internal selection
// additionally restricts positives to scenes the refined rule is actually
// responsible for: scenes still misclassified plus scenes no other rule of
// the theory labels. Growing a rule where the theory already covers earns
// nothing, which steers refinement towards the remaining holes while
// preserving the rule's own territory.
struct ScoreView {
  const Ctx* ctx;
  Heuristic heuristic;
  bool layered = false;                 // maneuver-aware negatives
  const std::vector<char>* eligible = nullptr;  // per-scene positive mask

  bool positive(std::size_t i, const Behaviour& consequent) const {
    if (ctx->label(i) != consequent) return false;
    return eligible == nullptr || (*eligible)[i] != 0;
  }
  bool negative(std::size_t i, const Behaviour& consequent) const {
    if (ctx->label(i) == consequent) return false;
    if (!layered) return true;
    return counts_against(*ctx, i, consequent);
  }
};

struct FireCounts {
  std::size_t p = 0;  // fires, counted label match
  std::size_t n = 0;  // fires, counted label mismatch
};

FireCounts count_fires(const ScoreView& view, const Antecedent& antecedent,
                       const Behaviour& consequent) {
  const Ctx& ctx = *view.ctx;
  FireCounts counts;
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    if (!ctx.transformed[i]) continue;
    if (!eval_antecedent(antecedent, *ctx.transformed[i])) continue;
    if (view.positive(i, consequent)) {
      ++counts.p;
    } else if (view.negative(i, consequent)) {
      ++counts.n;
    }
  }
  return counts;
}

struct LabelTotals {
  std::size_t match = 0;
  std::size_t differ = 0;
};

LabelTotals label_totals(const ScoreView& view, const Behaviour& consequent) {
  LabelTotals totals;
  for (std::size_t i = 0; i < view.ctx->size(); ++i) {
    if (view.positive(i, consequent)) {
      ++totals.match;
    } else if (view.negative(i, consequent)) {
      ++totals.differ;
    }
  }
  return totals;
}

double heuristic_score(Heuristic heuristic, const FireCounts& refined,
                       const FireCounts& parent, const LabelTotals& totals) {
  double p = static_cast<double>(refined.p);
  double n = static_cast<double>(refined.n);
  switch (heuristic) {
    case Heuristic::Laplace:
      return (p + 1.0) / (p + n + 2.0);
    case Heuristic::Precision:
      return p + n > 0 ? p / (p + n) : 0.0;
    case Heuristic::CoverageDifference:
      return (p - static_cast<double>(parent.p)) +
             (static_cast<double>(parent.n) - n);
    case Heuristic::RateDifference: {
      double score = 0.0;
      if (totals.match > 0) {
        score += (p - static_cast<double>(parent.p)) /
                 static_cast<double>(totals.match);
      }
      if (totals.differ > 0) {
        score += (static_cast<double>(parent.n) - n) /
                 static_cast<double>(totals.differ);
      }
      return score;
    }
  }
  return 0.0;
}

// How the misclassified scene steers selection among equal machinery. The
// refined rule is always one whose consequent beat the scene's label, so by
// default the best-scoring constraint that no longer holds on the scene is
// taken, which directly works towards resolving that misclassification.
// The holding preference inverts this and keeps the scene covered.
enum class ScenePreference { None, Excluding, Holding };

// Candidate list drawn best-first within the preferred subset. `primary`
// ranks candidates; equal-primary candidates are ordered by `scores` (the
// configured heuristic) and remaining ties break randomly.
struct ScoredPool {
  std::vector<Constraint> constraints;
  std::vector<double> primary;
  std::vector<double> scores;
  std::vector<bool> holds;
  std::vector<bool> used;
  std::size_t remaining = 0;

  std::optional<std::size_t> draw(Rng& rng, ScenePreference preference) {
    if (remaining == 0) return std::nullopt;
    std::vector<std::size_t> best;
    auto better = [&](std::size_t i, std::size_t j) {
      if (primary[i] != primary[j]) return primary[i] > primary[j];
      return scores[i] > scores[j];
    };
    auto equal = [&](std::size_t i, std::size_t j) {
      return primary[i] == primary[j] && scores[i] == scores[j];
    };
    auto consider = [&](bool holding, bool filtered) {
      best.clear();
      for (std::size_t i = 0; i < constraints.size(); ++i) {
        if (used[i]) continue;
        if (filtered && holds[i] != holding) continue;
        if (best.empty() || better(i, best.front())) {
          best.assign(1, i);
        } else if (equal(i, best.front())) {
          best.push_back(i);
        }
      }
    };
    if (preference != ScenePreference::None) {
      consider(preference == ScenePreference::Holding, true);
    }
    if (preference == ScenePreference::None || best.empty()) {
      consider(false, false);
    }
    std::size_t pick = best.size() == 1 ? best[0] : best[rng.bounded(best.size())];
    used[pick] = true;
    --remaining;
    return pick;
  }
};

// Relative progress of the refined rule: the share of countable positives
// it retains minus the share of countable negatives it still covers. Broad
// conditions that keep the rule's responsibilities while shedding foreign
// scenes dominate narrow pin-downs under this ranking.
double coverage_rate(const FireCounts& refined, const LabelTotals& totals) {
  double rate = 0.0;
  if (totals.match > 0) {
    rate += static_cast<double>(refined.p) / static_cast<double>(totals.match);
  }
  if (totals.differ > 0) {
    rate -= static_cast<double>(refined.n) / static_cast<double>(totals.differ);
  }
  return rate;
}

ScoredPool score_pool(const ScoreView& view,
                      const std::vector<Constraint>& candidates, const Rule& r,
                      const Scene* transformed_scene, bool rate_primary) {
  ScoredPool pool;
  pool.constraints = candidates;
  FireCounts parent = count_fires(view, r.antecedent, r.consequent);
  LabelTotals totals = label_totals(view, r.consequent);
  pool.primary.reserve(candidates.size());
  pool.scores.reserve(candidates.size());
  pool.holds.reserve(candidates.size());
  for (const Constraint& c : pool.constraints) {
    FireCounts refined = count_fires(view, r.antecedent.with(c), r.consequent);
    pool.primary.push_back(rate_primary ? coverage_rate(refined, totals) : 0.0);
    pool.scores.push_back(
        heuristic_score(view.heuristic, refined, parent, totals));
    pool.holds.push_back(transformed_scene != nullptr &&
                         eval_constraint(c, *transformed_scene));
  }
  pool.used.assign(pool.constraints.size(), false);
  pool.remaining = pool.constraints.size();
  return pool;
}

}  // namespace

std::set<std::size_t> coverage(const Rule& r, const Theory& t, LayerId layer,
                               const EngineConfig& cfg, const Dataset& data) {
  Ctx ctx = make_ctx(layer, cfg, data);
  return coverage_in(ctx, resolve_all(ctx, t), r);
}

double score_constraint(const Constraint& c, const Rule& r,
                        const Dataset& data, LayerId layer,
                        const EngineConfig& cfg, Heuristic heuristic) {
  Ctx ctx = make_ctx(layer, cfg, data);
  ScoreView view{&ctx, heuristic, false, nullptr};
  return heuristic_score(heuristic,
                         count_fires(view, r.antecedent.with(c), r.consequent),
                         count_fires(view, r.antecedent, r.consequent),
                         label_totals(view, r.consequent));
}

Constraint select_constraint(const CandidatePool& pool, const Rule& r,
                             const Scene* transformed_scene,
                             const Dataset& data, LayerId layer,
                             const EngineConfig& cfg, LearnerState& state) {
  if (pool.constraints.empty()) {
    throw ValidationError("empty-pool", "no candidate constraints to select");
  }
  Ctx ctx = make_ctx(layer, cfg, data);
  ScoreView view{&ctx, state.heuristic, false, nullptr};
  ScoredPool scored =
      score_pool(view, pool.constraints, r, transformed_scene, false);
  ScenePreference preference =
      transformed_scene == nullptr
          ? ScenePreference::None
          : (state.hold_on_scene ? ScenePreference::Holding
                                 : ScenePreference::Excluding);
  auto pick = scored.draw(state.rng, preference);
  return scored.constraints[*pick];
}

std::set<std::size_t> misclassified(const Theory& t, LayerId layer,
                                    const EngineConfig& cfg,
                                    const Dataset& data) {
  Ctx ctx = make_ctx(layer, cfg, data);
  return misclassified_in(ctx, resolve_all(ctx, t));
}

namespace {

class RuleUpdateRun {
public:
  RuleUpdateRun(const Dataset& data, const Theory& base, LayerId layer,
                const EngineConfig& cfg, const LearnerOptions& options,
                Rng& rng, UpdateLog* log)
      : ctx_(make_ctx(layer, cfg, data)),
        base_(&base),
        theory_(base),
        options_(&options),
        rng_(&rng),
        log_(log) {}

  Theory run() {
    std::uint64_t iteration = 0;
    while (true) {
      auto resolved = resolve_all(ctx_, theory_);
      auto eps = misclassified_in(ctx_, resolved);
      if (eps.empty()) break;
      if (iteration >= options_->max_outer_iterations) {
        throw BudgetExceededError(to_string(ctx_.layer),
                                  options_->max_outer_iterations);
      }

      UpdateLog::Iteration entry;
      entry.index = iteration;
      entry.misclassified_count = eps.size();
      entry.rule_count = theory_.size();
      entry.bad_count = bad_.size();
      if (log_ != nullptr) {
        entry.bad_disjoint =
            std::none_of(bad_.begin(), bad_.end(), [&](const Rule& b) {
              return theory_.contains_logic(b);
            });
      }

      std::vector<std::size_t> eps_vec(eps.begin(), eps.end());
      std::size_t e = eps_vec[rng_->bounded(eps_vec.size())];
      entry.scene_index = e;

      if (!label_produced_on(e)) {
        add_most_general(e, entry);
      } else {
        refine(e, resolved, eps, entry);
      }

      if (log_ != nullptr) log_->iterations.push_back(entry);
      ++iteration;
    }
    if (log_ != nullptr) {
      log_->outer_iterations = iteration;
      log_->bad_rule_count = bad_.size();
    }
    return theory_;
  }

private:
  bool label_produced_on(std::size_t e) const {
    if (!ctx_.transformed[e]) return false;
    const Scene& scene = *ctx_.transformed[e];
    const Behaviour& label = ctx_.label(e);
    for (const Rule& r : theory_.rules()) {
      if (r.consequent == label && eval_antecedent(r.antecedent, scene)) {
        return true;
      }
    }
    return false;
  }

  void add_most_general(std::size_t e, UpdateLog::Iteration& entry) {
    entry.consequent = ctx_.label(e).maneuver;
    Rule rule{fresh_id(), Antecedent::most_general(), ctx_.label(e)};
    theory_ = theory_.with_rule(std::move(rule));
    entry.action = UpdateLog::Action::AddMostGeneral;
  }

  void refine(std::size_t e, const std::vector<LayerResolution>& resolved,
              const std::set<std::size_t>& eps, UpdateLog::Iteration& entry) {
    const Scene& scene = *ctx_.transformed[e];

    // Rules triggered by the misclassified scene: fired and surviving
    // resolution. When resolution failed outright, blame the fired rules
    // whose consequent differs from the label; they are what breaks the
    // merge.
    std::vector<const Rule*> candidates;
    for (const Rule& r : theory_.rules()) {
      if (eval_antecedent(r.antecedent, scene) &&
          contains_behaviour(resolved[e].strict, r.consequent)) {
        candidates.push_back(&r);
      }
    }
    if (candidates.empty()) {
      std::vector<const Rule*> fired;
      for (const Rule& r : theory_.rules()) {
        if (!eval_antecedent(r.antecedent, scene)) continue;
        fired.push_back(&r);
        if (r.consequent != ctx_.label(e)) candidates.push_back(&r);
      }
      if (candidates.empty()) candidates = std::move(fired);
    }
    Rule target = *candidates[rng_->bounded(candidates.size())];
    entry.consequent = target.consequent.maneuver;

    // Properties of every scene that triggers the target rule.
    std::vector<Property> source;
    for (std::size_t i : coverage_in(ctx_, resolved, target)) {
      for (const auto& [feature, value] : ctx_.transformed[i]->assignment()) {
        source.push_back({feature, value});
      }
    }
    std::vector<Constraint> generated =
        generate_constraints(source, options_->constraints);
    std::erase_if(generated, [&](const Constraint& c) {
      return target.antecedent.contains(c);
    });

    theory_ = theory_.without_rule(target.id);

    // Positives that matter for this refinement: scenes still misclassified
    // plus scenes whose label no remaining rule produces.
    std::vector<char> eligible(ctx_.size(), 0);
    for (std::size_t i = 0; i < ctx_.size(); ++i) {
      if (ctx_.label(i) != target.consequent || !ctx_.transformed[i]) continue;
      if (eps.count(i) != 0) {
        eligible[i] = 1;
        continue;
      }
      bool produced_by_other = false;
      for (const Rule& r : theory_.rules()) {
        if (r.consequent == ctx_.label(i) &&
            eval_antecedent(r.antecedent, *ctx_.transformed[i])) {
          produced_by_other = true;
          break;
        }
      }
      if (!produced_by_other) eligible[i] = 1;
    }

    ScoreView view{&ctx_, options_->heuristic, true, &eligible};
    ScoredPool pool = score_pool(view, generated, target, &scene, true);
    ScenePreference preference = options_->hold_on_scene
                                     ? ScenePreference::Holding
                                     : ScenePreference::Excluding;
    entry.parent_antecedent_size = target.antecedent.size();

    std::optional<Rule> novel;
    while (true) {
      auto pick = pool.draw(*rng_, preference);
      if (!pick) {
        exhausted(target, entry);
        return;
      }
      Rule candidate{fresh_id(), target.antecedent.with(pool.constraints[*pick]),
                     target.consequent};
      if (!in_bad(candidate) && !theory_.contains_logic(candidate)) {
        novel = std::move(candidate);
        break;
      }
    }

    entry.child_antecedent_size = novel->antecedent.size();
    bool fires_somewhere = false;
    for (const auto& transformed : ctx_.transformed) {
      if (transformed && eval_antecedent(novel->antecedent, *transformed)) {
        fires_somewhere = true;
        break;
      }
    }
    if (!fires_somewhere) {
      bad_.push_back(std::move(*novel));
      entry.action = UpdateLog::Action::MarkBad;
    } else {
      theory_ = theory_.with_rule(std::move(*novel));
      entry.action = UpdateLog::Action::Refine;
    }
  }

  // The candidate pool ran dry. For a base rule that is the aberrant-rule
  // condition and must surface as an exception; a learner-generated rule is
  // simply banned (it has no coverage to lose), except that most-general
  // label producers are kept so every label retains a producing rule.
  void exhausted(const Rule& target, UpdateLog::Iteration& entry) {
    const Rule* original = base_->find(target.id);
    if (original != nullptr && original->same_logic(target)) {
      throw BadBaseRulesError(to_string(ctx_.layer), target.id);
    }
    if (target.antecedent == Antecedent::most_general()) {
      theory_ = theory_.with_rule(target);
      entry.action = UpdateLog::Action::Reinsert;
      return;
    }
    if (!in_bad(target)) bad_.push_back(target);
    entry.action = UpdateLog::Action::DropExhausted;
  }

  bool in_bad(const Rule& r) const {
    return std::any_of(bad_.begin(), bad_.end(),
                       [&](const Rule& b) { return b.same_logic(r); });
  }

  std::string fresh_id() {
    while (true) {
      std::string id = std::string(to_string(ctx_.layer)) + "-g" +
                       std::to_string(++id_counter_);
      if (theory_.find(id) == nullptr && base_->find(id) == nullptr) return id;
    }
  }

  Ctx ctx_;
  const Theory* base_;
  Theory theory_;
  std::vector<Rule> bad_;
  const LearnerOptions* options_;
  Rng* rng_;
  UpdateLog* log_;
  std::uint64_t id_counter_ = 0;
};

Theory rule_update_with(const Dataset& data, const Theory& base, LayerId layer,
                        const EngineConfig& cfg, const LearnerOptions& options,
                        Rng& rng, UpdateLog* log) {
  return RuleUpdateRun(data, base, layer, cfg, options, rng, log).run();
}

}  // namespace

Theory rule_update(const Dataset& data, const Theory& base, LayerId layer,
                   const EngineConfig& cfg, const LearnerOptions& options,
                   UpdateLog* log) {
  validate_dataset(data, cfg);
  Rng rng(options.seed);
  return rule_update_with(data, base, layer, cfg, options, rng, log);
}

EngineUpdateResult rule_engine_update(const Dataset& data,
                                      const EngineConfig& base,
                                      const LearnerOptions& options) {
  validate_dataset(data, base);
  Rng rng(options.seed);
  UpdateLog maneuver_log;
  UpdateLog parameter_log;
  Theory maneuver =
      rule_update_with(data, base.maneuver_theory(), LayerId::Maneuver, base,
                       options, rng, &maneuver_log);
  EngineConfig staged(maneuver, base.parameter_theory(), base.order());
  Theory parameter =
      rule_update_with(data, base.parameter_theory(), LayerId::Parameter,
                       staged, options, rng, &parameter_log);
  return EngineUpdateResult{
      EngineConfig(std::move(maneuver), std::move(parameter), base.order()),
      std::move(maneuver_log), std::move(parameter_log)};
}

}  // namespace ruleplan::learning
