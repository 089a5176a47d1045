#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ruleplan {

/// Base of all library errors; `kind()` is a stable machine-readable tag.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& detail)
      : std::runtime_error(detail), kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

private:
  std::string kind_;
};

/// Malformed or contract-violating input: documents, scenes, schemas,
/// datasets. Maps to exit code 2 in the CLI.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Text-level parse failure with the byte offset of the failure and the
/// token set that would have been accepted there.
class ParseError : public ValidationError {
public:
  ParseError(const std::string& detail, std::size_t offset,
             std::vector<std::string> expected = {})
      : ValidationError("parse", detail),
        offset_(offset),
        expected_(std::move(expected)) {}

  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

/// Inference-time failure of the engine itself (as opposed to bad input).
/// Kinds: no-behaviour, empty-resolution, mixed-maneuver,
/// parameter-conflict, unknown-feature, schema-mismatch.
class EngineError : public Error {
public:
  using Error::Error;
};

/// A base rule triggered by a misclassified scene already exhausts every
/// derivable constraint; the offending rule must be removed from the base.
class BadBaseRulesError : public Error {
public:
  BadBaseRulesError(std::string layer, std::string rule_id)
      : Error("bad-base-rules",
              "rule '" + rule_id + "' in the " + layer +
                  " layer cannot be refined further; remove it from the base"),
        layer_(std::move(layer)),
        rule_id_(std::move(rule_id)) {}

  const std::string& layer() const { return layer_; }
  const std::string& rule_id() const { return rule_id_; }

private:
  std::string layer_;
  std::string rule_id_;
};

/// The learner's outer loop exceeded its iteration budget, which on
/// consistent data should be unreachable; suspect label inconsistency.
class BudgetExceededError : public Error {
public:
  BudgetExceededError(std::string layer, std::uint64_t budget)
      : Error("iteration-budget",
              "rule update in the " + layer + " layer exceeded " +
                  std::to_string(budget) +
                  " outer iterations; the dataset labels are likely "
                  "inconsistent"),
        layer_(std::move(layer)),
        budget_(budget) {}

  const std::string& layer() const { return layer_; }
  std::uint64_t budget() const { return budget_; }

private:
  std::string layer_;
  std::uint64_t budget_;
};

}  // namespace ruleplan
