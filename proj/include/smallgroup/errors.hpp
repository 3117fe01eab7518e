#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace smallgroup {

// Base for all failures caused by invalid inputs or configured limits.
// CLI maps ConfigError -> exit 2, CheckFailure -> exit 1, anything else -> 3.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// A verification op ran to completion and found a violated condition.
class CheckFailure : public Error {
 public:
  explicit CheckFailure(const std::string& what) : Error(what) {}
};

enum class GroupViolationKind { NonClosure, NoIdentity, NoInverse, NonAssociative };

struct GroupViolation {
  GroupViolationKind kind;
  // Witness cells; meaning depends on kind (see validate_group docs).
  std::vector<std::size_t> witness;
};

class GroupValidationError : public ConfigError {
 public:
  GroupValidationError(std::string what, std::vector<GroupViolation> violations)
      : ConfigError(what), violations_(std::move(violations)) {}
  const std::vector<GroupViolation>& violations() const { return violations_; }

 private:
  std::vector<GroupViolation> violations_;
};

class TowerError : public ConfigError {
 public:
  explicit TowerError(const std::string& what) : ConfigError(what) {}
};

// Thinning walked past the generator's order cap without meeting its threshold.
class GeneratorExhausted : public Error {
 public:
  GeneratorExhausted(const std::string& what, std::size_t level)
      : Error(what), level_(level) {}
  std::size_t level() const { return level_; }

 private:
  std::size_t level_;
};

// A game stage cannot be met inside the given finite product space.
class SpaceTooShallow : public Error {
 public:
  SpaceTooShallow(const std::string& what, std::size_t stage)
      : Error(what), stage_(stage) {}
  std::size_t stage() const { return stage_; }

 private:
  std::size_t stage_;
};

class ResolutionCapExceeded : public Error {
 public:
  ResolutionCapExceeded(const std::string& what, std::size_t stage, std::size_t family)
      : Error(what), stage_(stage), family_(family) {}
  std::size_t stage() const { return stage_; }
  std::size_t family() const { return family_; }

 private:
  std::size_t stage_;
  std::size_t family_;
};

// Element word whose consecutive entries are not linked by the bonding maps.
class IncompatibleWord : public ConfigError {
 public:
  IncompatibleWord(const std::string& what, std::size_t position)
      : ConfigError(what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class LevelSetsMissing : public Error {
 public:
  LevelSetsMissing(const std::string& what, std::size_t level)
      : Error(what), level_(level) {}
  std::size_t level() const { return level_; }

 private:
  std::size_t level_;
};

// Combine produced a witness that fails its own membership test; indicates a bug.
class WitnessViolation : public Error {
 public:
  explicit WitnessViolation(const std::string& what) : Error(what) {}
};

class AlphabetMismatch : public ConfigError {
 public:
  explicit AlphabetMismatch(const std::string& what) : ConfigError(what) {}
};

class AtlasInvalid : public ConfigError {
 public:
  explicit AtlasInvalid(const std::string& what) : ConfigError(what) {}
};

class NonIncreasingResolutions : public ConfigError {
 public:
  explicit NonIncreasingResolutions(const std::string& what) : ConfigError(what) {}
};

}  // namespace smallgroup
