#pragma once

#include <stdexcept>
#include <string>

namespace mpplan {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(const std::string& what) : Error(what) {}
};

class DuplicateVariable : public Error {
 public:
  explicit DuplicateVariable(const std::string& what) : Error(what) {}
};

class UnknownVariable : public Error {
 public:
  explicit UnknownVariable(const std::string& what) : Error(what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

class DepthTooLarge : public Error {
 public:
  explicit DepthTooLarge(const std::string& what) : Error(what) {}
};

class NotSiblings : public Error {
 public:
  explicit NotSiblings(const std::string& what) : Error(what) {}
};

class NotMembers : public Error {
 public:
  explicit NotMembers(const std::string& what) : Error(what) {}
};

class InvalidCover : public Error {
 public:
  explicit InvalidCover(const std::string& what) : Error(what) {}
};

class MultipleNodes : public Error {
 public:
  explicit MultipleNodes(const std::string& what) : Error(what) {}
};

class OverlappingSets : public Error {
 public:
  explicit OverlappingSets(const std::string& what) : Error(what) {}
};

class MissingCovarianceEntries : public Error {
 public:
  explicit MissingCovarianceEntries(const std::string& what) : Error(what) {}
};

/// The new-state block of a Jacobian does not have full column rank.
/// Usually means motion or initialization rows were left out of the stack.
class RankDeficientNew : public Error {
 public:
  explicit RankDeficientNew(const std::string& what) : Error(what) {}
};

class InconsistentAssociation : public Error {
 public:
  explicit InconsistentAssociation(const std::string& what) : Error(what) {}
};

class InvalidDistribution : public Error {
 public:
  explicit InvalidDistribution(const std::string& what) : Error(what) {}
};

class NotConditionallyIndependent : public Error {
 public:
  explicit NotConditionallyIndependent(const std::string& what) : Error(what) {}
};

class InfeasibleConfig : public Error {
 public:
  explicit InfeasibleConfig(const std::string& what) : Error(what) {}
};

class GoalUnreachable : public Error {
 public:
  explicit GoalUnreachable(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace mpplan
