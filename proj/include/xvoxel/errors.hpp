#pragma once

#include <stdexcept>
#include <string>

namespace xv {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define XV_DEFINE_ERROR(NAME)                                   \
  struct NAME : Error {                                         \
    explicit NAME(const std::string& what) : Error(what) {}     \
  }

XV_DEFINE_ERROR(InvalidParameter);
XV_DEFINE_ERROR(UnknownKind);
XV_DEFINE_ERROR(IndexOutOfRange);
XV_DEFINE_ERROR(TessellationFailure);
XV_DEFINE_ERROR(GridMismatch);
XV_DEFINE_ERROR(UnknownFeature);
XV_DEFINE_ERROR(DependencyViolation);
XV_DEFINE_ERROR(OutOfDomain);
XV_DEFINE_ERROR(StalePlan);
XV_DEFINE_ERROR(StaleSystem);
XV_DEFINE_ERROR(EmptyDirichlet);
XV_DEFINE_ERROR(NonConvergence);
XV_DEFINE_ERROR(SingularInterior);
XV_DEFINE_ERROR(DegenerateBoundary);
XV_DEFINE_ERROR(SubproblemInfeasible);
XV_DEFINE_ERROR(EvaluatorFailure);
XV_DEFINE_ERROR(ParseError);
XV_DEFINE_ERROR(ValidationError);

#undef XV_DEFINE_ERROR

}  // namespace xv
