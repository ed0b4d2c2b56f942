#pragma once

#include <stdexcept>
#include <string>

namespace gdepth {

// Every failure the library raises deliberately carries one of these
// categories. The CLI prints the category name on stderr and uses
// exit_code() as the process exit status, so scripts can branch on either
// without parsing prose.
enum class ErrorCategory {
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NonPositiveDepth = 4,
    NoValidPixels = 5,
    NonFiniteLoss = 6,
    NonFiniteGradient = 7,
    DegenerateFit = 8,
    DivergedTraining = 9,
    MalformedHeader = 10,
    TruncatedData = 11,
    MissingField = 12,
    NonRigidExtrinsic = 13,
    IoError = 14,
};

const char* error_category_name(ErrorCategory c);

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(std::string(error_category_name(category)) + ": " + message),
          category_(category) {}

    ErrorCategory category() const { return category_; }
    int exit_code() const { return static_cast<int>(category_); }

  private:
    ErrorCategory category_;
};

#define GDEPTH_DEFINE_ERROR(Name)                                     \
    class Name##Error : public Error {                                \
      public:                                                         \
        explicit Name##Error(const std::string& message)              \
            : Error(ErrorCategory::Name, message) {}                  \
    }

GDEPTH_DEFINE_ERROR(InvalidArgument);
GDEPTH_DEFINE_ERROR(DimensionMismatch);
GDEPTH_DEFINE_ERROR(NonPositiveDepth);
GDEPTH_DEFINE_ERROR(NoValidPixels);
GDEPTH_DEFINE_ERROR(NonFiniteLoss);
GDEPTH_DEFINE_ERROR(NonFiniteGradient);
GDEPTH_DEFINE_ERROR(DegenerateFit);
GDEPTH_DEFINE_ERROR(DivergedTraining);
GDEPTH_DEFINE_ERROR(MalformedHeader);
GDEPTH_DEFINE_ERROR(TruncatedData);
GDEPTH_DEFINE_ERROR(MissingField);
GDEPTH_DEFINE_ERROR(NonRigidExtrinsic);

#undef GDEPTH_DEFINE_ERROR

// Spelled out because the category name already ends in "Error".
class IoError : public Error {
  public:
    explicit IoError(const std::string& message) : Error(ErrorCategory::IoError, message) {}
};

}  // namespace gdepth
