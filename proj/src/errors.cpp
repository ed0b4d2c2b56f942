#include "gdepth/errors.hpp"

namespace gdepth {

const char* error_category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::InvalidArgument: return "InvalidArgument";
        case ErrorCategory::DimensionMismatch: return "DimensionMismatch";
        case ErrorCategory::NonPositiveDepth: return "NonPositiveDepth";
        case ErrorCategory::NoValidPixels: return "NoValidPixels";
        case ErrorCategory::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCategory::NonFiniteGradient: return "NonFiniteGradient";
        case ErrorCategory::DegenerateFit: return "DegenerateFit";
        case ErrorCategory::DivergedTraining: return "DivergedTraining";
        case ErrorCategory::MalformedHeader: return "MalformedHeader";
        case ErrorCategory::TruncatedData: return "TruncatedData";
        case ErrorCategory::MissingField: return "MissingField";
        case ErrorCategory::NonRigidExtrinsic: return "NonRigidExtrinsic";
        case ErrorCategory::IoError: return "IoError";
    }
    return "Error";
}

}  // namespace gdepth
