#pragma once

#include <stdexcept>
#include <string>

namespace staplr {

// All recoverable failures thrown by the library carry a short stable tag
// so the experiment driver can record them in result tables.
class Error : public std::runtime_error {
public:
    Error(std::string tag, const std::string& what)
        : std::runtime_error(what), tag_(std::move(tag)) {}
    const std::string& tag() const noexcept { return tag_; }

private:
    std::string tag_;
};

#define STAPLR_DEFINE_ERROR(Name)                                  \
    class Name : public Error {                                    \
    public:                                                        \
        explicit Name(const std::string& what = #Name)             \
            : Error(#Name, what) {}                                \
    }

STAPLR_DEFINE_ERROR(SingleClassOutcome);
STAPLR_DEFINE_ERROR(NonFiniteInput);
STAPLR_DEFINE_ERROR(ConvergenceFailure);
STAPLR_DEFINE_ERROR(FoldWithSingleClass);
STAPLR_DEFINE_ERROR(DimensionMismatch);
STAPLR_DEFINE_ERROR(TooFewPerClass);
STAPLR_DEFINE_ERROR(ViewTooSparse);
STAPLR_DEFINE_ERROR(NoCompleteCases);
STAPLR_DEFINE_ERROR(EmptyColumn);
STAPLR_DEFINE_ERROR(DonorPoolTooSmall);
STAPLR_DEFINE_ERROR(SingularDesign);
STAPLR_DEFINE_ERROR(InvalidCorrelation);
STAPLR_DEFINE_ERROR(FractionOutOfRange);
STAPLR_DEFINE_ERROR(LengthMismatch);
STAPLR_DEFINE_ERROR(NonPositiveDuration);
STAPLR_DEFINE_ERROR(EmptyInput);
STAPLR_DEFINE_ERROR(UnsupportedImputation);

#undef STAPLR_DEFINE_ERROR

}  // namespace staplr
