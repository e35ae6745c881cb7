#pragma once

#include <stdexcept>
#include <string>

namespace ecg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define ECG_DEFINE_ERROR(Name)                     \
    class Name : public Error {                    \
    public:                                        \
        using Error::Error;                        \
    }

ECG_DEFINE_ERROR(ParseError);
ECG_DEFINE_ERROR(ValidationError);
ECG_DEFINE_ERROR(MissingLead);
ECG_DEFINE_ERROR(OutOfRange);
ECG_DEFINE_ERROR(FilterDesignError);
ECG_DEFINE_ERROR(NoPeaksFound);
ECG_DEFINE_ERROR(InvalidSegment);
ECG_DEFINE_ERROR(InsufficientPeaks);
ECG_DEFINE_ERROR(InvalidInput);
ECG_DEFINE_ERROR(NoValidCycles);
ECG_DEFINE_ERROR(CatalogError);
ECG_DEFINE_ERROR(ShapeMismatch);
ECG_DEFINE_ERROR(NoLabels);
ECG_DEFINE_ERROR(DegenerateFeatures);
ECG_DEFINE_ERROR(RangeError);
ECG_DEFINE_ERROR(SpecError);
ECG_DEFINE_ERROR(UnknownRule);
ECG_DEFINE_ERROR(ConfigError);

#undef ECG_DEFINE_ERROR

}  // namespace ecg
