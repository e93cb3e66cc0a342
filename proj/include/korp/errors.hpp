#ifndef KORP_ERRORS_HPP
#define KORP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace korp {

// Base of all toolkit errors. Two broad categories drive CLI exit codes:
// ValidationError (bad input / config, exit 2) and NumericalError
// (degenerate or failed numerics, exit 3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

#define KORP_DEFINE_ERROR(NAME, BASE)                                        \
    class NAME : public BASE {                                               \
    public:                                                                  \
        using BASE::BASE;                                                    \
    }

// ingest
KORP_DEFINE_ERROR(TruncatedFile, ValidationError);
KORP_DEFINE_ERROR(InvalidHeader, ValidationError);
KORP_DEFINE_ERROR(InconsistentRecord, ValidationError);
KORP_DEFINE_ERROR(TooFewChannels, ValidationError);
KORP_DEFINE_ERROR(NoMatchingEvents, ValidationError);
KORP_DEFINE_ERROR(VersionMismatch, ValidationError);
KORP_DEFINE_ERROR(CorruptContainer, ValidationError);
KORP_DEFINE_ERROR(IoError, ValidationError);

// dsp
KORP_DEFINE_ERROR(EmptyInput, ValidationError);
KORP_DEFINE_ERROR(InvalidBand, ValidationError);
KORP_DEFINE_ERROR(EvenTaps, ValidationError);
KORP_DEFINE_ERROR(SignalTooShort, ValidationError);
KORP_DEFINE_ERROR(WaveletTooWide, ValidationError);

// metrics
KORP_DEFINE_ERROR(EmptyEpochs, ValidationError);
KORP_DEFINE_ERROR(TooFewTrials, ValidationError);

// stats
KORP_DEFINE_ERROR(LengthMismatch, ValidationError);
KORP_DEFINE_ERROR(WindowTooLarge, ValidationError);
KORP_DEFINE_ERROR(WindowOutOfRange, ValidationError);
KORP_DEFINE_ERROR(ConstantInput, NumericalError);
KORP_DEFINE_ERROR(DegenerateControl, NumericalError);
KORP_DEFINE_ERROR(ZeroVariance, NumericalError);

// artifacts
KORP_DEFINE_ERROR(RankDeficient, NumericalError);
KORP_DEFINE_ERROR(AllSparse, NumericalError);

// synth
KORP_DEFINE_ERROR(SpecMismatch, ValidationError);

#undef KORP_DEFINE_ERROR

} // namespace korp

#endif
