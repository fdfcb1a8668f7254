#ifndef LCC_ERRORS_HPP
#define LCC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lcc {

/// Base class for every recoverable error raised by the library. The CLI maps
/// these to exit code 2 (data error).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define LCC_DEFINE_ERROR(Name)              \
    class Name : public Error {             \
    public:                                 \
        using Error::Error;                 \
    }

// ingest
LCC_DEFINE_ERROR(UnknownClass);
LCC_DEFINE_ERROR(SchemaError);
LCC_DEFINE_ERROR(ParseError);
LCC_DEFINE_ERROR(EmptyInput);
LCC_DEFINE_ERROR(ConfigError);

// preprocess
LCC_DEFINE_ERROR(NoDetection);
LCC_DEFINE_ERROR(SequenceTooLong);

// model / trainer
LCC_DEFINE_ERROR(ShapeError);
LCC_DEFINE_ERROR(EmptySequence);
LCC_DEFINE_ERROR(MissingLabel);

// metrics
LCC_DEFINE_ERROR(DegenerateLabels);
LCC_DEFINE_ERROR(LabelError);

// checkpoint
LCC_DEFINE_ERROR(VersionError);
LCC_DEFINE_ERROR(CorruptCheckpoint);
LCC_DEFINE_ERROR(IoError);

#undef LCC_DEFINE_ERROR

}  // namespace lcc

#endif  // LCC_ERRORS_HPP
