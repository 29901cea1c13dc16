#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace l2dcd {

enum class ErrorKind {
    // data
    MissingFile,
    MalformedNumeric,
    MultivariatePair,
    UnknownId,
    InvalidSpec,
    // cd
    DegenerateInput,
    LengthMismatch,
    InvalidQuantile,
    // experts / features
    OutOfRange,
    WrongCardinality,
    EmptyDescription,
    Unparseable,
    Ambiguous,
    Transport,
    AuthMissing,
    DegenerateTruncation,
    EmptyCorpus,
    // defer
    KeyMismatch,
    EmptyTraining,
    EmptyS,
    // eval
    EmptyGrid,
    DegenerateMargins,
    Empty,
    EmptyDomain,
    // graph
    CyclicGraph,
    InvalidGraph,
    NoComparisons,
    // config / cli
    InvalidConfig,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; callers switch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace l2dcd
