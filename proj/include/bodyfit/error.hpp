#ifndef BODYFIT_ERROR_HPP
#define BODYFIT_ERROR_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace bodyfit {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or truncated input file.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A numerical state that cannot be continued (NaN, empty support, empty result).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Collects non-fatal warnings emitted by loaders and pipeline stages.
struct Diagnostics {
    std::vector<std::string> warnings;

    void warn(std::string message) { warnings.push_back(std::move(message)); }
};

}  // namespace bodyfit

#endif  // BODYFIT_ERROR_HPP
