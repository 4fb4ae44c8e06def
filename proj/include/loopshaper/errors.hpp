#pragma once

#include <stdexcept>
#include <string>

namespace loopshaper {

// Exit-code mapping used by the CLI lives in tools/; the library only
// distinguishes configuration problems from numerical ones.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateInput : Error {
    using Error::Error;
};
struct DegenerateResult : Error {
    using Error::Error;
};
struct DegenerateLoop : Error {
    using Error::Error;
};
struct PoleOnGrid : Error {
    using Error::Error;
};
struct ImproperTransferFunction : Error {
    using Error::Error;
};
struct ImproperComposite : Error {
    using Error::Error;
};
struct OutOfRange : Error {
    using Error::Error;
};
struct NoEquilibrium : Error {
    using Error::Error;
};
struct EmptyGrid : Error {
    using Error::Error;
};
struct InfeasibleSubproblem : Error {
    using Error::Error;
};
struct SolverFailure : Error {
    using Error::Error;
};
struct NonDescent : Error {
    using Error::Error;
};
struct NonFiniteState : Error {
    using Error::Error;
};
struct InvalidScenario : Error {
    using Error::Error;
};

}  // namespace loopshaper
