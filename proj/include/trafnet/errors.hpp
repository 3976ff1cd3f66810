#pragma once

#include <stdexcept>
#include <string>

namespace trafnet {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The junction graph contains a directed cycle, so no topological order exists.
class CycleDetected : public Error {
public:
    using Error::Error;
};

/// Supply and demand of an ordinary link do not cross exactly once.
class NoCrossing : public Error {
public:
    using Error::Error;
};

/// A demand curve cannot be inverted at the requested flow.
class InversionFailure : public Error {
public:
    using Error::Error;
};

/// Several junction constraints tie, so the smooth selection is ambiguous.
class DegenerateMode : public Error {
public:
    using Error::Error;
};

/// An integration step left the domain by more than the clamp tolerance.
class StepRejected : public Error {
public:
    using Error::Error;
};

/// Simulation hit its horizon before the settling criterion was met.
class NotConverged : public Error {
public:
    using Error::Error;
};

/// An onramp input flow exceeds what its demand curve can ever discharge.
class InadmissibleDemand : public Error {
public:
    using Error::Error;
};

/// The freeflow Jacobian is not lower triangular with a negative diagonal.
class CertificateFailed : public Error {
public:
    using Error::Error;
};

/// The network is not merge-only with uniform offramp fractions.
class ConditionsNotMet : public Error {
public:
    using Error::Error;
};

}  // namespace trafnet
