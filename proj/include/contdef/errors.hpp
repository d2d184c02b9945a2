#pragma once

#include <stdexcept>
#include <string>

namespace contdef {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// formation
struct CollinearLeaders : Error {
  using Error::Error;
};
struct CollinearNeighbors : Error {
  using Error::Error;
};
struct InvalidSpec : Error {
  using Error::Error;
};

// safety
struct FollowerOutsideTriangle : Error {
  using Error::Error;
};
struct InfeasibleMargins : Error {
  using Error::Error;
};
struct SingularTransform : Error {
  using Error::Error;
};

// guidance
struct DegenerateDuration : Error {
  using Error::Error;
};
struct TimeOutOfRange : Error {
  using Error::Error;
};

// vehicle
struct InsufficientSamples : Error {
  using Error::Error;
};
struct BufferUnderrun : Error {
  using Error::Error;
};

// netsim
struct EmptyLog : Error {
  using Error::Error;
};

// monitor
struct EmptyTrace : Error {
  using Error::Error;
};
struct MisalignedTrace : Error {
  using Error::Error;
};

// cli / scenario
struct ParseError : Error {
  using Error::Error;
};

}  // namespace contdef
