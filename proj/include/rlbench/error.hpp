#pragma once

#include <stdexcept>
#include <string>

namespace rlbench {

// Base for every error the library raises.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Caller passed malformed arguments (dimension mismatch, out-of-range index, ...).
class InputError : public Error
{
public:
  using Error::Error;
};

// An object was used out of order: step after done, stale backward cache, id mismatch.
class ProtocolError : public Error
{
public:
  using Error::Error;
};

class UnsupportedSpaceError : public Error
{
public:
  using Error::Error;
};

class CapacityError : public Error
{
public:
  using Error::Error;
};

class InsufficientDataError : public Error
{
public:
  using Error::Error;
};

class NumericalDivergenceError : public Error
{
public:
  using Error::Error;
};

class ConfigError : public Error
{
public:
  using Error::Error;
};

// Bridge transport failures.
class ConnectionError : public Error
{
public:
  using Error::Error;
};

class BridgeUnavailableError : public ConnectionError
{
public:
  using ConnectionError::ConnectionError;
};

// The remote environment answered ok=false; what() carries its message verbatim.
class RemoteEnvError : public Error
{
public:
  using Error::Error;
};

}  // namespace rlbench
