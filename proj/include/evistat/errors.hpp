#pragma once

#include <stdexcept>
#include <string>

namespace evistat {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- artifact / io ---------------------------------------------------------

// Message is the offending key path (optionally followed by ": <detail>").
class SchemaError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

// --- numerics ---------------------------------------------------------------

class DomainError : public Error {
public:
  using Error::Error;
};

// Distribution spec is internally inconsistent (missing df, df <= 0, ...).
class InvalidSpec : public Error {
public:
  using Error::Error;
};

// --- statistical tests ------------------------------------------------------

class TooFewSamples : public Error {
public:
  using Error::Error;
};

class EmptyGroup : public Error {
public:
  using Error::Error;
};

class DegenerateVariance : public Error {
public:
  using Error::Error;
};

class LengthMismatch : public Error {
public:
  using Error::Error;
};

class DegenerateInput : public Error {
public:
  using Error::Error;
};

class RankDeficient : public Error {
public:
  using Error::Error;
};

class TooFewRows : public Error {
public:
  using Error::Error;
};

// --- survival ----------------------------------------------------------------

class NoEvents : public Error {
public:
  using Error::Error;
};

class NotTwoGroups : public Error {
public:
  using Error::Error;
};

class TooFewEvents : public Error {
public:
  using Error::Error;
};

// Partial likelihood has no finite maximizer (perfect separation in time order).
class MonotoneLikelihood : public Error {
public:
  using Error::Error;
};

class SingularMatrix : public Error {
public:
  using Error::Error;
};

// --- power -------------------------------------------------------------------

// The observed design lacks a field the requested power family needs.
class MissingInputs : public Error {
public:
  using Error::Error;
};

// --- evidence classification ---------------------------------------------------

// A group-mean direction claim cannot be verified: group_statistics absent,
// not exactly the two named groups, or a mean missing.
class MissingGroupStatistics : public Error {
public:
  using Error::Error;
};

// --- measurements --------------------------------------------------------------

class InvalidMask : public Error {
public:
  using Error::Error;
};

class MissingInput : public Error {
public:
  using Error::Error;
};

class DivisionByZero : public Error {
public:
  using Error::Error;
};

// --- artifact audit ------------------------------------------------------------

// Analysis code is not valid UTF-8 text.
class DecodeError : public Error {
public:
  using Error::Error;
};

// --- oracle --------------------------------------------------------------------

class MissingVariable : public Error {
public:
  using Error::Error;
};

// A group or restricted population came out empty.
class DegenerateCohort : public Error {
public:
  using Error::Error;
};

// --- evaluation ----------------------------------------------------------------

class MissingGroundTruth : public Error {
public:
  using Error::Error;
};

class UnknownHypothesis : public Error {
public:
  using Error::Error;
};

}  // namespace evistat
