#pragma once

#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>

namespace gdelay {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: bad grids, mismatched lengths, out-of-range indices.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Not enough terms of a sequence to form an estimate.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// A formula was evaluated where it is not defined (e.g. a non-entire
/// characteristic function near the origin).
class IllPosed : public Error {
 public:
  using Error::Error;
};

/// Requested feature outside the supported range (e.g. multiplicity > 2).
class Unsupported : public Error {
 public:
  using Error::Error;
};

/// Geometry / delay combination the tree solver cannot handle.
class NotImplemented : public Error {
 public:
  using Error::Error;
};

/// Omega extraction failed and no override was supplied.
class NeedsOmega : public Error {
 public:
  using Error::Error;
};

/// Base for numerical failures (CLI exit code 2).
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Newton iteration did not converge from the given seed.
class RootFailure : public NumericalFailure {
 public:
  RootFailure(const std::string& what, std::complex<double> seed)
      : NumericalFailure(what), seed_(seed) {}
  std::complex<double> seed() const { return seed_; }

 private:
  std::complex<double> seed_;
};

/// Contour count and Newton count disagree inside a search window.
class MissedRoot : public NumericalFailure {
 public:
  MissedRoot(const std::string& what, double re_lo, double re_hi)
      : NumericalFailure(what), re_lo_(re_lo), re_hi_(re_hi) {}
  double window_lo() const { return re_lo_; }
  double window_hi() const { return re_hi_; }

 private:
  double re_lo_;
  double re_hi_;
};

namespace detail {

template <class... Args>
std::string concat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace detail
}  // namespace gdelay
