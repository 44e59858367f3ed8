#pragma once

#include <stdexcept>
#include <string>

namespace dirac {

/// Base class of every failure raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DIRAC_DEFINE_ERROR(Name)            \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  }

// integration
DIRAC_DEFINE_ERROR(StepSizeUnderflow);
DIRAC_DEFINE_ERROR(NonFiniteState);

// floquet
DIRAC_DEFINE_ERROR(ScanTooCoarse);
DIRAC_DEFINE_ERROR(BandEdge);
DIRAC_DEFINE_ERROR(DegenerateEigenvector);
DIRAC_DEFINE_ERROR(UnwrapJump);
DIRAC_DEFINE_ERROR(GapEnergy);

// pruefer
DIRAC_DEFINE_ERROR(ZeroSolution);

// synth
DIRAC_DEFINE_ERROR(EnvelopeTooLarge);
DIRAC_DEFINE_ERROR(PieceTooShort);
DIRAC_DEFINE_ERROR(HorizonTooShort);
DIRAC_DEFINE_ERROR(EnvelopeViolation);
DIRAC_DEFINE_ERROR(OverlapDetected);

// verify
DIRAC_DEFINE_ERROR(HypothesisViolated);
DIRAC_DEFINE_ERROR(ResonantFrequency);
DIRAC_DEFINE_ERROR(DecayTooSlow);
DIRAC_DEFINE_ERROR(StabilityViolated);
DIRAC_DEFINE_ERROR(BoundViolated);
DIRAC_DEFINE_ERROR(InconclusiveTail);

// configuration
DIRAC_DEFINE_ERROR(ConfigError);

#undef DIRAC_DEFINE_ERROR

/// Two targets violate a non-resonance hypothesis.
class ResonantPair : public Error {
 public:
  enum class Condition { equal_quasimomenta, sum_equals_pi };

  ResonantPair(std::size_t i, std::size_t j, Condition c, const std::string& what)
      : Error(what), first(i), second(j), condition(c) {}

  std::size_t first;
  std::size_t second;
  Condition condition;
};

}  // namespace dirac
