#pragma once

#include <stdexcept>
#include <string>

namespace softgem {

// Base for every error raised by the library. Each subclass names one failure
// condition so callers can catch exactly the case they know how to handle.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define SOFTGEM_DEFINE_ERROR(Name)                  \
  class Name : public Error {                       \
  public:                                           \
    explicit Name(const std::string &what)          \
        : Error(std::string(#Name ": ") + what) {}  \
  };

// gradient rules
SOFTGEM_DEFINE_ERROR(ZeroGradient)
SOFTGEM_DEFINE_ERROR(InvalidEpsilon)
SOFTGEM_DEFINE_ERROR(ShapeMismatch)
SOFTGEM_DEFINE_ERROR(NonFiniteGradient)

// episodic memory
SOFTGEM_DEFINE_ERROR(BudgetZero)
SOFTGEM_DEFINE_ERROR(EmptyMemory)
SOFTGEM_DEFINE_ERROR(TaskAlreadyStored)
SOFTGEM_DEFINE_ERROR(InvalidLabel)

// model
SOFTGEM_DEFINE_ERROR(UnknownTask)
SOFTGEM_DEFINE_ERROR(EmptyBatch)
SOFTGEM_DEFINE_ERROR(EmptyDataset)
SOFTGEM_DEFINE_ERROR(InvalidArchitecture)

// task streams
SOFTGEM_DEFINE_ERROR(InsufficientClasses)
SOFTGEM_DEFINE_ERROR(BadMagic)
SOFTGEM_DEFINE_ERROR(TruncatedFile)
SOFTGEM_DEFINE_ERROR(InvalidStream)

// metrics
SOFTGEM_DEFINE_ERROR(RowUnpopulated)
SOFTGEM_DEFINE_ERROR(TooFewTasks)
SOFTGEM_DEFINE_ERROR(CurveTooShort)
SOFTGEM_DEFINE_ERROR(MissingBaseline)

// epsilon search
SOFTGEM_DEFINE_ERROR(GridTooSmall)
SOFTGEM_DEFINE_ERROR(MissingResults)

// harness
SOFTGEM_DEFINE_ERROR(ConfigError)
SOFTGEM_DEFINE_ERROR(IoError)

#undef SOFTGEM_DEFINE_ERROR

// Raised by the dual GEM solver when the iteration cap is reached.
class SolverNotConverged : public Error {
public:
  SolverNotConverged(double residual, int iterations)
      : Error("SolverNotConverged: KKT residual " + std::to_string(residual) +
              " after " + std::to_string(iterations) + " iterations"),
        residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

private:
  double residual_;
  int iterations_;
};

} // namespace softgem
