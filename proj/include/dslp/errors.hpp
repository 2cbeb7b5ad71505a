#pragma once

#include <stdexcept>
#include <string>

namespace dslp {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define DSLP_DEFINE_ERROR(Name)                                               \
  class Name : public Error {                                                 \
  public:                                                                     \
    using Error::Error;                                                       \
  }

// lti
DSLP_DEFINE_ERROR(ZeroPolynomial);
DSLP_DEFINE_ERROR(ConstantPolynomial);
DSLP_DEFINE_ERROR(PoleOnEvaluationPoint);
DSLP_DEFINE_ERROR(ImproperTransferFunction);
DSLP_DEFINE_ERROR(AlgebraicLoop);
DSLP_DEFINE_ERROR(DimensionMismatch);

// signals
DSLP_DEFINE_ERROR(ZeroInitialState);
DSLP_DEFINE_ERROR(NonMaximalLength);
DSLP_DEFINE_ERROR(NegativeSigma);
DSLP_DEFINE_ERROR(EmptySignal);
DSLP_DEFINE_ERROR(NonFiniteSample);
DSLP_DEFINE_ERROR(LengthMismatch);

// loop simulation
DSLP_DEFINE_ERROR(UnstableLoop);
DSLP_DEFINE_ERROR(IllPosedLoop);

// estimator
DSLP_DEFINE_ERROR(InfeasibleConstraints);
DSLP_DEFINE_ERROR(SingularRk);
DSLP_DEFINE_ERROR(SingularCorrection);
DSLP_DEFINE_ERROR(IllPosedRealization);
DSLP_DEFINE_ERROR(SingularTransform);

// baselines
DSLP_DEFINE_ERROR(NominalNotStabilized);
DSLP_DEFINE_ERROR(UnstableFilter);
DSLP_DEFINE_ERROR(RankDeficientRegressor);

// metrics
DSLP_DEFINE_ERROR(TooFewPoints);
DSLP_DEFINE_ERROR(ZeroReferenceValue);
DSLP_DEFINE_ERROR(SingularClosedLoop);
DSLP_DEFINE_ERROR(IllPosedInterconnection);

// harness
DSLP_DEFINE_ERROR(ConfigError);
DSLP_DEFINE_ERROR(MalformedResults);
DSLP_DEFINE_ERROR(LengthTooShort);

#undef DSLP_DEFINE_ERROR

} // namespace dslp
