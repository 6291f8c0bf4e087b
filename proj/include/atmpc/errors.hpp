#pragma once

#include <stdexcept>
#include <string>

namespace atmpc {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& m) : Error("dimension mismatch: " + m) {}
};

// -- geometry --
struct EmptyPolytope : Error {
    explicit EmptyPolytope(const std::string& m = "") : Error("empty polytope " + m) {}
};
struct UnboundedPolytope : Error {
    explicit UnboundedPolytope(const std::string& m = "") : Error("unbounded polytope " + m) {}
};
struct DimensionTooHigh : Error {
    explicit DimensionTooHigh(const std::string& m) : Error("dimension too high: " + m) {}
};

// -- qp --
struct InvalidProgram : Error {
    explicit InvalidProgram(const std::string& m) : Error("invalid program: " + m) {}
};
struct MaxIterations : Error {
    explicit MaxIterations(const std::string& m) : Error("iteration cap reached: " + m) {}
};
struct SolverNumericalError : Error {
    explicit SolverNumericalError(const std::string& m) : Error("solver numerical error: " + m) {}
};
struct LpUnbounded : Error {
    explicit LpUnbounded(const std::string& m = "") : Error("LP unbounded " + m) {}
};

// -- model / estimator --
struct UnboundedConstraintSet : Error {
    explicit UnboundedConstraintSet(const std::string& m = "")
        : Error("constraint set Z is unbounded " + m) {}
};
struct DegenerateRegressor : Error {
    explicit DegenerateRegressor(const std::string& m = "")
        : Error("regressor is identically zero on Z; gain must be supplied explicitly " + m) {}
};
struct EmptyMembershipSet : Error {
    explicit EmptyMembershipSet(const std::string& m = "")
        : Error("membership set update produced an empty set (inconsistent data) " + m) {}
};

// -- certify --
struct NotSymmetric : Error {
    explicit NotSymmetric(const std::string& m) : Error("matrix not symmetric: " + m) {}
};
struct NonPositiveP : Error {
    explicit NonPositiveP(const std::string& m = "") : Error("P is not positive definite " + m) {}
};

// -- tube_mpc --
struct SynthesisFailed : Error {
    explicit SynthesisFailed(const std::string& m) : Error("set synthesis failed: " + m) {}
};
struct OcpInfeasible : Error {
    explicit OcpInfeasible(const std::string& m = "") : Error("tube OCP infeasible " + m) {}
};

// -- perf_bound --
struct InvalidEpsilon : Error {
    explicit InvalidEpsilon(const std::string& m = "") : Error("epsilon must be positive " + m) {}
};
struct GammaNonpositive : Error {
    explicit GammaNonpositive(const std::string& m = "")
        : Error("gamma <= 0; bound report rejected " + m) {}
};
struct NoFeasiblePoint : Error {
    explicit NoFeasiblePoint(const std::string& m = "")
        : Error("no feasible epsilon triple with gamma > 0 " + m) {}
};
struct NoFeasibleSamples : Error {
    explicit NoFeasibleSamples(const std::string& m = "")
        : Error("no feasible states found while sampling " + m) {}
};

// -- harness --
struct RiccatiDiverged : Error {
    explicit RiccatiDiverged(const std::string& m = "")
        : Error("Riccati recursion did not converge " + m) {}
};
struct InitiallyInfeasible : Error {
    explicit InitiallyInfeasible(const std::string& m = "")
        : Error("OCP infeasible at the initial state " + m) {}
};
struct RecursiveFeasibilityViolated : Error {
    explicit RecursiveFeasibilityViolated(const std::string& m = "")
        : Error("OCP became infeasible after a feasible start " + m) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error("configuration error: " + m) {}
};

}  // namespace atmpc
