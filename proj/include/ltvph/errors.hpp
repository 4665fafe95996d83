#pragma once

// Exception taxonomy shared by all analysis modules.

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace ltvph {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- expression layer ---

class SyntaxError : public Error {
public:
    SyntaxError(std::size_t offset, const std::string& msg)
        : Error("syntax error at offset " + std::to_string(offset) + ": " + msg),
          offset(offset) {}
    std::size_t offset;
};

class UnknownIdentifier : public Error {
public:
    UnknownIdentifier(std::size_t offset, const std::string& name)
        : Error("unknown identifier '" + name + "' at offset " + std::to_string(offset)),
          offset(offset), name(name) {}
    std::size_t offset;
    std::string name;
};

class SingularityError : public Error {
public:
    SingularityError(double t, const std::string& node)
        : Error("singularity at t=" + std::to_string(t) + " in " + node),
          t(t), node(node) {}
    double t;
    std::string node;
};

class NonDifferentiablePoint : public Error {
public:
    NonDifferentiablePoint(double t, const std::string& msg)
        : Error("non-differentiable point t=" + std::to_string(t) + ": " + msg), t(t) {}
    double t;
};

// --- linear algebra kernels ---

class ConvergenceFailure : public Error {
public:
    explicit ConvergenceFailure(const std::string& msg) : Error(msg) {}
};

class NotPositiveDefinite : public Error {
public:
    explicit NotPositiveDefinite(int pivot)
        : Error("matrix not positive definite (pivot " + std::to_string(pivot) + ")"),
          pivot(pivot) {}
    int pivot;
};

class SingularMatrix : public Error {
public:
    SingularMatrix(int rank, int n)
        : Error("singular matrix: rank " + std::to_string(rank) + " of " + std::to_string(n)),
          rank(rank) {}
    int rank;
};

class DimensionMismatch : public Error {
public:
    explicit DimensionMismatch(const std::string& msg) : Error("dimension mismatch: " + msg) {}
};

// --- integration ---

class IntegrationFailure : public Error {
public:
    IntegrationFailure(double t, const std::string& msg)
        : Error("integration failure at t=" + std::to_string(t) + ": " + msg), t(t) {}
    double t;
};

class BlowUp : public Error {
public:
    explicit BlowUp(double t)
        : Error("finite escape detected at t=" + std::to_string(t)), t(t) {}
    double t;
};

class NodesNotOnGrid : public Error {
public:
    explicit NodesNotOnGrid(double t)
        : Error("requested node t=" + std::to_string(t) + " is not a trajectory grid node"), t(t) {}
    double t;
};

// --- dissipativity / pH structure ---

class DPlusDHNotUniformlyPositive : public Error {
public:
    DPlusDHNotUniformlyPositive(double t, double min_eig)
        : Error("D+D^H not uniformly positive: min eigenvalue " + std::to_string(min_eig) +
                " at t=" + std::to_string(t)),
          t(t), min_eig(min_eig) {}
    double t;
    double min_eig;
};

class InvariantViolation : public Error {
public:
    InvariantViolation(const std::string& which, double t, double residual)
        : Error("pH invariant '" + which + "' violated at t=" + std::to_string(t) +
                " (residual " + std::to_string(residual) + ")"),
          which(which), t(t), residual(residual) {}
    std::string which;
    double t;
    double residual;
};

class NotAKypSolution : public Error {
public:
    NotAKypSolution(double t, double min_eig)
        : Error("Q is not a KYP solution: min eigenvalue " + std::to_string(min_eig) +
                " at t=" + std::to_string(t)),
          t(t), min_eig(min_eig) {}
    double t;
    double min_eig;
};

class RankNotConstant : public Error {
public:
    RankNotConstant(double t, int r_here, int r_ref)
        : Error("storage rank changes on the grid: r=" + std::to_string(r_here) +
                " at t=" + std::to_string(t) + ", expected " + std::to_string(r_ref)),
          t(t) {}
    double t;
};

class RankIncreaseDetected : public Error {
public:
    RankIncreaseDetected(double t, int r_prev, int r_here)
        : Error("storage rank increases at t=" + std::to_string(t) + " (" +
                std::to_string(r_prev) + " -> " + std::to_string(r_here) + ")"),
          t(t) {}
    double t;
};

class EigenvalueCrossingUnresolved : public Error {
public:
    explicit EigenvalueCrossingUnresolved(double t)
        : Error("eigenvector alignment ambiguous at t=" + std::to_string(t)), t(t) {}
    double t;
};

class KernelNotConstant : public Error {
public:
    explicit KernelNotConstant(double t)
        : Error("kernel of Q rotates over the grid (first seen at t=" + std::to_string(t) + ")"),
          t(t) {}
    double t;
};

class A12NotZero : public Error {
public:
    A12NotZero(double t, double norm)
        : Error("A12 block nonzero at t=" + std::to_string(t) + " (norm " +
                std::to_string(norm) + "): Q is not a storage matrix for this system"),
          t(t) {}
    double t;
};

class C2NotZero : public Error {
public:
    C2NotZero(double t, double norm)
        : Error("C2 block nonzero at t=" + std::to_string(t) + " (norm " +
                std::to_string(norm) + "): Q is not a storage matrix for this system"),
          t(t) {}
    double t;
};

// --- transformations ---

class SingularTransform : public Error {
public:
    SingularTransform(double t, double sigma_min)
        : Error("transform singular at t=" + std::to_string(t) +
                " (min singular value " + std::to_string(sigma_min) + ")"),
          t(t) {}
    double t;
};

class NotOrientationPreserving : public Error {
public:
    NotOrientationPreserving(double t, double theta_dot)
        : Error("time map not orientation preserving: theta'(" + std::to_string(t) +
                ") = " + std::to_string(theta_dot)),
          t(t) {}
    double t;
};

class DomainMismatch : public Error {
public:
    explicit DomainMismatch(const std::string& msg) : Error("domain mismatch: " + msg) {}
};

// --- applications ---

class VolumeNonPositive : public Error {
public:
    VolumeNonPositive(double t, double value)
        : Error("layer volume not positive at t=" + std::to_string(t) +
                " (value " + std::to_string(value) + ")"),
          t(t) {}
    double t;
};

// --- configuration / CLI ---

class ParseError : public Error {
public:
    ParseError(const std::string& file, int line, const std::string& msg)
        : Error(file + ":" + std::to_string(line) + ": " + msg), line(line) {}
    int line;
};

class UnsupportedSerialization : public Error {
public:
    explicit UnsupportedSerialization(const std::string& msg) : Error(msg) {}
};

}  // namespace ltvph
