#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace oblique {

/// Base of every error raised by the library. `code()` is the stable,
/// machine-readable name that the C API and the CLI report.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error("ParseError", what) {}
};

struct Violation {
    std::string name;      // assumption identifier, e.g. "transversality"
    std::string location;  // human-readable sample location
    std::string detail;
};

class AssumptionViolated : public Error {
public:
    explicit AssumptionViolated(std::vector<Violation> v);
    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    std::vector<Violation> violations_;
};

class EllipticityLost : public Error {
public:
    EllipticityLost(std::size_t node, const std::string& what)
        : Error("EllipticityLost", what), node_(node) {}
    std::size_t node() const noexcept { return node_; }

private:
    std::size_t node_;
};

class MonotonicityViolated : public Error {
public:
    MonotonicityViolated(std::vector<std::size_t> rows, const std::string& what)
        : Error("MonotonicityViolated", what), rows_(std::move(rows)) {}
    const std::vector<std::size_t>& rows() const noexcept { return rows_; }

private:
    std::vector<std::size_t> rows_;
};

class SingularPolicySystem : public Error {
public:
    explicit SingularPolicySystem(const std::string& what)
        : Error("SingularPolicySystem", what) {}
};

class NonConvergence : public Error {
public:
    explicit NonConvergence(const std::string& what) : Error("NonConvergence", what) {}
};

class UnsupportedDegenerate : public Error {
public:
    explicit UnsupportedDegenerate(const std::string& what)
        : Error("UnsupportedDegenerate", what) {}
};

class ResolutionError : public Error {
public:
    explicit ResolutionError(const std::string& what) : Error("ResolutionError", what) {}
};

class TableRangeExceeded : public Error {
public:
    TableRangeExceeded(double x1, double r, double p1, const std::string& what)
        : Error("TableRangeExceeded", what), x1_(x1), r_(r), p1_(p1) {}
    double x1() const noexcept { return x1_; }
    double r() const noexcept { return r_; }
    double p1() const noexcept { return p1_; }

private:
    double x1_, r_, p1_;
};

class OuterNonConvergence : public Error {
public:
    explicit OuterNonConvergence(const std::string& what)
        : Error("OuterNonConvergence", what) {}
};

class MonotonicityViolation : public Error {
public:
    MonotonicityViolation(double worst, const std::string& what)
        : Error("MonotonicityViolation", what), worst_(worst) {}
    double worst() const noexcept { return worst_; }

private:
    double worst_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error("InvalidArgument", what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("IoError", what) {}
};

}  // namespace oblique
