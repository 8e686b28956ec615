#pragma once

#include <stdexcept>
#include <string>

namespace prymlab {

// Base class for all library failures. Subclasses mirror the failure
// modes of the individual kernels so callers can react per condition.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class NonConvergence : public Error {
public:
    explicit NonConvergence(const std::string& msg) : Error(msg) {}
};

class IllConditioned : public Error {
public:
    explicit IllConditioned(const std::string& msg) : Error(msg) {}
};

class DegenerateCurve : public Error {
public:
    explicit DegenerateCurve(const std::string& msg) : Error(msg) {}
};

class SheetAmbiguity : public Error {
public:
    explicit SheetAmbiguity(const std::string& msg) : Error(msg) {}
};

class FitIllConditioned : public Error {
public:
    explicit FitIllConditioned(const std::string& msg) : Error(msg) {}
};

class SingularSystem : public Error {
public:
    explicit SingularSystem(const std::string& msg) : Error(msg) {}
};

class BasisSearchFailed : public Error {
public:
    explicit BasisSearchFailed(const std::string& msg) : Error(msg) {}
};

class TruncationOverflow : public Error {
public:
    explicit TruncationOverflow(const std::string& msg) : Error(msg) {}
};

class NearThetaDivisor : public Error {
public:
    explicit NearThetaDivisor(const std::string& msg) : Error(msg) {}
};

class ZeroCountMismatch : public Error {
public:
    explicit ZeroCountMismatch(const std::string& msg) : Error(msg) {}
};

class NotSingleValued : public Error {
public:
    explicit NotSingleValued(const std::string& msg) : Error(msg) {}
};

class SingularAtZ : public Error {
public:
    explicit SingularAtZ(const std::string& msg) : Error(msg) {}
};

class CancellationUnsolvable : public Error {
public:
    explicit CancellationUnsolvable(const std::string& msg) : Error(msg) {}
};

class RankDeficient : public Error {
public:
    explicit RankDeficient(const std::string& msg) : Error(msg) {}
};

class ExpansionFailed : public Error {
public:
    explicit ExpansionFailed(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace prymlab
