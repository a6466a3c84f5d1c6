#pragma once

#include <stdexcept>
#include <string>

namespace oblab {

/// Base class for every error raised by the library. The kind() string is the
/// stable name used in reports and CSV error columns.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)), message_(what) {}
    const std::string& kind() const noexcept { return kind_; }
    /// what() without the kind prefix.
    const std::string& message() const noexcept { return message_; }

private:
    std::string kind_;
    std::string message_;
};

#define OBLAB_ERROR(Name)                                                   \
    class Name : public Error {                                             \
    public:                                                                 \
        explicit Name(const std::string& what) : Error(#Name, what) {}      \
    }

OBLAB_ERROR(ZeroMass);
OBLAB_ERROR(SupportMismatch);
OBLAB_ERROR(DimensionMismatch);
OBLAB_ERROR(NonFinite);
OBLAB_ERROR(BudgetExceeded);
OBLAB_ERROR(InvalidArgument);
OBLAB_ERROR(SchemaMismatch);
OBLAB_ERROR(NotPositiveDefinite);
OBLAB_ERROR(ProjectionNotConverged);
OBLAB_ERROR(AllMassExcluded);
OBLAB_ERROR(DegenerateFit);
OBLAB_ERROR(ChainNotMoved);
OBLAB_ERROR(UnknownScenario);
OBLAB_ERROR(EmptyCompatibleSet);
OBLAB_ERROR(ConfigError);
OBLAB_ERROR(EmptyInput);
OBLAB_ERROR(CheckFailed);

#undef OBLAB_ERROR

}  // namespace oblab
