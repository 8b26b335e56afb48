#ifndef MOLLOW_ERRORS_HPP
#define MOLLOW_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mollow {

/// Base for model-domain failures (CLI exit code 2).
class DomainError : public std::runtime_error {
public:
    DomainError(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/// Closed forms need the oscillatory branch mu^2 > 0.
class UnderdampedDomain : public DomainError {
public:
    explicit UnderdampedDomain(const std::string& what) : DomainError("UnderdampedDomain", what) {}
};

class NoSidebands : public DomainError {
public:
    explicit NoSidebands(const std::string& what) : DomainError("NoSidebands", what) {}
};

class DegenerateData : public DomainError {
public:
    explicit DegenerateData(const std::string& what) : DomainError("DegenerateData", what) {}
};

class AmbiguousData : public DomainError {
public:
    explicit AmbiguousData(const std::string& what) : DomainError("AmbiguousData", what) {}
};

class EmptyStream : public DomainError {
public:
    explicit EmptyStream(const std::string& what) : DomainError("EmptyStream", what) {}
};

class GridError : public DomainError {
public:
    explicit GridError(const std::string& what) : DomainError("GridError", what) {}
};

} // namespace mollow

#endif // MOLLOW_ERRORS_HPP
