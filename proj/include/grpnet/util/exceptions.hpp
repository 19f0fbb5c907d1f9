#pragma once
#include <stdexcept>
#include <string>

namespace grpnet {
namespace util {

/**
 * Base class of every error raised by the library.
 * kind() is a stable machine-readable tag used by the CLI error record.
 */
class grpnet_error : public std::runtime_error
{
public:
    grpnet_error(std::string kind, const std::string& msg)
        : std::runtime_error(msg), _kind(std::move(kind))
    {}
    const std::string& kind() const noexcept { return _kind; }
private:
    std::string _kind;
};

class iteration_limit_error : public grpnet_error
{
public:
    explicit iteration_limit_error(const std::string& msg)
        : grpnet_error("IterationLimit", msg) {}
};

class dimension_mismatch_error : public grpnet_error
{
public:
    explicit dimension_mismatch_error(const std::string& msg)
        : grpnet_error("DimensionMismatch", msg) {}
};

class convergence_failure_error : public grpnet_error
{
public:
    explicit convergence_failure_error(const std::string& msg)
        : grpnet_error("ConvergenceFailure", msg) {}
};

class kkt_loop_limit_error : public grpnet_error
{
public:
    explicit kkt_loop_limit_error(const std::string& msg)
        : grpnet_error("KktLoopLimit", msg) {}
};

class memory_budget_exceeded_error : public grpnet_error
{
public:
    explicit memory_budget_exceeded_error(const std::string& msg)
        : grpnet_error("MemoryBudgetExceeded", msg) {}
};

class non_finite_loss_error : public grpnet_error
{
public:
    explicit non_finite_loss_error(const std::string& msg)
        : grpnet_error("NonFiniteLoss", msg) {}
};

class invalid_argument_error : public grpnet_error
{
public:
    explicit invalid_argument_error(const std::string& msg)
        : grpnet_error("InvalidArgument", msg) {}
};

class parse_error : public grpnet_error
{
public:
    parse_error(const std::string& msg, std::size_t line, std::size_t column)
        : grpnet_error("ParseError",
            msg + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
          _line(line), _column(column)
    {}
    std::size_t line() const noexcept { return _line; }
    std::size_t column() const noexcept { return _column; }
private:
    std::size_t _line;
    std::size_t _column;
};

class ragged_rows_error : public grpnet_error
{
public:
    ragged_rows_error(std::size_t line, std::size_t expected, std::size_t got)
        : grpnet_error("RaggedRows",
            "row at line " + std::to_string(line) + " has " + std::to_string(got)
            + " fields, expected " + std::to_string(expected)),
          _line(line)
    {}
    std::size_t line() const noexcept { return _line; }
private:
    std::size_t _line;
};

} // namespace util
} // namespace grpnet
