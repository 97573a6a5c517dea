#ifndef TFS_ERRORS_HPP
#define TFS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tfs {

// Malformed or inconsistent input data (files, tasks, label ranges).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (Cholesky breakdown, non-convergence, non-finite values).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace tfs

#endif
