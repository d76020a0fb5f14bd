#ifndef FAIRMARS_ERRORS_HPP
#define FAIRMARS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fairmars {

// Error taxonomy shared by the library, the C API and the CLI.
// config_error maps to exit code 2, everything else to 1.

class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad options, missing columns, invalid parameter ranges, missing files.
class config_error : public error {
public:
    explicit config_error(const std::string& msg) : error(msg) {}
};

// Malformed cell contents; carries the offending row when known.
class parse_error : public error {
public:
    explicit parse_error(const std::string& msg) : error(msg) {}
};

// Structurally valid input that cannot be used (empty file, missing values,
// non-finite numbers).
class data_error : public error {
public:
    explicit data_error(const std::string& msg) : error(msg) {}
};

// Normal-equation system still singular after the ridge retry.
class rank_error : public error {
public:
    rank_error(const std::string& msg, int column) : error(msg), column_id(column) {}
    int column_id;
};

// Model file problems: corruption, truncation, schema version mismatch.
class model_io_error : public error {
public:
    explicit model_io_error(const std::string& msg) : error(msg) {}
};

} // namespace fairmars

#endif
