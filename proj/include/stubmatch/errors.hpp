#pragma once

#include <stdexcept>
#include <string>

namespace stubmatch {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_parameter : error { using error::error; };
struct invalid_dimension : error { using error::error; };
struct insufficient_points : error { using error::error; };
struct insufficient_data : error { using error::error; };
struct precondition_violation : error { using error::error; };
struct parse_error : error { using error::error; };

}  // namespace stubmatch
