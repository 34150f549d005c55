#pragma once

#include <stdexcept>
#include <string>

namespace macshape {

// Target rate cannot be reached at any SNR inside the search bracket.
class unreachable_rate_error : public std::runtime_error {
public:
    explicit unreachable_rate_error(const std::string& what) : std::runtime_error(what) {}
};

// Every optimizer start failed (non-finite objective or line-search breakdown).
class optimization_failed_error : public std::runtime_error {
public:
    explicit optimization_failed_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace macshape
