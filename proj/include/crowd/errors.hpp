#ifndef CROWD_ERRORS_HPP
#define CROWD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace crowd {

/// Malformed or inconsistent input data (files, pools, label matrices).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crowd

#endif  // CROWD_ERRORS_HPP
