#pragma once

#include <stdexcept>
#include <string>

namespace crc {

// Invalid input: bad files, violated preconditions, impossible requests.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crc
