#pragma once

#include <stdexcept>
#include <string>

namespace senselm {

// Every error raised by the library derives from Error so callers (the CLI in
// particular) can separate library failures from std::bad_alloc and friends.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SENSELM_DECLARE_ERROR(Name) \
  class Name : public Error {       \
   public:                          \
    using Error::Error;             \
  }

SENSELM_DECLARE_ERROR(ParseError);
SENSELM_DECLARE_ERROR(BuildError);
SENSELM_DECLARE_ERROR(ConfigError);
SENSELM_DECLARE_ERROR(LengthError);
SENSELM_DECLARE_ERROR(NumericsError);
SENSELM_DECLARE_ERROR(ContractError);
SENSELM_DECLARE_ERROR(PlanError);
SENSELM_DECLARE_ERROR(FormatError);
SENSELM_DECLARE_ERROR(CompatError);
SENSELM_DECLARE_ERROR(IoError);

#undef SENSELM_DECLARE_ERROR

}  // namespace senselm
