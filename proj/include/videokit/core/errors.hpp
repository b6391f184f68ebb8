#pragma once

#include <stdexcept>
#include <string>

namespace videokit {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define VIDEOKIT_DEFINE_ERROR(Name, Base)      \
  class Name : public Base {                   \
   public:                                     \
    using Base::Base;                          \
  };

VIDEOKIT_DEFINE_ERROR(LayoutError, Error)
VIDEOKIT_DEFINE_ERROR(ConfigError, Error)
VIDEOKIT_DEFINE_ERROR(ShapeError, Error)
VIDEOKIT_DEFINE_ERROR(KeyError, Error)
VIDEOKIT_DEFINE_ERROR(FormatError, Error)
VIDEOKIT_DEFINE_ERROR(PathError, Error)

// Media errors. Anything deriving from DecodeError is recoverable at the
// dataset level: the offending record or clip is skipped and counted.
VIDEOKIT_DEFINE_ERROR(DecodeError, Error)
VIDEOKIT_DEFINE_ERROR(ImageReadError, DecodeError)
VIDEOKIT_DEFINE_ERROR(EmptyDirError, DecodeError)

VIDEOKIT_DEFINE_ERROR(BoxError, Error)
VIDEOKIT_DEFINE_ERROR(TraceError, Error)
VIDEOKIT_DEFINE_ERROR(NormError, Error)
VIDEOKIT_DEFINE_ERROR(MatchError, Error)
VIDEOKIT_DEFINE_ERROR(EquivalenceError, Error)
VIDEOKIT_DEFINE_ERROR(SchemaError, Error)
VIDEOKIT_DEFINE_ERROR(FactoryError, Error)

#undef VIDEOKIT_DEFINE_ERROR

}  // namespace videokit
