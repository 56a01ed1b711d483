#ifndef GSP_VERSION_HPP
#define GSP_VERSION_HPP

#define GSP_VERSION_MAJOR 0
#define GSP_VERSION_MINOR 1
#define GSP_VERSION_PATCH 0
#define GSP_VERSION_STRING "0.1.0"

namespace gsp {

inline const char* version() { return GSP_VERSION_STRING; }

}  // namespace gsp

#endif  // GSP_VERSION_HPP
