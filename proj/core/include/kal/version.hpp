#ifndef KAL_VERSION_HPP
#define KAL_VERSION_HPP

namespace kal {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace kal

#endif
