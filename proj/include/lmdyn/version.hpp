// version.hpp — Library version stamp written into run manifests

#pragma once

namespace lmdyn {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kConfigFormat = "lmdyn-config v1";
inline constexpr const char* kCsvFormat = "lmdyn-csv v1";

}  // namespace lmdyn
