#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace homog {

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);
std::string content_hash(std::string_view bytes);
std::string file_hash(const std::filesystem::path& path);

}  // namespace homog
