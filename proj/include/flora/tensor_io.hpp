#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "flora/tensor.hpp"

namespace flora {

/// FLT1 binary tensor file:
///   magic "FLT1" | u32 LE ndim | ndim x u64 LE extents | prod(extents) x f64 LE, row-major.
/// Readers reject wrong magic, truncated or oversized payloads, and
/// non-finite entries.
void write_flt1(const std::filesystem::path& path, const Tensor& t);
Tensor read_flt1(const std::filesystem::path& path);

std::string flt1_to_bytes(const Tensor& t);
Tensor flt1_from_bytes(std::string_view bytes, const std::string& origin = "<memory>");

/// Writes via a temp file in the same directory plus rename, so a failed
/// write never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

}  // namespace flora
