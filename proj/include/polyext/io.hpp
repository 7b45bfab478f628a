#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polyext/polymer.hpp"

namespace polyext::io {

// Writes to "<path>.tmp.<pid>" and renames over path; no partial file is left behind on failure.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// %.17g, with "inf", "-inf" and "nan" spelled out.
std::string fmt(double v);

// Binary LogWeightField dump (format in docs/formats.md):
//   "PXLW", u32 version = 1, i64 N, i64 time_lo, i64 time_hi, i64 x0, x1, y0, y1, f64 log_offset,
//   then (x1-x0+1)(y1-y0+1) f64 values, row-major with x fastest. All little-endian.
std::string encode_log_field(const polymer::LogWeightField& f, std::int64_t N);
polymer::LogWeightField decode_log_field(const std::string& bytes, std::int64_t* N = nullptr);

}  // namespace polyext::io
