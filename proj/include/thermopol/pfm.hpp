/**
 * @file pfm.hpp
 * @brief Portable float map reader and writer.
 *
 * Header: "PF" (3 channels) or "Pf" (1 channel), then "width height", then a
 * scale whose sign gives the byte order (negative: little-endian). Rows of
 * 32-bit floats follow, bottom row first. Files are written little-endian with
 * scale -1.
 */

#pragma once

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "thermopol/image.hpp"

namespace thermopol {

class PfmError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Pixels are narrowed to float. Throws PfmError for non-finite pixels or
/// channel counts other than 1 and 3.
void pfm_write(const Image& image, std::ostream& out);
void pfm_write(const Image& image, const std::string& path);

/// Throws PfmError on a malformed header or truncated payload.
Image pfm_read(std::istream& in);
Image pfm_read(const std::string& path);

}  // namespace thermopol
