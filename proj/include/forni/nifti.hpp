// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "forni/volume.hpp"

namespace forni {

/// Reads a single-file NIfTI-1 volume. Supported payloads: float32,
/// little-endian, 3 or 4 dimensions. NaNs in the payload are rejected.
Volume read_volume(const std::string& path);

/// Writes a single-file NIfTI-1 volume (float32, little-endian).
void write_volume(const std::string& path, const Volume& vol);

}  // namespace forni
