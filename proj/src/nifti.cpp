// SPDX-License-Identifier: Apache-2.0

#include "forni/nifti.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "forni/errors.hpp"

namespace forni {

namespace {

static_assert(std::endian::native == std::endian::little,
              "NIfTI I/O assumes a little-endian host");

#pragma pack(push, 1)
struct Nifti1Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code, sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4], srow_y[4], srow_z[4];
  char intent_name[16];
  char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

constexpr std::int16_t kDtFloat32 = 16;

}  // namespace

Volume read_volume(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open volume: " + path);

  Nifti1Header h{};
  in.read(reinterpret_cast<char*>(&h), sizeof(h));
  if (!in) throw DataError(path + ": truncated NIfTI header");
  if (h.sizeof_hdr != 348) {
    throw DataError(path + ": not a little-endian NIfTI-1 file (sizeof_hdr=" +
                    std::to_string(h.sizeof_hdr) + ")");
  }
  if (std::strncmp(h.magic, "n+1", 3) != 0) {
    throw DataError(path + ": unsupported NIfTI magic (need single-file n+1)");
  }
  if (h.datatype != kDtFloat32 || h.bitpix != 32) {
    throw DataError(path + ": unsupported datatype " +
                    std::to_string(h.datatype) + " (only float32)");
  }
  const int ndim = h.dim[0];
  if (ndim < 3 || ndim > 4) {
    throw DataError(path + ": unsupported dimensionality " +
                    std::to_string(ndim));
  }

  Volume vol;
  vol.dim = {h.dim[1], h.dim[2], h.dim[3], ndim == 4 ? h.dim[4] : 1};
  for (int i = 0; i < 4; ++i) {
    if (vol.dim[i] < 1) {
      throw DataError(path + ": invalid dimension in header");
    }
  }
  for (int i = 0; i < 3; ++i) vol.voxel_mm[i] = h.pixdim[i + 1];
  std::memcpy(vol.affine[0].data(), h.srow_x, sizeof(h.srow_x));
  std::memcpy(vol.affine[1].data(), h.srow_y, sizeof(h.srow_y));
  std::memcpy(vol.affine[2].data(), h.srow_z, sizeof(h.srow_z));

  const std::size_t count =
      std::size_t(vol.dim[0]) * vol.dim[1] * vol.dim[2] * vol.dim[3];
  const auto offset = std::streamoff(h.vox_offset);
  if (offset < std::streamoff(sizeof(h))) {
    throw DataError(path + ": bad vox_offset");
  }
  in.seekg(offset, std::ios::beg);
  vol.data.resize(count);
  in.read(reinterpret_cast<char*>(vol.data.data()),
          std::streamsize(count * sizeof(float)));
  if (!in) {
    throw DataError(path + ": payload shorter than header dimensions (" +
                    std::to_string(count) + " float32 values expected)");
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (std::isnan(vol.data[i])) {
      throw DataError(path + ": NaN in payload at element " +
                      std::to_string(i));
    }
  }
  return vol;
}

void write_volume(const std::string& path, const Volume& vol) {
  const std::size_t count =
      std::size_t(vol.dim[0]) * vol.dim[1] * vol.dim[2] * vol.dim[3];
  if (count == 0 || vol.data.size() != count) {
    throw InvalidArgument("write_volume: dims inconsistent with payload");
  }

  Nifti1Header h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  const bool is4d = vol.dim[3] > 1;
  h.dim[0] = is4d ? 4 : 3;
  h.dim[1] = std::int16_t(vol.dim[0]);
  h.dim[2] = std::int16_t(vol.dim[1]);
  h.dim[3] = std::int16_t(vol.dim[2]);
  h.dim[4] = is4d ? std::int16_t(vol.dim[3]) : 1;
  for (int i = 5; i < 8; ++i) h.dim[i] = 1;
  h.datatype = kDtFloat32;
  h.bitpix = 32;
  h.pixdim[0] = 1.f;
  for (int i = 0; i < 3; ++i) h.pixdim[i + 1] = vol.voxel_mm[i];
  h.pixdim[4] = 1.f;
  h.vox_offset = 352.f;
  h.scl_slope = 1.f;
  h.xyzt_units = 10;  // mm | sec
  std::strncpy(h.descrip, "forni", sizeof(h.descrip) - 1);
  h.sform_code = 1;
  h.qform_code = 0;
  std::memcpy(h.srow_x, vol.affine[0].data(), sizeof(h.srow_x));
  std::memcpy(h.srow_y, vol.affine[1].data(), sizeof(h.srow_y));
  std::memcpy(h.srow_z, vol.affine[2].data(), sizeof(h.srow_z));
  std::memcpy(h.magic, "n+1", 4);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write volume: " + path);
  out.write(reinterpret_cast<const char*>(&h), sizeof(h));
  const char extender[4] = {0, 0, 0, 0};
  out.write(extender, 4);
  out.write(reinterpret_cast<const char*>(vol.data.data()),
            std::streamsize(count * sizeof(float)));
  if (!out) throw DataError("failed writing volume: " + path);
}

}  // namespace forni
