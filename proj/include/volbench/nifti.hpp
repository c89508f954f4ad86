#pragma once
#include "volbench/volume.hpp"

#include <filesystem>

namespace volbench {

// Parse a NIfTI-1 volume (.nii, or .nii.gz / any gzip-wrapped stream).
// Endianness is auto-detected from the header-size field; voxel values are
// slope/intercept scaled when the header's slope is nonzero; only the
// first three dimensions are read. NIfTI-2 and .hdr/.img pairs are
// rejected with explicit errors.
Volume parse_nifti(const std::filesystem::path& path);

// Binarize a parsed volume: bit set iff scaled value > threshold.
MaskVolume mask_from_volume(const Volume& vol, double threshold = 0.5);

// Select one labeled structure: bit set iff the value rounds to `label`.
MaskVolume mask_from_volume_label(const Volume& vol, int label);

// parse_nifti + mask_from_volume; rejects all-zero masks.
MaskVolume read_mask(const std::filesystem::path& path, double threshold = 0.5);

MaskVolume read_mask_label(const std::filesystem::path& path, int label);

}  // namespace volbench
