#pragma once

#include <filesystem>

#include "srg/volume.hpp"

namespace srg {

/// On-disk encodings. `raw` is the internal .srgvol container (bit-exact
/// round trips, f64 scalar / u32 label payload). `nifti` is uncompressed
/// single-file NIfTI-1 (.nii), little-endian, datatypes uint8/int16/float32;
/// scalars are written as float32, labels as uint8 or int16 depending on the
/// largest label. Compressed .nii.gz is rejected.
enum class VolumeFormat { raw, nifti };

ScalarVolume load_scalar(const std::filesystem::path& path);
LabelVolume load_label(const std::filesystem::path& path);

void save_scalar(const ScalarVolume& vol, const std::filesystem::path& path, VolumeFormat format);
void save_label(const LabelVolume& vol, const std::filesystem::path& path, VolumeFormat format);

/// Format implied by the file extension: .srgvol -> raw, .nii -> nifti.
[[nodiscard]] VolumeFormat format_for_path(const std::filesystem::path& path);

/// save_* with the format chosen from the extension.
void save_scalar(const ScalarVolume& vol, const std::filesystem::path& path);
void save_label(const LabelVolume& vol, const std::filesystem::path& path);

}  // namespace srg
