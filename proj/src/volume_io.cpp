#include "srg/volume_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian and this code memcpys native scalars");

namespace srg {

namespace {

// --- low-level byte helpers ------------------------------------------------

template <typename T>
void put(std::vector<char>& buf, std::size_t offset, T value) {
    std::memcpy(buf.data() + offset, &value, sizeof(T));
}

template <typename T>
T get(const std::vector<char>& buf, std::size_t offset) {
    T value;
    std::memcpy(&value, buf.data() + offset, sizeof(T));
    return value;
}

std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::io_failure, "cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::vector<char> buf(size);
    if (size > 0 && !in.read(buf.data(), static_cast<std::streamsize>(size)))
        throw Error(Errc::io_failure, "cannot read " + path.string());
    return buf;
}

void write_file(const std::filesystem::path& path, const std::vector<char>& buf) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(Errc::io_failure, "cannot open " + path.string() + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out)
        throw Error(Errc::io_failure, "cannot write " + path.string());
}

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// --- .srgvol ----------------------------------------------------------------
// magic "SRGV", u16 version=1, u8 kind (0=scalar, 1=label), 3x u32 dims,
// 3x f64 spacing, then payload: f64 per voxel (scalar) or u32 per voxel
// (label), little-endian, x-fastest.

constexpr std::size_t kRawHeaderSize = 4 + 2 + 1 + 3 * 4 + 3 * 8;

struct RawHeader {
    std::uint8_t kind = 0;
    Dims dims;
    Spacing spacing;
};

RawHeader parse_raw_header(const std::vector<char>& buf, std::uint8_t expected_kind,
                           std::size_t payload_elem_size) {
    if (buf.size() < kRawHeaderSize || std::memcmp(buf.data(), "SRGV", 4) != 0)
        throw Error(Errc::unsupported_format, "not an srgvol file (bad magic)");
    if (get<std::uint16_t>(buf, 4) != 1)
        throw Error(Errc::unsupported_format, "unsupported srgvol version");
    RawHeader h;
    h.kind = static_cast<std::uint8_t>(buf[6]);
    if (h.kind > 1)
        throw Error(Errc::corrupt_header, "srgvol kind byte out of range");
    if (h.kind != expected_kind)
        throw Error(Errc::unsupported_format,
                    expected_kind == 0 ? "srgvol holds a label volume, expected scalar"
                                       : "srgvol holds a scalar volume, expected label");
    h.dims = {get<std::uint32_t>(buf, 7), get<std::uint32_t>(buf, 11), get<std::uint32_t>(buf, 15)};
    h.spacing = {get<double>(buf, 19), get<double>(buf, 27), get<double>(buf, 35)};
    if (h.dims.nx == 0 || h.dims.ny == 0 || h.dims.nz == 0)
        throw Error(Errc::corrupt_header, "srgvol dims must be positive");
    if (!(h.spacing.sx > 0.0) || !(h.spacing.sy > 0.0) || !(h.spacing.sz > 0.0) ||
        !std::isfinite(h.spacing.sx) || !std::isfinite(h.spacing.sy) || !std::isfinite(h.spacing.sz))
        throw Error(Errc::corrupt_header, "srgvol spacing must be positive and finite");
    const std::uint64_t expected =
        static_cast<std::uint64_t>(h.dims.nx) * h.dims.ny * h.dims.nz * payload_elem_size;
    if (buf.size() - kRawHeaderSize != expected)
        throw Error(Errc::corrupt_header, "srgvol payload size does not match declared dims");
    return h;
}

template <typename T>
std::vector<char> encode_raw(const VoxelGrid<T>& vol, std::uint8_t kind) {
    std::vector<char> buf(kRawHeaderSize + vol.size() * sizeof(T));
    std::memcpy(buf.data(), "SRGV", 4);
    put<std::uint16_t>(buf, 4, 1);
    buf[6] = static_cast<char>(kind);
    put<std::uint32_t>(buf, 7, vol.dims().nx);
    put<std::uint32_t>(buf, 11, vol.dims().ny);
    put<std::uint32_t>(buf, 15, vol.dims().nz);
    put<double>(buf, 19, vol.spacing().sx);
    put<double>(buf, 27, vol.spacing().sy);
    put<double>(buf, 35, vol.spacing().sz);
    std::memcpy(buf.data() + kRawHeaderSize, vol.data().data(), vol.size() * sizeof(T));
    return buf;
}

// --- NIfTI-1 ----------------------------------------------------------------
// Single-file .nii only, 348-byte header, magic "n+1\0" at offset 344.
// Fields used here (byte offsets): sizeof_hdr@0, dim@40 (i16[8]),
// datatype@70, bitpix@72, pixdim@76 (f32[8]), vox_offset@108,
// scl_slope@112, scl_inter@116, xyzt_units@123, magic@344.

constexpr std::int32_t kNiftiHeaderSize = 348;
constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;

struct NiftiInfo {
    Dims dims;
    Spacing spacing;
    std::int16_t datatype = 0;
    double scl_slope = 1.0;
    double scl_inter = 0.0;
    std::size_t data_offset = 0;
};

NiftiInfo parse_nifti_header(const std::vector<char>& buf) {
    if (buf.size() >= 2 && static_cast<unsigned char>(buf[0]) == 0x1f &&
        static_cast<unsigned char>(buf[1]) == 0x8b)
        throw Error(Errc::unsupported_format, "compressed NIfTI (.nii.gz) is not supported; decompress first");
    if (buf.size() < static_cast<std::size_t>(kNiftiHeaderSize) + 4)
        throw Error(Errc::unsupported_format, "file too small to be a NIfTI-1 volume");

    const auto sizeof_hdr = get<std::int32_t>(buf, 0);
    if (sizeof_hdr != kNiftiHeaderSize) {
        // 348 with swapped bytes identifies a big-endian file.
        std::int32_t swapped = sizeof_hdr;
        char* p = reinterpret_cast<char*>(&swapped);
        std::swap(p[0], p[3]);
        std::swap(p[1], p[2]);
        if (swapped == kNiftiHeaderSize)
            throw Error(Errc::unsupported_format, "big-endian NIfTI is not supported");
        throw Error(Errc::unsupported_format, "not a NIfTI-1 file (sizeof_hdr mismatch)");
    }
    if (std::memcmp(buf.data() + 344, "n+1\0", 4) != 0) {
        if (std::memcmp(buf.data() + 344, "ni1\0", 4) == 0)
            throw Error(Errc::unsupported_format, "two-file NIfTI (.hdr/.img) is not supported");
        throw Error(Errc::unsupported_format, "not a single-file NIfTI-1 volume (bad magic)");
    }

    std::int16_t dim[8];
    std::memcpy(dim, buf.data() + 40, sizeof(dim));
    if (dim[0] != 3)
        throw Error(Errc::unsupported_format, "only 3D NIfTI volumes (dim[0]=3) are supported");
    if (dim[1] <= 0 || dim[2] <= 0 || dim[3] <= 0)
        throw Error(Errc::corrupt_header, "NIfTI dims must be positive");

    float pixdim[8];
    std::memcpy(pixdim, buf.data() + 76, sizeof(pixdim));
    for (int i = 1; i <= 3; ++i)
        if (!(pixdim[i] > 0.0f) || !std::isfinite(pixdim[i]))
            throw Error(Errc::corrupt_header, "NIfTI pixdim must be positive and finite");

    NiftiInfo info;
    info.dims = {static_cast<std::uint32_t>(dim[1]), static_cast<std::uint32_t>(dim[2]),
                 static_cast<std::uint32_t>(dim[3])};
    info.spacing = {pixdim[1], pixdim[2], pixdim[3]};
    info.datatype = get<std::int16_t>(buf, 70);
    const auto bitpix = get<std::int16_t>(buf, 72);

    std::size_t elem_size = 0;
    switch (info.datatype) {
        case kDtUint8:   elem_size = 1; break;
        case kDtInt16:   elem_size = 2; break;
        case kDtFloat32: elem_size = 4; break;
        default:
            throw Error(Errc::unsupported_format, "unsupported NIfTI datatype (only uint8/int16/float32)");
    }
    if (bitpix != static_cast<std::int16_t>(elem_size * 8))
        throw Error(Errc::corrupt_header, "NIfTI bitpix inconsistent with datatype");

    const float vox_offset = get<float>(buf, 108);
    if (!(vox_offset >= kNiftiHeaderSize) || !std::isfinite(vox_offset))
        throw Error(Errc::corrupt_header, "NIfTI vox_offset before end of header");
    info.data_offset = static_cast<std::size_t>(vox_offset);

    const float slope = get<float>(buf, 112);
    const float inter = get<float>(buf, 116);
    // slope 0 means "no scaling" by convention.
    info.scl_slope = slope == 0.0f ? 1.0 : static_cast<double>(slope);
    info.scl_inter = slope == 0.0f ? 0.0 : static_cast<double>(inter);

    const std::uint64_t expected =
        static_cast<std::uint64_t>(info.dims.nx) * info.dims.ny * info.dims.nz * elem_size;
    if (buf.size() < info.data_offset || buf.size() - info.data_offset != expected)
        throw Error(Errc::corrupt_header, "NIfTI payload size does not match declared dims");
    return info;
}

std::vector<char> encode_nifti_header(const Dims& dims, const Spacing& spacing,
                                      std::int16_t datatype, std::int16_t bitpix) {
    std::vector<char> buf(kNiftiHeaderSize + 4, 0);  // header + 4-byte extension flag
    put<std::int32_t>(buf, 0, kNiftiHeaderSize);
    buf[38] = 'r';  // regular
    std::int16_t dim[8] = {3, static_cast<std::int16_t>(dims.nx), static_cast<std::int16_t>(dims.ny),
                           static_cast<std::int16_t>(dims.nz), 1, 1, 1, 1};
    std::memcpy(buf.data() + 40, dim, sizeof(dim));
    put<std::int16_t>(buf, 70, datatype);
    put<std::int16_t>(buf, 72, bitpix);
    float pixdim[8] = {1.0f, static_cast<float>(spacing.sx), static_cast<float>(spacing.sy),
                       static_cast<float>(spacing.sz), 0, 0, 0, 0};
    std::memcpy(buf.data() + 76, pixdim, sizeof(pixdim));
    put<float>(buf, 108, 352.0f);  // vox_offset
    put<float>(buf, 112, 1.0f);    // scl_slope
    put<float>(buf, 116, 0.0f);    // scl_inter
    buf[123] = 2;                  // xyzt_units: millimeters
    std::memcpy(buf.data() + 344, "n+1\0", 4);
    return buf;
}

void check_nifti_dims(const Dims& dims) {
    constexpr std::uint32_t lim = 32767;  // dim fields are int16
    if (dims.nx > lim || dims.ny > lim || dims.nz > lim)
        throw Error(Errc::io_failure, "volume too large for NIfTI-1 int16 dim fields");
}

enum class SniffedFormat { raw, nifti };

SniffedFormat sniff_format(const std::filesystem::path& path, const std::vector<char>& buf) {
    const std::string name = path.filename().string();
    if (has_suffix(name, ".gz"))
        throw Error(Errc::unsupported_format, "compressed volumes (.gz) are not supported");
    if (has_suffix(name, ".srgvol"))
        return SniffedFormat::raw;
    if (has_suffix(name, ".nii"))
        return SniffedFormat::nifti;
    if (buf.size() >= 4 && std::memcmp(buf.data(), "SRGV", 4) == 0)
        return SniffedFormat::raw;
    return SniffedFormat::nifti;  // parse_nifti_header produces the precise error
}

}  // namespace

// ---------------------------------------------------------------------------
// load
// ---------------------------------------------------------------------------

ScalarVolume load_scalar(const std::filesystem::path& path) {
    const auto buf = read_file(path);
    if (sniff_format(path, buf) == SniffedFormat::raw) {
        const auto h = parse_raw_header(buf, 0, sizeof(double));
        std::vector<double> data(h.dims.voxel_count());
        std::memcpy(data.data(), buf.data() + kRawHeaderSize, data.size() * sizeof(double));
        for (double v : data)
            if (!std::isfinite(v))
                throw Error(Errc::non_finite_data, path.string() + ": scalar volume contains NaN/Inf");
        return {h.dims, h.spacing, std::move(data)};
    }

    const auto info = parse_nifti_header(buf);
    std::vector<double> data(info.dims.voxel_count());
    const char* src = buf.data() + info.data_offset;
    switch (info.datatype) {
        case kDtUint8:
            for (std::size_t i = 0; i < data.size(); ++i)
                data[i] = static_cast<double>(static_cast<std::uint8_t>(src[i]));
            break;
        case kDtInt16:
            for (std::size_t i = 0; i < data.size(); ++i) {
                std::int16_t v;
                std::memcpy(&v, src + 2 * i, 2);
                data[i] = static_cast<double>(v);
            }
            break;
        case kDtFloat32:
            for (std::size_t i = 0; i < data.size(); ++i) {
                float v;
                std::memcpy(&v, src + 4 * i, 4);
                data[i] = static_cast<double>(v);
            }
            break;
    }
    if (info.scl_slope != 1.0 || info.scl_inter != 0.0)
        for (double& v : data)
            v = info.scl_slope * v + info.scl_inter;
    for (double v : data)
        if (!std::isfinite(v))
            throw Error(Errc::non_finite_data, path.string() + ": scalar volume contains NaN/Inf");
    return {info.dims, info.spacing, std::move(data)};
}

LabelVolume load_label(const std::filesystem::path& path) {
    const auto buf = read_file(path);
    if (sniff_format(path, buf) == SniffedFormat::raw) {
        const auto h = parse_raw_header(buf, 1, sizeof(std::uint32_t));
        std::vector<std::uint32_t> labels(h.dims.voxel_count());
        std::memcpy(labels.data(), buf.data() + kRawHeaderSize, labels.size() * sizeof(std::uint32_t));
        return {h.dims, h.spacing, std::move(labels)};
    }

    const auto info = parse_nifti_header(buf);
    if (info.datatype == kDtFloat32)
        throw Error(Errc::unsupported_format, "label volumes require an integer NIfTI datatype");
    if (info.scl_slope != 1.0 || info.scl_inter != 0.0)
        throw Error(Errc::unsupported_format, "scaled (scl_slope/inter) label volumes are not supported");
    std::vector<std::uint32_t> labels(info.dims.voxel_count());
    const char* src = buf.data() + info.data_offset;
    if (info.datatype == kDtUint8) {
        for (std::size_t i = 0; i < labels.size(); ++i)
            labels[i] = static_cast<std::uint8_t>(src[i]);
    } else {
        for (std::size_t i = 0; i < labels.size(); ++i) {
            std::int16_t v;
            std::memcpy(&v, src + 2 * i, 2);
            if (v < 0)
                throw Error(Errc::corrupt_header, path.string() + ": negative label value");
            labels[i] = static_cast<std::uint32_t>(v);
        }
    }
    return {info.dims, info.spacing, std::move(labels)};
}

// ---------------------------------------------------------------------------
// save
// ---------------------------------------------------------------------------

void save_scalar(const ScalarVolume& vol, const std::filesystem::path& path, VolumeFormat format) {
    if (format == VolumeFormat::raw) {
        write_file(path, encode_raw(vol, 0));
        return;
    }
    check_nifti_dims(vol.dims());
    auto buf = encode_nifti_header(vol.dims(), vol.spacing(), kDtFloat32, 32);
    const std::size_t base = buf.size();
    buf.resize(base + vol.size() * 4);
    for (std::size_t i = 0; i < vol.size(); ++i) {
        const float v = static_cast<float>(vol[i]);
        std::memcpy(buf.data() + base + 4 * i, &v, 4);
    }
    write_file(path, buf);
}

void save_label(const LabelVolume& vol, const std::filesystem::path& path, VolumeFormat format) {
    if (format == VolumeFormat::raw) {
        write_file(path, encode_raw(vol, 1));
        return;
    }
    check_nifti_dims(vol.dims());
    std::uint32_t max_label = 0;
    for (std::uint32_t v : vol.data())
        max_label = std::max(max_label, v);
    if (max_label > 32767)
        throw Error(Errc::io_failure, "labels exceed int16 range; NIfTI export unavailable");

    if (max_label <= 255) {
        auto buf = encode_nifti_header(vol.dims(), vol.spacing(), kDtUint8, 8);
        const std::size_t base = buf.size();
        buf.resize(base + vol.size());
        for (std::size_t i = 0; i < vol.size(); ++i)
            buf[base + i] = static_cast<char>(static_cast<std::uint8_t>(vol[i]));
        write_file(path, buf);
    } else {
        auto buf = encode_nifti_header(vol.dims(), vol.spacing(), kDtInt16, 16);
        const std::size_t base = buf.size();
        buf.resize(base + vol.size() * 2);
        for (std::size_t i = 0; i < vol.size(); ++i) {
            const auto v = static_cast<std::int16_t>(vol[i]);
            std::memcpy(buf.data() + base + 2 * i, &v, 2);
        }
        write_file(path, buf);
    }
}

VolumeFormat format_for_path(const std::filesystem::path& path) {
    const std::string name = path.filename().string();
    if (has_suffix(name, ".srgvol"))
        return VolumeFormat::raw;
    if (has_suffix(name, ".nii"))
        return VolumeFormat::nifti;
    throw Error(Errc::unsupported_format,
                "cannot infer volume format from extension: " + path.string());
}

void save_scalar(const ScalarVolume& vol, const std::filesystem::path& path) {
    save_scalar(vol, path, format_for_path(path));
}

void save_label(const LabelVolume& vol, const std::filesystem::path& path) {
    save_label(vol, path, format_for_path(path));
}

}  // namespace srg
