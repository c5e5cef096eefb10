#include "srg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "srg/error.hpp"
#include "srg/text.hpp"

namespace srg {

// ---------------------------------------------------------------------------
// Dice
// ---------------------------------------------------------------------------

SegmentationReport dice_report(const LabelVolume& pred, const LabelVolume& truth,
                               std::span<const std::uint32_t> label_map) {
    require_same_geometry(pred, truth);
    if (label_map.empty())
        throw Error(Errc::invalid_spec, "dice_report: empty label map");

    const std::size_t m = label_map.size();
    std::uint32_t max_mapped = 0;
    for (std::uint32_t id : label_map)
        max_mapped = std::max(max_mapped, id);
    constexpr std::uint32_t kOther = 0;
    std::vector<std::uint32_t> lut(static_cast<std::size_t>(max_mapped) + 1, kOther);
    for (std::size_t k = 0; k < m; ++k) {
        if (label_map[k] == 0 || lut[label_map[k]] != kOther)
            throw Error(Errc::invalid_spec, "dice_report: label map ids must be unique and nonzero");
        lut[label_map[k]] = static_cast<std::uint32_t>(k + 1);
    }
    const auto bucket = [&](std::uint32_t label) -> std::uint32_t {
        return label <= max_mapped ? lut[label] : kOther;
    };

    SegmentationReport report;
    report.total_voxels = pred.size();
    report.confusion.assign((m + 1) * (m + 1), 0);
    const auto p = pred.data();
    const auto t = truth.data();
    for (std::size_t i = 0; i < pred.size(); ++i)
        ++report.confusion[bucket(t[i]) * (m + 1) + bucket(p[i])];

    report.per_structure.resize(m);
    double dice_sum = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        StructureDice& s = report.per_structure[k];
        s.label = label_map[k];
        for (std::size_t col = 0; col <= m; ++col)
            s.truth_voxels += report.confusion[(k + 1) * (m + 1) + col];
        for (std::size_t row = 0; row <= m; ++row)
            s.predicted_voxels += report.confusion[row * (m + 1) + (k + 1)];
        s.intersection_voxels = report.confusion[(k + 1) * (m + 1) + (k + 1)];
        const std::uint64_t denom = s.truth_voxels + s.predicted_voxels;
        s.dice = denom == 0 ? 1.0
                            : 2.0 * static_cast<double>(s.intersection_voxels) /
                                  static_cast<double>(denom);
        dice_sum += s.dice;
    }
    report.macro_dice = dice_sum / static_cast<double>(m);
    for (std::size_t k = 0; k <= m; ++k)
        report.agreeing_voxels += report.confusion[k * (m + 1) + k];
    return report;
}

std::string format_dice_report(const SegmentationReport& report) {
    std::ostringstream out;
    out << "dice report\n";
    for (const StructureDice& s : report.per_structure)
        out << "label " << s.label << " dice=" << text::g17(s.dice) << " truth=" << s.truth_voxels
            << " pred=" << s.predicted_voxels << " intersection=" << s.intersection_voxels << '\n';
    out << "macro_dice=" << text::g17(report.macro_dice) << '\n';
    out << "voxel_agreement=" << report.agreeing_voxels << "/" << report.total_voxels << '\n';

    const std::size_t m = report.per_structure.size();
    out << "confusion rows=truth cols=pred, index 0 = background/other\n";
    for (std::size_t row = 0; row <= m; ++row) {
        out << "confusion";
        for (std::size_t col = 0; col <= m; ++col)
            out << ' ' << report.confusion[row * (m + 1) + col];
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// rendering
// ---------------------------------------------------------------------------

Rgb palette_color(std::uint32_t label) {
    // Golden-angle hue walk keeps consecutive labels far apart in hue.
    const double hue = std::fmod(static_cast<double>(label - 1) * 137.50776405003785, 360.0);
    const double s = 0.65, v = 0.95;
    const double c = v * s;
    const double x = c * (1.0 - std::abs(std::fmod(hue / 60.0, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hue / 60.0)) {
        case 0: r = c; g = x; break;
        case 1: r = x; g = c; break;
        case 2: g = c; b = x; break;
        case 3: g = x; b = c; break;
        case 4: r = x; b = c; break;
        default: r = c; b = x; break;
    }
    const double mlow = v - c;
    const auto to8 = [&](double f) {
        return static_cast<std::uint8_t>(std::lround((f + mlow) * 255.0));
    };
    return {to8(r), to8(g), to8(b)};
}

RgbImage render_overlay_image(const ScalarVolume& scalar, const LabelVolume& labels, Axis axis,
                              std::uint32_t index, std::span<const Rgb> palette) {
    require_same_geometry(scalar, labels);
    const Plane<double> gray_plane = extract_slice(scalar, axis, index);
    const Plane<std::uint32_t> label_plane = extract_slice(labels, axis, index);

    double lo = scalar.data()[0], hi = scalar.data()[0];
    for (double v : scalar.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }

    RgbImage img;
    img.width = static_cast<std::uint32_t>(gray_plane.cols);
    img.height = static_cast<std::uint32_t>(gray_plane.rows);
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    for (std::size_t row = 0; row < gray_plane.rows; ++row)
        for (std::size_t col = 0; col < gray_plane.cols; ++col) {
            std::uint8_t gray = 128;
            if (hi > lo)
                gray = static_cast<std::uint8_t>(
                    std::lround((gray_plane.at(row, col) - lo) / (hi - lo) * 255.0));
            Rgb px{gray, gray, gray};
            const std::uint32_t l = label_plane.at(row, col);
            if (l != 0) {
                const Rgb c = palette.empty() ? palette_color(l) : palette[(l - 1) % palette.size()];
                px = {static_cast<std::uint8_t>((gray + c.r + 1) / 2),
                      static_cast<std::uint8_t>((gray + c.g + 1) / 2),
                      static_cast<std::uint8_t>((gray + c.b + 1) / 2)};
            }
            img.pixels[row * img.width + col] = px;
        }
    return img;
}

namespace {

void put_u32_be(std::vector<unsigned char>& buf, std::uint32_t v) {
    buf.push_back(static_cast<unsigned char>(v >> 24));
    buf.push_back(static_cast<unsigned char>(v >> 16));
    buf.push_back(static_cast<unsigned char>(v >> 8));
    buf.push_back(static_cast<unsigned char>(v));
}

void append_chunk(std::vector<unsigned char>& out, const char type[4],
                  const std::vector<unsigned char>& payload) {
    put_u32_be(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_from = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const auto crc = crc32(0L, out.data() + crc_from, static_cast<uInt>(out.size() - crc_from));
    put_u32_be(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

void write_png(const RgbImage& image, const std::filesystem::path& path) {
    if (image.width == 0 || image.height == 0 ||
        image.pixels.size() != static_cast<std::size_t>(image.width) * image.height)
        throw Error(Errc::invalid_spec, "write_png: malformed image");

    // raw scanlines, each prefixed with filter byte 0
    const std::size_t stride = static_cast<std::size_t>(image.width) * 3 + 1;
    std::vector<unsigned char> raw(stride * image.height);
    for (std::uint32_t y = 0; y < image.height; ++y) {
        unsigned char* line = raw.data() + y * stride;
        line[0] = 0;
        for (std::uint32_t x = 0; x < image.width; ++x) {
            const Rgb& px = image.pixels[static_cast<std::size_t>(y) * image.width + x];
            line[1 + 3 * x] = px.r;
            line[2 + 3 * x] = px.g;
            line[3 + 3 * x] = px.b;
        }
    }

    uLongf compressed_size = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> compressed(compressed_size);
    if (compress2(compressed.data(), &compressed_size, raw.data(), static_cast<uLong>(raw.size()),
                  9) != Z_OK)
        throw Error(Errc::io_failure, "write_png: deflate failed");
    compressed.resize(compressed_size);

    std::vector<unsigned char> out;
    static const unsigned char kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    out.insert(out.end(), kSignature, kSignature + 8);

    std::vector<unsigned char> ihdr;
    put_u32_be(ihdr, image.width);
    put_u32_be(ihdr, image.height);
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: truecolor
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // interlace
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", compressed);
    append_chunk(out, "IEND", {});

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw Error(Errc::io_failure, "cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f)
        throw Error(Errc::io_failure, "cannot write " + path.string());
}

void render_overlay(const ScalarVolume& scalar, const LabelVolume& labels, Axis axis,
                    std::uint32_t index, std::span<const Rgb> palette,
                    const std::filesystem::path& out_path) {
    write_png(render_overlay_image(scalar, labels, axis, index, palette), out_path);
}

}  // namespace srg
