#include <doctest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <vector>

#include <zlib.h>

#include "srg/evaluation.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

using namespace srg;

namespace {

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected srg::Error");
    return Errc::io_failure;
}

std::uint32_t be32(const unsigned char* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
           std::uint32_t(p[3]);
}

struct DecodedPng {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<unsigned char> scanlines;  // filter bytes included
};

/// Minimal decoder for the exact subset the writer emits: 8-bit truecolor,
/// filter 0 everywhere, one zlib stream.
DecodedPng decode_png(const std::string& bytes) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    REQUIRE(bytes.size() > 8);
    const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    REQUIRE(std::memcmp(p, sig, 8) == 0);

    DecodedPng out;
    std::vector<unsigned char> idat;
    std::size_t pos = 8;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t len = be32(p + pos);
        const std::string type(bytes, pos + 4, 4);
        REQUIRE(pos + 12 + len <= bytes.size());
        const unsigned char* payload = p + pos + 8;
        const auto crc = crc32(0L, p + pos + 4, len + 4);
        REQUIRE(static_cast<std::uint32_t>(crc) == be32(payload + len));
        if (type == "IHDR") {
            REQUIRE(len == 13);
            out.width = be32(payload);
            out.height = be32(payload + 4);
            CHECK(payload[8] == 8);   // bit depth
            CHECK(payload[9] == 2);   // truecolor
            CHECK(payload[12] == 0);  // no interlacing
        } else if (type == "IDAT") {
            idat.insert(idat.end(), payload, payload + len);
        }
        pos += 12 + len;
        if (type == "IEND")
            break;
    }
    REQUIRE(pos == bytes.size());

    const std::size_t stride = std::size_t{out.width} * 3 + 1;
    out.scanlines.resize(stride * out.height);
    uLongf dest_len = static_cast<uLongf>(out.scanlines.size());
    REQUIRE(uncompress(out.scanlines.data(), &dest_len, idat.data(),
                       static_cast<uLong>(idat.size())) == Z_OK);
    REQUIRE(dest_len == out.scanlines.size());
    for (std::uint32_t y = 0; y < out.height; ++y)
        REQUIRE(out.scanlines[y * stride] == 0);  // filter byte
    return out;
}

Rgb pixel_of(const DecodedPng& png, std::uint32_t x, std::uint32_t y) {
    const std::size_t stride = std::size_t{png.width} * 3 + 1;
    const unsigned char* base = png.scanlines.data() + y * stride + 1 + 3 * std::size_t{x};
    return {base[0], base[1], base[2]};
}

}  // namespace

TEST_CASE("dice is 1 on identical volumes and 0 on disjoint ones") {
    tu::Rng rng(4401);
    const Dims d{6, 5, 4};
    const auto truth = tu::random_covering_labels(rng, d, {1, 1, 1}, 3);
    const std::vector<std::uint32_t> map = {1, 2, 3};

    const auto same = dice_report(truth, truth, map);
    CHECK(same.macro_dice == 1.0);
    CHECK(same.agreeing_voxels == same.total_voxels);
    for (const auto& s : same.per_structure) {
        CHECK(s.dice == 1.0);
        CHECK(s.intersection_voxels == s.truth_voxels);
    }

    // swap labels 1 and 2 everywhere, keep 3: structures 1, 2 fully disagree
    std::vector<std::uint32_t> swapped(truth.data().begin(), truth.data().end());
    for (auto& v : swapped)
        v = v == 1 ? 2u : (v == 2 ? 1u : v);
    const LabelVolume pred(d, truth.spacing(), std::move(swapped));
    const auto rep = dice_report(pred, truth, map);
    CHECK(rep.per_structure[0].dice == 0.0);
    CHECK(rep.per_structure[1].dice == 0.0);
    CHECK(rep.per_structure[2].dice == 1.0);
}

TEST_CASE("a structure absent from both volumes scores dice 1") {
    const Dims d{3, 3, 3};
    const LabelVolume a = LabelVolume::filled(d, {1, 1, 1}, 1);
    const auto rep = dice_report(a, a, std::vector<std::uint32_t>{1, 9});
    CHECK(rep.per_structure[1].truth_voxels == 0);
    CHECK(rep.per_structure[1].predicted_voxels == 0);
    CHECK(rep.per_structure[1].dice == 1.0);
    CHECK(rep.macro_dice == 1.0);
}

TEST_CASE("dice matches the per-voxel counting oracle") {
    tu::Rng rng(4402);
    for (int iter = 0; iter < 50; ++iter) {
        const Dims d{rng.uniform_u32(3, 8), rng.uniform_u32(3, 8), rng.uniform_u32(3, 8)};
        const std::uint32_t n = rng.uniform_u32(1, 4);
        // labels 0..n with background present
        auto make = [&] {
            std::vector<std::uint32_t> data(d.voxel_count());
            for (auto& v : data)
                v = rng.uniform_u32(0, n);
            return LabelVolume(d, {1, 1, 1}, std::move(data));
        };
        const LabelVolume truth = make();
        const LabelVolume pred = make();
        std::vector<std::uint32_t> map(n);
        for (std::uint32_t k = 0; k < n; ++k)
            map[k] = k + 1;

        const auto rep = dice_report(pred, truth, map);
        double macro = 0.0;
        for (std::uint32_t k = 0; k < n; ++k) {
            const auto counts = oracle::dice_counts(pred, truth, k + 1);
            CHECK(rep.per_structure[k].truth_voxels == counts.truth);
            CHECK(rep.per_structure[k].predicted_voxels == counts.pred);
            CHECK(rep.per_structure[k].intersection_voxels == counts.both);
            CHECK(rep.per_structure[k].dice == oracle::dice(pred, truth, k + 1));
            CHECK(rep.per_structure[k].dice >= 0.0);
            CHECK(rep.per_structure[k].dice <= 1.0);
            macro += oracle::dice(pred, truth, k + 1);
        }
        CHECK(rep.macro_dice == macro / n);

        // dice is symmetric in which volume is called the prediction
        const auto rev = dice_report(truth, pred, map);
        CHECK(rev.macro_dice == rep.macro_dice);
        for (std::uint32_t k = 0; k < n; ++k)
            CHECK(rev.per_structure[k].dice == rep.per_structure[k].dice);

        // confusion marginals
        std::uint64_t total = 0;
        for (std::size_t row = 0; row <= n; ++row)
            for (std::size_t col = 0; col <= n; ++col)
                total += rep.confusion[row * (n + 1) + col];
        CHECK(total == rep.total_voxels);
        for (std::uint32_t k = 0; k < n; ++k) {
            std::uint64_t row_sum = 0, col_sum = 0;
            for (std::size_t i = 0; i <= n; ++i) {
                row_sum += rep.confusion[(k + 1) * (n + 1) + i];
                col_sum += rep.confusion[i * (n + 1) + (k + 1)];
            }
            CHECK(row_sum == rep.per_structure[k].truth_voxels);
            CHECK(col_sum == rep.per_structure[k].predicted_voxels);
        }
        std::uint64_t diag = 0;
        for (std::size_t i = 0; i <= n; ++i)
            diag += rep.confusion[i * (n + 1) + i];
        CHECK(diag == rep.agreeing_voxels);
    }
}

TEST_CASE("dice_report validates its inputs") {
    const Dims d{3, 3, 3};
    const LabelVolume a = LabelVolume::filled(d, {1, 1, 1}, 1);
    const LabelVolume other(Dims{3, 3, 4}, {1, 1, 1},
                            std::vector<std::uint32_t>(36, 1));

    CHECK(code_of([&] { (void)dice_report(a, a, std::vector<std::uint32_t>{}); }) ==
          Errc::invalid_spec);
    CHECK(code_of([&] { (void)dice_report(a, a, std::vector<std::uint32_t>{1, 1}); }) ==
          Errc::invalid_spec);
    CHECK(code_of([&] { (void)dice_report(a, a, std::vector<std::uint32_t>{0, 1}); }) ==
          Errc::invalid_spec);
    CHECK(code_of([&] { (void)dice_report(a, other, std::vector<std::uint32_t>{1}); }) ==
          Errc::geometry_mismatch);
}

TEST_CASE("the label palette is deterministic and spreads early labels") {
    for (std::uint32_t l = 1; l <= 16; ++l) {
        const Rgb a = palette_color(l);
        const Rgb b = palette_color(l);
        CHECK(a.r == b.r);
        CHECK(a.g == b.g);
        CHECK(a.b == b.b);
    }
    for (std::uint32_t i = 1; i <= 6; ++i)
        for (std::uint32_t j = i + 1; j <= 6; ++j) {
            const Rgb a = palette_color(i), b = palette_color(j);
            const int dist = std::abs(int(a.r) - int(b.r)) + std::abs(int(a.g) - int(b.g)) +
                             std::abs(int(a.b) - int(b.b));
            CHECK(dist > 30);
        }
}

TEST_CASE("overlay pixels follow the documented blend") {
    const Dims d{4, 3, 2};
    std::vector<std::uint32_t> ldata(d.voxel_count(), 0);
    ldata[0] = 1;  // voxel (0,0,0)
    ldata[5] = 2;  // voxel (1,1,0)
    const LabelVolume labels(d, {1, 1, 1}, std::move(ldata));

    SUBCASE("constant volume maps to mid gray") {
        const ScalarVolume scalar = ScalarVolume::filled(d, {1, 1, 1}, 7.5);
        const RgbImage img = render_overlay_image(scalar, labels, Axis::z, 0);
        REQUIRE(img.width == d.nx);
        REQUIRE(img.height == d.ny);

        const Rgb plain = img.pixels[2];  // unlabeled
        CHECK(plain.r == 128);
        CHECK(plain.g == 128);
        CHECK(plain.b == 128);

        const Rgb c1 = palette_color(1);
        const Rgb px = img.pixels[0];
        CHECK(px.r == (128 + c1.r + 1) / 2);
        CHECK(px.g == (128 + c1.g + 1) / 2);
        CHECK(px.b == (128 + c1.b + 1) / 2);

        // explicit palette overrides the built-in one
        const std::vector<Rgb> pal = {{255, 0, 0}, {0, 255, 0}};
        const RgbImage img2 = render_overlay_image(scalar, labels, Axis::z, 0, pal);
        CHECK(img2.pixels[0].r == (128 + 255 + 1) / 2);
        CHECK(img2.pixels[0].g == (128 + 0 + 1) / 2);
        CHECK(img2.pixels[d.nx + 1].g == (128 + 255 + 1) / 2);  // label 2, green
    }

    SUBCASE("grayscale spans the volume-global range") {
        std::vector<double> sdata(d.voxel_count(), 10.0);
        sdata[2] = 50.0;   // voxel (2,0,0): max
        sdata[1] = 30.0;   // halfway
        const ScalarVolume scalar(d, {1, 1, 1}, std::move(sdata));
        const RgbImage img = render_overlay_image(scalar, labels, Axis::z, 0);
        CHECK(img.pixels[3].r == 0);    // at min
        CHECK(img.pixels[2].r == 255);  // at max
        CHECK(img.pixels[1].r == 128);  // lround(0.5 * 255)
    }

    SUBCASE("slice orientation tracks the plane convention") {
        const ScalarVolume scalar = ScalarVolume::filled(d, {1, 1, 1}, 1.0);
        const RgbImage ix = render_overlay_image(scalar, labels, Axis::x, 0);
        CHECK(ix.width == d.ny);
        CHECK(ix.height == d.nz);
        const RgbImage iy = render_overlay_image(scalar, labels, Axis::y, 2);
        CHECK(iy.width == d.nx);
        CHECK(iy.height == d.nz);
        CHECK(code_of([&] { (void)render_overlay_image(scalar, labels, Axis::z, 2); }) ==
              Errc::index_out_of_range);
    }
}

TEST_CASE("written PNGs decode back to the rendered pixels") {
    tu::Rng rng(4403);
    const Dims d{5, 4, 3};
    const auto scalar = tu::random_scalar(rng, d, {1, 1, 1}, 0, 100);
    const auto labels = tu::random_covering_labels(rng, d, {1, 1, 1}, 3);
    const RgbImage img = render_overlay_image(scalar, labels, Axis::z, 1);

    tu::TempDir tmp;
    const auto path = tmp / "overlay.png";
    write_png(img, path);
    const std::string bytes = tu::read_file(path);

    const DecodedPng png = decode_png(bytes);
    REQUIRE(png.width == img.width);
    REQUIRE(png.height == img.height);
    for (std::uint32_t y = 0; y < png.height; ++y)
        for (std::uint32_t x = 0; x < png.width; ++x) {
            const Rgb got = pixel_of(png, x, y);
            const Rgb expect = img.pixels[std::size_t{y} * img.width + x];
            CHECK(got.r == expect.r);
            CHECK(got.g == expect.g);
            CHECK(got.b == expect.b);
        }

    // byte determinism across repeated renders
    const auto path2 = tmp / "overlay2.png";
    render_overlay(scalar, labels, Axis::z, 1, {}, path2);
    CHECK(tu::read_file(path2) == bytes);

    CHECK(code_of([&] { write_png(RgbImage{}, tmp / "bad.png"); }) == Errc::invalid_spec);
}
