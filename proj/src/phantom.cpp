#include "srg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "srg/error.hpp"
#include "srg/text.hpp"

namespace srg {

// ---------------------------------------------------------------------------
// GaussianSampler
// ---------------------------------------------------------------------------

double GaussianSampler::uniform_pm1() {
    // 53-bit mantissa uniform in [0,1), mapped to [-1,1).
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
}

double GaussianSampler::next() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    double u, v, s;
    do {
        u = uniform_pm1();
        v = uniform_pm1();
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * f;
    has_cached_ = true;
    return u * f;
}

// ---------------------------------------------------------------------------
// validation
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void bad_spec(const std::string& what) {
    throw Error(Errc::invalid_spec, "phantom spec: " + what);
}

struct Bounds {
    Vec3 lo;
    Vec3 hi;
};

Bounds structure_bounds(const StructureSpec& s) {
    const Vec3 half = s.shape == Shape::ball ? Vec3{s.size.x, s.size.x, s.size.x}
                                             : Vec3{s.size.x / 2, s.size.y / 2, s.size.z / 2};
    return {s.center - half, s.center + half};
}

}  // namespace

void validate_spec(const PhantomSpec& spec) {
    if (spec.dims.nx == 0 || spec.dims.ny == 0 || spec.dims.nz == 0)
        bad_spec("dims must be positive");
    if (!(spec.spacing.sx > 0) || !(spec.spacing.sy > 0) || !(spec.spacing.sz > 0))
        bad_spec("spacing must be positive");
    if (!std::isfinite(spec.background_intensity))
        bad_spec("background intensity must be finite");

    std::vector<std::uint32_t> ids;
    ids.reserve(spec.structures.size());
    for (const auto& s : spec.structures)
        ids.push_back(s.label);
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i] != i + 1)
            bad_spec("labels must be unique, positive, and contiguous from 1");

    const Vec3 extent{spec.dims.nx * spec.spacing.sx, spec.dims.ny * spec.spacing.sy,
                      spec.dims.nz * spec.spacing.sz};
    for (const auto& s : spec.structures) {
        const std::string tag = "structure " + std::to_string(s.label);
        if (!std::isfinite(s.center.x) || !std::isfinite(s.center.y) || !std::isfinite(s.center.z))
            bad_spec(tag + ": center must be finite");
        if (!(s.size.x > 0) || (s.shape == Shape::box && (!(s.size.y > 0) || !(s.size.z > 0))))
            bad_spec(tag + ": size must be positive");
        if (!std::isfinite(s.mean_intensity))
            bad_spec(tag + ": mean intensity must be finite");
        if (!(s.intensity_stddev >= 0) || !std::isfinite(s.intensity_stddev))
            bad_spec(tag + ": intensity stddev must be finite and >= 0");
        const auto [lo, hi] = structure_bounds(s);
        if (lo.x < 0 || lo.y < 0 || lo.z < 0 || hi.x > extent.x || hi.y > extent.y ||
            hi.z > extent.z)
            bad_spec(tag + ": extends outside the volume");
    }
}

// ---------------------------------------------------------------------------
// rasterization
// ---------------------------------------------------------------------------

namespace {

bool contains(const StructureSpec& s, const Vec3& p) {
    const Vec3 d = p - s.center;
    if (s.shape == Shape::ball)
        return d.norm() <= s.size.x;
    return std::abs(d.x) <= s.size.x / 2 && std::abs(d.y) <= s.size.y / 2 &&
           std::abs(d.z) <= s.size.z / 2;
}

}  // namespace

std::pair<ScalarVolume, LabelVolume> generate_phantom(const PhantomSpec& spec) {
    validate_spec(spec);
    const Dims dims = spec.dims;
    const Spacing sp = spec.spacing;

    std::vector<std::uint32_t> labels(dims.voxel_count(), 0);
    for (const auto& s : spec.structures) {
        // Voxel bbox of the structure, clamped; membership still tested per
        // voxel center so the raster matches the analytic shape exactly.
        const auto [lo, hi] = structure_bounds(s);
        const auto lo_idx = [](double v, double step) {
            const double t = v / step - 0.5;
            return t <= 0 ? 0u : static_cast<std::uint32_t>(std::floor(t));
        };
        const auto hi_idx = [](double v, double step, std::uint32_t n) {
            const double t = v / step - 0.5;
            const auto c = static_cast<std::int64_t>(std::ceil(t));
            return c >= static_cast<std::int64_t>(n)
                       ? n - 1
                       : static_cast<std::uint32_t>(std::max<std::int64_t>(c, 0));
        };
        const std::uint32_t x0 = lo_idx(lo.x, sp.sx), x1 = hi_idx(hi.x, sp.sx, dims.nx);
        const std::uint32_t y0 = lo_idx(lo.y, sp.sy), y1 = hi_idx(hi.y, sp.sy, dims.ny);
        const std::uint32_t z0 = lo_idx(lo.z, sp.sz), z1 = hi_idx(hi.z, sp.sz, dims.nz);
        for (std::uint32_t z = z0; z <= z1; ++z)
            for (std::uint32_t y = y0; y <= y1; ++y)
                for (std::uint32_t x = x0; x <= x1; ++x) {
                    const Vec3 p{(x + 0.5) * sp.sx, (y + 0.5) * sp.sy, (z + 0.5) * sp.sz};
                    if (contains(s, p))
                        labels[x + static_cast<std::size_t>(dims.nx) *
                                       (y + static_cast<std::size_t>(dims.ny) * z)] = s.label;
                }
    }

    std::vector<double> mean(spec.structures.size() + 1, spec.background_intensity);
    std::vector<double> stddev(spec.structures.size() + 1, 0.0);
    for (const auto& s : spec.structures) {
        mean[s.label] = s.mean_intensity;
        stddev[s.label] = s.intensity_stddev;
    }

    // Single linear pass; the Gaussian stream advances only on labeled voxels,
    // so background extent never shifts structure noise.
    GaussianSampler gauss(spec.seed);
    std::vector<double> values(dims.voxel_count());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::uint32_t l = labels[i];
        values[i] = l == 0 ? spec.background_intensity : mean[l] + stddev[l] * gauss.next();
    }
    return {ScalarVolume(dims, sp, std::move(values)), LabelVolume(dims, sp, std::move(labels))};
}

std::pair<ScalarVolume, LabelVolume> perturb_phantom(const PhantomSpec& spec,
                                                     std::span<const Vec3> shifts,
                                                     std::uint64_t seed) {
    if (shifts.size() != spec.structures.size())
        bad_spec("need exactly one shift per structure");
    PhantomSpec shifted = spec;
    for (std::size_t i = 0; i < shifts.size(); ++i)
        shifted.structures[i].center = shifted.structures[i].center + shifts[i];
    shifted.seed = seed;
    return generate_phantom(shifted);
}

// ---------------------------------------------------------------------------
// text configuration
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
    throw Error(Errc::invalid_spec, "phantom spec line " + std::to_string(line) + ": " + what);
}

std::vector<double> parse_numbers(const std::string& value, std::size_t line) {
    std::istringstream ss(value);
    std::vector<double> out;
    double v;
    while (ss >> v)
        out.push_back(v);
    std::string rest;
    if (ss.clear(), ss >> rest)
        parse_fail(line, "trailing junk in '" + value + "'");
    if (out.empty())
        parse_fail(line, "expected numbers, got '" + value + "'");
    return out;
}

double parse_one(const std::string& value, std::size_t line) {
    const auto v = parse_numbers(value, line);
    if (v.size() != 1)
        parse_fail(line, "expected one number, got '" + value + "'");
    return v[0];
}

Vec3 parse_vec3(const std::string& value, std::size_t line) {
    const auto v = parse_numbers(value, line);
    if (v.size() != 3)
        parse_fail(line, "expected three numbers, got '" + value + "'");
    return {v[0], v[1], v[2]};
}

}  // namespace

PhantomSpec parse_phantom_spec(const std::string& text) {
    PhantomSpec spec;
    StructureSpec* current = nullptr;
    bool saw_dims = false, saw_spacing = false;

    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        std::string line = text::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty())
            continue;

        if (line == "[structure]") {
            spec.structures.emplace_back();
            current = &spec.structures.back();
            continue;
        }
        if (line.front() == '[')
            parse_fail(line_no, "unknown section '" + line + "'");

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            parse_fail(line_no, "expected 'key = value'");
        const std::string key = text::trim(line.substr(0, eq));
        const std::string value = text::trim(line.substr(eq + 1));

        if (current == nullptr) {
            if (key == "dims") {
                const auto v = parse_vec3(value, line_no);
                if (v.x < 1 || v.y < 1 || v.z < 1 || v.x != std::floor(v.x) ||
                    v.y != std::floor(v.y) || v.z != std::floor(v.z))
                    parse_fail(line_no, "dims must be positive integers");
                spec.dims = {static_cast<std::uint32_t>(v.x), static_cast<std::uint32_t>(v.y),
                             static_cast<std::uint32_t>(v.z)};
                saw_dims = true;
            } else if (key == "spacing") {
                const auto v = parse_vec3(value, line_no);
                spec.spacing = {v.x, v.y, v.z};
                saw_spacing = true;
            } else if (key == "background") {
                spec.background_intensity = parse_one(value, line_no);
            } else if (key == "seed") {
                const double v = parse_one(value, line_no);
                if (v < 0 || v != std::floor(v))
                    parse_fail(line_no, "seed must be a non-negative integer");
                spec.seed = static_cast<std::uint64_t>(v);
            } else {
                parse_fail(line_no, "unknown key '" + key + "'");
            }
            continue;
        }

        if (key == "label") {
            const double v = parse_one(value, line_no);
            if (v < 1 || v != std::floor(v))
                parse_fail(line_no, "label must be a positive integer");
            current->label = static_cast<std::uint32_t>(v);
        } else if (key == "shape") {
            if (value == "ball")
                current->shape = Shape::ball;
            else if (value == "box")
                current->shape = Shape::box;
            else
                parse_fail(line_no, "shape must be ball or box");
        } else if (key == "center") {
            current->center = parse_vec3(value, line_no);
        } else if (key == "size") {
            const auto v = parse_numbers(value, line_no);
            if (v.size() == 1)
                current->size = {v[0], v[0], v[0]};
            else if (v.size() == 3)
                current->size = {v[0], v[1], v[2]};
            else
                parse_fail(line_no, "size takes one number (ball radius) or three (box edges)");
        } else if (key == "mean") {
            current->mean_intensity = parse_one(value, line_no);
        } else if (key == "stddev") {
            current->intensity_stddev = parse_one(value, line_no);
        } else {
            parse_fail(line_no, "unknown structure key '" + key + "'");
        }
    }

    if (!saw_dims || !saw_spacing)
        throw Error(Errc::invalid_spec, "phantom spec: dims and spacing are required");
    validate_spec(spec);
    return spec;
}

std::string serialize_phantom_spec(const PhantomSpec& spec) {
    std::ostringstream out;
    out << "dims = " << spec.dims.nx << ' ' << spec.dims.ny << ' ' << spec.dims.nz << '\n';
    out << "spacing = " << text::g17(spec.spacing.sx) << ' ' << text::g17(spec.spacing.sy) << ' '
        << text::g17(spec.spacing.sz) << '\n';
    out << "background = " << text::g17(spec.background_intensity) << '\n';
    out << "seed = " << spec.seed << '\n';
    for (const auto& s : spec.structures) {
        out << "\n[structure]\n";
        out << "label = " << s.label << '\n';
        out << "shape = " << (s.shape == Shape::ball ? "ball" : "box") << '\n';
        out << "center = " << text::g17(s.center.x) << ' ' << text::g17(s.center.y) << ' ' << text::g17(s.center.z)
            << '\n';
        if (s.shape == Shape::ball)
            out << "size = " << text::g17(s.size.x) << '\n';
        else
            out << "size = " << text::g17(s.size.x) << ' ' << text::g17(s.size.y) << ' ' << text::g17(s.size.z)
                << '\n';
        out << "mean = " << text::g17(s.mean_intensity) << '\n';
        out << "stddev = " << text::g17(s.intensity_stddev) << '\n';
    }
    return out.str();
}

PhantomSpec load_phantom_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io_failure, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_phantom_spec(ss.str());
}

void save_phantom_spec(const PhantomSpec& spec, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw Error(Errc::io_failure, "cannot open " + path.string() + " for writing");
    out << serialize_phantom_spec(spec);
    if (!out)
        throw Error(Errc::io_failure, "cannot write " + path.string());
}

}  // namespace srg
