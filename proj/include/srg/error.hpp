#pragma once

#include <stdexcept>
#include <string>

namespace srg {

enum class Errc {
    io_failure,
    unsupported_format,
    corrupt_header,
    non_finite_data,
    index_out_of_range,
    invalid_spec,
    empty_volume,
    missing_label,
    geometry_mismatch,
    inconsistent_label_maps,
    empty_vertex,
    assignment_length_mismatch,
    instance_too_large,
};

/// Library-wide error type. Every throwing operation in srg throws this,
/// carrying a machine-checkable code and the process exit code the CLI maps
/// it to (2 = I/O, 3 = format/content, 4 = geometry, 5 = instance too large).
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what_arg)
        : std::runtime_error(what_arg), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

    [[nodiscard]] int exit_code() const noexcept {
        switch (code_) {
            case Errc::io_failure:
                return 2;
            case Errc::geometry_mismatch:
            case Errc::index_out_of_range:
                return 4;
            case Errc::instance_too_large:
                return 5;
            default:
                return 3;
        }
    }

private:
    Errc code_;
};

[[nodiscard]] inline const char* errc_name(Errc c) noexcept {
    switch (c) {
        case Errc::io_failure:                 return "io_failure";
        case Errc::unsupported_format:         return "unsupported_format";
        case Errc::corrupt_header:             return "corrupt_header";
        case Errc::non_finite_data:            return "non_finite_data";
        case Errc::index_out_of_range:         return "index_out_of_range";
        case Errc::invalid_spec:               return "invalid_spec";
        case Errc::empty_volume:               return "empty_volume";
        case Errc::missing_label:              return "missing_label";
        case Errc::geometry_mismatch:          return "geometry_mismatch";
        case Errc::inconsistent_label_maps:    return "inconsistent_label_maps";
        case Errc::empty_vertex:               return "empty_vertex";
        case Errc::assignment_length_mismatch: return "assignment_length_mismatch";
        case Errc::instance_too_large:         return "instance_too_large";
    }
    return "unknown";
}

}  // namespace srg
