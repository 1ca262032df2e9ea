#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cusumseg/binary_mask.hpp"
#include "cusumseg/error.hpp"
#include "cusumseg/imaging.hpp"

namespace cusumseg {

namespace fs = std::filesystem;

enum class PgmFormat { P2, P5 };

/// Raw PGM contents: integer samples plus the declared maxval.
struct PgmData {
    int width = 0;
    int height = 0;
    int maxval = 0;
    std::vector<std::uint16_t> samples;
};

namespace detail {

inline void skip_space_and_comments(std::istream& in) {
    for (;;) {
        const int c = in.peek();
        if (c == '#') {
            in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
        } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
            in.get();
        } else {
            return;
        }
    }
}

inline long read_header_int(std::istream& in, const char* what) {
    skip_space_and_comments(in);
    long v = -1;
    if (!(in >> v) || v < 0) throw MalformedFile(std::string("PGM: bad ") + what);
    return v;
}

}  // namespace detail

inline PgmData read_pgm(std::istream& in) {
    char magic[2] = {};
    if (!in.read(magic, 2) || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '5'))
        throw MalformedFile("PGM: expected magic P2 or P5");
    const bool ascii = magic[1] == '2';

    PgmData pgm;
    const long w = detail::read_header_int(in, "width");
    const long h = detail::read_header_int(in, "height");
    const long maxval = detail::read_header_int(in, "maxval");
    if (w < 1 || h < 1 || w > 1 << 16 || h > 1 << 16) throw MalformedFile("PGM: bad dimensions");
    if (maxval < 1 || maxval > 65535) throw MalformedFile("PGM: maxval must be in [1, 65535]");
    pgm.width = static_cast<int>(w);
    pgm.height = static_cast<int>(h);
    pgm.maxval = static_cast<int>(maxval);

    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    pgm.samples.resize(n);

    if (ascii) {
        for (std::size_t i = 0; i < n; ++i) {
            detail::skip_space_and_comments(in);
            long v = -1;
            if (!(in >> v)) throw MalformedFile("PGM: truncated ASCII payload");
            if (v < 0 || v > maxval) throw MalformedFile("PGM: sample exceeds maxval");
            pgm.samples[i] = static_cast<std::uint16_t>(v);
        }
        return pgm;
    }

    // exactly one whitespace byte separates maxval from the raster
    if (!std::isspace(in.get())) throw MalformedFile("PGM: missing raster separator");
    const std::size_t bytes_per = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(n * bytes_per);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw MalformedFile("PGM: truncated binary payload");
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned v =
            bytes_per == 2 ? (unsigned{raw[2 * i]} << 8) | raw[2 * i + 1] : unsigned{raw[i]};
        if (v > static_cast<unsigned>(maxval)) throw MalformedFile("PGM: sample exceeds maxval");
        pgm.samples[i] = static_cast<std::uint16_t>(v);
    }
    return pgm;
}

inline void write_pgm(std::ostream& out, const PgmData& pgm, PgmFormat format) {
    out << (format == PgmFormat::P2 ? "P2" : "P5") << '\n'
        << pgm.width << ' ' << pgm.height << '\n'
        << pgm.maxval << '\n';
    if (format == PgmFormat::P2) {
        for (int y = 0; y < pgm.height; ++y) {
            for (int x = 0; x < pgm.width; ++x) {
                if (x) out << ' ';
                out << pgm.samples[static_cast<std::size_t>(y) * pgm.width + x];
            }
            out << '\n';
        }
        return;
    }
    const bool wide = pgm.maxval > 255;
    std::vector<char> raw;
    raw.reserve(pgm.samples.size() * (wide ? 2 : 1));
    for (std::uint16_t v : pgm.samples) {
        if (wide) raw.push_back(static_cast<char>(v >> 8));
        raw.push_back(static_cast<char>(v & 0xff));
    }
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
}

inline PgmData read_pgm_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_pgm(in);
}

inline void write_pgm_file(const fs::path& path, const PgmData& pgm, PgmFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path.string());
    write_pgm(out, pgm, format);
    if (!out) throw IoError("write failed for " + path.string());
}

inline nlohmann::json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedFile(path.string() + ": " + e.what());
    }
}

inline void write_json_file(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot create " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

/// Sidecar metadata path for a single image: same stem, `.json` extension.
inline fs::path sidecar_path(const fs::path& image_path) {
    fs::path p = image_path;
    p.replace_extension(".json");
    return p;
}

inline GrayImage image_from_pgm(const PgmData& pgm, double spacing_x, double spacing_y) {
    if (pgm.width < 3 || pgm.height < 3) throw MalformedFile("PGM: image smaller than 3x3");
    std::vector<double> data(pgm.samples.begin(), pgm.samples.end());
    return GrayImage(pgm.width, pgm.height, std::move(data), spacing_x, spacing_y);
}

/// Reads a P2/P5 image. Spacing comes from the `.json` sidecar when present,
/// otherwise 1 x 1 mm.
inline GrayImage load_image(const fs::path& path) {
    double sx = 1.0, sy = 1.0;
    if (const fs::path side = sidecar_path(path); side != path && fs::exists(side)) {
        const nlohmann::json meta = read_json_file(side);
        sx = meta.value("spacing_x", 1.0);
        sy = meta.value("spacing_y", 1.0);
        if (!(sx > 0.0) || !(sy > 0.0)) throw MalformedFile(side.string() + ": bad spacing");
    }
    return image_from_pgm(read_pgm_file(path), sx, sy);
}

/// Samples are rounded to the nearest integer and clamped to [0, 65535].
inline PgmData pgm_from_image(const GrayImage& img) {
    PgmData pgm;
    pgm.width = img.width();
    pgm.height = img.height();
    pgm.samples.reserve(img.size());
    int peak = 0;
    for (double v : img.data()) {
        const auto s = static_cast<std::uint16_t>(std::clamp(std::lround(v), 0L, 65535L));
        peak = std::max<int>(peak, s);
        pgm.samples.push_back(s);
    }
    pgm.maxval = peak > 255 ? 65535 : 255;
    return pgm;
}

inline void save_image(const GrayImage& img, const fs::path& path,
                       PgmFormat format = PgmFormat::P5) {
    write_pgm_file(path, pgm_from_image(img), format);
}

/// Masks are written as P5 with values {0, 255}.
inline void save_mask(const BinaryMask& mask, const fs::path& path) {
    PgmData pgm;
    pgm.width = mask.width();
    pgm.height = mask.height();
    pgm.maxval = 255;
    pgm.samples.resize(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) pgm.samples[i] = mask[i] ? 255 : 0;
    write_pgm_file(path, pgm, PgmFormat::P5);
}

/// Any non-zero sample reads as unity.
inline BinaryMask load_mask(const fs::path& path) {
    const PgmData pgm = read_pgm_file(path);
    BinaryMask mask(pgm.width, pgm.height);
    for (int y = 0; y < pgm.height; ++y)
        for (int x = 0; x < pgm.width; ++x)
            mask.set(x, y, pgm.samples[static_cast<std::size_t>(y) * pgm.width + x] != 0);
    return mask;
}

// ---------------------------------------------------------------------------
// Stack directories: s{slice}_t{time}.pgm plus metadata.json
// ---------------------------------------------------------------------------

struct StackMetadata {
    double spacing_x = 1.0;
    double spacing_y = 1.0;
    int num_timepoints = 1;
    int num_slices = 1;
};

inline nlohmann::json to_json(const StackMetadata& m) {
    return {{"spacing_x", m.spacing_x},
            {"spacing_y", m.spacing_y},
            {"num_timepoints", m.num_timepoints},
            {"num_slices", m.num_slices}};
}

inline StackMetadata stack_metadata_from_json(const nlohmann::json& j) {
    StackMetadata m;
    try {
        m.spacing_x = j.value("spacing_x", 1.0);
        m.spacing_y = j.value("spacing_y", 1.0);
        m.num_timepoints = j.at("num_timepoints").get<int>();
        m.num_slices = j.at("num_slices").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw MalformedFile(std::string("stack metadata: ") + e.what());
    }
    if (!(m.spacing_x > 0.0) || !(m.spacing_y > 0.0) || m.num_timepoints < 1 ||
        m.num_slices < 1)
        throw MalformedFile("stack metadata: out-of-range values");
    return m;
}

inline constexpr const char* kStackMetadataName = "metadata.json";

inline fs::path stack_image_path(const fs::path& dir, int slice, int timepoint) {
    return dir / ("s" + std::to_string(slice) + "_t" + std::to_string(timepoint) + ".pgm");
}

inline PerfusionStack load_stack(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
    const StackMetadata meta = stack_metadata_from_json(read_json_file(dir / kStackMetadataName));
    std::vector<GrayImage> images;
    images.reserve(static_cast<std::size_t>(meta.num_slices) * meta.num_timepoints);
    for (int s = 0; s < meta.num_slices; ++s)
        for (int t = 0; t < meta.num_timepoints; ++t)
            images.push_back(image_from_pgm(read_pgm_file(stack_image_path(dir, s, t)),
                                            meta.spacing_x, meta.spacing_y));
    try {
        return PerfusionStack(meta.num_slices, meta.num_timepoints, std::move(images));
    } catch (const std::invalid_argument& e) {
        throw MalformedFile(dir.string() + ": " + e.what());
    }
}

inline void save_stack(const PerfusionStack& stack, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    const GrayImage& first = stack.image(0, 0);
    write_json_file(dir / kStackMetadataName,
                    to_json(StackMetadata{first.spacing_x(), first.spacing_y(),
                                          stack.num_timepoints(), stack.num_slices()}));
    for (int s = 0; s < stack.num_slices(); ++s)
        for (int t = 0; t < stack.num_timepoints(); ++t)
            save_image(stack.image(s, t), stack_image_path(dir, s, t));
}

}  // namespace cusumseg
