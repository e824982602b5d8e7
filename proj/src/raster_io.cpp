#include "camokit/raster_io.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace camokit {

namespace {

constexpr char kPf32Magic[4] = {'P', 'F', '3', '2'};
constexpr std::size_t kPf32Header = 12;
constexpr std::uint32_t kMaxSide = 1u << 16;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    }
    return v;
}

struct PgmHeader {
    int width = 0;
    int height = 0;
    int maxval = 0;
    std::size_t data_offset = 0;
};

// Parses "P5 <w> <h> <maxval>" with optional '#' comments, followed by a
// single whitespace byte before the pixel data.
PgmHeader parse_pgm_header(const std::string& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw FormatError("not a binary PGM (expected magic P5)");
    }
    std::size_t pos = 2;
    auto next_int = [&]() -> long {
        while (pos < bytes.size()) {
            const auto c = static_cast<unsigned char>(bytes[pos]);
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') {
                    ++pos;
                }
            } else if (std::isspace(c)) {
                ++pos;
            } else {
                break;
            }
        }
        if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            throw FormatError("malformed PGM header");
        }
        long v = 0;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > static_cast<long>(kMaxSide)) {
                throw FormatError("PGM header value too large");
            }
            ++pos;
        }
        return v;
    };
    PgmHeader hdr;
    hdr.width = static_cast<int>(next_int());
    hdr.height = static_cast<int>(next_int());
    hdr.maxval = static_cast<int>(next_int());
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        throw FormatError("malformed PGM header");
    }
    ++pos;
    if (hdr.width < 1 || hdr.height < 1) {
        throw FormatError("PGM dimensions must be positive");
    }
    if (hdr.maxval < 1 || hdr.maxval > 255) {
        throw FormatError("only 8-bit PGM (maxval 1..255) is supported");
    }
    hdr.data_offset = pos;
    const std::size_t need = static_cast<std::size_t>(hdr.width) * static_cast<std::size_t>(hdr.height);
    if (bytes.size() - pos < need) {
        throw FormatError("truncated PGM pixel data");
    }
    return hdr;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

std::string encode_pgm(const BinaryMask& mask) {
    std::string out = "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n255\n";
    out.reserve(out.size() + mask.size());
    for (auto v : mask.data()) {
        out.push_back(static_cast<char>(v ? 255 : 0));
    }
    return out;
}

BinaryMask decode_pgm_mask(const std::string& bytes) {
    const PgmHeader hdr = parse_pgm_header(bytes);
    BinaryMask mask(hdr.height, hdr.width);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const int v = static_cast<unsigned char>(bytes[hdr.data_offset + i]);
        // Foreground when v/maxval >= 128/255, in integer arithmetic.
        mask[i] = v * 255 >= 128 * hdr.maxval ? 1 : 0;
    }
    return mask;
}

ProbMap decode_pgm_gray(const std::string& bytes) {
    const PgmHeader hdr = parse_pgm_header(bytes);
    ProbMap map(hdr.height, hdr.width);
    for (std::size_t i = 0; i < map.size(); ++i) {
        map[i] = static_cast<double>(static_cast<unsigned char>(bytes[hdr.data_offset + i])) / hdr.maxval;
    }
    return map;
}

std::string encode_pf32(const ProbMap& map) {
    static_assert(std::numeric_limits<float>::is_iec559);
    validate_probabilities(map);
    std::string out(kPf32Magic, sizeof(kPf32Magic));
    put_u32(out, static_cast<std::uint32_t>(map.height()));
    put_u32(out, static_cast<std::uint32_t>(map.width()));
    out.reserve(kPf32Header + 4 * map.size());
    for (double v : map.data()) {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    return out;
}

ProbMap decode_pf32(const std::string& bytes) {
    if (bytes.size() < kPf32Header || std::memcmp(bytes.data(), kPf32Magic, 4) != 0) {
        throw FormatError("not a PF32 raster");
    }
    const std::uint32_t h = get_u32(bytes, 4);
    const std::uint32_t w = get_u32(bytes, 8);
    if (h < 1 || w < 1 || h > kMaxSide || w > kMaxSide) {
        throw FormatError("PF32 dimensions out of range");
    }
    const std::size_t n = static_cast<std::size_t>(h) * w;
    if (bytes.size() != kPf32Header + 4 * n) {
        throw FormatError("PF32 payload length does not match header");
    }
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        data[i] = static_cast<double>(std::bit_cast<float>(get_u32(bytes, kPf32Header + 4 * i)));
    }
    ProbMap map(static_cast<int>(h), static_cast<int>(w), std::move(data));
    validate_probabilities(map);
    return map;
}

BinaryMask load_mask(const std::filesystem::path& path) { return decode_pgm_mask(read_file(path)); }

void save_mask(const BinaryMask& mask, const std::filesystem::path& path) { write_file(path, encode_pgm(mask)); }

ProbMap load_prob(const std::filesystem::path& path) { return decode_pf32(read_file(path)); }

void save_prob(const ProbMap& map, const std::filesystem::path& path) { write_file(path, encode_pf32(map)); }

ProbMap load_pgm_gray(const std::filesystem::path& path) { return decode_pgm_gray(read_file(path)); }

Raster load_raster(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kPf32Magic, 4) == 0) {
        return decode_pf32(bytes);
    }
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') {
        return decode_pgm_mask(bytes);
    }
    throw FormatError("unrecognized raster format: " + path.string());
}

void save_raster(const Raster& raster, const std::filesystem::path& path) {
    std::visit(
        [&](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, BinaryMask>) {
                save_mask(r, path);
            } else {
                save_prob(r, path);
            }
        },
        raster);
}

ProbMap load_as_prob(const std::filesystem::path& path) {
    Raster r = load_raster(path);
    if (auto* m = std::get_if<BinaryMask>(&r)) {
        return to_prob(*m);
    }
    return std::get<ProbMap>(std::move(r));
}

}  // namespace camokit
