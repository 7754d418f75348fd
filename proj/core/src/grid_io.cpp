#include "midseg/grid_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace midseg {

namespace {

constexpr char kMagic[4] = {'G', 'R', 'I', 'D'};

void put_u32le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32le(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32le(os, bits);
}

float get_f32le(std::istream& is) {
    const std::uint32_t bits = get_u32le(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    return os;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + path);
    return is;
}

}  // namespace

void save_multigrid(const MultiGrid& g, const std::string& path) {
    std::ofstream os = open_out(path);
    os.write(kMagic, 4);
    put_u32le(os, static_cast<std::uint32_t>(g.height()));
    put_u32le(os, static_cast<std::uint32_t>(g.width()));
    put_u32le(os, static_cast<std::uint32_t>(g.channels()));
    for (int c = 0; c < g.channels(); ++c) {
        const Grid& plane = g.plane(c);
        for (std::size_t i = 0; i < plane.size(); ++i) put_f32le(os, static_cast<float>(plane[i]));
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

void save_grid(const Grid& g, const std::string& path) {
    save_multigrid(MultiGrid(std::vector<Grid>{g}), path);
}

MultiGrid load_multigrid(const std::string& path) {
    std::ifstream is = open_in(path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a GRID file: " + path);
    const std::uint32_t h = get_u32le(is);
    const std::uint32_t w = get_u32le(is);
    const std::uint32_t c = get_u32le(is);
    if (h == 0 || w == 0 || c == 0 || h > 1u << 20 || w > 1u << 20 || c > 1u << 12)
        throw std::runtime_error("GRID header out of range: " + path);
    std::vector<Grid> planes;
    planes.reserve(c);
    for (std::uint32_t k = 0; k < c; ++k) {
        Grid plane(static_cast<int>(h), static_cast<int>(w));
        for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = get_f32le(is);
        planes.push_back(std::move(plane));
    }
    if (!is) throw std::runtime_error("GRID file truncated: " + path);
    return MultiGrid(std::move(planes));
}

Grid load_grid(const std::string& path) {
    MultiGrid g = load_multigrid(path);
    if (g.channels() != 1) throw std::runtime_error("expected 1-channel GRID: " + path);
    return g.plane(0);
}

void save_labelfield(const LabelField& l, int classes, const std::string& path) {
    Grid g(l.height(), l.width());
    for (std::size_t i = 0; i < l.size(); ++i) g[i] = static_cast<double>(l[i]);
    (void)classes;
    save_grid(g, path);
}

LabelField load_labelfield(const std::string& path, int classes) {
    const Grid g = load_grid(path);
    LabelField l(classes, g.height(), g.width());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const int idx = static_cast<int>(std::lround(g[i]));
        if (idx < 0 || idx >= classes)
            throw std::runtime_error("label index out of range in " + path);
        l[i] = idx;
    }
    return l;
}

void save_pgm(const Grid& g, const std::string& path) {
    std::ofstream os = open_out(path);
    os << "P5\n" << g.width() << " " << g.height() << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(g.width()));
    for (int y = 0; y < g.height(); ++y) {
        for (int x = 0; x < g.width(); ++x) {
            const double v = std::clamp(g.at(y, x), 0.0, 1.0);
            row[static_cast<std::size_t>(x)] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

Grid load_pgm(const std::string& path) {
    std::ifstream is = open_in(path);
    std::string magic;
    is >> magic;
    if (magic != "P5") throw std::runtime_error("not a binary PGM (P5): " + path);
    int w = 0, h = 0, maxval = 0;
    is >> w >> h >> maxval;
    if (w <= 0 || h <= 0 || maxval != 255) throw std::runtime_error("unsupported PGM: " + path);
    is.get();  // single whitespace after header
    Grid g(h, w);
    std::vector<unsigned char> row(static_cast<std::size_t>(w));
    for (int y = 0; y < h; ++y) {
        is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        for (int x = 0; x < w; ++x) g.at(y, x) = row[static_cast<std::size_t>(x)] / 255.0;
    }
    if (!is) throw std::runtime_error("PGM truncated: " + path);
    return g;
}

}  // namespace midseg
