#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "spraysim/raster.hpp"

// Netpbm reader/writer. Binary PGM (P5) and PPM (P6) are the native formats;
// the ASCII variants (P2/P3) are accepted on read for convenience.

namespace spraysim {

namespace detail {

inline int pnm_next_token(std::istream& in) {
    // Skips whitespace and '#' comments, returns a non-negative integer.
    for (;;) {
        int c = in.peek();
        if (c == EOF) throw std::runtime_error("netpbm: unexpected end of header");
        if (c == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        if (std::isspace(c)) {
            in.get();
            continue;
        }
        break;
    }
    int value = 0;
    if (!(in >> value) || value < 0) throw std::runtime_error("netpbm: malformed header value");
    return value;
}

inline void pnm_read_header(std::istream& in, const char* magic, int& w, int& h, int& maxval) {
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != magic[0] || m1 != magic[1]) throw std::runtime_error("netpbm: wrong magic");
    w = pnm_next_token(in);
    h = pnm_next_token(in);
    maxval = pnm_next_token(in);
    if (w <= 0 || h <= 0) throw std::runtime_error("netpbm: bad dimensions");
    if (maxval <= 0 || maxval > 255) throw std::runtime_error("netpbm: only 8-bit maxval supported");
    in.get();  // single whitespace before raster data
}

}  // namespace detail

inline void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_ppm(const RgbImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline GrayImage read_pgm_stream(std::istream& in, bool ascii) {
    int w = 0, h = 0, maxval = 0;
    detail::pnm_read_header(in, ascii ? "P2" : "P5", w, h, maxval);
    GrayImage img{w, h, std::vector<uint8_t>(size_t(w) * h)};
    if (ascii) {
        for (auto& px : img.pixels) px = uint8_t(detail::pnm_next_token(in));
    } else {
        in.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
        if (in.gcount() != std::streamsize(img.pixels.size()))
            throw std::runtime_error("netpbm: truncated pixel data");
    }
    return img;
}

inline RgbImage read_ppm_stream(std::istream& in, bool ascii) {
    int w = 0, h = 0, maxval = 0;
    detail::pnm_read_header(in, ascii ? "P3" : "P6", w, h, maxval);
    RgbImage img{w, h, std::vector<uint8_t>(size_t(w) * h * 3)};
    if (ascii) {
        for (auto& px : img.pixels) px = uint8_t(detail::pnm_next_token(in));
    } else {
        in.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
        if (in.gcount() != std::streamsize(img.pixels.size()))
            throw std::runtime_error("netpbm: truncated pixel data");
    }
    return img;
}

enum class PnmKind { Pgm, Ppm };

inline PnmKind sniff_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 == 'P' && (m1 == '2' || m1 == '5')) return PnmKind::Pgm;
    if (m0 == 'P' && (m1 == '3' || m1 == '6')) return PnmKind::Ppm;
    throw std::runtime_error("not a PGM/PPM file: " + path);
}

inline GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    in.seekg(0);
    return read_pgm_stream(in, m1 == '2');
}

inline RgbImage read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    in.seekg(0);
    return read_ppm_stream(in, m1 == '3');
}

}  // namespace spraysim
