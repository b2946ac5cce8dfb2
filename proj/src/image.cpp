#include "ppd/image.hpp"

#include <fstream>
#include <stdexcept>

namespace ppd {
namespace {

// Reads the next whitespace/comment-delimited header token.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw std::runtime_error("unexpected end of PNM header");
    return tok;
}

int parse_positive(const std::string& tok, const char* what) {
    int value = 0;
    for (char ch : tok) {
        if (ch < '0' || ch > '9') throw std::runtime_error(std::string("bad PNM ") + what);
        value = value * 10 + (ch - '0');
        if (value > 1 << 20) throw std::runtime_error(std::string("PNM ") + what + " too large");
    }
    if (value <= 0) throw std::runtime_error(std::string("bad PNM ") + what);
    return value;
}

void read_header(std::istream& in, const char* magic, int& w, int& h) {
    if (next_token(in) != magic)
        throw std::runtime_error(std::string("expected ") + magic + " file");
    w = parse_positive(next_token(in), "width");
    h = parse_positive(next_token(in), "height");
    int maxval = parse_positive(next_token(in), "maxval");
    if (maxval != 255) throw std::runtime_error("only 8-bit PNM supported");
    // The single whitespace byte after maxval was consumed by next_token.
}

}  // namespace

Image read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    int w = 0, h = 0;
    read_header(in, "P6", w, h);
    Image img(w, h);
    in.read(reinterpret_cast<char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.data.size()))
        throw std::runtime_error("truncated PPM: " + path);
    return img;
}

void write_ppm(const std::string& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

Mask read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    int w = 0, h = 0;
    read_header(in, "P5", w, h);
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw std::runtime_error("truncated PGM: " + path);
    Mask mask(w, h);
    for (std::size_t i = 0; i < raw.size(); ++i) mask.data[i] = raw[i] >= 128 ? 1 : 0;
    return mask;
}

void write_pgm(const std::string& path, const Mask& mask) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
    std::vector<std::uint8_t> raw(mask.data.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = mask.data[i] ? 255 : 0;
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace ppd
