#include "thermopol/pfm.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace thermopol {

namespace {

std::string read_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF && std::isspace(ch)) {
    }
    while (ch != EOF && !std::isspace(ch)) {
        tok.push_back(static_cast<char>(ch));
        ch = in.get();
    }
    // Consumes exactly one trailing whitespace byte, so after the scale token
    // the stream sits at the first payload byte.
    return tok;
}

std::uint32_t byteswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

int parse_int(const std::string& tok, const char* what) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used == tok.size() && v > 0) return v;
    } catch (const std::exception&) {
    }
    throw PfmError(std::string("PFM: bad ") + what + " '" + tok + "'");
}

}  // namespace

void pfm_write(const Image& image, std::ostream& out) {
    if (image.channels() != 1 && image.channels() != 3) {
        throw PfmError("PFM: only 1- or 3-channel images, got " + std::to_string(image.channels()));
    }
    out << (image.channels() == 3 ? "PF" : "Pf") << '\n' << image.width() << ' ' << image.height() << '\n' << "-1.0\n";
    const int w = image.width(), c = image.channels();
    std::vector<float> row(static_cast<std::size_t>(w) * c);
    for (int y = image.height() - 1; y >= 0; --y) {
        for (int x = 0; x < w; ++x) {
            for (int k = 0; k < c; ++k) {
                const double v = image.at(x, y, k);
                if (!std::isfinite(v)) throw PfmError("PFM: non-finite pixel value");
                row[static_cast<std::size_t>(x) * c + k] = static_cast<float>(v);
            }
        }
        if constexpr (std::endian::native == std::endian::big) {
            for (auto& f : row) f = std::bit_cast<float>(byteswap32(std::bit_cast<std::uint32_t>(f)));
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) throw PfmError("PFM: write failed");
}

void pfm_write(const Image& image, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PfmError("PFM: cannot open '" + path + "' for writing");
    pfm_write(image, out);
}

Image pfm_read(std::istream& in) {
    const std::string magic = read_token(in);
    int channels = 0;
    if (magic == "PF") {
        channels = 3;
    } else if (magic == "Pf") {
        channels = 1;
    } else {
        throw PfmError("PFM: bad magic token '" + magic + "' (expected PF or Pf)");
    }
    const int w = parse_int(read_token(in), "width");
    const int h = parse_int(read_token(in), "height");
    const std::string scale_tok = read_token(in);
    double scale = 0.0;
    try {
        scale = std::stod(scale_tok);
    } catch (const std::exception&) {
        throw PfmError("PFM: bad scale '" + scale_tok + "'");
    }
    if (scale == 0.0 || !std::isfinite(scale)) throw PfmError("PFM: bad scale '" + scale_tok + "'");
    const bool file_little = scale < 0.0;
    const bool swap = file_little != (std::endian::native == std::endian::little);

    Image img(w, h, channels);
    std::vector<std::uint32_t> row(static_cast<std::size_t>(w) * channels);
    for (int y = h - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(std::uint32_t)));
        if (in.gcount() != static_cast<std::streamsize>(row.size() * sizeof(std::uint32_t))) {
            throw PfmError("PFM: truncated payload (expected " + std::to_string(w) + "x" + std::to_string(h) + "x" +
                           std::to_string(channels) + " floats)");
        }
        for (int x = 0; x < w; ++x) {
            for (int k = 0; k < channels; ++k) {
                std::uint32_t bits = row[static_cast<std::size_t>(x) * channels + k];
                if (swap) bits = byteswap32(bits);
                img.at(x, y, k) = static_cast<double>(std::bit_cast<float>(bits));
            }
        }
    }
    return img;
}

Image pfm_read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PfmError("PFM: cannot open '" + path + "'");
    return pfm_read(in);
}

}  // namespace thermopol
