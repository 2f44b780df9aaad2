#include "longrad/png_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <zlib.h>

namespace longrad {

namespace {

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4],
               const std::uint8_t* data, std::size_t len) {
    put_u32_be(out, static_cast<std::uint32_t>(len));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    if (len) out.insert(out.end(), data, data + len);
    const auto crc = crc32(0L, out.data() + crc_start, static_cast<uInt>(4 + len));
    put_u32_be(out, static_cast<std::uint32_t>(crc));
}

} // namespace

void write_gray_png(const std::filesystem::path& path, const std::uint8_t* pixels,
                    int width, int height) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("write_gray_png: nonpositive dimensions");

    // Filter byte 0 before every scanline.
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(height) * (width + 1));
    for (int y = 0; y < height; ++y) {
        raw[static_cast<std::size_t>(y) * (width + 1)] = 0;
        std::memcpy(raw.data() + static_cast<std::size_t>(y) * (width + 1) + 1,
                    pixels + static_cast<std::size_t>(y) * width, static_cast<std::size_t>(width));
    }

    uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> comp(comp_len);
    if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw std::runtime_error("write_gray_png: deflate failed");
    comp.resize(comp_len);

    std::vector<std::uint8_t> png;
    const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    png.insert(png.end(), sig, sig + 8);

    std::uint8_t ihdr[13];
    ihdr[0] = static_cast<std::uint8_t>(width >> 24);
    ihdr[1] = static_cast<std::uint8_t>(width >> 16);
    ihdr[2] = static_cast<std::uint8_t>(width >> 8);
    ihdr[3] = static_cast<std::uint8_t>(width);
    ihdr[4] = static_cast<std::uint8_t>(height >> 24);
    ihdr[5] = static_cast<std::uint8_t>(height >> 16);
    ihdr[6] = static_cast<std::uint8_t>(height >> 8);
    ihdr[7] = static_cast<std::uint8_t>(height);
    ihdr[8] = 8;  // bit depth
    ihdr[9] = 0;  // grayscale
    ihdr[10] = ihdr[11] = ihdr[12] = 0;
    put_chunk(png, "IHDR", ihdr, sizeof(ihdr));
    put_chunk(png, "IDAT", comp.data(), comp.size());
    put_chunk(png, "IEND", nullptr, 0);

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_gray_png: cannot open " + path.string());
    os.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
    if (!os) throw std::runtime_error("write_gray_png: write failed " + path.string());
}

} // namespace longrad
