#include "regmine/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "regmine/error.hpp"

namespace regmine {

namespace fs = std::filesystem;

RgbImage::RgbImage(const GrayRaster& gray) : RgbImage(gray.width(), gray.height())
{
    for (std::size_t i = 0; i < gray.data().size(); ++i) {
        data[3 * i] = data[3 * i + 1] = data[3 * i + 2] = gray.data()[i];
    }
}

void RgbImage::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b)
{
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
    data[i] = r;
    data[i + 1] = g;
    data[i + 2] = b;
}

namespace {

// Reads one whitespace/comment-delimited token of a PNM header.
int read_header_int(std::istream& in, const fs::path& path)
{
    int c = in.peek();
    while (in && (std::isspace(c) || c == '#')) {
        if (c == '#') {
            std::string comment;
            std::getline(in, comment);
        } else {
            in.get();
        }
        c = in.peek();
    }
    int value = -1;
    if (!(in >> value) || value < 0) throw FormatError("bad PNM header in " + path.string());
    return value;
}

struct FileCloser {
    void operator()(std::FILE* f) const
    {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

GrayRaster read_pgm(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    char magic[2] = {};
    in.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '5') throw FormatError(path.string() + " is not a binary PGM (P5)");
    const int width = read_header_int(in, path);
    const int height = read_header_int(in, path);
    const int maxval = read_header_int(in, path);
    if (maxval <= 0 || maxval > 65535) throw FormatError("bad PGM maxval in " + path.string());
    in.get();  // single whitespace byte before the raster
    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<std::uint8_t> data(n);
    if (maxval < 256) {
        in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n));
        if (in.gcount() != static_cast<std::streamsize>(n)) throw FormatError("truncated PGM " + path.string());
        if (maxval != 255) {
            for (auto& v : data) v = static_cast<std::uint8_t>(std::min(255, v * 255 / maxval));
        }
    } else {
        std::vector<std::uint8_t> wide(2 * n);
        in.read(reinterpret_cast<char*>(wide.data()), static_cast<std::streamsize>(wide.size()));
        if (in.gcount() != static_cast<std::streamsize>(wide.size())) {
            throw FormatError("truncated PGM " + path.string());
        }
        for (std::size_t i = 0; i < n; ++i) {
            const int v = (wide[2 * i] << 8) | wide[2 * i + 1];
            data[i] = static_cast<std::uint8_t>(v * 255 / maxval);
        }
    }
    return GrayRaster(width, height, std::move(data));
}

void write_pgm(const fs::path& path, const GrayRaster& img)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data().data()), static_cast<std::streamsize>(img.data().size()));
    if (!out) throw Error("write failed for " + path.string());
}

std::vector<std::uint8_t> encode_pbm(const BitRaster& img)
{
    const std::string header = "P4\n" + std::to_string(img.width()) + ' ' + std::to_string(img.height()) + '\n';
    const std::size_t stride = (static_cast<std::size_t>(img.width()) + 7) / 8;
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const std::size_t base = out.size();
    out.resize(base + stride * img.height(), 0);
    for (int y = 0; y < img.height(); ++y) {
        auto row = img.row(y);
        std::uint8_t* dst = out.data() + base + stride * y;
        for (int x = 0; x < img.width(); ++x) {
            if (row[x]) dst[x / 8] |= static_cast<std::uint8_t>(0x80u >> (x % 8));
        }
    }
    return out;
}

void write_pbm(const fs::path& path, const BitRaster& img)
{
    const auto bytes = encode_pbm(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

GrayRaster read_png(const fs::path& path)
{
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw Error("cannot open " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error("libpng init failed");
    }
    std::vector<std::uint8_t> pixels;
    int width = 0;
    int height = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("cannot decode PNG " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE) {
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
    png_read_update_info(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    pixels.resize(rowbytes * height);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = pixels.data() + rowbytes * y;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);

    if (rowbytes != static_cast<std::size_t>(width)) throw FormatError("unexpected PNG layout in " + path.string());
    return GrayRaster(width, height, std::move(pixels));
}

void write_png(const fs::path& path, const RgbImage& img)
{
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw Error("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("cannot encode PNG " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y) {
        png_write_row(png, const_cast<png_bytep>(img.data.data() + static_cast<std::size_t>(y) * img.width * 3));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

GrayRaster read_image(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    unsigned char sig[8] = {};
    in.read(reinterpret_cast<char*>(sig), 8);
    in.close();
    if (sig[0] == 'P' && sig[1] == '5') return read_pgm(path);
    if (png_sig_cmp(sig, 0, 8) == 0) return read_png(path);
    throw FormatError("unsupported image format: " + path.string());
}

bool is_page_image(const fs::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".pgm" || ext == ".png";
}

} // namespace regmine
