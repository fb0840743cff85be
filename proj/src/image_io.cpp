#include "edgeloc/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "edgeloc/errors.hpp"

namespace edgeloc {
namespace {

// Reads one PGM header token, skipping whitespace and '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
        } else if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            while ((c = in.peek()) != EOF && !std::isspace(c) && c != '#') {
                tok.push_back(static_cast<char>(in.get()));
            }
            return tok;
        }
    }
    return tok;
}

int parse_dim(const std::string& tok, const std::string& path) {
    try {
        size_t pos = 0;
        long v = std::stol(tok, &pos);
        if (pos != tok.size() || v <= 0 || v > 1 << 20) throw std::invalid_argument(tok);
        return static_cast<int>(v);
    } catch (const std::exception&) {
        fail(ErrorCategory::format, "bad image file: " + path);
    }
}

std::string lower_ext(const std::string& path) {
    size_t dot = path.rfind('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext;
}

}  // namespace

RasterImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::io, "cannot read " + path);
    if (next_token(in) != "P5") fail(ErrorCategory::format, "bad image file: " + path);
    int w = parse_dim(next_token(in), path);
    int h = parse_dim(next_token(in), path);
    if (next_token(in) != "255") fail(ErrorCategory::format, "bad image file: " + path);
    // Exactly one whitespace byte separates the header from the pixel data.
    const int sep = in.get();
    if (sep == EOF || !std::isspace(sep)) fail(ErrorCategory::format, "bad image file: " + path);
    RasterImage img(w, h);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.size()))
        fail(ErrorCategory::format, "bad image file: " + path);
    return img;
}

void write_pgm(const std::string& path, const RasterImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCategory::io, "cannot write " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.size()));
    if (!out) fail(ErrorCategory::io, "cannot write " + path);
}

RasterImage read_png(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) fail(ErrorCategory::io, "cannot read " + path);

    png_byte header[8];
    if (std::fread(header, 1, 8, fp) != 8 || png_sig_cmp(header, 0, 8)) {
        std::fclose(fp);
        fail(ErrorCategory::format, "bad image file: " + path);
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        fail(ErrorCategory::internal, "libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        fail(ErrorCategory::format, "bad image file: " + path);
    }

    png_init_io(png, fp);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    png_byte color = png_get_color_type(png, info);
    png_byte depth = png_get_bit_depth(png, info);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (depth == 16) png_set_strip_16(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
        color == PNG_COLOR_TYPE_PALETTE) {
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
    png_read_update_info(png, info);

    if (w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20)) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        fail(ErrorCategory::format, "bad image file: " + path);
    }

    RasterImage img(static_cast<int>(w), static_cast<int>(h));
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = img.pixels.data() + static_cast<size_t>(y) * w;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

RasterImage read_raster(const std::string& path) {
    std::string ext = lower_ext(path);
    if (ext == "pgm") return read_pgm(path);
    if (ext == "png") return read_png(path);
    fail(ErrorCategory::format, "unsupported raster format: " + path);
}

GeoTransform read_world_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::io, "cannot read " + path);
    GeoTransform gt;
    double row_sign = 0.0;
    if (!(in >> gt.resolution >> gt.origin_easting >> gt.origin_northing >> row_sign))
        fail(ErrorCategory::format, "bad world file: " + path);
    if (gt.resolution <= 0.0) fail(ErrorCategory::format, "bad world file: resolution must be > 0");
    if (row_sign != -1.0)
        fail(ErrorCategory::format, "bad world file: row sign must be -1 (north-up)");
    return gt;
}

void write_world_file(const std::string& path, const GeoTransform& gt) {
    std::ofstream out(path);
    if (!out) fail(ErrorCategory::io, "cannot write " + path);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.10g\n%.10g\n%.10g\n-1\n", gt.resolution, gt.origin_easting,
                  gt.origin_northing);
    out << buf;
}

std::string world_file_path(const std::string& raster_path) {
    size_t dot = raster_path.rfind('.');
    size_t slash = raster_path.find_last_of("/\\");
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return raster_path + ".wld";
    return raster_path.substr(0, dot) + ".wld";
}

GeoreferencedImage read_georeferenced(const std::string& path) {
    return {read_raster(path), read_world_file(world_file_path(path))};
}

void write_georeferenced(const std::string& path, const RasterImage& img, const GeoTransform& gt) {
    write_pgm(path, img);
    write_world_file(world_file_path(path), gt);
}

}  // namespace edgeloc
