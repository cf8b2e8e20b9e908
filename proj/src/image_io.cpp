#include "gradsal/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "gradsal/error.hpp"

namespace gradsal {
namespace {

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

bool is_pnm(const std::string& ext) { return ext == ".pgm" || ext == ".ppm" || ext == ".pnm"; }

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngErrorState {
    char message[256] = {};
};

void png_error_handler(png_structp png, png_const_charp msg) {
    auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
    if (state) std::snprintf(state->message, sizeof state->message, "%s", msg);
    png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

// Everything with a destructor is created by the caller, so the longjmp out
// of libpng never skips one.
bool png_decode(std::FILE* fp, Raster& out, std::vector<png_bytep>& rows,
                std::vector<std::uint8_t>& buffer, PngErrorState& err) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_handler,
                                             png_warning_handler);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    out.width = png_get_image_width(png, info);
    out.height = png_get_image_height(png, info);
    out.channels = png_get_channels(png, info);
    out.bit_depth = png_get_bit_depth(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    buffer.resize(stride * out.height);
    rows.resize(out.height);
    for (std::size_t y = 0; y < out.height; ++y) rows[y] = buffer.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

bool png_encode(std::FILE* fp, const Raster& in, std::vector<png_bytep>& rows,
                std::vector<std::uint8_t>& buffer, PngErrorState& err) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_handler,
                                              png_warning_handler);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(in.width), static_cast<png_uint_32>(in.height),
                 in.bit_depth, in.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t bytes = in.bit_depth == 16 ? 2 : 1;
    const std::size_t stride = in.width * in.channels * bytes;
    buffer.resize(stride * in.height);
    for (std::size_t i = 0; i < in.samples.size(); ++i) {
        if (bytes == 2) {
            buffer[2 * i] = static_cast<std::uint8_t>(in.samples[i] >> 8);
            buffer[2 * i + 1] = static_cast<std::uint8_t>(in.samples[i] & 0xff);
        } else {
            buffer[i] = static_cast<std::uint8_t>(in.samples[i]);
        }
    }
    rows.resize(in.height);
    for (std::size_t y = 0; y < in.height; ++y) rows[y] = buffer.data() + y * stride;
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

Raster read_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw DataError("cannot open " + path.string());
    Raster out;
    std::vector<png_bytep> rows;
    std::vector<std::uint8_t> buffer;
    PngErrorState err;
    if (!png_decode(fp.get(), out, rows, buffer, err)) {
        throw DataError("cannot decode PNG " + path.string() + ": " + err.message);
    }
    out.samples.resize(out.width * out.height * out.channels);
    if (out.bit_depth == 16) {
        for (std::size_t i = 0; i < out.samples.size(); ++i) {
            out.samples[i] = static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]);
        }
    } else {
        std::copy(buffer.begin(), buffer.begin() + static_cast<long>(out.samples.size()),
                  out.samples.begin());
    }
    return out;
}

void write_png(const Raster& raster, const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw DataError("cannot open " + path.string() + " for writing");
    std::vector<png_bytep> rows;
    std::vector<std::uint8_t> buffer;
    PngErrorState err;
    if (!png_encode(fp.get(), raster, rows, buffer, err)) {
        throw DataError("cannot encode PNG " + path.string() + ": " + err.message);
    }
}

// Reads the next header token, skipping whitespace and '#' comments.
std::string pnm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

std::size_t pnm_number(std::istream& in, const std::filesystem::path& path) {
    const std::string tok = pnm_token(in);
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char ch) { return std::isdigit(ch); })) {
        throw DataError("malformed PNM header in " + path.string());
    }
    return std::stoul(tok);
}

Raster read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    const std::string magic = pnm_token(in);
    if (magic != "P5" && magic != "P6") {
        throw DataError(path.string() + ": only binary PGM (P5) and PPM (P6) are supported");
    }
    Raster out;
    out.channels = magic == "P5" ? 1 : 3;
    out.width = pnm_number(in, path);
    out.height = pnm_number(in, path);
    const std::size_t maxval = pnm_number(in, path);
    if (out.width == 0 || out.height == 0 || maxval == 0 || maxval > 65535) {
        throw DataError("malformed PNM header in " + path.string());
    }
    out.bit_depth = maxval > 255 ? 16 : 8;
    const std::size_t count = out.width * out.height * out.channels;
    const std::size_t bytes = maxval > 255 ? 2 : 1;
    std::vector<std::uint8_t> raw(count * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw DataError("PNM file " + path.string() + " is truncated");
    }
    out.samples.resize(count);
    const std::size_t full = out.bit_depth == 16 ? 65535 : 255;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t v = bytes == 2 ? (static_cast<std::size_t>(raw[2 * i]) << 8) | raw[2 * i + 1]
                                         : raw[i];
        if (v > maxval) throw DataError("PNM sample exceeds maxval in " + path.string());
        // Rescale nonstandard maxvals onto the full 8/16-bit range.
        out.samples[i] = static_cast<std::uint16_t>(
            maxval == full ? v : static_cast<std::size_t>(std::lround(static_cast<double>(v) * full / maxval)));
    }
    return out;
}

void write_pnm(const Raster& raster, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << (raster.channels == 1 ? "P5" : "P6") << '\n'
        << raster.width << ' ' << raster.height << '\n'
        << raster.max_value() << '\n';
    for (std::uint16_t v : raster.samples) {
        if (raster.bit_depth == 16) out.put(static_cast<char>(v >> 8));
        out.put(static_cast<char>(v & 0xff));
    }
    if (!out) throw DataError("failed writing " + path.string());
}

void check_raster(const Raster& r) {
    if ((r.channels != 1 && r.channels != 3) || (r.bit_depth != 8 && r.bit_depth != 16) ||
        r.samples.size() != r.width * r.height * r.channels || r.samples.empty()) {
        throw DataError("invalid raster for writing");
    }
}

}  // namespace

std::uint8_t quantize8(double v) {
    return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
}

bool is_image_file(const std::filesystem::path& path) {
    const std::string ext = lower_extension(path);
    return ext == ".png" || is_pnm(ext);
}

Raster read_raster(const std::filesystem::path& path) {
    const std::string ext = lower_extension(path);
    if (ext == ".png") return read_png(path);
    if (is_pnm(ext)) return read_pnm(path);
    throw DataError("unsupported image format: " + path.string());
}

void write_raster(const Raster& raster, const std::filesystem::path& path) {
    check_raster(raster);
    const std::string ext = lower_extension(path);
    if (ext == ".png") return write_png(raster, path);
    if (is_pnm(ext)) {
        if (ext == ".pgm" && raster.channels != 1) throw DataError("PGM output must be gray");
        if (ext == ".ppm" && raster.channels != 3) throw DataError("PPM output must be RGB");
        return write_pnm(raster, path);
    }
    throw DataError("unsupported image format: " + path.string());
}

ImageRGB read_rgb(const std::filesystem::path& path) {
    const Raster r = read_raster(path);
    ImageRGB img = make_image(r.height, r.width);
    const double full = r.max_value();
    for (std::size_t y = 0; y < r.height; ++y) {
        for (std::size_t x = 0; x < r.width; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                const std::size_t src = (y * r.width + x) * r.channels + (r.channels == 3 ? c : 0);
                img.at(c, y, x) = r.samples[src] / full;
            }
        }
    }
    return img;
}

Map read_gray(const std::filesystem::path& path) {
    const Raster r = read_raster(path);
    Map m(r.height, r.width);
    const double full = r.max_value();
    for (std::size_t p = 0; p < m.size(); ++p) {
        if (r.channels == 1) {
            m.values[p] = r.samples[p] / full;
        } else {
            double sum = 0.0;
            for (std::size_t c = 0; c < 3; ++c) sum += r.samples[p * 3 + c];
            m.values[p] = sum / (3.0 * full);
        }
    }
    return m;
}

Mask read_mask(const std::filesystem::path& path) {
    const Map gray = read_gray(path);
    Mask mask(gray.height, gray.width);
    for (std::size_t p = 0; p < gray.size(); ++p) {
        mask.values[p] = std::lround(gray.values[p] * 255.0) > 127 ? 1 : 0;
    }
    return mask;
}

void write_gray8(const Map& map, const std::filesystem::path& path) {
    Raster r{map.width, map.height, 1, 8, {}};
    r.samples.resize(map.size());
    for (std::size_t p = 0; p < map.size(); ++p) r.samples[p] = quantize8(map.values[p]);
    write_raster(r, path);
}

void write_rgb8(const ImageRGB& image, const std::filesystem::path& path) {
    require_image(image, "write_rgb8");
    Raster r{image.dim(2), image.dim(1), 3, 8, {}};
    r.samples.resize(image.size());
    for (std::size_t y = 0; y < r.height; ++y) {
        for (std::size_t x = 0; x < r.width; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                r.samples[(y * r.width + x) * 3 + c] = quantize8(image.at(c, y, x));
            }
        }
    }
    write_raster(r, path);
}

void write_mask(const Mask& mask, const std::filesystem::path& path) {
    Raster r{mask.width, mask.height, 1, 8, {}};
    r.samples.resize(mask.size());
    for (std::size_t p = 0; p < mask.size(); ++p) r.samples[p] = mask.values[p] ? 255 : 0;
    write_raster(r, path);
}

void write_labels16(const SuperpixelMap& sp, const std::filesystem::path& path) {
    if (sp.count() > 65536) throw DataError("too many superpixels for a 16-bit label image");
    Raster r{sp.width, sp.height, 1, 16, {}};
    r.samples.assign(sp.labels.begin(), sp.labels.end());
    write_raster(r, path);
}

}  // namespace gradsal
