#include "mods/image_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include <jpeglib.h>
#include <png.h>

namespace mods {

namespace {

using FilePtr = std::unique_ptr<std::FILE, decltype(&std::fclose)>;

FilePtr open_file(const std::filesystem::path& path, const char* mode)
{
    FilePtr f(std::fopen(path.c_str(), mode), &std::fclose);
    if (!f)
        throw ImageIoError("cannot open " + path.string());
    return f;
}

std::uint8_t to_byte(float v)
{
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

RawRaster read_png_file(const std::filesystem::path& path)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw ImageIoError("PNG decode failed for " + path.string() + ": " + image.message);

    const bool sixteen = (image.format & PNG_FORMAT_FLAG_LINEAR) != 0 || PNG_IMAGE_SAMPLE_COMPONENT_SIZE(image.format) == 2;
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    const bool alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
    RawRaster raw;
    raw.width = static_cast<int>(image.width);
    raw.height = static_cast<int>(image.height);
    raw.channels = color ? (alpha ? 4 : 3) : 1;
    // Gray+alpha is read as gray; alpha is not used for luminance.
    if (sixteen) {
        image.format = color ? (alpha ? PNG_FORMAT_LINEAR_RGB_ALPHA : PNG_FORMAT_LINEAR_RGB) : PNG_FORMAT_LINEAR_Y;
        std::vector<std::uint16_t> buf(PNG_IMAGE_SIZE(image) / 2);
        if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr))
            throw ImageIoError("PNG decode failed for " + path.string() + ": " + image.message);
        raw.samples = std::move(buf);
    } else {
        image.format = color ? (alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB) : PNG_FORMAT_GRAY;
        std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
        if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr))
            throw ImageIoError("PNG decode failed for " + path.string() + ": " + image.message);
        raw.samples = std::move(buf);
    }
    return raw;
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr info)
{
    auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
    (*info->err->format_message)(info, err->message);
    std::longjmp(err->jump, 1);
}

RawRaster read_jpeg_file(const std::filesystem::path& path)
{
    FilePtr f = open_file(path, "rb");
    jpeg_decompress_struct cinfo{};
    JpegErrorManager jerr{};
    cinfo.err = jpeg_std_error(&jerr.base);
    jerr.base.error_exit = jpeg_error_exit;
    RawRaster raw;
    std::vector<std::uint8_t> buf;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw ImageIoError("JPEG decode failed for " + path.string() + ": " + jerr.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f.get());
    jpeg_read_header(&cinfo, TRUE);
    if (cinfo.jpeg_color_space != JCS_GRAYSCALE)
        cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    raw.width = static_cast<int>(cinfo.output_width);
    raw.height = static_cast<int>(cinfo.output_height);
    raw.channels = cinfo.output_components;
    buf.resize(static_cast<std::size_t>(raw.width) * raw.height * raw.channels);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = buf.data() + static_cast<std::size_t>(cinfo.output_scanline) * raw.width * raw.channels;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    raw.samples = std::move(buf);
    return raw;
}

// Reads the next whitespace-separated PGM header token, skipping comments.
long pgm_token(std::istream& in)
{
    std::string tok;
    while (in) {
        int c = in.get();
        if (c == '#') {
            while (in && c != '\n')
                c = in.get();
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty())
                break;
            continue;
        }
        if (c == EOF)
            break;
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), ::isdigit))
        throw ImageIoError("malformed PGM header");
    return std::stol(tok);
}

RawRaster read_pgm_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ImageIoError("cannot open " + path.string());
    char magic[2];
    in.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '5')
        throw ImageIoError("not a binary PGM: " + path.string());
    RawRaster raw;
    raw.width = static_cast<int>(pgm_token(in));
    raw.height = static_cast<int>(pgm_token(in));
    const long maxval = pgm_token(in);
    if (raw.width <= 0 || raw.height <= 0 || maxval <= 0 || maxval > 65535)
        throw ImageIoError("malformed PGM header in " + path.string());
    const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height;
    if (maxval < 256) {
        std::vector<std::uint8_t> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
        if (!in)
            throw ImageIoError("truncated PGM: " + path.string());
        if (maxval != 255)
            for (auto& v : buf)
                v = static_cast<std::uint8_t>(std::min<long>(255, v * 255 / maxval));
        raw.samples = std::move(buf);
    } else {
        std::vector<std::uint8_t> bytes(2 * n);
        in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(2 * n));
        if (!in)
            throw ImageIoError("truncated PGM: " + path.string());
        std::vector<std::uint16_t> buf(n);
        for (std::size_t i = 0; i < n; ++i) {
            const long v = (bytes[2 * i] << 8) | bytes[2 * i + 1];
            buf[i] = static_cast<std::uint16_t>(std::min<long>(65535, v * 65535 / maxval));
        }
        raw.samples = std::move(buf);
    }
    return raw;
}

}  // namespace

RawRaster read_raster(const std::filesystem::path& path)
{
    std::array<unsigned char, 8> head{};
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw ImageIoError("cannot open " + path.string());
        in.read(reinterpret_cast<char*>(head.data()), head.size());
        if (in.gcount() < 2)
            throw ImageIoError("file too short: " + path.string());
    }
    if (head[0] == 0x89 && head[1] == 'P' && head[2] == 'N' && head[3] == 'G')
        return read_png_file(path);
    if (head[0] == 0xFF && head[1] == 0xD8)
        return read_jpeg_file(path);
    if (head[0] == 'P' && head[1] == '5')
        return read_pgm_file(path);
    throw ImageIoError("unsupported image format: " + path.string());
}

Image read_image(const std::filesystem::path& path)
{
    return to_grayscale(read_raster(path));
}

void write_png(const std::filesystem::path& path, const Image& img)
{
    std::vector<std::uint8_t> bytes(img.size());
    std::transform(img.data().begin(), img.data().end(), bytes.begin(), to_byte);
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr))
        throw ImageIoError("PNG encode failed for " + path.string() + ": " + image.message);
}

void write_png(const std::filesystem::path& path, const RgbImage& img)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, img.data.data(), 0, nullptr))
        throw ImageIoError("PNG encode failed for " + path.string() + ": " + image.message);
}

void write_pgm(const std::filesystem::path& path, const Image& img)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ImageIoError("cannot write " + path.string());
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    for (float v : img.data())
        out.put(static_cast<char>(to_byte(v)));
    if (!out)
        throw ImageIoError("write failed: " + path.string());
}

}  // namespace mods
