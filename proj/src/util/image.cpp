#include "cartoforge/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>

#include <jpeglib.h>
#include <png.h>

#include "cartoforge/error.hpp"

namespace cartoforge {

Image::Image(int width, int height, Rgba fill) : width_(width), height_(height) {
    if (width < 0 || height < 0) {
        throw Error(ErrorKind::InvalidArgument, "negative image dimensions");
    }
    data_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 4);
    for (std::size_t i = 0; i < data_.size(); i += 4) {
        data_[i] = fill.r;
        data_[i + 1] = fill.g;
        data_[i + 2] = fill.b;
        data_[i + 3] = fill.a;
    }
}

namespace {

bool is_png(std::span<const std::uint8_t> bytes) {
    static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    return bytes.size() >= 8 && std::memcmp(bytes.data(), sig, 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
        throw Error(ErrorKind::UndecodableImage, std::string("png: ") + img.message);
    }
    img.format = PNG_FORMAT_RGBA;
    if (img.width == 0 || img.height == 0 || img.width > 16384 || img.height > 16384) {
        png_image_free(&img);
        throw Error(ErrorKind::UndecodableImage, "png: unsupported dimensions");
    }
    Image out(static_cast<int>(img.width), static_cast<int>(img.height));
    if (!png_image_finish_read(&img, nullptr, out.bytes().data(), 0, nullptr)) {
        std::string msg = img.message;
        png_image_free(&img);
        throw Error(ErrorKind::UndecodableImage, "png: " + msg);
    }
    return out;
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    std::longjmp(mgr->jump, 1);
}

Image decode_jpeg(std::span<const std::uint8_t> bytes) {
    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    // Only POD state lives across the setjmp boundary.
    std::vector<std::uint8_t> rgb;
    int width = 0;
    int height = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw Error(ErrorKind::UndecodableImage, "jpeg: corrupt data");
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    width = static_cast<int>(cinfo.output_width);
    height = static_cast<int>(cinfo.output_height);
    rgb.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = &rgb[static_cast<std::size_t>(cinfo.output_scanline) * static_cast<std::size_t>(width) * 3];
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);

    Image out(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const std::size_t i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
            out.set(x, y, {rgb[i], rgb[i + 1], rgb[i + 2], 255});
        }
    }
    return out;
}

}  // namespace

Image decode_image(std::span<const std::uint8_t> encoded) {
    if (is_png(encoded)) {
        return decode_png(encoded);
    }
    if (is_jpeg(encoded)) {
        return decode_jpeg(encoded);
    }
    throw Error(ErrorKind::UndecodableImage, "unrecognized image format");
}

util::Bytes encode_png(const Image& image) {
    if (image.empty()) {
        throw Error(ErrorKind::InvalidArgument, "cannot encode an empty image");
    }
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width());
    img.height = static_cast<png_uint_32>(image.height());
    img.format = PNG_FORMAT_RGBA;
    png_alloc_size_t size = 0;
    if (!png_image_write_get_memory_size(img, size, 0, image.bytes().data(), 0, nullptr)) {
        throw Error(ErrorKind::IoError, std::string("png encode: ") + img.message);
    }
    util::Bytes out(size);
    if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.bytes().data(), 0, nullptr)) {
        throw Error(ErrorKind::IoError, std::string("png encode: ") + img.message);
    }
    out.resize(size);
    return out;
}

Image resample(const Image& src, int width, int height) {
    if (width <= 0 || height <= 0) {
        throw Error(ErrorKind::InvalidArgument, "resample target must be positive");
    }
    if (src.empty()) {
        throw Error(ErrorKind::InvalidArgument, "resample source is empty");
    }
    if (src.width() == width && src.height() == height) {
        return src;
    }
    const double sx = static_cast<double>(src.width()) / width;
    const double sy = static_cast<double>(src.height()) / height;
    Image out(width, height);
    for (int y = 0; y < height; ++y) {
        const double y0 = y * sy;
        const double y1 = y0 + sy;
        for (int x = 0; x < width; ++x) {
            const double x0 = x * sx;
            const double x1 = x0 + sx;
            double acc[4] = {0, 0, 0, 0};
            double area = 0;
            for (int iy = static_cast<int>(std::floor(y0)); iy < static_cast<int>(std::ceil(y1)) && iy < src.height(); ++iy) {
                const double wy = std::min<double>(iy + 1, y1) - std::max<double>(iy, y0);
                if (wy <= 0) continue;
                for (int ix = static_cast<int>(std::floor(x0)); ix < static_cast<int>(std::ceil(x1)) && ix < src.width(); ++ix) {
                    const double wx = std::min<double>(ix + 1, x1) - std::max<double>(ix, x0);
                    if (wx <= 0) continue;
                    const double w = wx * wy;
                    const Rgba c = src.at(ix, iy);
                    const double a = c.a / 255.0;
                    acc[0] += w * c.r * a;
                    acc[1] += w * c.g * a;
                    acc[2] += w * c.b * a;
                    acc[3] += w * a;
                    area += w;
                }
            }
            Rgba o{0, 0, 0, 0};
            if (area > 0 && acc[3] > 0) {
                const double alpha = acc[3] / area;
                auto channel = [&](double v) {
                    return static_cast<std::uint8_t>(std::clamp(std::lround(v / acc[3]), 0L, 255L));
                };
                o = {channel(acc[0]), channel(acc[1]), channel(acc[2]),
                     static_cast<std::uint8_t>(std::clamp(std::lround(alpha * 255.0), 0L, 255L))};
            }
            out.set(x, y, o);
        }
    }
    return out;
}

Image fit_within(const Image& src, int max_edge) {
    const int longest = std::max(src.width(), src.height());
    if (max_edge <= 0 || longest <= max_edge) {
        return src;
    }
    const double scale = static_cast<double>(max_edge) / longest;
    const int w = std::max(1, static_cast<int>(std::lround(src.width() * scale)));
    const int h = std::max(1, static_cast<int>(std::lround(src.height() * scale)));
    return resample(src, w, h);
}

}  // namespace cartoforge
