#pragma once

// On-disk formats: tensor files, PNG images, label maps, checkpoints, CSV
// rows, and the JSON (de)serialization of train configs.
//
// Tensor file layout: one JSON header line terminated by '\n' --
//   {"magic":"SCTR1","dtype":"f32","shape":[I1,I2,I3],"peak":P,"bands":[...]}
// followed by 4*I1*I2*I3 bytes of IEEE-754 binary32 little-endian payload in
// tensor memory order ((i*I2+j)*I3+k). "bands" is optional. Values are
// widened to double on load; a file loaded and saved again is byte-identical.
//
// Importing third-party arrays amounts to emitting that header plus the raw
// float32 payload, e.g. from Python:
//   hdr = json.dumps({"magic":"SCTR1","dtype":"f32","shape":list(a.shape),
//                     "peak":1.0}) + "\n"
//   open(p,"wb").write(hdr.encode()); a.astype("<f4").tofile(open(p,"ab"))

#include <algorithm>
#include <bit>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <png.h>

#include "sctr/autodiff.hpp"
#include "sctr/common.hpp"
#include "sctr/metrics.hpp"
#include "sctr/superpixel.hpp"
#include "sctr/tensor.hpp"
#include "sctr/trainer.hpp"

namespace sctr {

using json = nlohmann::json;

struct TensorData {
    DenseTensor3<double> data;
    double peak = 1.0;
    std::vector<std::string> bands;
};

enum class ImageKind { png8, tensor_file };

namespace detail {

inline void byteswap_inplace(std::vector<uint32_t>& words) {
    for (auto& w : words)
        w = ((w & 0xff000000u) >> 24) | ((w & 0x00ff0000u) >> 8) |
            ((w & 0x0000ff00u) << 8) | ((w & 0x000000ffu) << 24);
}

inline std::string read_header_line(std::ifstream& in, const std::string& path,
                                    std::size_t max_len = 1 << 16) {
    std::string line;
    line.reserve(256);
    char c;
    while (line.size() < max_len && in.get(c)) {
        if (c == '\n') return line;
        line.push_back(c);
    }
    throw FormatError(path + ": header line missing newline terminator", line.size());
}

inline json parse_header_json(const std::string& line, const std::string& path) {
    json h = json::parse(line, nullptr, false);
    if (h.is_discarded() || !h.is_object())
        throw FormatError(path + ": header is not a JSON object", 0);
    return h;
}

} // namespace detail

inline void save_tensor(const std::string& path, const DenseTensor3<double>& t,
                        double peak = 1.0, const std::vector<std::string>& bands = {}) {
    if (!bands.empty() && static_cast<int>(bands.size()) != t.i3)
        throw ArgumentError("save_tensor: band name count does not match axis 3");
    json h = {{"magic", "SCTR1"},
              {"dtype", "f32"},
              {"shape", {t.i1, t.i2, t.i3}},
              {"peak", peak}};
    if (!bands.empty()) h["bands"] = bands;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(path + ": cannot open for writing", 0);
    out << h.dump() << '\n';
    std::vector<uint32_t> words(t.size());
    for (std::size_t n = 0; n < t.size(); ++n) {
        const float f = static_cast<float>(t.data[n]);
        std::memcpy(&words[n], &f, 4);
    }
    if constexpr (std::endian::native == std::endian::big) detail::byteswap_inplace(words);
    out.write(reinterpret_cast<const char*>(words.data()),
              static_cast<std::streamsize>(4 * words.size()));
    if (!out) throw FormatError(path + ": short write", 0);
}

inline TensorData load_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open", 0);
    const std::string line = detail::read_header_line(in, path);
    const std::size_t payload_off = line.size() + 1;
    json h = detail::parse_header_json(line, path);
    if (h.value("magic", "") != std::string("SCTR1"))
        throw FormatError(path + ": bad magic", 0);
    if (h.value("dtype", "") != std::string("f32"))
        throw FormatError(path + ": unsupported dtype", 0);
    if (!h.contains("shape") || !h["shape"].is_array() || h["shape"].size() != 3)
        throw FormatError(path + ": shape must be a 3-element array", 0);
    const int i1 = h["shape"][0].get<int>();
    const int i2 = h["shape"][1].get<int>();
    const int i3 = h["shape"][2].get<int>();
    if (i1 <= 0 || i2 <= 0 || i3 <= 0)
        throw FormatError(path + ": non-positive dimension in shape", 0);
    TensorData td;
    td.peak = h.value("peak", 1.0);
    if (h.contains("bands")) {
        td.bands = h["bands"].get<std::vector<std::string>>();
        if (static_cast<int>(td.bands.size()) != i3)
            throw FormatError(path + ": band name count does not match axis 3", 0);
    }
    td.data = DenseTensor3<double>(i1, i2, i3);
    std::vector<uint32_t> words(td.data.size());
    in.read(reinterpret_cast<char*>(words.data()),
            static_cast<std::streamsize>(4 * words.size()));
    const std::size_t got = static_cast<std::size_t>(in.gcount());
    if (got != 4 * words.size())
        throw FormatError(path + ": payload truncated", payload_off + got);
    char extra;
    if (in.get(extra))
        throw FormatError(path + ": trailing bytes after payload",
                          payload_off + 4 * words.size());
    if constexpr (std::endian::native == std::endian::big) detail::byteswap_inplace(words);
    for (std::size_t n = 0; n < words.size(); ++n) {
        float f;
        std::memcpy(&f, &words[n], 4);
        td.data.data[n] = static_cast<double>(f);
    }
    return td;
}

// ---------------------------------------------------------------------------
// PNG

struct PngMeta {
    int rows = 0, cols = 0;
    int channels = 0;  // after decode: 1 (gray) or 3 (rgb)
    int bit_depth = 0; // as stored in the file
};

namespace detail {

struct PngReader {
    FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWriter {
    FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

// Decodes to 8 or 16 bit gray/rgb rows. All C++ allocation happens before the
// setjmp so a libpng longjmp never skips live destructors in this frame.
inline void png_decode(const std::string& path, PngReader& r,
                       std::vector<std::vector<png_byte>>& rows, PngMeta& meta,
                       bool keep_16bit) {
    r.fp = std::fopen(path.c_str(), "rb");
    if (!r.fp) throw FormatError(path + ": cannot open", 0);
    png_byte sig[8];
    if (std::fread(sig, 1, 8, r.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw FormatError(path + ": not a PNG file", 0);
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!r.png) throw FormatError(path + ": png reader init failed", 0);
    r.info = png_create_info_struct(r.png);
    if (!r.info) throw FormatError(path + ": png info init failed", 0);

    if (setjmp(png_jmpbuf(r.png))) throw FormatError(path + ": corrupt PNG data", 8);
    png_init_io(r.png, r.fp);
    png_set_sig_bytes(r.png, 8);
    png_read_info(r.png, r.info);

    meta.cols = static_cast<int>(png_get_image_width(r.png, r.info));
    meta.rows = static_cast<int>(png_get_image_height(r.png, r.info));
    meta.bit_depth = png_get_bit_depth(r.png, r.info);
    const png_byte color = png_get_color_type(r.png, r.info);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
    if (color == PNG_COLOR_TYPE_GRAY && meta.bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(r.png);
    if (png_get_valid(r.png, r.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(r.png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(r.png);
    if (meta.bit_depth == 16) {
        if (!keep_16bit) png_set_strip_16(r.png);
#ifdef PNG_READ_SWAP_SUPPORTED
        else if constexpr (std::endian::native == std::endian::little)
            png_set_swap(r.png); // PNG stores 16-bit samples big-endian
#endif
    }
    png_read_update_info(r.png, r.info);

    const int out_depth = png_get_bit_depth(r.png, r.info);
    const int ch = png_get_channels(r.png, r.info);
    if (ch != 1 && ch != 3)
        throw FormatError(path + ": unsupported channel count after decode", 8);
    meta.channels = ch;
    const std::size_t rowbytes = png_get_rowbytes(r.png, r.info);
    if (rowbytes != static_cast<std::size_t>(meta.cols) * ch * (out_depth / 8))
        throw FormatError(path + ": unexpected row size", 8);

    rows.assign(static_cast<std::size_t>(meta.rows), std::vector<png_byte>(rowbytes));
    std::vector<png_bytep> ptrs(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) ptrs[i] = rows[i].data();
    if (setjmp(png_jmpbuf(r.png))) throw FormatError(path + ": corrupt PNG data", 8);
    png_read_image(r.png, ptrs.data());
    png_read_end(r.png, nullptr);
    // meta.bit_depth keeps the depth as stored in the file; the row buffers
    // are 16-bit only when keep_16bit and the file itself was 16-bit.
}

inline void png_encode(const std::string& path, PngWriter& w, int rows, int cols,
                       int channels, int bit_depth,
                       std::vector<std::vector<png_byte>>& rowbuf) {
    w.fp = std::fopen(path.c_str(), "wb");
    if (!w.fp) throw FormatError(path + ": cannot open for writing", 0);
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!w.png) throw FormatError(path + ": png writer init failed", 0);
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw FormatError(path + ": png info init failed", 0);

    std::vector<png_bytep> ptrs(rowbuf.size());
    for (std::size_t i = 0; i < rowbuf.size(); ++i) ptrs[i] = rowbuf[i].data();

    if (setjmp(png_jmpbuf(w.png))) throw FormatError(path + ": png write failed", 0);
    png_init_io(w.png, w.fp);
    const int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(cols),
                 static_cast<png_uint_32>(rows), bit_depth, color,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);
#ifdef PNG_WRITE_SWAP_SUPPORTED
    if (bit_depth == 16 && std::endian::native == std::endian::little)
        png_set_swap(w.png);
#endif
    png_write_image(w.png, ptrs.data());
    png_write_end(w.png, nullptr);
}

} // namespace detail

/// 8-bit gray or RGB PNG -> (rows, cols, channels) tensor in [0,1], peak 1.
/// 16-bit files are reduced to 8 bits; the original depth lands in *meta.
inline TensorData load_png8(const std::string& path, PngMeta* meta = nullptr) {
    detail::PngReader r;
    std::vector<std::vector<png_byte>> rows;
    PngMeta m;
    detail::png_decode(path, r, rows, m, /*keep_16bit=*/false);
    TensorData td;
    td.peak = 1.0;
    td.data = DenseTensor3<double>(m.rows, m.cols, m.channels);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j)
            for (int c = 0; c < m.channels; ++c)
                td.data(i, j, c) = rows[i][static_cast<std::size_t>(j) * m.channels + c] / 255.0;
    if (meta) *meta = m;
    return td;
}

/// Tensor with 1 or 3 bands -> 8-bit PNG; values clamped to [0, peak] and
/// quantized to 255 levels.
inline void save_png8(const std::string& path, const DenseTensor3<double>& t,
                      double peak = 1.0) {
    if (t.i3 != 1 && t.i3 != 3)
        throw ArgumentError("save_png8: tensor must have 1 or 3 bands");
    if (!(peak > 0)) throw ArgumentError("save_png8: peak must be positive");
    std::vector<std::vector<png_byte>> rows(
        static_cast<std::size_t>(t.i1),
        std::vector<png_byte>(static_cast<std::size_t>(t.i2) * t.i3));
    for (int i = 0; i < t.i1; ++i)
        for (int j = 0; j < t.i2; ++j)
            for (int c = 0; c < t.i3; ++c) {
                double v = t(i, j, c) / peak;
                v = v < 0 ? 0 : (v > 1 ? 1 : v);
                rows[i][static_cast<std::size_t>(j) * t.i3 + c] =
                    static_cast<png_byte>(v * 255.0 + 0.5);
            }
    detail::PngWriter w;
    detail::png_encode(path, w, t.i1, t.i2, t.i3, 8, rows);
}

inline TensorData load_image(const std::string& path, ImageKind kind) {
    return kind == ImageKind::png8 ? load_png8(path) : load_tensor(path);
}

// ---------------------------------------------------------------------------
// Label maps: 16-bit grayscale PNG holding raw label ids + JSON sidecar with
// the segmentation parameters (path + ".json").

inline void save_label_map(const std::string& png_path, const LabelMap& lm,
                           int k_target, double compactness, uint32_t seed) {
    if (lm.rows <= 0 || lm.cols <= 0)
        throw ArgumentError("save_label_map: empty label map");
    if (lm.num_labels > 65536)
        throw ArgumentError("save_label_map: more than 65536 labels");
    std::vector<std::vector<png_byte>> rows(
        static_cast<std::size_t>(lm.rows),
        std::vector<png_byte>(static_cast<std::size_t>(lm.cols) * 2));
    for (int i = 0; i < lm.rows; ++i)
        for (int j = 0; j < lm.cols; ++j) {
            const int l = lm(i, j);
            if (l < 0 || l > 65535)
                throw ArgumentError("save_label_map: label out of uint16 range");
            uint16_t u = static_cast<uint16_t>(l);
            std::memcpy(&rows[i][static_cast<std::size_t>(j) * 2], &u, 2);
        }
    detail::PngWriter w;
    detail::png_encode(png_path, w, lm.rows, lm.cols, 1, 16, rows);
    json side = {{"k_target", k_target},
                 {"compactness", compactness},
                 {"seed", seed},
                 {"num_labels", lm.num_labels}};
    std::ofstream out(png_path + ".json", std::ios::trunc);
    if (!out) throw FormatError(png_path + ".json: cannot open for writing", 0);
    out << side.dump(2) << '\n';
}

inline LabelMap load_label_map(const std::string& png_path) {
    detail::PngReader r;
    std::vector<std::vector<png_byte>> rows;
    PngMeta m;
    detail::png_decode(png_path, r, rows, m, /*keep_16bit=*/true);
    if (m.channels != 1 || m.bit_depth != 16)
        throw FormatError(png_path + ": label map must be 16-bit grayscale", 0);
    LabelMap lm(m.rows, m.cols);
    int max_label = -1;
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) {
            uint16_t u;
            std::memcpy(&u, &rows[i][static_cast<std::size_t>(j) * 2], 2);
            lm.at(i, j) = u;
            max_label = std::max(max_label, static_cast<int>(u));
        }
    lm.num_labels = max_label + 1;
    std::ifstream side(png_path + ".json");
    if (side) {
        json s = json::parse(side, nullptr, false);
        if (s.is_discarded())
            throw FormatError(png_path + ".json: invalid JSON sidecar", 0);
        const int n = s.value("num_labels", lm.num_labels);
        if (n != lm.num_labels)
            throw FormatError(png_path + ": sidecar num_labels disagrees with pixels", 0);
    }
    return lm;
}

/// Fig.-2-style inspection image: grayscale background with label boundaries
/// painted red. Boundary = pixel whose right or down neighbor differs.
inline DenseTensor3<double> boundary_overlay(const FeatureImage& feature,
                                             const LabelMap& lm) {
    if (feature.channels.empty()) throw ArgumentError("boundary_overlay: empty feature");
    const auto& base = feature.channels[0];
    if (base.rows() != lm.rows || base.cols() != lm.cols)
        throw ArgumentError("boundary_overlay: feature/label shape mismatch");
    DenseTensor3<double> img(lm.rows, lm.cols, 3);
    for (int i = 0; i < lm.rows; ++i)
        for (int j = 0; j < lm.cols; ++j) {
            const bool edge = (i + 1 < lm.rows && lm(i + 1, j) != lm(i, j)) ||
                              (j + 1 < lm.cols && lm(i, j + 1) != lm(i, j));
            const double g = std::min(1.0, std::max(0.0, base(i, j)));
            img(i, j, 0) = edge ? 1.0 : g;
            img(i, j, 1) = edge ? 0.0 : g;
            img(i, j, 2) = edge ? 0.0 : g;
        }
    return img;
}

// ---------------------------------------------------------------------------
// Observation masks ride the tensor file format as 0/1 data.

inline void save_mask(const std::string& path, const ObservationMask& mask) {
    DenseTensor3<double> t(mask.i1, mask.i2, mask.i3);
    for (std::size_t n = 0; n < mask.flags.size(); ++n) t.data[n] = mask.flags[n] ? 1.0 : 0.0;
    save_tensor(path, t, 1.0);
}

inline ObservationMask load_mask(const std::string& path) {
    TensorData td = load_tensor(path);
    ObservationMask m(td.data.i1, td.data.i2, td.data.i3);
    for (std::size_t n = 0; n < m.flags.size(); ++n) m.flags[n] = td.data.data[n] != 0.0;
    return m;
}

// ---------------------------------------------------------------------------
// Checkpoints: one JSON manifest line, then for each parameter in id order its
// value, Adam m, and Adam v buffers as little-endian f64 in Eigen column-major
// storage order.

inline void save_checkpoint(const std::string& path, const ParamStore<double>& store,
                            const json& extra = json::object()) {
    json manifest = {{"magic", "SCTRCKPT1"}, {"dtype", "f64"}, {"optimizer", true}};
    json params = json::array();
    for (std::size_t id = 0; id < store.params.size(); ++id) {
        const auto& p = store.params[id];
        params.push_back({{"id", id},
                          {"name", p.name},
                          {"rows", p.value.rows()},
                          {"cols", p.value.cols()}});
    }
    manifest["params"] = params;
    if (!extra.empty()) manifest["extra"] = extra;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(path + ": cannot open for writing", 0);
    out << manifest.dump() << '\n';
    auto write_mat = [&](const Matrix<double>& m) {
        static_assert(std::endian::native == std::endian::little ||
                          std::endian::native == std::endian::big,
                      "mixed endian unsupported");
        if constexpr (std::endian::native == std::endian::little) {
            out.write(reinterpret_cast<const char*>(m.data()),
                      static_cast<std::streamsize>(8 * m.size()));
        } else {
            for (Eigen::Index n = 0; n < m.size(); ++n) {
                uint64_t w;
                std::memcpy(&w, m.data() + n, 8);
                w = __builtin_bswap64(w);
                out.write(reinterpret_cast<const char*>(&w), 8);
            }
        }
    };
    for (const auto& p : store.params) {
        write_mat(p.value);
        write_mat(p.m);
        write_mat(p.v);
    }
    if (!out) throw FormatError(path + ": short write", 0);
}

/// Reads the manifest line only (for inspection / model reassembly).
inline json read_checkpoint_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open", 0);
    const std::string line = detail::read_header_line(in, path);
    json h = detail::parse_header_json(line, path);
    if (h.value("magic", "") != std::string("SCTRCKPT1"))
        throw FormatError(path + ": bad magic", 0);
    return h;
}

/// Restores value/m/v into an already-built store whose parameter names and
/// shapes must match the manifest exactly.
inline void load_checkpoint(const std::string& path, ParamStore<double>& store) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open", 0);
    const std::string line = detail::read_header_line(in, path);
    std::size_t off = line.size() + 1;
    json h = detail::parse_header_json(line, path);
    if (h.value("magic", "") != std::string("SCTRCKPT1"))
        throw FormatError(path + ": bad magic", 0);
    if (h.value("dtype", "") != std::string("f64"))
        throw FormatError(path + ": unsupported dtype", 0);
    const json& params = h.at("params");
    if (params.size() != store.params.size())
        throw FormatError(path + ": parameter count mismatch", 0);
    for (std::size_t id = 0; id < store.params.size(); ++id) {
        const auto& pj = params[id];
        auto& p = store.params[id];
        if (pj.value("name", "") != p.name)
            throw FormatError(path + ": parameter name mismatch at id " +
                                  std::to_string(id), 0);
        if (pj.value("rows", -1) != p.value.rows() || pj.value("cols", -1) != p.value.cols())
            throw FormatError(path + ": parameter shape mismatch for " + p.name, 0);
    }
    auto read_mat = [&](Matrix<double>& m) {
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(8 * m.size()));
        const std::size_t got = static_cast<std::size_t>(in.gcount());
        if (got != static_cast<std::size_t>(8 * m.size()))
            throw FormatError(path + ": checkpoint truncated", off + got);
        off += got;
        if constexpr (std::endian::native == std::endian::big) {
            for (Eigen::Index n = 0; n < m.size(); ++n) {
                uint64_t w;
                std::memcpy(&w, m.data() + n, 8);
                w = __builtin_bswap64(w);
                std::memcpy(m.data() + n, &w, 8);
            }
        }
    };
    for (auto& p : store.params) {
        read_mat(p.value);
        read_mat(p.m);
        read_mat(p.v);
    }
    char extra;
    if (in.get(extra)) throw FormatError(path + ": trailing bytes after payload", off);
}

/// Checkpoint "extra" manifest for an ALTF model: which parameter ids hold
/// each patch's heads and core, keyed by superpixel label.
template <class S>
json altf_checkpoint_extra(const AltfModel<S>& model, const std::vector<int>& labels) {
    if (labels.size() != model.patches.size())
        throw ArgumentError("altf_checkpoint_extra: label count != patch count");
    json patches = json::array();
    for (std::size_t k = 0; k < model.patches.size(); ++k) {
        const auto& p = model.patches[k];
        patches.push_back({{"label", labels[k]},
                           {"ranks", {p.shape.ranks[0], p.shape.ranks[1], p.shape.ranks[2]}},
                           {"shape", {p.shape.h, p.shape.w, p.shape.c}},
                           {"head_w", {p.head_w[0], p.head_w[1], p.head_w[2]}},
                           {"head_b", {p.head_b[0], p.head_b[1], p.head_b[2]}},
                           {"core", p.core}});
    }
    return json{{"backbone",
                 {{"width", model.cfg.width},
                  {"residual_blocks", model.cfg.residual_blocks},
                  {"omega0", model.cfg.omega0},
                  {"attention", model.cfg.attention}}},
                {"downsample", {model.downsample[0], model.downsample[1], model.downsample[2]}},
                {"patches", patches}};
}

// ---------------------------------------------------------------------------
// Train config JSON (field names mirror TrainConfig)

inline json train_config_to_json(const TrainConfig& c) {
    return json{{"lr_base", c.lr_base},
                {"weight_decay", c.weight_decay},
                {"omega0", c.omega0},
                {"downsample", {c.downsample[0], c.downsample[1], c.downsample[2]}},
                {"iterations", c.iterations},
                {"k_target", c.k_target},
                {"compactness", c.compactness},
                {"seed", c.seed},
                {"sampling_rate", c.sampling_rate},
                {"force", c.force},
                {"backbone_width", c.backbone_width},
                {"residual_blocks", c.residual_blocks},
                {"attention", c.attention},
                {"feature_mode", c.feature_mode == FeatureMode::pca3 ? "pca3" : "gray_mean"},
                {"rank_energy", c.rank_cfg.energy},
                {"rank_max", c.rank_cfg.r_max},
                {"guide_max_iters", c.guide_cfg.max_iters},
                {"guide_tol", c.guide_cfg.tol},
                {"reimpose_observed", c.reimpose_observed},
                {"lr_min_frac", c.lr_min_frac},
                {"minibatch", c.minibatch}};
}

inline TrainConfig train_config_from_json(const json& j) {
    static const char* known[] = {
        "lr_base",       "weight_decay",  "omega0",          "downsample",
        "iterations",    "k_target",      "compactness",     "seed",
        "sampling_rate", "force",         "backbone_width",  "residual_blocks",
        "attention",     "feature_mode",  "rank_energy",     "rank_max",
        "guide_max_iters", "guide_tol",   "reimpose_observed", "lr_min_frac",
        "minibatch"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw ArgumentError("config: unknown key \"" + it.key() + "\"");
    }
    TrainConfig c;
    c.lr_base = j.value("lr_base", c.lr_base);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.omega0 = j.value("omega0", c.omega0);
    if (j.contains("downsample")) {
        const auto& d = j["downsample"];
        if (!d.is_array() || d.size() != 3)
            throw ArgumentError("config: downsample must be a 3-element array");
        for (int a = 0; a < 3; ++a) c.downsample[a] = d[a].get<int>();
    }
    c.iterations = j.value("iterations", c.iterations);
    c.k_target = j.value("k_target", c.k_target);
    c.compactness = j.value("compactness", c.compactness);
    c.seed = j.value("seed", c.seed);
    c.sampling_rate = j.value("sampling_rate", c.sampling_rate);
    c.force = j.value("force", c.force);
    c.backbone_width = j.value("backbone_width", c.backbone_width);
    c.residual_blocks = j.value("residual_blocks", c.residual_blocks);
    c.attention = j.value("attention", c.attention);
    if (j.contains("feature_mode")) {
        const std::string m = j["feature_mode"].get<std::string>();
        if (m == "gray_mean") c.feature_mode = FeatureMode::gray_mean;
        else if (m == "pca3") c.feature_mode = FeatureMode::pca3;
        else throw ArgumentError("config: feature_mode must be gray_mean or pca3");
    }
    c.rank_cfg.energy = j.value("rank_energy", c.rank_cfg.energy);
    c.rank_cfg.r_max = j.value("rank_max", c.rank_cfg.r_max);
    c.guide_cfg.max_iters = j.value("guide_max_iters", c.guide_cfg.max_iters);
    c.guide_cfg.tol = j.value("guide_tol", c.guide_cfg.tol);
    c.reimpose_observed = j.value("reimpose_observed", c.reimpose_observed);
    c.lr_min_frac = j.value("lr_min_frac", c.lr_min_frac);
    c.minibatch = j.value("minibatch", c.minibatch);
    return c;
}

// ---------------------------------------------------------------------------
// CSV rows and the run manifest

inline std::string metric_csv_header() { return "dataset,method,sampling_rate,psnr_db,ssim"; }

inline std::string metric_csv_row(const std::string& dataset, const std::string& method,
                                  double sampling_rate, const MetricReport& m) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%s,%g,%.6g,%.6g", dataset.c_str(), method.c_str(),
                  sampling_rate, m.psnr_db, m.ssim);
    return buf;
}

struct MetricRow {
    std::string dataset, method;
    double sampling_rate = 0, psnr_db = 0, ssim = 0;
};

/// Parses concatenated metric CSV text; header lines are recognized and
/// skipped so files can be merged by plain concatenation.
inline std::vector<MetricRow> parse_metric_csv(const std::string& text) {
    std::vector<MetricRow> rows;
    std::size_t pos = 0;
    int lineno = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        ++lineno;
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line == metric_csv_header()) continue;
        std::vector<std::string> cells;
        std::size_t p = 0;
        while (true) {
            std::size_t c = line.find(',', p);
            cells.push_back(line.substr(p, c == std::string::npos ? c : c - p));
            if (c == std::string::npos) break;
            p = c + 1;
        }
        if (cells.size() != 5)
            throw FormatError("metrics csv line " + std::to_string(lineno) +
                                  ": expected 5 fields", 0);
        MetricRow r;
        r.dataset = cells[0];
        r.method = cells[1];
        try {
            r.sampling_rate = std::stod(cells[2]);
            r.psnr_db = std::stod(cells[3]);
            r.ssim = std::stod(cells[4]);
        } catch (const std::exception&) {
            throw FormatError("metrics csv line " + std::to_string(lineno) +
                                  ": non-numeric field", 0);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

inline std::string loss_curve_csv(const std::vector<double>& curve) {
    std::string out = "iteration,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < curve.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, curve[i]);
        out += buf;
    }
    return out;
}

/// Grid in the layout of the paper's comparison table: one section per
/// dataset, sampling rates as column groups (PSNR and SSIM each), methods as
/// rows. Missing cells print as "-".
inline std::string report_markdown(const std::vector<MetricRow>& rows) {
    std::vector<std::string> datasets, methods;
    std::vector<double> rates;
    for (const auto& r : rows) {
        if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end())
            datasets.push_back(r.dataset);
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
            methods.push_back(r.method);
        bool seen = false;
        for (double x : rates) seen = seen || x == r.sampling_rate;
        if (!seen) rates.push_back(r.sampling_rate);
    }
    std::sort(rates.begin(), rates.end());
    std::string out;
    char buf[96];
    for (const auto& ds : datasets) {
        out += "## " + ds + "\n\n| method |";
        for (double sr : rates) {
            std::snprintf(buf, sizeof buf, " SR=%g PSNR | SR=%g SSIM |", sr, sr);
            out += buf;
        }
        out += "\n|---|";
        for (std::size_t i = 0; i < rates.size(); ++i) out += "---|---|";
        out += "\n";
        for (const auto& m : methods) {
            bool any = false;
            for (const auto& r : rows) any = any || (r.dataset == ds && r.method == m);
            if (!any) continue;
            out += "| " + m + " |";
            for (double sr : rates) {
                const MetricRow* hit = nullptr;
                for (const auto& r : rows)
                    if (r.dataset == ds && r.method == m && r.sampling_rate == sr) hit = &r;
                if (hit) {
                    std::snprintf(buf, sizeof buf, " %.2f | %.4f |", hit->psnr_db, hit->ssim);
                    out += buf;
                } else {
                    out += " - | - |";
                }
            }
            out += "\n";
        }
        out += "\n";
    }
    return out;
}

} // namespace sctr
