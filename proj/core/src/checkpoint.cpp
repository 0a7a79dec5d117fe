#include "lexigrad/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace lexigrad {

namespace {

constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagOptimizer = 1u << 0;
constexpr std::uint32_t kFlagVelocity = 1u << 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

struct Reader {
    const std::vector<std::uint8_t>& buf;
    std::size_t pos = 0;
    std::string path;

    void need(std::size_t n, const char* what) const {
        if (pos + n > buf.size())
            throw std::runtime_error(path + ": unexpected end of file at byte offset " +
                                     std::to_string(pos) + " reading " + what);
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = buf[pos] | (static_cast<std::uint32_t>(buf[pos + 1]) << 8) |
                          (static_cast<std::uint32_t>(buf[pos + 2]) << 16) |
                          (static_cast<std::uint32_t>(buf[pos + 3]) << 24);
        pos += 4;
        return v;
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[pos + static_cast<std::size_t>(i)]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64(const char* what) {
        const std::uint64_t bits = u64(what);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

void put_layer(std::vector<std::uint8_t>& out, const LayerSpec& spec) {
    std::uint32_t kind = 0;
    std::uint32_t a = 0, b = 0, c = 0, d = 0, e = 0, f = 0;
    switch (spec.kind) {
        case LayerKind::Dense:
            kind = 0;
            a = static_cast<std::uint32_t>(spec.in_features);
            b = static_cast<std::uint32_t>(spec.out_features);
            break;
        case LayerKind::Relu: kind = 1; break;
        case LayerKind::Conv2d:
            kind = 2;
            a = static_cast<std::uint32_t>(spec.in_channels);
            b = static_cast<std::uint32_t>(spec.out_channels);
            c = static_cast<std::uint32_t>(spec.kernel);
            d = static_cast<std::uint32_t>(spec.stride);
            e = static_cast<std::uint32_t>(spec.padding);
            break;
        case LayerKind::MaxPool2d:
            kind = 3;
            a = static_cast<std::uint32_t>(spec.window);
            b = static_cast<std::uint32_t>(spec.pool_stride);
            break;
        case LayerKind::Flatten: kind = 4; break;
    }
    put_u32(out, kind);
    for (std::uint32_t v : {a, b, c, d, e, f}) put_u32(out, v);
}

LayerSpec read_layer(Reader& r) {
    const std::uint32_t kind = r.u32("layer kind");
    std::uint32_t p[6];
    for (auto& v : p) v = r.u32("layer param");
    switch (kind) {
        case 0: return LayerSpec::dense(p[0], p[1]);
        case 1: return LayerSpec::relu();
        case 2: return LayerSpec::conv2d(p[0], p[1], p[2], p[3], p[4]);
        case 3: return LayerSpec::maxpool2d(p[0], p[1]);
        case 4: return LayerSpec::flatten();
        default:
            throw std::runtime_error(r.path + ": unknown layer kind " + std::to_string(kind) +
                                     " at byte offset " + std::to_string(r.pos - 28));
    }
}

void put_tensor(std::vector<std::uint8_t>& out, const Tensor& t) {
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.values) put_f64(out, v);
}

Tensor read_tensor(Reader& r) {
    const std::uint32_t rank = r.u32("tensor rank");
    if (rank == 0 || rank > 8)
        throw std::runtime_error(r.path + ": bad tensor rank " + std::to_string(rank) +
                                 " at byte offset " + std::to_string(r.pos - 4));
    std::vector<std::int64_t> shape(rank);
    for (auto& d : shape) d = r.u32("tensor dim");
    const std::int64_t n = shape_size(shape);
    std::vector<double> vals(static_cast<std::size_t>(n));
    for (auto& v : vals) v = r.f64("tensor value");
    return Tensor(std::move(shape), std::move(vals));
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'L', 'X', 'G', 'D'});
    put_u32(out, kVersion);
    std::uint32_t flags = 0;
    if (ckpt.has_optimizer) flags |= kFlagOptimizer;
    if (ckpt.has_optimizer && ckpt.has_velocity) flags |= kFlagVelocity;
    put_u32(out, flags);
    put_u32(out, static_cast<std::uint32_t>(ckpt.model.num_classes));
    put_u32(out, static_cast<std::uint32_t>(ckpt.model.layers.size()));
    for (const auto& spec : ckpt.model.layers) put_layer(out, spec);
    put_u32(out, static_cast<std::uint32_t>(ckpt.model.params.size()));
    for (const auto& t : ckpt.model.params) put_tensor(out, t);
    if (ckpt.has_optimizer) {
        put_f64(out, ckpt.opt.momentum_coef);
        put_u64(out, static_cast<std::uint64_t>(ckpt.opt.step_counter));
        put_u64(out, static_cast<std::uint64_t>(ckpt.generation));
        if (ckpt.has_velocity)
            for (const auto& t : ckpt.opt.velocity) put_tensor(out, t);
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r{buf, 0, path};

    r.need(4, "magic");
    if (buf[0] != 'L' || buf[1] != 'X' || buf[2] != 'G' || buf[3] != 'D')
        throw std::runtime_error(path + ": bad magic at byte offset 0 (not an LXGD checkpoint)");
    r.pos = 4;
    const std::uint32_t version = r.u32("version");
    if (version != kVersion)
        throw std::runtime_error(path + ": unsupported version " + std::to_string(version));
    const std::uint32_t flags = r.u32("flags");

    Checkpoint ckpt;
    ckpt.model.num_classes = r.u32("num_classes");
    const std::uint32_t layer_count = r.u32("layer count");
    for (std::uint32_t i = 0; i < layer_count; ++i) ckpt.model.layers.push_back(read_layer(r));
    const std::uint32_t tensor_count = r.u32("tensor count");
    for (std::uint32_t i = 0; i < tensor_count; ++i) ckpt.model.params.push_back(read_tensor(r));

    if (flags & kFlagOptimizer) {
        ckpt.has_optimizer = true;
        ckpt.opt.momentum_coef = r.f64("momentum coefficient");
        ckpt.opt.step_counter = static_cast<std::int64_t>(r.u64("step counter"));
        ckpt.generation = static_cast<std::int64_t>(r.u64("generation"));
        if (flags & kFlagVelocity) {
            ckpt.has_velocity = true;
            for (std::uint32_t i = 0; i < tensor_count; ++i) ckpt.opt.velocity.push_back(read_tensor(r));
        }
    }
    if (r.pos != buf.size())
        throw std::runtime_error(path + ": trailing bytes at offset " + std::to_string(r.pos));
    return ckpt;
}

}  // namespace lexigrad
