#include "gradsal/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gradsal/error.hpp"

namespace gradsal {
namespace {

enum class LayerKind : std::uint8_t { Conv = 0, Relu = 1, Pool = 2, Flatten = 3, Dense = 4 };

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Writer {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        bytes_.insert(bytes_.end(), b, b + n);
    }
    void size32(std::size_t v) {
        if (v > 0xffffffffULL) throw DataError("checkpoint field exceeds 32 bits");
        u32(static_cast<std::uint32_t>(v));
    }
    std::vector<std::uint8_t>& bytes() { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t n) : data_(data), n_(n) {}

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return n_ - pos_; }

private:
    void need(std::size_t k) const {
        if (n_ - pos_ < k) throw DataError("checkpoint is truncated");
    }
    const std::uint8_t* data_;
    std::size_t n_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Network& net) {
    layer_output_shapes(net);
    Writer w;
    w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
    w.u32(kCheckpointVersion);
    w.size32(net.num_classes);
    for (std::size_t d : net.input_shape) w.size32(d);
    w.size32(net.layers.size());
    for (const Layer& layer : net.layers) {
        if (const auto* c = std::get_if<Conv2D>(&layer)) {
            w.u8(static_cast<std::uint8_t>(LayerKind::Conv));
            w.size32(c->in_channels);
            w.size32(c->out_channels);
            w.size32(c->kernel);
            w.size32(c->stride);
            w.size32(c->pad);
        } else if (std::holds_alternative<ReLU>(layer)) {
            w.u8(static_cast<std::uint8_t>(LayerKind::Relu));
        } else if (const auto* p = std::get_if<MaxPool2D>(&layer)) {
            w.u8(static_cast<std::uint8_t>(LayerKind::Pool));
            w.size32(p->window);
        } else if (std::holds_alternative<Flatten>(layer)) {
            w.u8(static_cast<std::uint8_t>(LayerKind::Flatten));
        } else {
            const auto& d = std::get<Dense>(layer);
            w.u8(static_cast<std::uint8_t>(LayerKind::Dense));
            w.size32(d.in_features);
            w.size32(d.out_features);
        }
    }
    w.u64(parameter_count(net));
    for (const Tensor* t : parameters(net)) {
        for (double v : t->values()) w.f64(v);
    }
    w.size32(net.class_names.size());
    for (const std::string& name : net.class_names) {
        w.size32(name.size());
        w.raw(name.data(), name.size());
    }
    const std::uint64_t sum = fnv1a(w.bytes().data(), w.bytes().size());
    w.u64(sum);
    return std::move(w.bytes());
}

Network decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes.data(), bytes.size());
    if (r.str(sizeof kCheckpointMagic) != std::string(kCheckpointMagic, sizeof kCheckpointMagic)) {
        throw DataError("not a gradsal checkpoint (bad magic)");
    }
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw DataError("unsupported checkpoint version " + std::to_string(version) +
                        " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    if (bytes.size() < sizeof kCheckpointMagic + 4 + 8) throw DataError("checkpoint is truncated");
    const std::size_t body = bytes.size() - 8;
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(bytes[body + i]) << (8 * i);
    if (fnv1a(bytes.data(), body) != stored) {
        throw DataError("checkpoint checksum mismatch (file is truncated or corrupt)");
    }

    const std::size_t num_classes = r.u32();
    std::vector<std::size_t> input_shape{r.u32(), r.u32(), r.u32()};
    const std::uint32_t layer_count = r.u32();
    std::vector<Layer> layers;
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        switch (static_cast<LayerKind>(r.u8())) {
            case LayerKind::Conv: {
                Conv2D c;
                c.in_channels = r.u32();
                c.out_channels = r.u32();
                c.kernel = r.u32();
                c.stride = r.u32();
                c.pad = r.u32();
                layers.emplace_back(std::move(c));
                break;
            }
            case LayerKind::Relu:
                layers.emplace_back(ReLU{});
                break;
            case LayerKind::Pool:
                layers.emplace_back(MaxPool2D{r.u32()});
                break;
            case LayerKind::Flatten:
                layers.emplace_back(Flatten{});
                break;
            case LayerKind::Dense: {
                Dense d;
                d.in_features = r.u32();
                d.out_features = r.u32();
                layers.emplace_back(std::move(d));
                break;
            }
            default:
                throw DataError("checkpoint has unknown layer kind at layer " + std::to_string(i));
        }
    }
    // Reject declared in-sizes that disagree with the inferred topology.
    const std::vector<Layer> declared = layers;
    Network net = build_network(input_shape, std::move(layers), num_classes);
    for (std::size_t i = 0; i < declared.size(); ++i) {
        if (const auto* c = std::get_if<Conv2D>(&declared[i])) {
            if (c->in_channels != std::get<Conv2D>(net.layers[i]).in_channels) {
                throw DataError("checkpoint topology is inconsistent at layer " + std::to_string(i));
            }
        } else if (const auto* d = std::get_if<Dense>(&declared[i])) {
            if (d->in_features != std::get<Dense>(net.layers[i]).in_features) {
                throw DataError("checkpoint topology is inconsistent at layer " + std::to_string(i));
            }
        }
    }

    const std::uint64_t count = r.u64();
    if (count != parameter_count(net)) {
        throw DataError("checkpoint parameter count " + std::to_string(count) +
                        " does not match topology (" + std::to_string(parameter_count(net)) + ")");
    }
    for (Tensor* t : parameters(net)) {
        for (double& v : t->values()) v = r.f64();
        if (!t->all_finite()) throw DataError("checkpoint contains non-finite parameters");
    }
    const std::uint32_t names = r.u32();
    net.class_names.clear();
    for (std::uint32_t i = 0; i < names; ++i) net.class_names.push_back(r.str(r.u32()));
    if (r.remaining() != 8) throw DataError("checkpoint has trailing bytes");
    return net;
}

void save_network(const Network& net, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(net);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing " + path.string());
}

Network load_network(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace gradsal
