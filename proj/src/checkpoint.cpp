#include "pass/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace pass {

namespace {

constexpr char kMagic[8] = {'P', 'A', 'S', 'S', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
public:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    Bytes out;
};

class Parser {
public:
    explicit Parser(ByteView data) : data_(data) {}

    ByteView take(std::size_t n) {
        if (n > data_.size() - pos_) throw FormatError("checkpoint truncated");
        ByteView v = data_.subspan(pos_, n);
        pos_ += n;
        return v;
    }
    std::uint32_t u32() {
        const ByteView b = take(4);
        return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 |
               std::uint32_t{b[3]} << 24;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::uint64_t u64() {
        const std::uint64_t lo = u32();
        return lo | std::uint64_t{u32()} << 32;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    ByteView data_;
    std::size_t pos_ = 0;
};

}  // namespace

Bytes serialize_checkpoint(const ModelParams<double>& params) {
    const EncoderConfig& c = params.config;
    Writer w;
    w.raw(kMagic, sizeof kMagic);
    w.u32(kFormatVersion);
    for (int v : {c.vocab_size, c.d_model, c.heads, c.d_head, c.ffn_dim, c.n_blocks, c.max_len, c.proj_dim,
                  c.num_classes}) {
        w.i32(v);
    }
    w.f64(c.dropout);
    std::uint32_t count = 0;
    params.for_each([&](const std::string&, const Matrix<double>&) { ++count; });
    w.u32(count);
    params.for_each([&](const std::string& name, const Matrix<double>& t) {
        w.u32(static_cast<std::uint32_t>(name.size()));
        w.raw(name.data(), name.size());
        w.u32(static_cast<std::uint32_t>(t.rows()));
        w.u32(static_cast<std::uint32_t>(t.cols()));
        for (Index i = 0; i < t.size(); ++i) w.f32(static_cast<float>(t.data()[i]));
    });
    const auto digest = sha256(w.out);
    w.raw(digest.data(), digest.size());
    return std::move(w.out);
}

ModelParams<double> deserialize_checkpoint(ByteView bytes) {
    if (bytes.size() < sizeof kMagic + 4 + 32) throw FormatError("checkpoint too short");
    if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw FormatError("not a checkpoint file");
    const ByteView body = bytes.first(bytes.size() - 32);
    const auto digest = sha256(body);
    if (std::memcmp(digest.data(), bytes.data() + body.size(), 32) != 0) {
        throw FormatError("checkpoint digest mismatch");
    }
    Parser p(body);
    p.take(sizeof kMagic);
    const std::uint32_t version = p.u32();
    if (version != kFormatVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
    EncoderConfig c;
    c.vocab_size = p.i32();
    c.d_model = p.i32();
    c.heads = p.i32();
    c.d_head = p.i32();
    c.ffn_dim = p.i32();
    c.n_blocks = p.i32();
    c.max_len = p.i32();
    c.proj_dim = p.i32();
    c.num_classes = p.i32();
    c.dropout = p.f64();
    ModelParams<double> params;
    try {
        params = ModelParams<double>::zeros(c);
    } catch (const UsageError& e) {
        throw FormatError(std::string("checkpoint config: ") + e.what());
    }
    const std::uint32_t count = p.u32();
    std::uint32_t expected = 0;
    params.for_each([&](const std::string&, const Matrix<double>&) { ++expected; });
    if (count != expected) throw FormatError("checkpoint tensor count does not match its config");
    params.for_each([&](const std::string& name, Matrix<double>& t) {
        const std::uint32_t len = p.u32();
        const ByteView stored = p.take(len);
        if (std::string(stored.begin(), stored.end()) != name) {
            throw FormatError("checkpoint tensor order mismatch at " + name);
        }
        const std::uint32_t rows = p.u32();
        const std::uint32_t cols = p.u32();
        if (rows != t.rows() || cols != t.cols()) throw FormatError("checkpoint shape mismatch for " + name);
        for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<double>(p.f32());
    });
    if (p.remaining() != 0) throw FormatError("trailing bytes in checkpoint");
    return params;
}

void save_checkpoint(const std::string& path, const ModelParams<double>& params) {
    const Bytes bytes = serialize_checkpoint(params);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ModelParams<double> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint " + path);
    const Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return deserialize_checkpoint(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

void round_to_storage(ModelParams<double>& params) {
    params.for_each([](const std::string&, Matrix<double>& t) { t = t.cast<float>().cast<double>(); });
}

}  // namespace pass
