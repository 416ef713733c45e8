#include "emrecon/container.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

namespace emrecon {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'E', 'C'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::string& buf, std::uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

class Reader {
public:
    Reader(const std::string& data, const std::string& what) : data_(data), what_(what) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint16_t u16() {
        const char* p = take(2);
        return static_cast<std::uint16_t>(static_cast<unsigned char>(p[0]) |
                                          (static_cast<unsigned char>(p[1]) << 8));
    }
    std::uint32_t u32() {
        const char* p = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
        return v;
    }
    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string bytes(std::size_t n) { return std::string(take(n), n); }

private:
    const char* take(std::size_t n) {
        if (pos_ + n > data_.size())
            throw std::runtime_error("EMEC read: truncated payload in " + what_);
        const char* p = data_.data() + pos_;
        pos_ += n;
        return p;
    }
    const std::string& data_;
    std::string what_;
    std::size_t pos_ = 0;
};

}  // namespace

void write_container(const std::filesystem::path& path,
                     const std::map<std::string, FieldVariant>& fields,
                     const Metadata& metadata) {
    if (fields.empty()) throw std::invalid_argument("write_container: no fields");
    const GridShape& shape = field_shape(fields.begin()->second);
    for (const auto& [name, fv] : fields)
        if (field_shape(fv) != shape)
            throw std::invalid_argument("write_container: shape mismatch among fields");
    if (fields.size() > 0xffff) throw std::invalid_argument("write_container: too many fields");

    std::string buf;
    buf.append(kMagic, 4);
    put_u16(buf, kVersion);
    buf.push_back(static_cast<char>(shape.ndim()));
    buf.push_back(0);  // dtype f32
    put_u16(buf, static_cast<std::uint16_t>(fields.size()));

    for (const auto& [name, fv] : fields) {
        if (name.size() > 0xffff) throw std::invalid_argument("write_container: field name too long");
        put_u16(buf, static_cast<std::uint16_t>(name.size()));
        buf.append(name);
        const bool is_vector = std::holds_alternative<DisplacementField>(fv);
        buf.push_back(is_vector ? 1 : 0);
        for (int d : shape.dims) put_u32(buf, static_cast<std::uint32_t>(d));
        if (is_vector) {
            for (double v : std::get<DisplacementField>(fv).vectors)
                put_f32(buf, static_cast<float>(v));
        } else {
            for (double v : std::get<ScalarField>(fv).values) put_f32(buf, static_cast<float>(v));
        }
    }

    nlohmann::json meta = nlohmann::json::object();
    for (const auto& [k, v] : metadata) meta[k] = v;
    const std::string meta_str = meta.dump();
    put_u32(buf, static_cast<std::uint32_t>(meta_str.size()));
    buf.append(meta_str);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("EMEC write: cannot open " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("EMEC write: I/O failure on " + path.string());
}

Container read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("EMEC read: cannot open " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    Reader r(data, path.filename().string());
    if (r.bytes(4) != std::string(kMagic, 4))
        throw std::runtime_error("EMEC read: bad magic in " + path.string());
    const std::uint16_t version = r.u16();
    if (version != kVersion)
        throw std::runtime_error("EMEC read: unsupported version " + std::to_string(version) +
                                 " in " + path.string());
    const int ndim = r.u8();
    if (ndim != 2 && ndim != 3)
        throw std::runtime_error("EMEC read: bad ndim in " + path.string());
    const int dtype = r.u8();
    if (dtype != 0) throw std::runtime_error("EMEC read: unsupported dtype in " + path.string());
    const int field_count = r.u16();

    Container c;
    GridShape shape;
    for (int f = 0; f < field_count; ++f) {
        const std::size_t name_len = r.u16();
        const std::string name = r.bytes(name_len);
        const int kind = r.u8();
        std::vector<int> dims(ndim);
        for (int d = 0; d < ndim; ++d) dims[d] = static_cast<int>(r.u32());
        GridShape s(dims);
        if (f == 0)
            shape = s;
        else if (s != shape)
            throw std::runtime_error("EMEC read: shape mismatch among fields in " + path.string());

        const std::size_t n = s.cell_count();
        if (kind == 0) {
            ScalarField field(s);
            for (std::size_t i = 0; i < n; ++i) field.values[i] = r.f32();
            c.fields.emplace(name, std::move(field));
        } else if (kind == 1) {
            DisplacementField field(s);
            const std::size_t m = n * static_cast<std::size_t>(ndim);
            for (std::size_t i = 0; i < m; ++i) field.vectors[i] = r.f32();
            c.fields.emplace(name, std::move(field));
        } else {
            throw std::runtime_error("EMEC read: bad field kind in " + path.string());
        }
    }

    const std::size_t meta_len = r.u32();
    const std::string meta_str = r.bytes(meta_len);
    nlohmann::json meta = nlohmann::json::parse(meta_str);
    for (auto it = meta.begin(); it != meta.end(); ++it)
        c.metadata[it.key()] = it.value().get<std::string>();
    return c;
}

}  // namespace emrecon
