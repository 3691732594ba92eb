#include "wafl/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace wafl {

namespace {

constexpr char kMagic[6] = {'W', 'A', 'F', 'L', 'M', '1'};

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

uint32_t get_u32(const std::string& buf, size_t& pos, const std::filesystem::path& path) {
    if (pos + 4 > buf.size())
        throw FormatError(path.string() + ": truncated at offset " + std::to_string(pos));
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
}

float f32_from_le(const char* p) {
    uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= uint32_t(uint8_t(p[i])) << (8 * i);
    return std::bit_cast<float>(bits);
}

}  // namespace

void save_model_file(const std::filesystem::path& path, std::span<const float> flat) {
    if (flat.size() != kParamCount)
        throw InputError("save_model_file: expected " + std::to_string(kParamCount) +
                         " parameters, got " + std::to_string(flat.size()));
    std::string out;
    out.reserve(64 + flat.size() * 4);
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, uint32_t(kModelLayout.size()));
    for (const auto& l : kModelLayout) {
        put_u32(out, uint32_t(l.name.size()));
        out.append(l.name);
        if (l.rows) {
            put_u32(out, 2);
            put_u32(out, uint32_t(l.rows));
            put_u32(out, uint32_t(l.cols));
        } else {
            put_u32(out, 1);
            put_u32(out, uint32_t(l.cols));
        }
    }
    for (float f : flat) put_u32(out, std::bit_cast<uint32_t>(f));
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    os.write(out.data(), std::streamsize(out.size()));
    if (!os) throw FormatError("write failed: " + path.string());
}

std::vector<float> load_model_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path.string());
    std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

    size_t pos = 0;
    if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
        throw FormatError(path.string() + ": bad magic at offset 0 (expected WAFLM1)");
    pos = sizeof(kMagic);

    const uint32_t n_layers = get_u32(buf, pos, path);
    if (n_layers != kModelLayout.size())
        throw FormatError(path.string() + ": layer count " + std::to_string(n_layers) +
                          ", expected " + std::to_string(kModelLayout.size()));
    for (const auto& l : kModelLayout) {
        const uint32_t name_len = get_u32(buf, pos, path);
        if (pos + name_len > buf.size())
            throw FormatError(path.string() + ": truncated at offset " + std::to_string(pos));
        std::string_view name(buf.data() + pos, name_len);
        pos += name_len;
        if (name != l.name)
            throw FormatError(path.string() + ": layer '" + std::string(name) + "', expected '" +
                              std::string(l.name) + "'");
        const uint32_t ndims = get_u32(buf, pos, path);
        std::vector<uint32_t> dims(ndims);
        for (auto& d : dims) d = get_u32(buf, pos, path);
        const bool shape_ok = l.rows ? (ndims == 2 && dims[0] == uint32_t(l.rows) &&
                                        dims[1] == uint32_t(l.cols))
                                     : (ndims == 1 && dims[0] == uint32_t(l.cols));
        if (!shape_ok)
            throw FormatError(path.string() + ": shape mismatch for layer '" +
                              std::string(l.name) + "'");
    }

    if (buf.size() - pos != kParamCount * 4)
        throw FormatError(path.string() + ": payload is " + std::to_string(buf.size() - pos) +
                          " bytes at offset " + std::to_string(pos) + ", expected " +
                          std::to_string(kParamCount * 4));
    std::vector<float> flat(kParamCount);
    for (size_t i = 0; i < kParamCount; ++i) flat[i] = f32_from_le(buf.data() + pos + i * 4);
    return flat;
}

}  // namespace wafl
