#include "promptwise/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <unordered_map>

namespace pw {

namespace {

constexpr char kMagic[4] = {'P', 'W', 'C', 'K'};
constexpr std::uint8_t kVersion = 1;

void write_u64(std::ostream& os, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) {
        buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    }
    os.write(buf, 8);
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    }
    return v;
}

void write_f64(std::ostream& os, double d) {
    write_u64(os, std::bit_cast<std::uint64_t>(d));
}

double read_f64(std::istream& is) {
    return std::bit_cast<double>(read_u64(is));
}

} // namespace

void save_checkpoint(const std::string& path, const NamedTensors& entries) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw Error("cannot open checkpoint for writing: " + path);
    }
    os.write(kMagic, 4);
    os.put(static_cast<char>(kVersion));
    for (const auto& [name, tensor] : entries) {
        write_u64(os, name.size());
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u64(os, tensor->rows);
        write_u64(os, tensor->cols);
        for (double v : tensor->data) {
            write_f64(os, v);
        }
    }
    if (!os) {
        throw Error("write failure on checkpoint: " + path);
    }
}

NamedTensors load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw DependencyError("cannot open checkpoint: " + path);
    }
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw Error("not a PWCK checkpoint: " + path);
    }
    const int version = is.get();
    if (version != kVersion) {
        throw Error("unsupported checkpoint version " + std::to_string(version) + " in " + path);
    }
    NamedTensors out;
    while (true) {
        if (is.peek() == std::char_traits<char>::eof()) {
            break;
        }
        const std::uint64_t name_len = read_u64(is);
        std::string name(name_len, '\0');
        is.read(name.data(), static_cast<std::streamsize>(name_len));
        const std::uint64_t rows = read_u64(is);
        const std::uint64_t cols = read_u64(is);
        std::vector<double> data(rows * cols);
        for (auto& v : data) {
            v = read_f64(is);
        }
        if (!is) {
            throw Error("truncated checkpoint: " + path);
        }
        out.emplace_back(std::move(name), make_tensor(rows, cols, std::move(data)));
    }
    return out;
}

void restore_into(const NamedTensors& loaded, const NamedTensors& destinations) {
    std::unordered_map<std::string, const TensorPtr*> by_name;
    for (const auto& [name, tensor] : loaded) {
        by_name[name] = &tensor;
    }
    for (const auto& [name, dst] : destinations) {
        auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw DependencyError("checkpoint is missing tensor: " + name);
        }
        const Tensor& src = **it->second;
        if (src.rows != dst->rows || src.cols != dst->cols) {
            throw ShapeError("checkpoint tensor " + name + " has shape " + src.shape_str() +
                             ", expected " + dst->shape_str());
        }
        dst->data = src.data;
    }
}

} // namespace pw
