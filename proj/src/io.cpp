#include "fcpd/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "fcpd/errors.hpp"

namespace fcpd {

namespace {

static_assert(sizeof(double) == 8, "f64 storage assumed");

template <typename T>
void swap_if_big(T& v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto* bytes = reinterpret_cast<unsigned char*>(&v);
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
            std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    }
}

template <typename T>
void put(std::ostream& os, T v) {
    swap_if_big(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::string& path) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw io_error("truncated file: " + path);
    swap_if_big(v);
    return v;
}

void put_doubles(std::ostream& os, const double* p, std::size_t n) {
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t i = 0; i < n; ++i) put(os, p[i]);
    } else {
        os.write(reinterpret_cast<const char*>(p), std::streamsize(n * sizeof(double)));
    }
}

void get_doubles(std::istream& is, double* p, std::size_t n, const std::string& path) {
    is.read(reinterpret_cast<char*>(p), std::streamsize(n * sizeof(double)));
    if (!is) throw io_error("truncated file: " + path);
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t i = 0; i < n; ++i) swap_if_big(p[i]);
    }
}

void check_magic(std::istream& is, const char* magic, const std::string& path) {
    char buf[4];
    is.read(buf, 4);
    if (!is || std::memcmp(buf, magic, 4) != 0)
        throw io_error("bad magic in " + path + " (expected " + magic + ")");
    const auto version = get<std::uint8_t>(is, path);
    if (version != 1)
        throw io_error("unsupported " + std::string(magic) + " version " +
                       std::to_string(int(version)) + " in " + path);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open " + path + " for writing");
    return os;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open " + path);
    return is;
}

} // namespace

void write_tensor(const std::string& path, const DenseTensor& t) {
    if (t.order() < 1 || t.order() > 255) throw std::invalid_argument("unsupported order");
    auto os = open_out(path);
    os.write("FCPT", 4);
    put<std::uint8_t>(os, 1);
    put<std::uint8_t>(os, std::uint8_t(t.order()));
    for (Index s : t.shape()) put<std::uint64_t>(os, std::uint64_t(s));
    put_doubles(os, t.data(), t.values().size());
    if (!os) throw io_error("write failed: " + path);
}

DenseTensor read_tensor(const std::string& path) {
    auto is = open_in(path);
    check_magic(is, "FCPT", path);
    const auto order = get<std::uint8_t>(is, path);
    if (order < 1) throw io_error("invalid order in " + path);
    std::vector<Index> shape(order);
    std::size_t total = 1;
    for (auto& s : shape) {
        const auto v = get<std::uint64_t>(is, path);
        if (v == 0) throw io_error("zero mode size in " + path);
        s = Index(v);
        total *= v;
    }
    std::vector<double> data(total);
    get_doubles(is, data.data(), total, path);
    return {std::move(shape), std::move(data)};
}

void write_kruskal(const std::string& path, const KruskalTensor& k) {
    k.validate();
    if (k.order() < 1 || k.order() > 255) throw std::invalid_argument("unsupported order");
    auto os = open_out(path);
    os.write("FCPK", 4);
    put<std::uint8_t>(os, 1);
    put<std::uint8_t>(os, std::uint8_t(k.order()));
    put<std::uint32_t>(os, std::uint32_t(k.rank()));
    for (Index s : k.shape()) put<std::uint64_t>(os, std::uint64_t(s));
    put_doubles(os, k.weights.data(), std::size_t(k.rank()));
    for (const auto& f : k.factors) put_doubles(os, f.data(), std::size_t(f.size()));
    if (!os) throw io_error("write failed: " + path);
}

KruskalTensor read_kruskal(const std::string& path) {
    auto is = open_in(path);
    check_magic(is, "FCPK", path);
    const auto order = get<std::uint8_t>(is, path);
    if (order < 1) throw io_error("invalid order in " + path);
    const auto rank = get<std::uint32_t>(is, path);
    if (rank < 1) throw io_error("invalid rank in " + path);
    std::vector<Index> shape(order);
    for (auto& s : shape) {
        const auto v = get<std::uint64_t>(is, path);
        if (v == 0) throw io_error("zero mode size in " + path);
        s = Index(v);
    }
    KruskalTensor k;
    k.weights.resize(rank);
    get_doubles(is, k.weights.data(), rank, path);
    k.factors.resize(order);
    for (int n = 0; n < order; ++n) {
        k.factors[n].resize(shape[n], rank);
        get_doubles(is, k.factors[n].data(), std::size_t(shape[n]) * rank, path);
    }
    return k;
}

} // namespace fcpd
