#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <fcpd/errors.hpp>
#include <fcpd/io.hpp>
#include <fcpd/rng.hpp>

#include "test_util.hpp"

using namespace fcpd;
using namespace testutil;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("fcpd_io_test_" + std::to_string(std::rand()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("tensor files round-trip") {
    TempDir dir;
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const int order = 1 + int(rng.next_u64() % 4);
        std::vector<Index> shape = random_shape(rng, order, 5);
        Index total = 1;
        for (Index s : shape) total *= s;
        std::vector<double> vals(total);
        for (auto& v : vals) v = rng.gaussian();
        DenseTensor t(shape, vals);

        const std::string path = dir.file("t.fcpt");
        write_tensor(path, t);
        DenseTensor back = read_tensor(path);
        CHECK(back.shape() == t.shape());
        CHECK(back.values() == t.values());
    }
}

TEST_CASE("tensor file layout is exactly as documented") {
    TempDir dir;
    DenseTensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    const std::string path = dir.file("layout.fcpt");
    write_tensor(path, t);

    std::ifstream is(path, std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                     std::istreambuf_iterator<char>());
    REQUIRE(bytes.size() == 4 + 1 + 1 + 2 * 8 + 6 * 8);
    CHECK(bytes[0] == 'F');
    CHECK(bytes[1] == 'C');
    CHECK(bytes[2] == 'P');
    CHECK(bytes[3] == 'T');
    CHECK(bytes[4] == 1); // version
    CHECK(bytes[5] == 2); // order
    CHECK(bytes[6] == 2); // I_1 little-endian
    CHECK(bytes[14] == 3); // I_2
    double first;
    std::memcpy(&first, bytes.data() + 22, 8);
    CHECK(first == 1.0);
}

TEST_CASE("kruskal files round-trip") {
    TempDir dir;
    Rng rng(7);
    KruskalTensor k = random_kruskal(rng, {4, 3, 5}, 3);
    const std::string path = dir.file("k.fcpk");
    write_kruskal(path, k);
    KruskalTensor back = read_kruskal(path);
    CHECK(back.rank() == 3);
    CHECK((back.weights - k.weights).norm() == 0.0);
    for (Index n = 0; n < 3; ++n) CHECK((back.factors[n] - k.factors[n]).norm() == 0.0);
}

TEST_CASE("corrupt files are reported as I/O errors") {
    TempDir dir;
    const std::string path = dir.file("bad.fcpt");
    {
        std::ofstream os(path, std::ios::binary);
        os.write("NOPE", 4);
    }
    CHECK_THROWS_AS(read_tensor(path), io_error);
    CHECK_THROWS_AS(read_tensor(dir.file("missing.fcpt")), io_error);
    CHECK_THROWS_AS(read_kruskal(path), io_error);

    // truncated payload
    DenseTensor t({2, 2}, {1, 2, 3, 4});
    const std::string trunc = dir.file("trunc.fcpt");
    write_tensor(trunc, t);
    std::filesystem::resize_file(trunc, 20);
    CHECK_THROWS_AS(read_tensor(trunc), io_error);
}
