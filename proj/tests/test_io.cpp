#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

#include "pod2g/core/io.hpp"
#include "pod2g/core/rng.hpp"
#include "pod2g/fixtures.hpp"

using namespace pod2g;

TEST_CASE("matrix market round trip") {
    const Fixture fx = random_spd(12, 0.4, 91);
    std::stringstream ss;
    write_matrix_market(ss, fx.K);
    const CsrMatrix back = read_matrix_market(ss);
    REQUIRE(back.nrows == fx.K.nrows);
    REQUIRE(back.nnz() == fx.K.nnz());
    CHECK(back.row_offsets == fx.K.row_offsets);
    CHECK(back.col_indices == fx.K.col_indices);
    CHECK(back.values == fx.K.values);
}

TEST_CASE("matrix market parses the symmetric qualifier") {
    std::stringstream ss;
    ss << "%%MatrixMarket matrix coordinate real symmetric\n"
          "% tridiagonal sample\n"
          "3 3 5\n"
          "1 1 2.0\n2 2 2.0\n3 3 2.0\n2 1 -1.0\n3 2 -1.0\n";
    const CsrMatrix A = read_matrix_market(ss);
    CHECK(A.at(0, 1) == Catch::Approx(-1.0));
    CHECK(A.at(1, 0) == Catch::Approx(-1.0));
    CHECK(A.symmetric_hint);
    CHECK(is_symmetric(A));
}

TEST_CASE("matrix market rejects malformed headers") {
    std::stringstream ss;
    ss << "%%MatrixMarket matrix array real general\n1 1\n1.0\n";
    CHECK_THROWS_AS(read_matrix_market(ss), std::invalid_argument);
}

TEST_CASE("vector batch round trip preserves bits") {
    const auto dir = std::filesystem::temp_directory_path() / "pod2g_io_test";
    std::filesystem::create_directories(dir);
    Rng rng(5);
    std::vector<Vector> batch;
    for (int i = 0; i < 4; ++i) batch.push_back(rng.normal_vector(17));
    batch[0][3] = -0.0;
    batch[1][5] = 1e-308;

    const std::uint64_t h = save_vector_batch(dir / "batch", batch, {{"note", "test"}});
    const VectorBatch back = load_vector_batch(dir / "batch");
    REQUIRE(back.vectors.size() == batch.size());
    for (index_t i = 0; i < batch.size(); ++i)
        for (index_t j = 0; j < batch[i].size(); ++j) {
            CHECK(std::bit_cast<std::uint64_t>(back.vectors[i][j]) ==
                  std::bit_cast<std::uint64_t>(batch[i][j]));
        }
    CHECK(back.payload_hash == h);
    CHECK(back.meta.at("note") == "test");
    std::filesystem::remove_all(dir);
}

TEST_CASE("little endian encoding is bytewise fixed") {
    std::string buf;
    append_f64le(buf, 1.0);
    REQUIRE(buf.size() == 8);
    CHECK(static_cast<unsigned char>(buf[7]) == 0x3f);
    CHECK(static_cast<unsigned char>(buf[6]) == 0xf0);
    CHECK(read_f64le(buf.data()) == 1.0);
}
