#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "pod2g/core/csr.hpp"

namespace pod2g {

// ---------------------------------------------------------------------------
// Matrix Market coordinate format, 1-based indices.
// ---------------------------------------------------------------------------

inline void write_matrix_market(std::ostream& os, const CsrMatrix& A) {
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << A.nrows << " " << A.ncols << " " << A.nnz() << "\n";
    os << std::setprecision(17) << std::scientific;
    for (index_t i = 0; i < A.nrows; ++i)
        for (index_t k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k)
            os << (i + 1) << " " << (A.col_indices[k] + 1) << " " << A.values[k] << "\n";
}

inline void write_matrix_market(const std::filesystem::path& path, const CsrMatrix& A) {
    std::ofstream os(path);
    require(os.good(), "write_matrix_market: cannot open " + path.string());
    write_matrix_market(os, A);
}

inline CsrMatrix read_matrix_market(std::istream& is) {
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), "matrix market: empty stream");
    std::istringstream header(line);
    std::string banner, object, format, field, symmetry;
    header >> banner >> object >> format >> field >> symmetry;
    require(banner == "%%MatrixMarket" && object == "matrix" && format == "coordinate",
            "matrix market: unsupported header '" + line + "'");
    require(field == "real", "matrix market: only real matrices supported");
    const bool symmetric = (symmetry == "symmetric");
    require(symmetric || symmetry == "general", "matrix market: unsupported symmetry");

    while (std::getline(is, line))
        if (!line.empty() && line[0] != '%') break;
    std::istringstream dims(line);
    index_t nrows = 0, ncols = 0, nnz = 0;
    dims >> nrows >> ncols >> nnz;
    require(!dims.fail(), "matrix market: bad dimensions line");

    std::vector<std::tuple<index_t, index_t, double>> entries;
    entries.reserve(symmetric ? 2 * nnz : nnz);
    for (index_t k = 0; k < nnz; ++k) {
        index_t i = 0, j = 0;
        double v = 0.0;
        is >> i >> j >> v;
        require(!is.fail(), "matrix market: truncated entry list");
        require(i >= 1 && j >= 1, "matrix market: indices must be 1-based");
        entries.emplace_back(i - 1, j - 1, v);
        if (symmetric && i != j) entries.emplace_back(j - 1, i - 1, v);
    }
    CsrMatrix A = csr_from_coo(nrows, ncols, std::move(entries));
    A.symmetric_hint = symmetric;
    return A;
}

inline CsrMatrix read_matrix_market(const std::filesystem::path& path) {
    std::ifstream is(path);
    require(is.good(), "read_matrix_market: cannot open " + path.string());
    return read_matrix_market(is);
}

// ---------------------------------------------------------------------------
// Vector batches: raw little-endian f64 payload next to a JSON header.
// ---------------------------------------------------------------------------

inline void append_f64le(std::string& buf, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) buf.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

inline double read_f64le(const char* p) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[b])) << (8 * b);
    return std::bit_cast<double>(bits);
}

inline std::uint64_t fnv1a_hash(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string encode_vectors(const std::vector<Vector>& vs) {
    std::string buf;
    buf.reserve(vs.size() * (vs.empty() ? 0 : vs.front().size()) * 8);
    for (const Vector& v : vs)
        for (double x : v) append_f64le(buf, x);
    return buf;
}

/// Writes `<stem>.json` and `<stem>.bin`. All vectors must share one length.
inline std::uint64_t save_vector_batch(const std::filesystem::path& stem,
                                       const std::vector<Vector>& vs,
                                       nlohmann::json extra = {}) {
    const index_t dim = vs.empty() ? 0 : vs.front().size();
    for (const Vector& v : vs) require(v.size() == dim, "save_vector_batch: ragged batch");
    const std::string payload = encode_vectors(vs);
    const std::uint64_t hash = fnv1a_hash(payload);

    std::ofstream bin(stem.string() + ".bin", std::ios::binary);
    require(bin.good(), "save_vector_batch: cannot open " + stem.string() + ".bin");
    bin.write(payload.data(), static_cast<std::streamsize>(payload.size()));

    nlohmann::json header{{"count", vs.size()},
                          {"dim", dim},
                          {"dtype", "f64le"},
                          {"payload_fnv1a", hash}};
    if (!extra.is_null()) header["meta"] = std::move(extra);
    std::ofstream js(stem.string() + ".json");
    require(js.good(), "save_vector_batch: cannot open " + stem.string() + ".json");
    js << header.dump(2) << "\n";
    return hash;
}

struct VectorBatch {
    std::vector<Vector> vectors;
    nlohmann::json meta;
    std::uint64_t payload_hash = 0;
};

inline VectorBatch load_vector_batch(const std::filesystem::path& stem) {
    std::ifstream js(stem.string() + ".json");
    require(js.good(), "load_vector_batch: cannot open " + stem.string() + ".json");
    nlohmann::json header = nlohmann::json::parse(js);
    const index_t count = header.at("count").get<index_t>();
    const index_t dim = header.at("dim").get<index_t>();
    require(header.at("dtype") == "f64le", "load_vector_batch: unsupported dtype");

    std::ifstream bin(stem.string() + ".bin", std::ios::binary);
    require(bin.good(), "load_vector_batch: cannot open " + stem.string() + ".bin");
    std::string payload((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    require(payload.size() == count * dim * 8, "load_vector_batch: payload size mismatch");

    VectorBatch out;
    out.payload_hash = fnv1a_hash(payload);
    if (header.contains("payload_fnv1a"))
        require(out.payload_hash == header["payload_fnv1a"].get<std::uint64_t>(),
                "load_vector_batch: payload hash mismatch");
    out.vectors.assign(count, Vector(dim));
    for (index_t i = 0; i < count; ++i)
        for (index_t j = 0; j < dim; ++j)
            out.vectors[i][j] = read_f64le(payload.data() + 8 * (i * dim + j));
    if (header.contains("meta")) out.meta = header["meta"];
    return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path);
    require(os.good(), "write_text_file: cannot open " + path.string());
    os << text;
}

}  // namespace pod2g
