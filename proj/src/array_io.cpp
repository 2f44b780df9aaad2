#include "longrad/array_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace longrad {

static_assert(std::endian::native == std::endian::little,
              "LRA1 serialization assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'L', 'R', 'A', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw std::runtime_error("LRA1: truncated header");
    return v;
}

std::size_t dtype_size(Dtype t) {
    switch (t) {
        case Dtype::f32: return 4;
        case Dtype::f64: return 8;
        case Dtype::c64: return 8;
        case Dtype::c128: return 16;
    }
    throw std::runtime_error("LRA1: unknown dtype code");
}

void write_header(std::ostream& os, const std::vector<std::uint64_t>& dims, Dtype dtype) {
    os.write(kMagic, 4);
    write_u64(os, dims.size());
    for (auto d : dims) write_u64(os, d);
    write_u64(os, static_cast<std::uint64_t>(dtype));
}

ArrayHeader read_header(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("LRA1: bad magic bytes");
    ArrayHeader h;
    const std::uint64_t rank = read_u64(is);
    if (rank > 16) throw std::runtime_error("LRA1: implausible rank");
    h.dims.resize(rank);
    for (auto& d : h.dims) d = read_u64(is);
    const std::uint64_t code = read_u64(is);
    if (code > 3) throw std::runtime_error("LRA1: unknown dtype code");
    h.dtype = static_cast<Dtype>(code);
    return h;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("LRA1: cannot open for writing: " + path.string());
    return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("LRA1: cannot open for reading: " + path.string());
    return is;
}

} // namespace

std::uint64_t ArrayHeader::element_count() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

void save_array(const std::filesystem::path& path, const double* data,
                const std::vector<std::uint64_t>& dims) {
    auto os = open_out(path);
    write_header(os, dims, Dtype::f64);
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
    if (!os) throw std::runtime_error("LRA1: write failed: " + path.string());
}

void save_array(const std::filesystem::path& path, const cplx* data,
                const std::vector<std::uint64_t>& dims) {
    auto os = open_out(path);
    write_header(os, dims, Dtype::c128);
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(cplx)));
    if (!os) throw std::runtime_error("LRA1: write failed: " + path.string());
}

ArrayHeader peek_header(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_header(is);
}

namespace {

template <typename T>
void read_payload(std::istream& is, std::vector<T>& out, std::uint64_t n) {
    out.resize(n);
    is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(n * sizeof(T)));
    if (!is) throw std::runtime_error("LRA1: truncated payload");
}

} // namespace

void load_array(const std::filesystem::path& path, std::vector<double>& out, ArrayHeader& header) {
    auto is = open_in(path);
    header = read_header(is);
    const std::uint64_t n = header.element_count();
    if (header.dtype == Dtype::f64) {
        read_payload(is, out, n);
    } else if (header.dtype == Dtype::f32) {
        std::vector<float> tmp;
        read_payload(is, tmp, n);
        out.assign(tmp.begin(), tmp.end());
    } else {
        throw std::runtime_error("LRA1: complex array loaded as real");
    }
}

void load_array(const std::filesystem::path& path, std::vector<cplx>& out, ArrayHeader& header) {
    auto is = open_in(path);
    header = read_header(is);
    const std::uint64_t n = header.element_count();
    switch (header.dtype) {
        case Dtype::c128:
            read_payload(is, out, n);
            break;
        case Dtype::c64: {
            std::vector<std::complex<float>> tmp;
            read_payload(is, tmp, n);
            out.assign(tmp.begin(), tmp.end());
            break;
        }
        case Dtype::f64: {
            std::vector<double> tmp;
            read_payload(is, tmp, n);
            out.resize(n);
            for (std::uint64_t i = 0; i < n; ++i) out[i] = tmp[i];
            break;
        }
        case Dtype::f32: {
            std::vector<float> tmp;
            read_payload(is, tmp, n);
            out.resize(n);
            for (std::uint64_t i = 0; i < n; ++i) out[i] = tmp[i];
            break;
        }
    }
    (void)dtype_size(header.dtype);
}

void save_matrix(const std::filesystem::path& path, const RMat& m) {
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMajor rm = m;
    save_array(path, rm.data(),
               {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())});
}

void save_matrix(const std::filesystem::path& path, const CMat& m) {
    using RowMajor = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMajor rm = m;
    save_array(path, rm.data(),
               {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())});
}

RMat load_rmat(const std::filesystem::path& path) {
    std::vector<double> buf;
    ArrayHeader h;
    load_array(path, buf, h);
    if (h.dims.size() != 2) throw std::runtime_error("LRA1: expected rank-2 array");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    return Eigen::Map<const RowMajor>(buf.data(), static_cast<Eigen::Index>(h.dims[0]),
                                      static_cast<Eigen::Index>(h.dims[1]));
}

CMat load_cmat(const std::filesystem::path& path) {
    std::vector<cplx> buf;
    ArrayHeader h;
    load_array(path, buf, h);
    if (h.dims.size() != 2) throw std::runtime_error("LRA1: expected rank-2 array");
    using RowMajor = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    return Eigen::Map<const RowMajor>(buf.data(), static_cast<Eigen::Index>(h.dims[0]),
                                      static_cast<Eigen::Index>(h.dims[1]));
}

} // namespace longrad
