#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "longrad/types.hpp"

namespace longrad {

// Binary array container ("LRA1"):
//   4 magic bytes "LRA1"
//   u64 rank                (little-endian)
//   u64 dims[rank]
//   u64 dtype code          (0 = f32, 1 = f64, 2 = c64, 3 = c128)
//   payload, row-major, little-endian
enum class Dtype : std::uint64_t { f32 = 0, f64 = 1, c64 = 2, c128 = 3 };

struct ArrayHeader {
    std::vector<std::uint64_t> dims;
    Dtype dtype = Dtype::f64;
    std::uint64_t element_count() const;
};

void save_array(const std::filesystem::path& path, const double* data,
                const std::vector<std::uint64_t>& dims);
void save_array(const std::filesystem::path& path, const cplx* data,
                const std::vector<std::uint64_t>& dims);

ArrayHeader peek_header(const std::filesystem::path& path);

// Loads into f64/c128 regardless of the stored precision.
void load_array(const std::filesystem::path& path, std::vector<double>& out,
                ArrayHeader& header);
void load_array(const std::filesystem::path& path, std::vector<cplx>& out,
                ArrayHeader& header);

// Eigen helpers. Matrices are stored as [rows, cols] row-major.
void save_matrix(const std::filesystem::path& path, const RMat& m);
void save_matrix(const std::filesystem::path& path, const CMat& m);
RMat load_rmat(const std::filesystem::path& path);
CMat load_cmat(const std::filesystem::path& path);

} // namespace longrad
