#pragma once

// Independent reference implementations used only by the tests. They use
// Eigen and naive O(n^2)..O(n^3) algorithms on purpose.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "spi/core.hpp"

namespace oracle {

using MatrixXd = Eigen::MatrixXd;
using MatrixXcd = Eigen::MatrixXcd;
using VectorXd = Eigen::VectorXd;

MatrixXd to_eigen(const spi::RealMatrix& m);
spi::RealMatrix from_eigen(const MatrixXd& m);

/// Gaussian random matrix, entries N(0, 1).
spi::RealMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// Pseudoinverse through a full SVD, dropping singular values <= tol * s_0.
MatrixXd pinv(const MatrixXd& m, double tol = 1e-10);

/// H_m from the Kronecker recursion H_2m = H_2 (x) H_m.
MatrixXcd kronecker_power(const Eigen::Matrix2cd& h2, std::size_t m);
Eigen::Matrix2cd walsh_kernel();
Eigen::Matrix2cd noiselet_kernel();

/// Direct O(n^2) 2D DFT, forward sign -1, unnormalized.
std::vector<std::complex<double>> dft2(const std::vector<std::complex<double>>& in, std::size_t w, std::size_t h);

/// Isotropic TV minimizer subject to A x = b (A with orthonormal rows), by
/// projected subgradient descent with diminishing steps. Slow but simple.
std::vector<double> tv_projected_subgradient(const MatrixXd& a, const VectorXd& b, std::size_t w, std::size_t h,
                                             std::size_t iterations);

/// Isotropic TV, forward differences, zero difference at the far edges.
double tv(const std::vector<double>& x, std::size_t w, std::size_t h);

/// Test corpus directory (data/corpus/<which>), from SPI_TEST_DATA.
std::filesystem::path corpus_dir(const char* which);

}  // namespace oracle
