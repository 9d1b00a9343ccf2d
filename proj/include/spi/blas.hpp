#pragma once

#include <string>

namespace spi {

/// Kernel set chosen by the BLAS library ("unknown" if it does not say).
std::string blas_core();

/// Small dgemm / dpotrf checks against naive loops, run once per
/// process. Some OpenBLAS builds select kernels that miscompute on CPUs they
/// misdetect; this catches that before any real work.
bool blas_self_test();

/// Throws spi::Error with a hint when blas_self_test() fails.
void require_working_blas();

/// For executables: if the BLAS self test fails and OPENBLAS_CORETYPE is not
/// set, re-executes the current program with a conservative kernel set.
/// Call first thing in main(). Returns normally when nothing needs doing.
void ensure_working_blas(char** argv);

}  // namespace spi
