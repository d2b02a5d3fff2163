#include "kerrbus/density_matrix.hpp"

#include <stdexcept>

namespace kerrbus {

double DensityMatrix::trace_error() const {
    return std::abs(m_.trace() - std::complex<double>(1.0, 0.0));
}

double DensityMatrix::hermiticity_error() const {
    return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
}

Eigen::VectorXd DensityMatrix::eigenvalues() const {
    Eigen::MatrixXcd herm = 0.5 * (m_ + m_.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("DensityMatrix::eigenvalues: solver failed");
    return solver.eigenvalues();
}

double DensityMatrix::min_eigenvalue() const { return eigenvalues().minCoeff(); }

double DensityMatrix::fidelity(std::span<const std::complex<double>> pure) const {
    if (static_cast<int>(pure.size()) != dim())
        throw std::invalid_argument("DensityMatrix::fidelity: dimension mismatch");
    Eigen::VectorXcd psi(dim());
    for (int i = 0; i < dim(); ++i) psi(i) = pure[i];
    const double n = psi.squaredNorm();
    if (n <= 0.0) throw std::invalid_argument("DensityMatrix::fidelity: zero target");
    psi /= std::sqrt(n);
    return std::real(psi.dot(m_ * psi));  // Eigen's dot conjugates the left side
}

double DensityMatrix::max_entry_difference(const DensityMatrix& other) const {
    if (other.dim() != dim())
        throw std::invalid_argument("DensityMatrix::max_entry_difference: dimension mismatch");
    return (m_ - other.m_).cwiseAbs().maxCoeff();
}

}  // namespace kerrbus
