#pragma once

#include <Eigen/Dense>
#include <complex>
#include <span>

namespace kerrbus {

/// Reduced density matrix of a discrete register. Thin wrapper over an Eigen
/// matrix with the checks the rest of the code keeps asserting.
class DensityMatrix {
public:
    DensityMatrix() = default;
    explicit DensityMatrix(Eigen::MatrixXcd m) : m_(std::move(m)) {}

    int dim() const { return static_cast<int>(m_.rows()); }
    const Eigen::MatrixXcd& matrix() const { return m_; }
    Eigen::MatrixXcd& matrix() { return m_; }

    std::complex<double> entry(int r, int c) const { return m_(r, c); }
    double trace_error() const;        // |tr(rho) - 1|
    double hermiticity_error() const;  // max_ij |rho_ij - conj(rho_ji)|
    /// Real eigenvalues of the Hermitian part, ascending.
    Eigen::VectorXd eigenvalues() const;
    double min_eigenvalue() const;
    /// <psi|rho|psi> for a pure target state.
    double fidelity(std::span<const std::complex<double>> pure) const;
    /// max_ij |a_ij - b_ij|.
    double max_entry_difference(const DensityMatrix& other) const;

private:
    Eigen::MatrixXcd m_;
};

}  // namespace kerrbus
