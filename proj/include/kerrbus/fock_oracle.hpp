#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "kerrbus/branch_state.hpp"

namespace kerrbus {

/// Dense truncated-Fock tensor state: axes are the discrete modes of the
/// source state followed by one axis per active bus/environment mode. Used
/// only for validation at small amplitude; it is allowed to be slow.
class FockState {
public:
    FockState(std::vector<int> dims);

    int axis_count() const { return static_cast<int>(dims_.size()); }
    int dim(int axis) const { return dims_.at(axis); }
    const std::vector<int>& dims() const { return dims_; }
    std::vector<Cx>& amplitudes() { return amp_; }
    const std::vector<Cx>& amplitudes() const { return amp_; }

    double norm_squared() const;
    void normalize();
    /// Applies a dim x dim one-axis operator (row-major m[new][old]).
    void apply_axis_operator(int axis, const Eigen::MatrixXcd& m);
    /// Drops `axis`, keeping only index value `n` (no renormalization).
    void slice_axis(int axis, int n);

    std::size_t stride(int axis) const;

private:
    std::vector<int> dims_;
    std::vector<Cx> amp_;
};

/// Hard regime cap for the oracle: coherent amplitudes above this are refused.
inline constexpr double kOracleMaxAmplitude = 3.0;

/// Coherent expansion of a branch state. `busCutoffs` lists the Fock cutoff
/// (axis dimension) for each active bus/environment mode, in bus-table order
/// restricted to active modes. Enforces |alpha| <= 3 everywhere.
FockState expand(const CoherentBranchState& state, std::span<const int> busCutoffs);

/// Axis index of a discrete mode / of an active bus mode in the expansion.
int fock_discrete_axis(const CoherentBranchState& state, int discreteMode);
int fock_bus_axis(const CoherentBranchState& state, int busMode);

// Oracle twins of the branch primitives. Semantics match bit for bit; all of
// them act on tensor axes.
void oracle_cross_kerr(FockState& st, int discreteAxis, int busAxis, double theta);
void oracle_cross_kerr_on_value(FockState& st, int discreteAxis, int value, int busAxis,
                                double theta);
void oracle_bus_phase(FockState& st, int busAxis, double phi);
void oracle_displace(FockState& st, int busAxis, Cx beta);
void oracle_register_unitary(FockState& st, int discreteAxis, const Mat2& u);
/// Appends an environment axis of dimension envDim and applies the two-mode
/// number-preserving rotation exp[phi (a b^dag - a^dag b)], phi = asin(eta):
/// |alpha>|0> -> |sqrt(1-eta^2) alpha>|eta alpha>. Returns the new axis.
int oracle_beam_splitter(FockState& st, int busAxis, double eta, int envDim);

std::vector<double> oracle_photon_pmf(const FockState& st, int busAxis);
double oracle_homodyne_pdf(const FockState& st, int busAxis, double xi, double x);

/// Conditioning used for end-to-end replays. Both return the outcome
/// probability (mass / density) and renormalize; the photon version removes
/// the measured axis.
double oracle_condition_photon(FockState& st, int busAxis, int n);
double oracle_condition_quadrature(FockState& st, int busAxis, double xi, double x);

Cx fock_inner(const FockState& a, const FockState& b);
double fock_fidelity(const FockState& a, const FockState& b);

/// <m|D(beta)|n> from the closed-form associated-Laguerre matrix elements of
/// D(beta) = exp(beta a^dag - beta* a).
Eigen::MatrixXcd displacement_matrix(int dim, Cx beta);

/// <x|n> for the quadrature x(xi) = a e^{i xi} + a^dag e^{-i xi}
/// (orthonormal Hermite functions; vacuum variance 1).
std::vector<Cx> quadrature_wavefunctions(int dim, double xi, double x);

}  // namespace kerrbus
