#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace kerrbus {

using Cx = std::complex<double>;

/// <alpha|beta> = exp(-|alpha|^2/2 - |beta|^2/2 + conj(alpha)*beta).
Cx coherent_overlap(Cx alpha, Cx beta);

/// <n|alpha> = exp(-|alpha|^2/2) alpha^n / sqrt(n!).
Cx coherent_fock_amplitude(Cx alpha, int n);

enum class DiscreteKind { Qubit, Fock };

struct DiscreteMode {
    DiscreteKind kind = DiscreteKind::Qubit;
    int dim = 2;
};

enum class BusKind { Bus, Environment };
enum class BusStatus { Active, Consumed };

struct ModeInfo {
    BusKind kind = BusKind::Bus;
    BusStatus status = BusStatus::Active;
};

/// One term of the global superposition: amplitude * |reg> * prod_m |bus[m]>.
/// `bus` holds one coherent amplitude per *active* bus/environment mode, in
/// mode-table order; consumed modes have no entry.
struct Branch {
    Cx amplitude;
    std::vector<int> reg;
    std::vector<Cx> bus;
};

/// 2x2 unitary, u[row = new value][col = old value].
using Mat2 = std::array<std::array<Cx, 2>, 2>;

inline Mat2 mat2_dagger(const Mat2& u) {
    return Mat2{{{std::conj(u[0][0]), std::conj(u[1][0])},
                 {std::conj(u[0][1]), std::conj(u[1][1])}}};
}

Mat2 pauli_x();
Mat2 pauli_y();
Mat2 pauli_z();
Mat2 hadamard();
/// diag(e^{i phi0}, e^{i phi1}) on the computational basis.
Mat2 phase_diag(double phi0, double phi1);

class DensityMatrix;

/// Exact state of the form sum_k c_k |reg_k> (x) prod_m |alpha_{k,m}>.
///
/// Registers are small non-negative integers (qubits use 0 = H, 1 = V); bus
/// amplitudes are unconstrained, which is what makes this representation
/// usable in the large-|alpha|, small-theta regime a truncated Fock tensor
/// cannot reach. Unitary primitives (register unitary, cross-Kerr, phase,
/// displacement) and the purified loss channel act branchwise and preserve
/// the total norm; mixing only ever appears when the Gram matrix of branch
/// overlaps is consumed (reduced density matrices, measurement statistics).
class CoherentBranchState {
public:
    CoherentBranchState() = default;

    /// Dense register state over the given discrete modes, no bus modes.
    static CoherentBranchState register_state(std::vector<DiscreteMode> modes,
                                              std::span<const Cx> amplitudes);

    // --- mode management -------------------------------------------------
    /// Appends a qubit in state c0|0> + c1|1>; returns its mode index.
    int add_qubit(Cx c0, Cx c1);
    /// Appends a discrete mode in the given pure state; returns its index.
    int add_discrete(const DiscreteMode& mode, std::span<const Cx> amplitudes);
    /// Appends a fresh bus mode in |alpha>; returns its mode id.
    int add_bus(Cx alpha);
    /// Removes a discrete mode whose value is the same in every branch.
    void remove_discrete_mode(int mode);

    // --- accessors --------------------------------------------------------
    int discrete_mode_count() const { return static_cast<int>(discrete_.size()); }
    int bus_mode_count() const { return static_cast<int>(busModes_.size()); }
    int branch_count() const { return static_cast<int>(branches_.size()); }
    const DiscreteMode& discrete_mode(int m) const;
    const ModeInfo& bus_info(int m) const;
    const std::vector<Branch>& branches() const { return branches_; }
    double norm_tolerance() const { return normTolerance_; }
    void set_norm_tolerance(double t) { normTolerance_ = t; }
    /// Index into Branch::bus for an active mode; throws if consumed.
    int bus_column(int busMode) const;

    // --- unitary / isometric primitives ------------------------------------
    /// Applies a 2x2 unitary to a qubit mode. Throws if u is not unitary
    /// within 1e-12. Duplicate branches produced by the split are merged.
    void apply_register_unitary(int discreteMode, const Mat2& u);
    /// alpha -> alpha e^{i n theta} on busMode, n = register value of
    /// discreteMode in each branch. Branch amplitudes are untouched:
    /// e^{i phi n_hat}|alpha> = |alpha e^{i phi}> exactly.
    void cross_kerr(int discreteMode, int busMode, double theta);
    /// Same interaction restricted to the which-path component reg == value
    /// (a polarization qubit routed through a PBS so only one arm sees the
    /// nonlinearity).
    void cross_kerr_on_value(int discreteMode, int value, int busMode, double theta);
    /// alpha -> alpha e^{i phi} on every branch.
    void bus_phase(int busMode, double phi);
    /// D(beta): alpha -> alpha + beta with branch phase e^{i Im(beta alpha*)}.
    ///
    /// The phase convention is the one generated by exp(beta a^dag - beta* a)
    /// and is pinned against the Fock-basis displacement operator; with the
    /// opposite sign the two-branch displacement test fails.
    void displace(int busMode, Cx beta);
    /// Beam-splitter loss of amplitude reflectivity eta in [0, 1]: the bus
    /// keeps sqrt(1-eta^2) alpha, a new environment mode records eta alpha.
    /// The global state stays pure; decoherence enters through environment
    /// overlaps. Returns the environment mode id.
    int loss_channel(int busMode, double eta);

    // --- norm, structure, reduction ----------------------------------------
    /// <psi|psi> = sum_{jk} conj(c_j) c_k <branch_j|branch_k>.
    double norm_squared() const;
    /// Rescales so norm_squared() == 1; checks the result against the norm
    /// tolerance. Throws if the state has vanished (impossible conditioning).
    void normalize();
    /// Merges duplicate branches (equal register, bus amplitudes equal after
    /// rounding at tol) and drops branches with |amplitude| <= tol.
    void prune(double tol = kMergeTolerance);
    /// <a|b>: Kronecker delta on registers times per-mode coherent overlaps.
    Cx branch_overlap(const Branch& a, const Branch& b) const;
    /// rho over the given discrete modes; everything else is traced out.
    /// Index order: first listed mode is the most significant digit.
    DensityMatrix reduced_density_matrix(std::span<const int> modes) const;

    // --- conditioning hooks used by the measurement layer -------------------
    std::vector<Cx> bus_amplitudes(int busMode) const;
    /// amplitude_i *= factors[i] (one entry per branch).
    void weight_branches(std::span<const Cx> factors);
    /// Drops the mode's amplitude column and marks it consumed.
    void consume_bus(int busMode);
    /// Keeps only branches with reg[mode] == value (no renormalization).
    void project_register(int discreteMode, int value);

    /// Sorts branches by register then bus values (canonical order).
    void canonical_sort();
    /// One line per branch: amplitude, register tuple, bus amplitudes, in
    /// canonical order with 17 significant digits.
    void dump(std::ostream& os) const;

    static constexpr double kMergeTolerance = 1e-12;

private:
    void require_active_bus(int busMode, bool allowEnvironment = false) const;

    std::vector<DiscreteMode> discrete_;
    std::vector<ModeInfo> busModes_;
    std::vector<Branch> branches_;
    double normTolerance_ = 1e-9;
};

/// Largest branchwise deviation between two states with identical mode
/// tables, after canonical ordering. Infinity if structures differ.
double max_branch_difference(const CoherentBranchState& a, const CoherentBranchState& b);

}  // namespace kerrbus
