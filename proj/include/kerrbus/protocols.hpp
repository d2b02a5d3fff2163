#pragma once

#include <optional>
#include <vector>

#include "kerrbus/analytics.hpp"
#include "kerrbus/branch_state.hpp"
#include "kerrbus/measurement.hpp"
#include "kerrbus/rng.hpp"

namespace kerrbus {

enum class CorrectionReason {
    PhiCorrection,            // measurement-dependent odd-branch phase
    StaticDisplacementPhase,  // displacement phase, fixed by (alpha, theta, eta)
    LossyPhaseCorrection,     // environment-overlap phase eta^2 alpha^2 sin(theta)
    BitFlip,
    SignFlip,
};

struct FeedForwardEntry {
    int targetMode = 0;
    Mat2 unitary{};
    CorrectionReason reason = CorrectionReason::BitFlip;
};

/// Ordered log of classically conditioned corrections. Applying the inverses
/// in reverse order restores the pre-correction state.
struct FeedForwardRecord {
    std::vector<FeedForwardEntry> entries;
    void apply(CoherentBranchState& state) const;
    void apply_inverse(CoherentBranchState& state) const;
};

/// Operating point and options of the coherent-bus parity gate.
struct ParityGateConfig {
    double alpha = 600.0;  // probe amplitude; mean odd count 2(1-eta^2)a^2(1-cos t)
    double theta = 0.01;   // total cross-Kerr strength
    double eta = 0.0;      // channel loss (amplitude reflectivity)

    enum class Measurement { PhotonCount, HomodyneX0 } measurement = Measurement::PhotonCount;
    enum class Basis { Computational, Diagonal } basis = Basis::Computational;

    bool applyStaticPhaseCorrection = true;
    bool applyFeedForward = true;
    /// Gate reports degraded operation when the even/odd separation (mean odd
    /// photon count, or peak distance in sigma units for homodyne) is below
    /// this. The indeterminate window for lossy operation lives in
    /// photon.indeterminateThreshold.
    double minSeparation = 5.0;

    HomodyneSetting homodyne{};
    PhotonCountSetting photon{};

    double transmission() const;     // sqrt(1 - eta^2)
    double mean_odd_photons() const; // 2 (1-eta^2) alpha^2 (1-cos theta)
    double separation() const;       // measurement-appropriate separation
};

struct ParityOutcome {
    Parity parity = Parity::Indeterminate;
    MeasurementOutcome record{};
    FeedForwardRecord corrections{};
    bool degraded = false;
};

/// Link-level error model: channel loss plus optional overrides of the gate
/// operating point, resolved against a base configuration.
struct ErrorModelParams {
    double eta = 0.0;
    std::optional<double> alpha;
    std::optional<double> theta;
    /// Returns `base` with this link's loss and overrides applied; throws on
    /// out-of-range values.
    ParityGateConfig applied_to(ParityGateConfig base) const;
};

/// Forced measurement result, for exact conditioning paths and replays.
struct ForcedParityMeasurement {
    std::optional<int> photonCount;
    std::optional<double> quadrature;
};

/// Two-qubit QND parity gate over a coherent bus: Kerr on A's H path, channel
/// loss, Kerr on B's V path, -theta linear phase, then displacement +
/// photon counting (default) or x(0) homodyne. The classified outcome projects
/// the qubits onto the corresponding parity span (even: {HH, VV}, odd:
/// {HV, VH}); the discarded cross-parity tail has mass <= e^{-mean odd count},
/// the misclassification probability. Corrections remove the displacement,
/// measurement and loss phases so the surviving amplitudes come out unrotated.
ParityOutcome parity_gate(CoherentBranchState& state, int qubitA, int qubitB,
                          const ParityGateConfig& cfg, RngStream& rng);
ParityOutcome parity_gate_forced(CoherentBranchState& state, int qubitA, int qubitB,
                                 const ParityGateConfig& cfg,
                                 const ForcedParityMeasurement& forced);

// --- QND photon detector / heralded source --------------------------------

struct DetectorResult {
    int estimate = 0;
    MeasurementOutcome record{};
    CoherentBranchState conditioned{};
};

/// Signal register + probe |alpha>, cross-Kerr, x(xi) homodyne, midpoint
/// classification against the peaks 2 Re(alpha e^{i n theta} e^{i xi}).
/// The grid and inverse CDF are built once, so repeated run() calls are cheap.
/// When theta = 0 (all peaks coincide) the measurement carries no information
/// and the estimate is drawn from the prior |c_n|^2 (a blind guess).
class QndDetector {
public:
    QndDetector(std::vector<Cx> signalAmplitudes, double alpha, double theta,
                double xi = M_PI_2, HomodyneSetting setting = {});

    DetectorResult run(RngStream& rng) const;
    const std::vector<double>& peak_means() const { return peakByN_; }
    bool degenerate_peaks() const { return degenerate_; }

private:
    CoherentBranchState postKerr_;
    std::optional<HomodyneSampler> sampler_;
    double xi_;
    int busMode_ = 0;
    std::vector<double> peakByN_;
    std::vector<double> sortedPeaks_;
    std::vector<int> peakToN_;
    std::vector<double> priorCdf_;
    bool degenerate_ = false;
};

DetectorResult qnd_photon_detect(std::span<const Cx> signalAmplitudes, double alpha, double theta,
                                 double xi, RngStream& rng);

struct HeraldResult {
    int heraldN = 0;
    CoherentBranchState conditioned{};
};

/// Weak coherent state |alpha_a> in the signal mode of the QND detector; the
/// probe measurement heralds the projected photon number.
class HeraldedSource {
public:
    HeraldedSource(double alphaA, int signalCutoff /* <= 0 selects automatically */,
                   double alpha, double theta, double xi = M_PI_2, HomodyneSetting setting = {});
    HeraldResult run(RngStream& rng) const;
    int signal_cutoff() const { return cutoff_; }

private:
    int cutoff_ = 0;
    std::optional<QndDetector> detector_;
};

HeraldResult prepare_heralded_photon(double alphaA, int signalCutoff, double alpha, double theta,
                                     RngStream& rng);

// --- gate-level protocols ---------------------------------------------------

struct BellPairResult {
    bool success = false;
    CoherentBranchState state{};
    ParityOutcome outcome{};
};

/// Parity gate on |H>+|V>, |H>+|V>; odd outcomes are folded back to
/// (|HH> + |VV>)/sqrt(2) by a recorded bit flip on the second qubit.
BellPairResult make_bell_pair(const ParityGateConfig& cfg, RngStream& rng);

struct CnotOptions {
    bool applyProtocolCorrections = true;
    std::optional<Parity> forceBellGen;
    std::optional<Parity> forceParity1;
    std::optional<int> forceAMeasurement;  // 0 = D, 1 = Dbar
    std::optional<Parity> forceParity2;
    std::optional<int> forceBMeasurement;  // 0 = H, 1 = V
};

struct CnotResult {
    bool success = false;
    Parity bellGenParity = Parity::Indeterminate;
    Parity parity1 = Parity::Indeterminate;
    Parity parity2 = Parity::Indeterminate;
    int aMeasurement = 0;
    int bMeasurement = 0;
    FeedForwardRecord corrections;
};

/// Near-deterministic CNOT: ancilla Bell pair, computational-basis parity gate
/// on (control, ancilla a), D/Dbar measurement of a, diagonal-basis parity
/// gate on (target, ancilla b), computational measurement of b, with the
/// frozen feed-forward table
///   parity1 odd   -> X on b        aMeas = Dbar -> Z on b
///   parity2 odd   -> Z on b, Z on control
///   bMeas = V     -> X on target.
/// Ancilla modes are created inside `state` and removed after measurement.
CnotResult cnot(CoherentBranchState& state, int control, int target,
                const ParityGateConfig& cfg, RngStream& rng, const CnotOptions& options = {});

enum class BellIndex { PhiPlus, PhiMinus, PsiPlus, PsiMinus };
std::array<Cx, 4> bell_state_vector(BellIndex index);

struct BellMeasurementResult {
    bool success = false;
    Parity parity1 = Parity::Indeterminate;
    Parity parity2 = Parity::Indeterminate;
    BellIndex index = BellIndex::PhiPlus;
    ParityOutcome gate1{};
    ParityOutcome gate2{};
};

/// Non-destructive Bell measurement: computational-basis parity gate followed
/// by a diagonal-basis parity gate. (even, even) -> Phi+, (even, odd) -> Phi-,
/// (odd, even) -> Psi+, (odd, odd) -> Psi-; the qubits survive in the
/// identified Bell state.
BellMeasurementResult bell_measurement(CoherentBranchState& state, int qubitA, int qubitB,
                                       const ParityGateConfig& cfg, RngStream& rng);

struct FusionResult {
    bool fused = false;
    ParityOutcome outcome{};
};

/// Cluster fusion by parity gate. Even outcomes fuse directly; odd outcomes
/// get a recorded bit flip on qubitB. Remaining graph-dependent sign fixes
/// (Z on the fused qubit's neighbours) are Pauli-frame bookkeeping left to
/// the caller.
FusionResult fuse_clusters(CoherentBranchState& state, int qubitA, int qubitB,
                           const ParityGateConfig& cfg, RngStream& rng);

}  // namespace kerrbus
