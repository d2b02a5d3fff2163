#pragma once

#include <span>
#include <vector>

#include "kerrbus/branch_state.hpp"
#include "kerrbus/rng.hpp"

namespace kerrbus {

/// Homodyne grid configuration for x(xi) = a e^{i xi} + a^dag e^{-i xi}.
/// The sampling grid spans [min peak mean - gridHalfWidth, max peak mean +
/// gridHalfWidth]; with the defaults the tail mass left outside is < 1e-23.
struct HomodyneSetting {
    double xi = 0.0;
    double gridHalfWidth = 10.0;  // >= 10 required
    double gridStep = 0.01;       // <= 0.01 required
};

/// Photon-counting configuration. nMax <= 0 selects the safe cutoff
/// ceil(|alpha|^2 + 10 sqrt(|alpha|^2) + 20); an explicit value below that
/// rule is rejected. Counts in [1, indeterminateThreshold) are reported as
/// indeterminate by the parity gate (default: none).
struct PhotonCountSetting {
    int nMax = 0;
    int indeterminateThreshold = 1;
};

struct MeasurementOutcome {
    enum class Kind { Quadrature, PhotonCount } kind = Kind::PhotonCount;
    double quadrature = 0.0;
    int photonCount = 0;
    /// pdf value for quadratures, probability mass for counts.
    double probability = 0.0;
};

/// <x|alpha> for the quadrature x(xi): with at = alpha e^{i xi},
/// (2 pi)^{-1/4} exp(-(x - 2 Re at)^2/4 + i Im(at) x - i Re(at) Im(at)).
/// |.|^2 is a unit-variance Gaussian centered at 2 Re(at).
Cx quadrature_amplitude(double x, Cx alpha, double xi);

/// Exact probability density of measuring x(xi) = x on busMode.
double homodyne_pdf(const CoherentBranchState& state, int busMode, const HomodyneSetting& s,
                    double x);

/// Grid inverse-CDF sampler for repeated draws from one prepared state.
/// Building the grid is the expensive part; sample() is cheap.
class HomodyneSampler {
public:
    HomodyneSampler(const CoherentBranchState& state, int busMode, const HomodyneSetting& s);

    double sample(RngStream& rng) const;
    double density(double x) const;
    double grid_mass() const { return mass_; }
    double grid_min() const { return x0_; }
    double grid_max() const { return x0_ + step_ * (static_cast<double>(cdf_.size()) - 1.0); }

private:
    struct Pair {
        int j, k;
        Cx weight;  // c_j conj(c_k) * overlap on all other modes (j < k)
    };
    std::vector<Cx> alphas_;       // per-branch amplitude on the measured mode
    std::vector<double> diag_;     // |c_j|^2 * (self overlap on other modes == 1)
    std::vector<Pair> cross_;
    double xi_ = 0.0;
    double x0_ = 0.0;
    double step_ = 0.01;
    double mass_ = 0.0;
    std::vector<double> pdf_;
    std::vector<double> cdf_;
};

/// Multiplies branch amplitudes by <x|alpha_k>, consumes the mode and
/// renormalizes. Returns the pdf value at x.
double homodyne_condition(CoherentBranchState& state, int busMode, double xi, double x);

/// One-shot homodyne measurement: sample + condition.
MeasurementOutcome homodyne_sample(CoherentBranchState& state, int busMode,
                                   const HomodyneSetting& s, RngStream& rng);

/// P(n) for a QND photon-number measurement of busMode, n = 0..nMax.
std::vector<double> photon_number_pmf(const CoherentBranchState& state, int busMode,
                                      const PhotonCountSetting& s);
double photon_number_pmf(const CoherentBranchState& state, int busMode,
                         const PhotonCountSetting& s, int n);
/// Effective cutoff the setting resolves to for this state.
int photon_cutoff(const CoherentBranchState& state, int busMode, const PhotonCountSetting& s);

/// Samples n by inverse CDF, multiplies branch amplitudes by <n|alpha_k>,
/// consumes the mode and renormalizes.
MeasurementOutcome photon_number_measure(CoherentBranchState& state, int busMode,
                                         const PhotonCountSetting& s, RngStream& rng);
/// Deterministic conditioning on a given count; returns its probability mass.
double condition_photon_number(CoherentBranchState& state, int busMode, int n);

/// Midpoint discrimination: index of the peak whose midpoint bin contains x;
/// ties on a boundary go to the lower index. peakMeans must be strictly
/// ascending.
int classify_peaks(double x, std::span<const double> peakMeans);

/// Projective measurement of a discrete register mode (computational basis).
struct RegisterOutcome {
    int value = 0;
    double probability = 0.0;
};
RegisterOutcome measure_discrete(CoherentBranchState& state, int discreteMode, RngStream& rng);
double condition_discrete(CoherentBranchState& state, int discreteMode, int value);

}  // namespace kerrbus
