#pragma once

#include <span>

#include "kerrbus/branch_state.hpp"
#include "kerrbus/density_matrix.hpp"

namespace kerrbus {

enum class Parity { Even, Odd, Indeterminate };

/// Closed-form error predictions for one operating point.
struct ErrorBudget {
    double pErrTwoPeak = 0.0;     // 1/2 erfc(alpha sin(theta) / sqrt(2))
    double pErrTotalBound = 0.0;  // erfc(alpha sin(theta) / sqrt(2))
    double parityMisclass = 0.0;  // exp(-2 (1-eta^2) alpha^2 (1-cos theta))
    double gamma = 0.0;           // eta^2 alpha^2 (1-cos theta)
    double lambdaPlus = 1.0;
    double lambdaMinus = 0.0;
    double meanOddPhotons = 0.0;  // 2 (1-eta^2) alpha^2 (1-cos theta)
};

struct HomodyneError {
    double twoPeak;
    double totalBound;
};

/// Midpoint discrimination error of the homodyne photon detector.
HomodyneError homodyne_error(double alpha, double theta);

/// Exact midpoint-rule misclassification for unit-variance Gaussian peaks at
/// the given means (ascending) with the given prior weights. For sine-spaced
/// detector peaks the upper gaps shrink, so this can slightly exceed the
/// erfc(alpha sin theta / sqrt 2) figure quoted as the multi-peak bound.
double exact_misclassification(std::span<const double> peakMeans,
                               std::span<const double> weights);

/// Poisson heralding law: exp(-alphaA^2) alphaA^(2n) / n!.
double heralding_prob(double alphaA, int n);

struct LossParams {
    double gamma;
    double lambdaPlus;
    double lambdaMinus;
    double meanOddPhotons;
};
LossParams loss_params(double eta, double alpha, double theta);

/// Probability that an odd-parity branch yields n_p = 0 after displacement.
double parity_misclass(double alpha, double theta, double eta);

/// Conditional phase acquired per measured probe photon on the odd branches.
///
/// paperValue   = n_p atan(cot(theta/2)) = n_p (pi/2 - theta/2), the published
///                expression.
/// feedForward  = n_p (pi/2 + theta/2) = n_p arg[alpha (e^{i theta} - 1)], the
///                value the Fock oracle pins down and the one the parity-gate
///                corrections use. The two coincide mod 2 pi only at theta -> 0
///                (both reduce to +/- n_p pi/2).
struct PhiCorrection {
    double paperValue;
    double feedForward;
};
PhiCorrection phi_correction(int nP, double theta);

ErrorBudget error_budget(double alpha, double theta, double eta);

/// Predicted two-qubit mixed state after a lossy parity gate on the product
/// input (cPlus|H> + cMinus|V>) (x) (dPlus|H> + dMinus|V>), conditioned on the
/// given outcome and with all deterministic phase corrections applied.
/// Normalized; basis order HH, HV, VH, VV.
DensityMatrix predicted_mixture(Cx cPlus, Cx cMinus, Cx dPlus, Cx dMinus, double eta,
                                double alpha, double theta, Parity outcome);

/// <psi|rho|psi> for an (unnormalized accepted) pure target.
double fidelity(const DensityMatrix& rho, std::span<const Cx> pure);

/// Wootters concurrence of a two-qubit density matrix via the spin-flip
/// construction max{0, l1 - l2 - l3 - l4}.
double concurrence(const DensityMatrix& rho);

}  // namespace kerrbus
