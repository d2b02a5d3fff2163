#include "kerrbus/analytics.hpp"

#include <cmath>
#include <stdexcept>

namespace kerrbus {

namespace {

// 1 - cos(theta) without cancellation.
double one_minus_cos(double theta) {
    const double s = std::sin(0.5 * theta);
    return 2.0 * s * s;
}

}  // namespace

HomodyneError homodyne_error(double alpha, double theta) {
    if (!(alpha > 0.0)) throw std::invalid_argument("homodyne_error: alpha must be > 0");
    const double z = std::abs(alpha * std::sin(theta)) / std::sqrt(2.0);
    const double total = std::erfc(z);
    return HomodyneError{0.5 * total, total};
}

double exact_misclassification(std::span<const double> peakMeans, std::span<const double> weights) {
    if (peakMeans.empty() || peakMeans.size() != weights.size())
        throw std::invalid_argument("exact_misclassification: need one weight per peak");
    for (std::size_t i = 0; i + 1 < peakMeans.size(); ++i)
        if (!(peakMeans[i] < peakMeans[i + 1]))
            throw std::invalid_argument("exact_misclassification: peaks must be ascending");
    double total = 0.0;
    for (std::size_t i = 0; i < peakMeans.size(); ++i) {
        double p = 0.0;
        if (i > 0) {
            const double d = peakMeans[i] - 0.5 * (peakMeans[i - 1] + peakMeans[i]);
            p += 0.5 * std::erfc(d / std::sqrt(2.0));
        }
        if (i + 1 < peakMeans.size()) {
            const double d = 0.5 * (peakMeans[i] + peakMeans[i + 1]) - peakMeans[i];
            p += 0.5 * std::erfc(d / std::sqrt(2.0));
        }
        total += weights[i] * p;
    }
    return total;
}

double heralding_prob(double alphaA, int n) {
    if (n < 0) throw std::invalid_argument("heralding_prob: n < 0");
    const double mean = alphaA * alphaA;
    if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
    return std::exp(-mean + n * std::log(mean) - std::lgamma(n + 1.0));
}

LossParams loss_params(double eta, double alpha, double theta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("loss_params: eta outside [0,1]");
    const double omc = one_minus_cos(theta);
    const double gamma = eta * eta * alpha * alpha * omc;
    const double e = std::exp(-gamma);
    return LossParams{gamma, 0.5 * (1.0 + e), 0.5 * (1.0 - e),
                      2.0 * (1.0 - eta * eta) * alpha * alpha * omc};
}

double parity_misclass(double alpha, double theta, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0))
        throw std::invalid_argument("parity_misclass: eta outside [0,1]");
    return std::exp(-2.0 * (1.0 - eta * eta) * alpha * alpha * one_minus_cos(theta));
}

PhiCorrection phi_correction(int nP, double theta) {
    if (nP < 0) throw std::invalid_argument("phi_correction: n_p < 0");
    const double half = 0.5 * theta;
    return PhiCorrection{nP * std::atan(1.0 / std::tan(half)), nP * (M_PI_2 + half)};
}

ErrorBudget error_budget(double alpha, double theta, double eta) {
    const HomodyneError he = homodyne_error(alpha, theta);
    const LossParams lp = loss_params(eta, alpha, theta);
    ErrorBudget b;
    b.pErrTwoPeak = he.twoPeak;
    b.pErrTotalBound = he.totalBound;
    b.parityMisclass = parity_misclass(alpha, theta, eta);
    b.gamma = lp.gamma;
    b.lambdaPlus = lp.lambdaPlus;
    b.lambdaMinus = lp.lambdaMinus;
    b.meanOddPhotons = lp.meanOddPhotons;
    return b;
}

DensityMatrix predicted_mixture(Cx cPlus, Cx cMinus, Cx dPlus, Cx dMinus, double eta,
                                double alpha, double theta, Parity outcome) {
    const LossParams lp = loss_params(eta, alpha, theta);
    Eigen::Vector4cd plus = Eigen::Vector4cd::Zero();
    Eigen::Vector4cd minus = Eigen::Vector4cd::Zero();
    // Basis order HH, HV, VH, VV. The +/- pair are the projected amplitudes
    // with a relative sign on the second slot; mixing them with weights
    // lambda_{+/-} = (1 +/- e^{-gamma})/2 reproduces coherence damping by
    // e^{-gamma} for arbitrary complex inputs.
    if (outcome == Parity::Even) {
        plus(0) = cPlus * dPlus;
        plus(3) = cMinus * dMinus;
        minus(0) = plus(0);
        minus(3) = -plus(3);
    } else if (outcome == Parity::Odd) {
        plus(1) = cPlus * dMinus;
        plus(2) = cMinus * dPlus;
        minus(1) = plus(1);
        minus(2) = -plus(2);
    } else {
        throw std::invalid_argument("predicted_mixture: indeterminate outcome");
    }
    Eigen::Matrix4cd rho = lp.lambdaPlus * (plus * plus.adjoint()) +
                           lp.lambdaMinus * (minus * minus.adjoint());
    const double tr = rho.trace().real();
    if (!(tr > 0.0))
        throw std::invalid_argument("predicted_mixture: outcome has zero probability");
    return DensityMatrix(Eigen::MatrixXcd(rho / tr));
}

double fidelity(const DensityMatrix& rho, std::span<const Cx> pure) {
    return rho.fidelity(pure);
}

double concurrence(const DensityMatrix& rho) {
    if (rho.dim() != 4) throw std::invalid_argument("concurrence: need a two-qubit state");
    Eigen::Matrix4cd m = rho.matrix();
    Eigen::Matrix4cd yy = Eigen::Matrix4cd::Zero();
    // sigma_y (x) sigma_y in the HH, HV, VH, VV basis.
    yy(0, 3) = Cx(-1.0);
    yy(1, 2) = Cx(1.0);
    yy(2, 1) = Cx(1.0);
    yy(3, 0) = Cx(-1.0);
    const Eigen::Matrix4cd tilde = yy * m.conjugate() * yy;
    const Eigen::ComplexEigenSolver<Eigen::Matrix4cd> solver(m * tilde, false);
    if (solver.info() != Eigen::Success) throw std::runtime_error("concurrence: solver failed");
    std::array<double, 4> lam{};
    for (int i = 0; i < 4; ++i)
        lam[i] = std::sqrt(std::max(0.0, solver.eigenvalues()(i).real()));
    std::sort(lam.begin(), lam.end(), std::greater<double>());
    return std::max(0.0, lam[0] - lam[1] - lam[2] - lam[3]);
}

}  // namespace kerrbus
