#include "kerrbus/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kerrbus {

namespace {

constexpr double kTwoPiQuarterRoot = 0.63161877774606470129;  // (2*pi)^(-1/4)

void validate_homodyne_setting(const HomodyneSetting& s) {
    if (!(s.gridStep > 0.0 && s.gridStep <= 0.01 + 1e-15))
        throw std::invalid_argument("homodyne setting: gridStep must be in (0, 0.01]");
    if (!(s.gridHalfWidth >= 10.0))
        throw std::invalid_argument("homodyne setting: gridHalfWidth must be >= 10");
}

void require_measurable_bus(const CoherentBranchState& state, int busMode) {
    if (state.bus_info(busMode).kind != BusKind::Bus)
        throw std::logic_error("environment modes are never measured");
}

// Branch-pair weights for measurement statistics on one bus column:
// w_jk = c_j conj(c_k) [reg_j == reg_k] prod_{m != col} <alpha_{k,m}|alpha_{j,m}>.
struct PairWeights {
    std::vector<Cx> alphas;
    std::vector<double> diag;
    struct Cross {
        int j, k;
        Cx weight;
    };
    std::vector<Cross> cross;
};

PairWeights pair_weights(const CoherentBranchState& state, int col) {
    const auto& branches = state.branches();
    PairWeights out;
    out.alphas.reserve(branches.size());
    out.diag.reserve(branches.size());
    for (const Branch& br : branches) out.alphas.push_back(br.bus[col]);
    for (std::size_t j = 0; j < branches.size(); ++j) {
        // Self overlap on the other modes is exactly 1.
        out.diag.push_back(std::norm(branches[j].amplitude));
        for (std::size_t k = j + 1; k < branches.size(); ++k) {
            if (branches[j].reg != branches[k].reg) continue;
            Cx expo(0.0);
            const Branch& a = branches[j];
            const Branch& b = branches[k];
            for (std::size_t m = 0; m < a.bus.size(); ++m) {
                if (static_cast<int>(m) == col) continue;
                expo += -0.5 * std::norm(b.bus[m]) - 0.5 * std::norm(a.bus[m]) +
                        std::conj(b.bus[m]) * a.bus[m];
            }
            const Cx w = a.amplitude * std::conj(b.amplitude) * std::exp(expo);
            if (w != Cx(0.0))
                out.cross.push_back({static_cast<int>(j), static_cast<int>(k), w});
        }
    }
    return out;
}

double eval_pdf(const PairWeights& pw, double xi, double x) {
    // p(x) = sum_j diag_j |<x|a_j>|^2 + 2 Re sum_{j<k} w_jk <x|a_j> conj(<x|a_k>)
    double p = 0.0;
    if (pw.cross.empty()) {
        for (std::size_t j = 0; j < pw.alphas.size(); ++j)
            p += pw.diag[j] * std::norm(quadrature_amplitude(x, pw.alphas[j], xi));
        return p;
    }
    std::vector<Cx> w(pw.alphas.size());
    for (std::size_t j = 0; j < pw.alphas.size(); ++j)
        w[j] = quadrature_amplitude(x, pw.alphas[j], xi);
    for (std::size_t j = 0; j < pw.alphas.size(); ++j) p += pw.diag[j] * std::norm(w[j]);
    for (const auto& c : pw.cross)
        p += 2.0 * std::real(c.weight * w[c.j] * std::conj(w[c.k]));
    return p;
}

int auto_photon_cutoff(const PairWeights& pw) {
    double maxA2 = 0.0;
    for (const Cx& a : pw.alphas) maxA2 = std::max(maxA2, std::norm(a));
    return static_cast<int>(std::ceil(maxA2 + 10.0 * std::sqrt(maxA2) + 20.0));
}

// <n|alpha> for n = 0..nMax by the stable recurrence v_{n+1} = v_n a / sqrt(n+1).
std::vector<Cx> coherent_column(Cx alpha, int nMax) {
    std::vector<Cx> v(nMax + 1);
    Cx cur = Cx(std::exp(-0.5 * std::norm(alpha)));
    for (int n = 0; n <= nMax; ++n) {
        v[n] = cur;
        cur *= alpha / std::sqrt(n + 1.0);
    }
    return v;
}

}  // namespace

Cx quadrature_amplitude(double x, Cx alpha, double xi) {
    const Cx at = alpha * std::polar(1.0, xi);
    const double dx = x - 2.0 * at.real();
    const double mag = kTwoPiQuarterRoot * std::exp(-0.25 * dx * dx);
    const double phase = at.imag() * x - at.real() * at.imag();
    return std::polar(mag, phase);
}

double homodyne_pdf(const CoherentBranchState& state, int busMode, const HomodyneSetting& s,
                    double x) {
    validate_homodyne_setting(s);
    require_measurable_bus(state, busMode);
    return eval_pdf(pair_weights(state, state.bus_column(busMode)), s.xi, x);
}

HomodyneSampler::HomodyneSampler(const CoherentBranchState& state, int busMode,
                                 const HomodyneSetting& s) {
    validate_homodyne_setting(s);
    require_measurable_bus(state, busMode);
    const int col = state.bus_column(busMode);
    PairWeights pw = pair_weights(state, col);
    alphas_ = std::move(pw.alphas);
    diag_ = std::move(pw.diag);
    for (const auto& c : pw.cross) cross_.push_back({c.j, c.k, c.weight});
    xi_ = s.xi;
    step_ = s.gridStep;

    double lo = 0.0, hi = 0.0;
    for (std::size_t j = 0; j < alphas_.size(); ++j) {
        const double mean = 2.0 * (alphas_[j] * std::polar(1.0, xi_)).real();
        if (j == 0) lo = hi = mean;
        lo = std::min(lo, mean);
        hi = std::max(hi, mean);
    }
    x0_ = lo - s.gridHalfWidth;
    const double x1 = hi + s.gridHalfWidth;
    const std::size_t points = static_cast<std::size_t>(std::ceil((x1 - x0_) / step_)) + 1;

    PairWeights local;
    local.alphas = alphas_;
    local.diag = diag_;
    for (const auto& c : cross_) local.cross.push_back({c.j, c.k, c.weight});

    pdf_.resize(points);
    cdf_.resize(points);
    for (std::size_t i = 0; i < points; ++i) {
        double p = eval_pdf(local, xi_, x0_ + step_ * static_cast<double>(i));
        if (p < 0.0) {
            if (p < -1e-9) throw std::runtime_error("homodyne pdf went negative");
            p = 0.0;
        }
        pdf_[i] = p;
    }
    cdf_[0] = 0.0;
    for (std::size_t i = 1; i < points; ++i)
        cdf_[i] = cdf_[i - 1] + 0.5 * (pdf_[i - 1] + pdf_[i]) * step_;
    mass_ = cdf_.back();
    if (mass_ < 1.0 - 1e-4)
        throw std::runtime_error("homodyne grid too small: pdf mass below 1 - 1e-4");
}

double HomodyneSampler::density(double x) const {
    PairWeights local;
    local.alphas = alphas_;
    local.diag = diag_;
    for (const auto& c : cross_) local.cross.push_back({c.j, c.k, c.weight});
    return eval_pdf(local, xi_, x);
}

double HomodyneSampler::sample(RngStream& rng) const {
    const double target = rng.uniform01() * mass_;
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), target);
    if (it == cdf_.begin()) return x0_;
    const std::size_t hi = static_cast<std::size_t>(it - cdf_.begin());
    const std::size_t lo = hi - 1;
    const double span = cdf_[hi] - cdf_[lo];
    const double frac = span > 0.0 ? (target - cdf_[lo]) / span : 0.0;
    return x0_ + step_ * (static_cast<double>(lo) + frac);
}

double homodyne_condition(CoherentBranchState& state, int busMode, double xi, double x) {
    require_measurable_bus(state, busMode);
    const int col = state.bus_column(busMode);
    const double density = eval_pdf(pair_weights(state, col), xi, x);
    std::vector<Cx> factors;
    factors.reserve(state.branch_count());
    for (const Branch& br : state.branches())
        factors.push_back(quadrature_amplitude(x, br.bus[col], xi));
    state.weight_branches(factors);
    state.consume_bus(busMode);
    state.normalize();
    state.prune();
    return density;
}

MeasurementOutcome homodyne_sample(CoherentBranchState& state, int busMode,
                                   const HomodyneSetting& s, RngStream& rng) {
    HomodyneSampler sampler(state, busMode, s);
    const double x = sampler.sample(rng);
    MeasurementOutcome out;
    out.kind = MeasurementOutcome::Kind::Quadrature;
    out.quadrature = x;
    out.probability = homodyne_condition(state, busMode, s.xi, x);
    return out;
}

int photon_cutoff(const CoherentBranchState& state, int busMode, const PhotonCountSetting& s) {
    require_measurable_bus(state, busMode);
    const int col = state.bus_column(busMode);
    const int rule = auto_photon_cutoff(pair_weights(state, col));
    if (s.nMax <= 0) return rule;
    if (s.nMax < rule)
        throw std::invalid_argument("photon setting: nMax below the safe cutoff rule");
    return s.nMax;
}

std::vector<double> photon_number_pmf(const CoherentBranchState& state, int busMode,
                                      const PhotonCountSetting& s) {
    require_measurable_bus(state, busMode);
    const int col = state.bus_column(busMode);
    const PairWeights pw = pair_weights(state, col);
    const int nMax = photon_cutoff(state, busMode, s);

    std::vector<std::vector<Cx>> cols;
    cols.reserve(pw.alphas.size());
    for (const Cx& a : pw.alphas) cols.push_back(coherent_column(a, nMax));

    std::vector<double> pmf(nMax + 1, 0.0);
    for (int n = 0; n <= nMax; ++n) {
        double p = 0.0;
        for (std::size_t j = 0; j < pw.alphas.size(); ++j)
            p += pw.diag[j] * std::norm(cols[j][n]);
        for (const auto& c : pw.cross)
            p += 2.0 * std::real(c.weight * cols[c.j][n] * std::conj(cols[c.k][n]));
        pmf[n] = std::max(0.0, p);
    }
    double total = 0.0;
    for (double p : pmf) total += p;
    if (total < 1.0 - 1e-8)
        throw std::runtime_error("photon pmf mass below 1 - 1e-8 (cutoff violation)");
    return pmf;
}

double photon_number_pmf(const CoherentBranchState& state, int busMode,
                         const PhotonCountSetting& s, int n) {
    const int nMax = photon_cutoff(state, busMode, s);
    if (n < 0 || n > nMax)
        throw std::invalid_argument("photon_number_pmf: n above the configured cutoff");
    require_measurable_bus(state, busMode);
    const int col = state.bus_column(busMode);
    const PairWeights pw = pair_weights(state, col);
    double p = 0.0;
    std::vector<Cx> amps(pw.alphas.size());
    for (std::size_t j = 0; j < pw.alphas.size(); ++j)
        amps[j] = coherent_fock_amplitude(pw.alphas[j], n);
    for (std::size_t j = 0; j < pw.alphas.size(); ++j) p += pw.diag[j] * std::norm(amps[j]);
    for (const auto& c : pw.cross)
        p += 2.0 * std::real(c.weight * amps[c.j] * std::conj(amps[c.k]));
    return std::max(0.0, p);
}

MeasurementOutcome photon_number_measure(CoherentBranchState& state, int busMode,
                                         const PhotonCountSetting& s, RngStream& rng) {
    const std::vector<double> pmf = photon_number_pmf(state, busMode, s);
    double total = 0.0;
    for (double p : pmf) total += p;
    const double target = rng.uniform01() * total;
    double acc = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        acc += pmf[i];
        if (target < acc || i + 1 == pmf.size()) {
            n = static_cast<int>(i);
            break;
        }
    }
    MeasurementOutcome out;
    out.kind = MeasurementOutcome::Kind::PhotonCount;
    out.photonCount = n;
    out.probability = pmf[n];
    condition_photon_number(state, busMode, n);
    return out;
}

double condition_photon_number(CoherentBranchState& state, int busMode, int n) {
    require_measurable_bus(state, busMode);
    const int col = state.bus_column(busMode);
    const PairWeights pw = pair_weights(state, col);
    std::vector<Cx> factors(pw.alphas.size());
    double mass = 0.0;
    for (std::size_t j = 0; j < pw.alphas.size(); ++j) {
        factors[j] = coherent_fock_amplitude(pw.alphas[j], n);
        mass += pw.diag[j] * std::norm(factors[j]);
    }
    for (const auto& c : pw.cross)
        mass += 2.0 * std::real(c.weight * factors[c.j] * std::conj(factors[c.k]));
    state.weight_branches(factors);
    state.consume_bus(busMode);
    state.normalize();
    state.prune();
    return std::max(0.0, mass);
}

int classify_peaks(double x, std::span<const double> peakMeans) {
    if (peakMeans.empty()) throw std::invalid_argument("classify_peaks: empty peak list");
    for (std::size_t i = 0; i + 1 < peakMeans.size(); ++i)
        if (!(peakMeans[i] < peakMeans[i + 1]))
            throw std::invalid_argument("classify_peaks: peaks are not strictly ascending");
    for (std::size_t i = 0; i + 1 < peakMeans.size(); ++i) {
        const double boundary = 0.5 * (peakMeans[i] + peakMeans[i + 1]);
        if (x <= boundary) return static_cast<int>(i);
    }
    return static_cast<int>(peakMeans.size()) - 1;
}

RegisterOutcome measure_discrete(CoherentBranchState& state, int discreteMode, RngStream& rng) {
    const int dim = state.discrete_mode(discreteMode).dim;
    std::vector<double> prob(dim, 0.0);
    const auto& branches = state.branches();
    for (std::size_t j = 0; j < branches.size(); ++j) {
        prob[branches[j].reg[discreteMode]] += std::norm(branches[j].amplitude);
        for (std::size_t k = j + 1; k < branches.size(); ++k) {
            if (branches[j].reg != branches[k].reg) continue;
            const Cx term = std::conj(branches[j].amplitude) * branches[k].amplitude *
                            state.branch_overlap(branches[j], branches[k]);
            prob[branches[j].reg[discreteMode]] += 2.0 * term.real();
        }
    }
    double total = 0.0;
    for (double p : prob) total += std::max(0.0, p);
    const double target = rng.uniform01() * total;
    double acc = 0.0;
    int value = dim - 1;
    for (int v = 0; v < dim; ++v) {
        acc += std::max(0.0, prob[v]);
        if (target < acc) {
            value = v;
            break;
        }
    }
    RegisterOutcome out;
    out.value = value;
    out.probability = std::max(0.0, prob[value]);
    state.project_register(discreteMode, value);
    state.normalize();
    state.prune();
    return out;
}

double condition_discrete(CoherentBranchState& state, int discreteMode, int value) {
    const int dim = state.discrete_mode(discreteMode).dim;
    if (value < 0 || value >= dim) throw std::invalid_argument("condition_discrete: bad value");
    double p = 0.0;
    const auto& branches = state.branches();
    for (std::size_t j = 0; j < branches.size(); ++j) {
        if (branches[j].reg[discreteMode] != value) continue;
        p += std::norm(branches[j].amplitude);
        for (std::size_t k = j + 1; k < branches.size(); ++k) {
            if (branches[j].reg != branches[k].reg) continue;
            const Cx term = std::conj(branches[j].amplitude) * branches[k].amplitude *
                            state.branch_overlap(branches[j], branches[k]);
            p += 2.0 * term.real();
        }
    }
    state.project_register(discreteMode, value);
    state.normalize();
    state.prune();
    return std::max(0.0, p);
}

}  // namespace kerrbus
