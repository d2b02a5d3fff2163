#include "kerrbus/fock_oracle.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kerrbus {

namespace {

constexpr double kTwoPiQuarterRoot = 0.63161877774606470129;  // (2*pi)^(-1/4)

std::size_t total_size(const std::vector<int>& dims) {
    std::size_t n = 1;
    for (int d : dims) {
        if (d < 1) throw std::invalid_argument("FockState: axis dim < 1");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

// Generalized Laguerre L_n^{(k)}(x) by upward recurrence.
double laguerre(int n, int k, double x) {
    if (n == 0) return 1.0;
    double lm1 = 1.0;
    double l = 1.0 + k - x;
    for (int i = 1; i < n; ++i) {
        const double lp1 = ((2.0 * i + 1.0 + k - x) * l - (i + k) * lm1) / (i + 1.0);
        lm1 = l;
        l = lp1;
    }
    return l;
}

}  // namespace

FockState::FockState(std::vector<int> dims) : dims_(std::move(dims)) {
    amp_.assign(total_size(dims_), Cx(0.0));
}

std::size_t FockState::stride(int axis) const {
    std::size_t s = 1;
    for (int a = axis + 1; a < axis_count(); ++a) s *= static_cast<std::size_t>(dims_[a]);
    return s;
}

double FockState::norm_squared() const {
    double n = 0.0;
    for (const Cx& a : amp_) n += std::norm(a);
    return n;
}

void FockState::normalize() {
    const double n = norm_squared();
    if (!(n > 1e-280)) throw std::runtime_error("FockState::normalize: zero state");
    const double s = 1.0 / std::sqrt(n);
    for (Cx& a : amp_) a *= s;
}

void FockState::apply_axis_operator(int axis, const Eigen::MatrixXcd& m) {
    const int d = dims_.at(axis);
    if (m.rows() != d || m.cols() != d)
        throw std::invalid_argument("apply_axis_operator: dimension mismatch");
    const std::size_t inner = stride(axis);
    const std::size_t blocks = amp_.size() / (inner * d);
    std::vector<Cx> tmp(d);
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t i = 0; i < inner; ++i) {
            const std::size_t base = b * inner * d + i;
            for (int n = 0; n < d; ++n) tmp[n] = amp_[base + n * inner];
            for (int r = 0; r < d; ++r) {
                Cx acc(0.0);
                for (int c = 0; c < d; ++c) acc += m(r, c) * tmp[c];
                amp_[base + r * inner] = acc;
            }
        }
    }
}

void FockState::slice_axis(int axis, int n) {
    const int d = dims_.at(axis);
    if (n < 0 || n >= d) throw std::invalid_argument("slice_axis: bad index");
    const std::size_t inner = stride(axis);
    const std::size_t blocks = amp_.size() / (inner * d);
    std::vector<Cx> out(blocks * inner);
    for (std::size_t b = 0; b < blocks; ++b)
        for (std::size_t i = 0; i < inner; ++i)
            out[b * inner + i] = amp_[b * inner * d + n * inner + i];
    amp_ = std::move(out);
    dims_.erase(dims_.begin() + axis);
}

int fock_discrete_axis(const CoherentBranchState&, int discreteMode) { return discreteMode; }

int fock_bus_axis(const CoherentBranchState& state, int busMode) {
    if (state.bus_info(busMode).status != BusStatus::Active)
        throw std::invalid_argument("fock_bus_axis: mode is consumed");
    return state.discrete_mode_count() + state.bus_column(busMode);
}

FockState expand(const CoherentBranchState& state, std::span<const int> busCutoffs) {
    std::vector<int> dims;
    for (int m = 0; m < state.discrete_mode_count(); ++m)
        dims.push_back(state.discrete_mode(m).dim);
    int activeBuses = 0;
    for (int m = 0; m < state.bus_mode_count(); ++m)
        if (state.bus_info(m).status == BusStatus::Active) ++activeBuses;
    if (static_cast<int>(busCutoffs.size()) != activeBuses)
        throw std::invalid_argument("expand: one cutoff per active bus mode required");
    for (int c : busCutoffs) dims.push_back(c);

    FockState out(dims);
    const int nDisc = state.discrete_mode_count();
    for (const Branch& br : state.branches()) {
        for (const Cx& a : br.bus)
            if (std::abs(a) > kOracleMaxAmplitude * (1.0 + 1e-12))
                throw std::invalid_argument("expand: |alpha| above the oracle regime cap");
        // Per-mode coherent expansions.
        std::vector<std::vector<Cx>> coh(br.bus.size());
        for (std::size_t m = 0; m < br.bus.size(); ++m) {
            const int d = busCutoffs[m];
            coh[m].resize(d);
            Cx v = Cx(std::exp(-0.5 * std::norm(br.bus[m])));
            for (int n = 0; n < d; ++n) {
                coh[m][n] = v;
                v *= br.bus[m] / std::sqrt(n + 1.0);
            }
        }
        // Scatter amplitude * prod coh into the tensor.
        std::vector<int> idx(out.axis_count(), 0);
        for (int m = 0; m < nDisc; ++m) idx[m] = br.reg[m];
        // Iterate over all bus index combinations.
        std::vector<int> busIdx(br.bus.size(), 0);
        bool done = br.bus.empty();
        auto emit = [&](Cx weight) {
            std::size_t flat = 0;
            for (int a = 0; a < out.axis_count(); ++a)
                flat = flat * out.dim(a) + idx[a];
            out.amplitudes()[flat] += weight;
        };
        if (br.bus.empty()) {
            emit(br.amplitude);
        }
        while (!done) {
            Cx w = br.amplitude;
            for (std::size_t m = 0; m < busIdx.size(); ++m) {
                w *= coh[m][busIdx[m]];
                idx[nDisc + static_cast<int>(m)] = busIdx[m];
            }
            emit(w);
            // advance multi-index
            int m = static_cast<int>(busIdx.size()) - 1;
            while (m >= 0) {
                if (++busIdx[m] < busCutoffs[m]) break;
                busIdx[m] = 0;
                --m;
            }
            if (m < 0) done = true;
        }
    }
    return out;
}

void oracle_cross_kerr(FockState& st, int discreteAxis, int busAxis, double theta) {
    const std::size_t sd = st.stride(discreteAxis);
    const std::size_t sb = st.stride(busAxis);
    const int dd = st.dim(discreteAxis);
    const int db = st.dim(busAxis);
    auto& amp = st.amplitudes();
    for (std::size_t flat = 0; flat < amp.size(); ++flat) {
        const int n = static_cast<int>(flat / sd) % dd;
        const int p = static_cast<int>(flat / sb) % db;
        amp[flat] *= std::polar(1.0, theta * n * p);
    }
}

void oracle_cross_kerr_on_value(FockState& st, int discreteAxis, int value, int busAxis,
                                double theta) {
    const std::size_t sd = st.stride(discreteAxis);
    const std::size_t sb = st.stride(busAxis);
    const int dd = st.dim(discreteAxis);
    const int db = st.dim(busAxis);
    auto& amp = st.amplitudes();
    for (std::size_t flat = 0; flat < amp.size(); ++flat) {
        if (static_cast<int>(flat / sd) % dd != value) continue;
        const int p = static_cast<int>(flat / sb) % db;
        amp[flat] *= std::polar(1.0, theta * p);
    }
}

void oracle_bus_phase(FockState& st, int busAxis, double phi) {
    const std::size_t sb = st.stride(busAxis);
    const int db = st.dim(busAxis);
    auto& amp = st.amplitudes();
    for (std::size_t flat = 0; flat < amp.size(); ++flat) {
        const int p = static_cast<int>(flat / sb) % db;
        amp[flat] *= std::polar(1.0, phi * p);
    }
}

Eigen::MatrixXcd displacement_matrix(int dim, Cx beta) {
    Eigen::MatrixXcd d(dim, dim);
    const double b2 = std::norm(beta);
    if (b2 == 0.0) return Eigen::MatrixXcd::Identity(dim, dim);
    const double logB = 0.5 * std::log(b2);
    const double argB = std::arg(beta);
    for (int m = 0; m < dim; ++m) {
        for (int n = 0; n < dim; ++n) {
            const int lo = std::min(m, n);
            const int hi = std::max(m, n);
            const int k = hi - lo;
            // sqrt(lo!/hi!) * |beta|^k * e^{-|beta|^2/2} * L_lo^{(k)}(|beta|^2)
            const double logMag =
                0.5 * (std::lgamma(lo + 1.0) - std::lgamma(hi + 1.0)) + k * logB - 0.5 * b2;
            const double lag = laguerre(lo, k, b2);
            Cx val = std::exp(logMag) * lag;
            if (m >= n) {
                val *= std::polar(1.0, k * argB);
            } else {
                // <m|D|n> for m < n carries (-beta*)^{n-m}
                val *= std::polar(1.0, k * (M_PI - argB));
            }
            d(m, n) = val;
        }
    }
    return d;
}

void oracle_displace(FockState& st, int busAxis, Cx beta) {
    st.apply_axis_operator(busAxis, displacement_matrix(st.dim(busAxis), beta));
}

void oracle_register_unitary(FockState& st, int discreteAxis, const Mat2& u) {
    if (st.dim(discreteAxis) != 2)
        throw std::invalid_argument("oracle_register_unitary: axis is not a qubit");
    Eigen::MatrixXcd m(2, 2);
    m << u[0][0], u[0][1], u[1][0], u[1][1];
    st.apply_axis_operator(discreteAxis, m);
}

int oracle_beam_splitter(FockState& st, int busAxis, double eta, int envDim) {
    if (!(eta >= 0.0 && eta <= 1.0))
        throw std::invalid_argument("oracle_beam_splitter: eta outside [0, 1]");
    // Append the vacuum environment axis.
    std::vector<int> dims = st.dims();
    dims.push_back(envDim);
    FockState grown(dims);
    auto& out = grown.amplitudes();
    const auto& in = st.amplitudes();
    for (std::size_t i = 0; i < in.size(); ++i) out[i * envDim] = in[i];

    const double phi = std::asin(eta);
    const int envAxis = grown.axis_count() - 1;
    const int da = grown.dim(busAxis);
    const int db = envDim;
    const std::size_t sa = grown.stride(busAxis);
    const std::size_t sb = grown.stride(envAxis);

    // exp[phi (a b^dag - a^dag b)] is block diagonal in N = n_a + n_b.
    // Exponentiate each (possibly truncated) block; the truncated generator is
    // still antisymmetric, so every block map is exactly unitary.
    auto& amp = grown.amplitudes();
    std::vector<Cx> scratch;
    for (int N = 0; N <= da + db - 2; ++N) {
        const int kmin = std::max(0, N - (db - 1));
        const int kmax = std::min(N, da - 1);
        const int s = kmax - kmin + 1;
        if (s <= 0) continue;
        Eigen::MatrixXcd herm = Eigen::MatrixXcd::Zero(s, s);  // i * generator
        for (int k = kmin; k < kmax + 1; ++k) {
            if (k + 1 <= kmax) {
                // a b^dag lowers k: <k, N-k| -> sqrt((k+1)(N-k)) |k ... generator
                const double g = std::sqrt((k + 1.0) * (N - k));
                herm(k - kmin, k + 1 - kmin) = Cx(0.0, 1.0) * g;   // i*A, A[k][k+1] = +g
                herm(k + 1 - kmin, k - kmin) = Cx(0.0, -1.0) * g;  // A[k+1][k] = -g
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm);
        Eigen::VectorXcd expv(s);
        for (int i = 0; i < s; ++i) expv(i) = std::polar(1.0, -phi * es.eigenvalues()(i));
        Eigen::MatrixXcd block =
            es.eigenvectors() * expv.asDiagonal() * es.eigenvectors().adjoint();

        // Apply the block to every (outer) configuration.
        scratch.assign(s, Cx(0.0));
        const std::size_t total = amp.size();
        for (std::size_t flat = 0; flat < total; ++flat) {
            const int na = static_cast<int>(flat / sa) % da;
            const int nb = static_cast<int>(flat / sb) % db;
            if (na + nb != N || na != kmin) continue;  // visit each block lane once
            // gather the lane: indices (k, N-k), k = kmin..kmax
            const std::size_t base = flat - static_cast<std::size_t>(kmin) * sa -
                                     static_cast<std::size_t>(N - kmin) * sb;
            for (int k = kmin; k <= kmax; ++k)
                scratch[k - kmin] = amp[base + static_cast<std::size_t>(k) * sa +
                                        static_cast<std::size_t>(N - k) * sb];
            for (int r = 0; r < s; ++r) {
                Cx acc(0.0);
                for (int c = 0; c < s; ++c) acc += block(r, c) * scratch[c];
                amp[base + static_cast<std::size_t>(kmin + r) * sa +
                    static_cast<std::size_t>(N - kmin - r) * sb] = acc;
            }
        }
    }
    st = std::move(grown);
    return envAxis;
}

std::vector<double> oracle_photon_pmf(const FockState& st, int busAxis) {
    const int d = st.dim(busAxis);
    const std::size_t s = st.stride(busAxis);
    std::vector<double> pmf(d, 0.0);
    const auto& amp = st.amplitudes();
    for (std::size_t flat = 0; flat < amp.size(); ++flat)
        pmf[static_cast<int>(flat / s) % d] += std::norm(amp[flat]);
    return pmf;
}

std::vector<Cx> quadrature_wavefunctions(int dim, double xi, double x) {
    // <x|n>_xi = e^{+i n xi} psi_n(x), so that sum_n <x|n><n|alpha> equals the
    // closed form <x|alpha e^{i xi}>_0. psi_0 = (2 pi)^{-1/4} e^{-x^2/4},
    // psi_{n+1} = (x psi_n - sqrt(n) psi_{n-1}) / sqrt(n+1).
    std::vector<Cx> w(dim);
    double prev = 0.0;
    double cur = kTwoPiQuarterRoot * std::exp(-0.25 * x * x);
    for (int n = 0; n < dim; ++n) {
        w[n] = std::polar(1.0, n * xi) * cur;
        const double next = (x * cur - std::sqrt(static_cast<double>(n)) * prev) /
                            std::sqrt(n + 1.0);
        prev = cur;
        cur = next;
    }
    return w;
}

double oracle_homodyne_pdf(const FockState& st, int busAxis, double xi, double x) {
    const int d = st.dim(busAxis);
    const std::size_t s = st.stride(busAxis);
    const std::vector<Cx> w = quadrature_wavefunctions(d, xi, x);
    const auto& amp = st.amplitudes();
    const std::size_t blocks = amp.size() / (s * d);
    double pdf = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t i = 0; i < s; ++i) {
            Cx acc(0.0);
            const std::size_t base = b * s * d + i;
            for (int n = 0; n < d; ++n) acc += w[n] * amp[base + n * s];
            pdf += std::norm(acc);
        }
    }
    return pdf;
}

double oracle_condition_photon(FockState& st, int busAxis, int n) {
    const std::vector<double> pmf = oracle_photon_pmf(st, busAxis);
    if (n < 0 || n >= static_cast<int>(pmf.size()))
        throw std::invalid_argument("oracle_condition_photon: bad n");
    st.slice_axis(busAxis, n);
    st.normalize();
    return pmf[n];
}

double oracle_condition_quadrature(FockState& st, int busAxis, double xi, double x) {
    const double density = oracle_homodyne_pdf(st, busAxis, xi, x);
    const int d = st.dim(busAxis);
    const std::size_t s = st.stride(busAxis);
    const std::vector<Cx> w = quadrature_wavefunctions(d, xi, x);
    // Contract the axis with conj(<x|n>) ... amplitude <x|psi> per remaining index.
    const auto& amp = st.amplitudes();
    const std::size_t blocks = amp.size() / (s * d);
    std::vector<Cx> out(blocks * s);
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t i = 0; i < s; ++i) {
            Cx acc(0.0);
            const std::size_t base = b * s * d + i;
            for (int n = 0; n < d; ++n) acc += w[n] * amp[base + n * s];
            out[b * s + i] = acc;
        }
    }
    std::vector<int> dims = st.dims();
    dims.erase(dims.begin() + busAxis);
    FockState reduced(dims);
    reduced.amplitudes() = std::move(out);
    reduced.normalize();
    st = std::move(reduced);
    return density;
}

Cx fock_inner(const FockState& a, const FockState& b) {
    if (a.dims() != b.dims()) throw std::invalid_argument("fock_inner: dimension mismatch");
    Cx acc(0.0);
    for (std::size_t i = 0; i < a.amplitudes().size(); ++i)
        acc += std::conj(a.amplitudes()[i]) * b.amplitudes()[i];
    return acc;
}

double fock_fidelity(const FockState& a, const FockState& b) {
    const double na = a.norm_squared();
    const double nb = b.norm_squared();
    if (!(na > 0.0) || !(nb > 0.0)) throw std::invalid_argument("fock_fidelity: zero state");
    return std::norm(fock_inner(a, b)) / (na * nb);
}

}  // namespace kerrbus
