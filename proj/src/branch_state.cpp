#include "kerrbus/branch_state.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "kerrbus/density_matrix.hpp"

namespace kerrbus {

namespace {

constexpr double kSqrtHalf = 0.70710678118654752440;

bool is_finite(Cx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void require_finite(const Branch& br) {
    if (!is_finite(br.amplitude)) throw std::runtime_error("branch amplitude is not finite");
    for (const Cx& a : br.bus)
        if (!is_finite(a)) throw std::runtime_error("bus amplitude is not finite");
}

// Lexicographic branch order: register tuple, then bus amplitudes (re, im).
bool branch_less(const Branch& a, const Branch& b) {
    if (a.reg != b.reg) return a.reg < b.reg;
    for (std::size_t m = 0; m < a.bus.size() && m < b.bus.size(); ++m) {
        if (a.bus[m].real() != b.bus[m].real()) return a.bus[m].real() < b.bus[m].real();
        if (a.bus[m].imag() != b.bus[m].imag()) return a.bus[m].imag() < b.bus[m].imag();
    }
    return a.bus.size() < b.bus.size();
}

}  // namespace

Cx coherent_overlap(Cx alpha, Cx beta) {
    return std::exp(-0.5 * std::norm(alpha) - 0.5 * std::norm(beta) + std::conj(alpha) * beta);
}

Cx coherent_fock_amplitude(Cx alpha, int n) {
    if (n < 0) throw std::invalid_argument("coherent_fock_amplitude: n < 0");
    const double a2 = std::norm(alpha);
    if (a2 == 0.0) return n == 0 ? Cx(1.0, 0.0) : Cx(0.0, 0.0);
    // exp(-|a|^2/2) a^n / sqrt(n!) through logs; stable for any n.
    const double logMag = -0.5 * a2 + n * 0.5 * std::log(a2) - 0.5 * std::lgamma(n + 1.0);
    return std::polar(std::exp(logMag), n * std::arg(alpha));
}

Mat2 pauli_x() { return Mat2{{{Cx(0), Cx(1)}, {Cx(1), Cx(0)}}}; }
Mat2 pauli_y() { return Mat2{{{Cx(0), Cx(0, -1)}, {Cx(0, 1), Cx(0)}}}; }
Mat2 pauli_z() { return Mat2{{{Cx(1), Cx(0)}, {Cx(0), Cx(-1)}}}; }
Mat2 hadamard() {
    return Mat2{{{Cx(kSqrtHalf), Cx(kSqrtHalf)}, {Cx(kSqrtHalf), Cx(-kSqrtHalf)}}};
}
Mat2 phase_diag(double phi0, double phi1) {
    return Mat2{{{std::polar(1.0, phi0), Cx(0)}, {Cx(0), std::polar(1.0, phi1)}}};
}

CoherentBranchState CoherentBranchState::register_state(std::vector<DiscreteMode> modes,
                                                        std::span<const Cx> amplitudes) {
    std::size_t dim = 1;
    for (const DiscreteMode& m : modes) {
        if (m.dim < 1) throw std::invalid_argument("register_state: mode dim < 1");
        dim *= static_cast<std::size_t>(m.dim);
    }
    if (amplitudes.size() != dim)
        throw std::invalid_argument("register_state: amplitude count does not match mode dims");

    CoherentBranchState st;
    st.discrete_ = std::move(modes);
    for (std::size_t idx = 0; idx < dim; ++idx) {
        if (amplitudes[idx] == Cx(0.0)) continue;
        Branch br;
        br.amplitude = amplitudes[idx];
        br.reg.resize(st.discrete_.size());
        std::size_t rest = idx;
        for (int m = static_cast<int>(st.discrete_.size()) - 1; m >= 0; --m) {
            br.reg[m] = static_cast<int>(rest % st.discrete_[m].dim);
            rest /= st.discrete_[m].dim;
        }
        st.branches_.push_back(std::move(br));
    }
    if (st.branches_.empty()) throw std::invalid_argument("register_state: zero state");
    return st;
}

int CoherentBranchState::add_qubit(Cx c0, Cx c1) {
    const Cx amps[2] = {c0, c1};
    return add_discrete(DiscreteMode{DiscreteKind::Qubit, 2}, amps);
}

int CoherentBranchState::add_discrete(const DiscreteMode& mode, std::span<const Cx> amplitudes) {
    if (static_cast<int>(amplitudes.size()) != mode.dim)
        throw std::invalid_argument("add_discrete: amplitude count != dim");
    if (branches_.empty()) {
        branches_.push_back(Branch{Cx(1.0), {}, {}});
    }
    const int newMode = static_cast<int>(discrete_.size());
    discrete_.push_back(mode);
    std::vector<Branch> out;
    out.reserve(branches_.size() * amplitudes.size());
    for (const Branch& br : branches_) {
        for (int v = 0; v < mode.dim; ++v) {
            if (amplitudes[v] == Cx(0.0)) continue;
            Branch nb = br;
            nb.amplitude *= amplitudes[v];
            nb.reg.push_back(v);
            out.push_back(std::move(nb));
        }
    }
    branches_ = std::move(out);
    if (branches_.empty()) throw std::invalid_argument("add_discrete: zero state");
    return newMode;
}

int CoherentBranchState::add_bus(Cx alpha) {
    if (branches_.empty()) branches_.push_back(Branch{Cx(1.0), {}, {}});
    const int id = static_cast<int>(busModes_.size());
    busModes_.push_back(ModeInfo{BusKind::Bus, BusStatus::Active});
    for (Branch& br : branches_) br.bus.push_back(alpha);
    return id;
}

void CoherentBranchState::remove_discrete_mode(int mode) {
    if (mode < 0 || mode >= discrete_mode_count())
        throw std::invalid_argument("remove_discrete_mode: bad mode");
    const int v = branches_.front().reg[mode];
    for (const Branch& br : branches_)
        if (br.reg[mode] != v)
            throw std::logic_error("remove_discrete_mode: mode is not in a definite value");
    for (Branch& br : branches_) br.reg.erase(br.reg.begin() + mode);
    discrete_.erase(discrete_.begin() + mode);
}

const DiscreteMode& CoherentBranchState::discrete_mode(int m) const {
    if (m < 0 || m >= discrete_mode_count())
        throw std::invalid_argument("discrete_mode: bad index");
    return discrete_[m];
}

const ModeInfo& CoherentBranchState::bus_info(int m) const {
    if (m < 0 || m >= bus_mode_count()) throw std::invalid_argument("bus_info: bad index");
    return busModes_[m];
}

int CoherentBranchState::bus_column(int busMode) const {
    require_active_bus(busMode, /*allowEnvironment=*/true);
    int col = 0;
    for (int m = 0; m < busMode; ++m)
        if (busModes_[m].status == BusStatus::Active) ++col;
    return col;
}

void CoherentBranchState::require_active_bus(int busMode, bool allowEnvironment) const {
    if (busMode < 0 || busMode >= bus_mode_count())
        throw std::invalid_argument("bus mode index out of range");
    const ModeInfo& info = busModes_[busMode];
    if (info.status == BusStatus::Consumed)
        throw std::logic_error("operation on a consumed bus mode");
    if (!allowEnvironment && info.kind == BusKind::Environment)
        throw std::logic_error("environment modes cannot be interacted with after creation");
}

void CoherentBranchState::apply_register_unitary(int discreteMode, const Mat2& u) {
    if (discreteMode < 0 || discreteMode >= discrete_mode_count())
        throw std::invalid_argument("apply_register_unitary: bad mode");
    if (discrete_[discreteMode].kind != DiscreteKind::Qubit)
        throw std::invalid_argument("apply_register_unitary: mode is not a qubit");
    // u^dag u == 1 within 1e-12
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            Cx s = std::conj(u[0][r]) * u[0][c] + std::conj(u[1][r]) * u[1][c];
            if (std::abs(s - (r == c ? Cx(1.0) : Cx(0.0))) > 1e-12)
                throw std::invalid_argument("apply_register_unitary: matrix is not unitary");
        }
    }
    std::vector<Branch> out;
    out.reserve(branches_.size() * 2);
    for (const Branch& br : branches_) {
        const int v = br.reg[discreteMode];
        for (int w = 0; w < 2; ++w) {
            const Cx coef = u[w][v];
            if (coef == Cx(0.0)) continue;
            Branch nb = br;
            nb.amplitude *= coef;
            nb.reg[discreteMode] = w;
            out.push_back(std::move(nb));
        }
    }
    branches_ = std::move(out);
    prune();
}

void CoherentBranchState::cross_kerr(int discreteMode, int busMode, double theta) {
    if (discreteMode < 0 || discreteMode >= discrete_mode_count())
        throw std::invalid_argument("cross_kerr: bad discrete mode");
    require_active_bus(busMode);
    const int col = bus_column(busMode);
    for (Branch& br : branches_)
        br.bus[col] *= std::polar(1.0, br.reg[discreteMode] * theta);
}

void CoherentBranchState::cross_kerr_on_value(int discreteMode, int value, int busMode,
                                              double theta) {
    if (discreteMode < 0 || discreteMode >= discrete_mode_count())
        throw std::invalid_argument("cross_kerr_on_value: bad discrete mode");
    require_active_bus(busMode);
    const int col = bus_column(busMode);
    const Cx phase = std::polar(1.0, theta);
    for (Branch& br : branches_)
        if (br.reg[discreteMode] == value) br.bus[col] *= phase;
}

void CoherentBranchState::bus_phase(int busMode, double phi) {
    require_active_bus(busMode);
    const int col = bus_column(busMode);
    const Cx phase = std::polar(1.0, phi);
    for (Branch& br : branches_) br.bus[col] *= phase;
}

void CoherentBranchState::displace(int busMode, Cx beta) {
    require_active_bus(busMode);
    const int col = bus_column(busMode);
    for (Branch& br : branches_) {
        const Cx a = br.bus[col];
        br.amplitude *= std::polar(1.0, std::imag(beta * std::conj(a)));
        br.bus[col] = a + beta;
    }
}

int CoherentBranchState::loss_channel(int busMode, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0))
        throw std::invalid_argument("loss_channel: eta outside [0, 1]");
    require_active_bus(busMode);
    const int col = bus_column(busMode);
    const double tau = std::sqrt(std::max(0.0, 1.0 - eta * eta));
    const int envId = static_cast<int>(busModes_.size());
    busModes_.push_back(ModeInfo{BusKind::Environment, BusStatus::Active});
    for (Branch& br : branches_) {
        const Cx a = br.bus[col];
        br.bus[col] = tau * a;
        br.bus.push_back(eta * a);
    }
    return envId;
}

Cx CoherentBranchState::branch_overlap(const Branch& a, const Branch& b) const {
    if (a.reg != b.reg) return Cx(0.0);
    Cx expo(0.0);
    for (std::size_t m = 0; m < a.bus.size(); ++m)
        expo += -0.5 * std::norm(a.bus[m]) - 0.5 * std::norm(b.bus[m]) +
                std::conj(a.bus[m]) * b.bus[m];
    return std::exp(expo);
}

double CoherentBranchState::norm_squared() const {
    double n = 0.0;
    for (std::size_t j = 0; j < branches_.size(); ++j) {
        n += std::norm(branches_[j].amplitude);
        for (std::size_t k = j + 1; k < branches_.size(); ++k) {
            if (branches_[j].reg != branches_[k].reg) continue;
            const Cx term = std::conj(branches_[j].amplitude) * branches_[k].amplitude *
                            branch_overlap(branches_[j], branches_[k]);
            n += 2.0 * term.real();
        }
    }
    return n;
}

void CoherentBranchState::normalize() {
    const double n = norm_squared();
    if (!(n > 1e-280))
        throw std::runtime_error("normalize: state has vanished (impossible conditioning)");
    const double scale = 1.0 / std::sqrt(n);
    for (Branch& br : branches_) {
        br.amplitude *= scale;
        require_finite(br);
    }
    const double check = norm_squared();
    if (std::abs(check - 1.0) > normTolerance_)
        throw std::runtime_error("normalize: norm check failed");
}

void CoherentBranchState::prune(double tol) {
    if (branches_.empty()) throw std::runtime_error("prune: empty state");
    struct Keyed {
        std::size_t idx;
        std::vector<double> key;
    };
    std::vector<Keyed> keyed;
    keyed.reserve(branches_.size());
    for (std::size_t i = 0; i < branches_.size(); ++i) {
        Keyed k{i, {}};
        k.key.reserve(branches_[i].reg.size() + 2 * branches_[i].bus.size());
        for (int r : branches_[i].reg) k.key.push_back(static_cast<double>(r));
        for (const Cx& a : branches_[i].bus) {
            k.key.push_back(std::nearbyint(a.real() / tol));
            k.key.push_back(std::nearbyint(a.imag() / tol));
        }
        keyed.push_back(std::move(k));
    }
    std::sort(keyed.begin(), keyed.end(),
              [](const Keyed& a, const Keyed& b) { return a.key < b.key; });

    std::vector<Branch> out;
    out.reserve(branches_.size());
    std::size_t i = 0;
    while (i < keyed.size()) {
        Branch merged = branches_[keyed[i].idx];
        std::size_t j = i + 1;
        while (j < keyed.size() && keyed[j].key == keyed[i].key) {
            merged.amplitude += branches_[keyed[j].idx].amplitude;
            ++j;
        }
        if (std::abs(merged.amplitude) > tol) out.push_back(std::move(merged));
        i = j;
    }
    if (out.empty())
        throw std::runtime_error("prune: all branches removed (impossible conditioning)");
    branches_ = std::move(out);
}

DensityMatrix CoherentBranchState::reduced_density_matrix(std::span<const int> modes) const {
    if (modes.empty()) throw std::invalid_argument("reduced_density_matrix: empty mode set");
    std::vector<bool> selected(discrete_.size(), false);
    std::size_t dim = 1;
    for (int m : modes) {
        if (m < 0 || m >= discrete_mode_count())
            throw std::invalid_argument("reduced_density_matrix: bad mode");
        if (selected[m]) throw std::invalid_argument("reduced_density_matrix: repeated mode");
        selected[m] = true;
        dim *= static_cast<std::size_t>(discrete_[m].dim);
    }

    auto restricted_index = [&](const Branch& br) {
        std::size_t idx = 0;
        for (int m : modes) idx = idx * discrete_[m].dim + br.reg[m];
        return idx;
    };
    auto complement_equal = [&](const Branch& a, const Branch& b) {
        for (std::size_t m = 0; m < discrete_.size(); ++m)
            if (!selected[m] && a.reg[m] != b.reg[m]) return false;
        return true;
    };
    auto bus_overlap_bra_ket = [&](const Branch& bra, const Branch& ket) {
        Cx expo(0.0);
        for (std::size_t m = 0; m < bra.bus.size(); ++m)
            expo += -0.5 * std::norm(bra.bus[m]) - 0.5 * std::norm(ket.bus[m]) +
                    std::conj(bra.bus[m]) * ket.bus[m];
        return std::exp(expo);
    };

    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(static_cast<int>(dim), static_cast<int>(dim));
    for (const Branch& j : branches_) {
        for (const Branch& k : branches_) {
            if (!complement_equal(j, k)) continue;
            rho(static_cast<int>(restricted_index(j)), static_cast<int>(restricted_index(k))) +=
                j.amplitude * std::conj(k.amplitude) * bus_overlap_bra_ket(k, j);
        }
    }
    return DensityMatrix(std::move(rho));
}

std::vector<Cx> CoherentBranchState::bus_amplitudes(int busMode) const {
    const int col = bus_column(busMode);
    std::vector<Cx> out;
    out.reserve(branches_.size());
    for (const Branch& br : branches_) out.push_back(br.bus[col]);
    return out;
}

void CoherentBranchState::weight_branches(std::span<const Cx> factors) {
    if (factors.size() != branches_.size())
        throw std::invalid_argument("weight_branches: factor count != branch count");
    for (std::size_t i = 0; i < branches_.size(); ++i) branches_[i].amplitude *= factors[i];
}

void CoherentBranchState::consume_bus(int busMode) {
    require_active_bus(busMode, /*allowEnvironment=*/true);
    if (busModes_[busMode].kind == BusKind::Environment)
        throw std::logic_error("environment modes are never measured");
    const int col = bus_column(busMode);
    busModes_[busMode].status = BusStatus::Consumed;
    for (Branch& br : branches_) br.bus.erase(br.bus.begin() + col);
}

void CoherentBranchState::project_register(int discreteMode, int value) {
    if (discreteMode < 0 || discreteMode >= discrete_mode_count())
        throw std::invalid_argument("project_register: bad mode");
    std::vector<Branch> out;
    for (Branch& br : branches_)
        if (br.reg[discreteMode] == value) out.push_back(std::move(br));
    if (out.empty())
        throw std::runtime_error("project_register: outcome has zero support");
    branches_ = std::move(out);
}

void CoherentBranchState::canonical_sort() {
    std::sort(branches_.begin(), branches_.end(), branch_less);
}

void CoherentBranchState::dump(std::ostream& os) const {
    CoherentBranchState copy = *this;
    copy.canonical_sort();
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    for (const Branch& br : copy.branches_) {
        os << '(';
        put(br.amplitude.real());
        os << ',';
        put(br.amplitude.imag());
        os << ") [";
        for (std::size_t m = 0; m < br.reg.size(); ++m) {
            if (m) os << ' ';
            os << br.reg[m];
        }
        os << ']';
        for (const Cx& a : br.bus) {
            os << " (";
            put(a.real());
            os << ',';
            put(a.imag());
            os << ')';
        }
        os << '\n';
    }
}

double max_branch_difference(const CoherentBranchState& a, const CoherentBranchState& b) {
    if (a.branch_count() != b.branch_count() || a.bus_mode_count() != b.bus_mode_count())
        return std::numeric_limits<double>::infinity();
    CoherentBranchState sa = a;
    CoherentBranchState sb = b;
    sa.canonical_sort();
    sb.canonical_sort();
    double worst = 0.0;
    for (int i = 0; i < sa.branch_count(); ++i) {
        const Branch& x = sa.branches()[i];
        const Branch& y = sb.branches()[i];
        if (x.reg != y.reg || x.bus.size() != y.bus.size())
            return std::numeric_limits<double>::infinity();
        worst = std::max(worst, std::abs(x.amplitude - y.amplitude));
        for (std::size_t m = 0; m < x.bus.size(); ++m)
            worst = std::max(worst, std::abs(x.bus[m] - y.bus[m]));
    }
    return worst;
}

}  // namespace kerrbus
