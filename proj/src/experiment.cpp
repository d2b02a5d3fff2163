#include "kerrbus/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "kerrbus/analytics.hpp"
#include "kerrbus/fock_oracle.hpp"
#include "kerrbus/measurement.hpp"
#include "kerrbus/protocols.hpp"

namespace kerrbus {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* parity_name(Parity p) {
    switch (p) {
        case Parity::Even: return "even";
        case Parity::Odd: return "odd";
        default: return "indeterminate";
    }
}

// Runs fn(trialIndex, rng) for every trial with per-trial RNG streams derived
// from (seed, trialIndex); rows land in trial order regardless of threading.
template <typename Row, typename Fn>
std::vector<Row> run_trials(std::uint64_t trials, std::uint64_t seed, Fn&& fn) {
    std::vector<Row> rows(trials);
    unsigned nThreads = std::max(1u, std::thread::hardware_concurrency());
    nThreads = static_cast<unsigned>(std::min<std::uint64_t>(nThreads, trials));
    if (nThreads <= 1) {
        for (std::uint64_t t = 0; t < trials; ++t) {
            RngStream rng(seed, t);
            rows[t] = fn(t, rng);
        }
        return rows;
    }
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (trials + nThreads - 1) / nThreads;
    for (unsigned w = 0; w < nThreads; ++w) {
        const std::uint64_t lo = w * chunk;
        const std::uint64_t hi = std::min(trials, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            for (std::uint64_t t = lo; t < hi; ++t) {
                RngStream rng(seed, t);
                rows[t] = fn(t, rng);
            }
        });
    }
    for (auto& th : pool) th.join();
    return rows;
}

double binomial_sigma(double p, double n) { return std::sqrt(std::max(p * (1.0 - p), 0.0) / n); }

// Standard-normal draw from two uniforms (Box-Muller); deterministic.
double gaussian(RngStream& rng) {
    const double u1 = 1.0 - rng.uniform01();
    const double u2 = rng.uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::array<Cx, 4> random_two_qubit_state(RngStream& rng) {
    std::array<Cx, 4> v;
    double norm = 0.0;
    for (Cx& c : v) {
        c = Cx(gaussian(rng), gaussian(rng));
        norm += std::norm(c);
    }
    for (Cx& c : v) c /= std::sqrt(norm);
    return v;
}

std::array<Cx, 4> parity_input_amplitudes(const std::string& input) {
    if (input == "balanced") return {Cx(0.5), Cx(0.5), Cx(0.5), Cx(0.5)};
    if (input == "odd") return {Cx(0.0), Cx(M_SQRT1_2), Cx(M_SQRT1_2), Cx(0.0)};
    throw std::invalid_argument("invalid value for key 'input' (expected balanced|odd)");
}

ParityGateConfig gate_config(const ExperimentConfig& cfg) {
    ParityGateConfig g;
    g.alpha = cfg.alpha;
    g.theta = cfg.theta;
    g.eta = cfg.eta;
    g.measurement = cfg.measurement == "homodyne" ? ParityGateConfig::Measurement::HomodyneX0
                                                  : ParityGateConfig::Measurement::PhotonCount;
    return g;
}

double parity_target_fidelity(const CoherentBranchState& state, const std::array<Cx, 4>& input,
                              Parity parity) {
    std::array<Cx, 4> target{};
    if (parity == Parity::Even) {
        target[0] = input[0];
        target[3] = input[3];
    } else {
        target[1] = input[1];
        target[2] = input[2];
    }
    const std::array<int, 2> modes{0, 1};
    return state.reduced_density_matrix(modes).fidelity(target);
}

// --- 4-qubit Pauli bookkeeping for the fusion stabilizer oracle --------------

Eigen::Matrix2cd pauli_matrix(char p) {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
    switch (p) {
        case 'I': break;
        case 'X': m << 0, 1, 1, 0; break;
        case 'Y': m << Cx(0, 0), Cx(0, -1), Cx(0, 1), Cx(0, 0); break;
        case 'Z': m << 1, 0, 0, -1; break;
        default: throw std::logic_error("bad pauli label");
    }
    return m;
}

double pauli_expectation(const DensityMatrix& rho, const std::string& labels, double sign) {
    // labels[0] acts on the most significant register digit.
    Eigen::MatrixXcd op = Eigen::MatrixXcd::Identity(1, 1);
    for (auto it = labels.rbegin(); it != labels.rend(); ++it) {
        const Eigen::Matrix2cd m = pauli_matrix(*it);
        Eigen::MatrixXcd next(op.rows() * 2, op.cols() * 2);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                next.block(r * op.rows(), c * op.cols(), op.rows(), op.cols()) = m(r, c) * op;
        op = std::move(next);
    }
    return sign * (rho.matrix() * op).trace().real();
}

/// Post-fusion stabilizer generators (with signs) for two 2-qubit cluster
/// fragments (0,1) and (2,3) fused on the pair (1,2): the elements of the old
/// stabilizer group commuting with Z1 Z2, conjugated by the recorded bit-flip
/// correction for odd outcomes, plus Z1 Z2 itself.
std::vector<std::pair<std::string, double>> fusion_stabilizers(Parity parity) {
    // Labels are qubit order 0123.
    if (parity == Parity::Even)
        return {{"IZZI", 1.0}, {"XZII", 1.0}, {"IIZX", 1.0}, {"ZXXZ", 1.0}};
    // Odd outcome, after the recorded X on qubit 2.
    return {{"IZZI", 1.0}, {"XZII", 1.0}, {"IIZX", -1.0}, {"ZXXZ", 1.0}};
}

std::array<Cx, 4> two_qubit_cluster_amplitudes() {
    // CZ |+>|+> = (|00> + |01> + |10> - |11>)/2
    return {Cx(0.5), Cx(0.5), Cx(0.5), Cx(-0.5)};
}

CoherentBranchState two_fragment_state() {
    const std::array<Cx, 4> frag = two_qubit_cluster_amplitudes();
    std::vector<Cx> amps(16);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) amps[i * 4 + j] = frag[i] * frag[j];
    return CoherentBranchState::register_state(
        {DiscreteMode{}, DiscreteMode{}, DiscreteMode{}, DiscreteMode{}}, amps);
}

// --- individual experiments ---------------------------------------------------

int run_detector(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& summary) {
    const std::vector<Cx> amps{Cx(0.0), Cx(1.0), Cx(0.0)};
    const QndDetector detector(amps, cfg.alpha, cfg.theta, cfg.xi);
    struct Row {
        int estimate;
        double x;
    };
    auto rows = run_trials<Row>(cfg.trials, cfg.seed, [&](std::uint64_t, RngStream& rng) {
        const DetectorResult r = detector.run(rng);
        return Row{r.estimate, r.record.quadrature};
    });
    csv << "trial,estimate,x,correct\n";
    std::uint64_t wrong = 0;
    for (std::uint64_t t = 0; t < rows.size(); ++t) {
        const bool ok = rows[t].estimate == 1;
        if (!ok) ++wrong;
        csv << t << ',' << rows[t].estimate << ',' << fmt(rows[t].x) << ',' << (ok ? 1 : 0)
            << '\n';
    }
    const double empirical = static_cast<double>(wrong) / static_cast<double>(cfg.trials);
    const HomodyneError he = homodyne_error(cfg.alpha, cfg.theta);
    std::vector<double> sortedPeaks = detector.peak_means();
    std::sort(sortedPeaks.begin(), sortedPeaks.end());
    std::vector<double> weights(sortedPeaks.size(), 0.0);
    // |1> input: its peak is the middle one of {-2 a sin(2t), -2 a sin(t), 0}.
    for (std::size_t i = 0; i < sortedPeaks.size(); ++i)
        if (sortedPeaks[i] == detector.peak_means()[1]) weights[i] = 1.0;
    const double exact = exact_misclassification(sortedPeaks, weights);
    const double sigma = binomial_sigma(exact, static_cast<double>(cfg.trials));
    summary << "detector: trials=" << cfg.trials << " empirical_error=" << fmt(empirical)
            << " analytic_erfc_bound=" << fmt(he.totalBound) << " analytic_exact=" << fmt(exact)
            << " diff_sigmas=" << fmt(sigma > 0 ? (empirical - exact) / sigma : 0.0) << "\n";
    return 0;
}

int run_source(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& summary) {
    const HeraldedSource source(cfg.alphaA, 0, cfg.alpha, cfg.theta, cfg.xi);
    auto rows = run_trials<int>(cfg.trials, cfg.seed, [&](std::uint64_t, RngStream& rng) {
        return source.run(rng).heraldN;
    });
    csv << "trial,herald_n\n";
    std::map<int, std::uint64_t> counts;
    for (std::uint64_t t = 0; t < rows.size(); ++t) {
        csv << t << ',' << rows[t] << '\n';
        ++counts[rows[t]];
    }
    for (int n = 0; n <= std::min(4, source.signal_cutoff()); ++n) {
        const double rate = static_cast<double>(counts[n]) / static_cast<double>(cfg.trials);
        const double predicted = heralding_prob(cfg.alphaA, n);
        const double sigma = binomial_sigma(predicted, static_cast<double>(cfg.trials));
        summary << "source: n=" << n << " rate=" << fmt(rate) << " poisson=" << fmt(predicted)
                << " diff_sigmas=" << fmt(sigma > 0 ? (rate - predicted) / sigma : 0.0) << "\n";
    }
    return 0;
}

int run_parity(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& summary) {
    const std::array<Cx, 4> input = parity_input_amplitudes(cfg.input);
    const ParityGateConfig gate = gate_config(cfg);
    struct Row {
        Parity parity;
        MeasurementOutcome record;
        double fidelity;
    };
    auto rows = run_trials<Row>(cfg.trials, cfg.seed, [&](std::uint64_t, RngStream& rng) {
        CoherentBranchState st =
            CoherentBranchState::register_state({DiscreteMode{}, DiscreteMode{}}, input);
        const ParityOutcome out = parity_gate(st, 0, 1, gate, rng);
        double fid = -1.0;
        if (out.parity != Parity::Indeterminate)
            fid = parity_target_fidelity(st, input, out.parity);
        return Row{out.parity, out.record, fid};
    });
    csv << "trial,parity,n_p,x,fidelity\n";
    std::uint64_t even = 0, odd = 0;
    double sumN = 0.0;
    for (std::uint64_t t = 0; t < rows.size(); ++t) {
        const Row& r = rows[t];
        if (r.parity == Parity::Even) ++even;
        if (r.parity == Parity::Odd) ++odd;
        csv << t << ',' << parity_name(r.parity) << ',';
        if (r.record.kind == MeasurementOutcome::Kind::PhotonCount) {
            sumN += r.record.photonCount;
            csv << r.record.photonCount << ",,";
        } else {
            csv << ',' << fmt(r.record.quadrature) << ',';
        }
        csv << fmt(r.fidelity) << '\n';
    }
    const double n = static_cast<double>(cfg.trials);
    summary << "parity: trials=" << cfg.trials << " even_rate=" << fmt(even / n)
            << " odd_rate=" << fmt(odd / n);
    if (cfg.input == "odd") {
        const double mis = parity_misclass(cfg.alpha, cfg.theta, cfg.eta);
        const double sigma = binomial_sigma(mis, n);
        summary << " analytic_even_rate=" << fmt(mis) << " diff_sigmas="
                << fmt(sigma > 0 ? (even / n - mis) / sigma : 0.0);
        if (odd > 0)
            summary << " mean_n_odd=" << fmt(sumN / static_cast<double>(odd))
                    << " analytic_mean=" << fmt(loss_params(cfg.eta, cfg.alpha, cfg.theta).meanOddPhotons);
    }
    summary << "\n";
    return 0;
}

int run_parity_lossy(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& summary) {
    const std::array<Cx, 4> input{Cx(0.5), Cx(0.5), Cx(0.5), Cx(0.5)};
    ParityGateConfig gate = gate_config(cfg);
    CoherentBranchState st =
        CoherentBranchState::register_state({DiscreteMode{}, DiscreteMode{}}, input);
    ForcedParityMeasurement forced;
    forced.photonCount = 0;
    const ParityOutcome out = parity_gate_forced(st, 0, 1, gate, forced);
    const std::array<int, 2> modes{0, 1};
    const DensityMatrix sim = st.reduced_density_matrix(modes);
    const Cx r(M_SQRT1_2);
    const DensityMatrix pred =
        predicted_mixture(r, r, r, r, cfg.eta, cfg.alpha, cfg.theta, Parity::Even);
    const LossParams lp = loss_params(cfg.eta, cfg.alpha, cfg.theta);
    const Eigen::VectorXd ev = sim.eigenvalues();
    const double concSim = concurrence(sim);
    const double concPred = std::exp(-lp.gamma);
    csv << "eta,gamma,p_even,lambda_plus_pred,lambda_plus_sim,lambda_minus_pred,"
           "lambda_minus_sim,concurrence_pred,concurrence_sim,max_entry_diff,coherence_sim\n";
    const double coherenceSim = 2.0 * std::abs(sim.entry(0, 3));
    csv << fmt(cfg.eta) << ',' << fmt(lp.gamma) << ',' << fmt(out.record.probability) << ','
        << fmt(lp.lambdaPlus) << ',' << fmt(ev(ev.size() - 1)) << ',' << fmt(lp.lambdaMinus)
        << ',' << fmt(ev(0)) << ',' << fmt(concPred) << ',' << fmt(concSim) << ','
        << fmt(sim.max_entry_difference(pred)) << ',' << fmt(coherenceSim) << '\n';
    summary << "parity-lossy: gamma=" << fmt(lp.gamma) << " lambda+=" << fmt(lp.lambdaPlus)
            << " sim_lambda+=" << fmt(ev(ev.size() - 1))
            << " concurrence_pred=" << fmt(concPred) << " concurrence_sim=" << fmt(concSim)
            << " max_entry_diff=" << fmt(sim.max_entry_difference(pred)) << "\n";
    return 0;
}

int run_cnot(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& summary) {
    const ParityGateConfig gate = gate_config(cfg);
    struct Row {
        CnotResult result;
        double fidelity;
    };
    auto rows = run_trials<Row>(cfg.trials, cfg.seed, [&](std::uint64_t, RngStream& rng) {
        const std::array<Cx, 4> input = random_two_qubit_state(rng);
        CoherentBranchState st =
            CoherentBranchState::register_state({DiscreteMode{}, DiscreteMode{}}, input);
        const CnotResult res = cnot(st, 0, 1, gate, rng);
        double fid = -1.0;
        if (res.success) {
            std::array<Cx, 4> target;
            for (int c = 0; c < 2; ++c)
                for (int t = 0; t < 2; ++t) target[c * 2 + (t ^ c)] = input[c * 2 + t];
            const std::array<int, 2> modes{0, 1};
            fid = st.reduced_density_matrix(modes).fidelity(target);
        }
        return Row{res, fid};
    });
    csv << "trial,bellgen,parity1,ameas,parity2,bmeas,success,fidelity\n";
    double minFid = 1.0;
    std::uint64_t ok = 0;
    for (std::uint64_t t = 0; t < rows.size(); ++t) {
        const Row& r = rows[t];
        if (r.result.success) {
            ++ok;
            minFid = std::min(minFid, r.fidelity);
        }
        csv << t << ',' << parity_name(r.result.bellGenParity) << ','
            << parity_name(r.result.parity1) << ',' << (r.result.aMeasurement ? "Dbar" : "D")
            << ',' << parity_name(r.result.parity2) << ',' << (r.result.bMeasurement ? 'V' : 'H')
            << ',' << (r.result.success ? 1 : 0) << ',' << fmt(r.fidelity) << '\n';
    }
    summary << "cnot: trials=" << cfg.trials << " success_rate="
            << fmt(static_cast<double>(ok) / static_cast<double>(cfg.trials))
            << " min_fidelity=" << fmt(minFid) << "\n";
    return 0;
}

int run_bellmeas(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& summary) {
    const ParityGateConfig gate = gate_config(cfg);
    const bool randomInput = cfg.input == "random";
    std::array<Cx, 4> fixedInput{};
    if (randomInput) {
        RngStream rng(cfg.seed, 0x72616E646F6DULL);
        const std::array<Cx, 2> qa{Cx(gaussian(rng), gaussian(rng)),
                                   Cx(gaussian(rng), gaussian(rng))};
        const std::array<Cx, 2> qb{Cx(gaussian(rng), gaussian(rng)),
                                   Cx(gaussian(rng), gaussian(rng))};
        double n = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                fixedInput[i * 2 + j] = qa[i] * qb[j];
                n += std::norm(fixedInput[i * 2 + j]);
            }
        for (Cx& c : fixedInput) c /= std::sqrt(n);
    }
    struct Row {
        int inputIndex;
        BellMeasurementResult result;
        double fidelity;
    };
    auto rows = run_trials<Row>(cfg.trials, cfg.seed, [&](std::uint64_t t, RngStream& rng) {
        std::array<Cx, 4> input;
        int inputIndex = -1;
        if (randomInput) {
            input = fixedInput;
        } else {
            inputIndex = static_cast<int>(t % 4);
            input = bell_state_vector(static_cast<BellIndex>(inputIndex));
        }
        CoherentBranchState st =
            CoherentBranchState::register_state({DiscreteMode{}, DiscreteMode{}}, input);
        const BellMeasurementResult res = bell_measurement(st, 0, 1, gate, rng);
        double fid = -1.0;
        if (res.success) {
            const std::array<Cx, 4> target = bell_state_vector(res.index);
            const std::array<int, 2> modes{0, 1};
            fid = st.reduced_density_matrix(modes).fidelity(target);
        }
        return Row{inputIndex, res, fid};
    });
    csv << "trial,input,parity1,parity2,bell_index,fidelity\n";
    std::array<std::uint64_t, 4> counts{};
    double minFid = 1.0;
    std::uint64_t matches = 0;
    for (std::uint64_t t = 0; t < rows.size(); ++t) {
        const Row& r = rows[t];
        const int idx = static_cast<int>(r.result.index);
        if (r.result.success) {
            ++counts[static_cast<std::size_t>(idx)];
            minFid = std::min(minFid, r.fidelity);
            if (r.inputIndex >= 0 && idx == r.inputIndex) ++matches;
        }
        csv << t << ',' << r.inputIndex << ',' << parity_name(r.result.parity1) << ','
            << parity_name(r.result.parity2) << ',' << idx << ',' << fmt(r.fidelity) << '\n';
    }
    summary << "bellmeas: trials=" << cfg.trials << " min_fidelity=" << fmt(minFid);
    if (!randomInput)
        summary << " signature_match_rate="
                << fmt(static_cast<double>(matches) / static_cast<double>(cfg.trials));
    if (randomInput) {
        for (int i = 0; i < 4; ++i) {
            std::array<Cx, 4> bell = bell_state_vector(static_cast<BellIndex>(i));
            Cx amp(0.0);
            for (int k = 0; k < 4; ++k) amp += std::conj(bell[k]) * fixedInput[k];
            const double predicted = std::norm(amp);
            const double rate =
                static_cast<double>(counts[i]) / static_cast<double>(cfg.trials);
            const double sigma = binomial_sigma(predicted, static_cast<double>(cfg.trials));
            summary << " idx" << i << "=" << fmt(rate) << "/pred=" << fmt(predicted)
                    << "/sig=" << fmt(sigma > 0 ? (rate - predicted) / sigma : 0.0);
        }
    }
    summary << "\n";
    return 0;
}

int run_fusion(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& summary) {
    const ParityGateConfig gate = gate_config(cfg);
    struct Row {
        Parity parity;
        bool fused;
        double minStab;
    };
    auto rows = run_trials<Row>(cfg.trials, cfg.seed, [&](std::uint64_t, RngStream& rng) {
        CoherentBranchState st = two_fragment_state();
        const FusionResult res = fuse_clusters(st, 1, 2, gate, rng);
        double minStab = -2.0;
        if (res.fused) {
            const std::array<int, 4> modes{0, 1, 2, 3};
            const DensityMatrix rho = st.reduced_density_matrix(modes);
            minStab = 2.0;
            for (const auto& [labels, sign] : fusion_stabilizers(res.outcome.parity))
                minStab = std::min(minStab, pauli_expectation(rho, labels, sign));
        }
        return Row{res.outcome.parity, res.fused, minStab};
    });
    csv << "trial,parity,fused,min_stabilizer\n";
    double worst = 2.0;
    std::uint64_t even = 0;
    for (std::uint64_t t = 0; t < rows.size(); ++t) {
        const Row& r = rows[t];
        if (r.parity == Parity::Even) ++even;
        if (r.fused) worst = std::min(worst, r.minStab);
        csv << t << ',' << parity_name(r.parity) << ',' << (r.fused ? 1 : 0) << ','
            << fmt(r.minStab) << '\n';
    }
    summary << "fusion: trials=" << cfg.trials << " even_rate="
            << fmt(static_cast<double>(even) / static_cast<double>(cfg.trials))
            << " min_stabilizer=" << fmt(worst) << "\n";
    return 0;
}

// --- oracle check --------------------------------------------------------------

struct OracleCheck {
    std::string name;
    double maxError;
    double tolerance;
};

int run_oracle_check(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& summary) {
    if (!(cfg.alpha > 0.0 && cfg.alpha <= kOracleMaxAmplitude))
        throw std::invalid_argument(
            "oracle-check requires 0 < alpha <= 3 (key: alpha, oracle regime)");
    const double alpha = cfg.alpha;
    const double theta = cfg.theta;
    const int cutoff = static_cast<int>(
        std::ceil(alpha * alpha + 10.0 * alpha + 20.0));
    std::vector<OracleCheck> checks;

    {  // closed-form overlap vs truncated series
        const Cx a(alpha, 0.1), b(0.3, -alpha * 0.5);
        Cx series(0.0);
        for (int n = 0; n < cutoff; ++n)
            series += std::conj(coherent_fock_amplitude(a, n)) * coherent_fock_amplitude(b, n);
        checks.push_back({"coherent-overlap-series",
                          std::abs(series - coherent_overlap(a, b)), 1e-10});
    }
    {  // cross-Kerr
        CoherentBranchState st = CoherentBranchState::register_state(
            {DiscreteMode{}}, std::array<Cx, 2>{Cx(M_SQRT1_2), Cx(M_SQRT1_2)});
        const int bus = st.add_bus(Cx(alpha));
        FockState oracle = expand(st, std::array<int, 1>{cutoff});
        st.cross_kerr(0, bus, theta);
        oracle_cross_kerr(oracle, 0, 1, theta);
        checks.push_back(
            {"cross-kerr-fidelity",
             1.0 - fock_fidelity(oracle, expand(st, std::array<int, 1>{cutoff})), 1e-8});
    }
    {  // bus phase
        CoherentBranchState st;
        const int bus = st.add_bus(Cx(alpha));
        FockState oracle = expand(st, std::array<int, 1>{cutoff});
        st.bus_phase(bus, theta);
        oracle_bus_phase(oracle, 0, theta);
        checks.push_back(
            {"bus-phase-fidelity",
             1.0 - fock_fidelity(oracle, expand(st, std::array<int, 1>{cutoff})), 1e-8});
    }
    {  // displacement including the branch phase
        CoherentBranchState st = CoherentBranchState::register_state(
            {DiscreteMode{}}, std::array<Cx, 2>{Cx(M_SQRT1_2), Cx(M_SQRT1_2)});
        const int bus = st.add_bus(Cx(alpha));
        st.cross_kerr(0, bus, theta);
        const int bigCutoff = static_cast<int>(std::ceil(4.0 * alpha * alpha + 20.0 * alpha + 30.0));
        FockState oracle = expand(st, std::array<int, 1>{bigCutoff});
        st.displace(bus, Cx(-alpha));
        oracle_displace(oracle, 1, Cx(-alpha));
        checks.push_back(
            {"displacement-fidelity",
             1.0 - fock_fidelity(oracle, expand(st, std::array<int, 1>{bigCutoff})), 1e-8});
    }
    {  // loss channel vs two-mode beam splitter
        CoherentBranchState st = CoherentBranchState::register_state(
            {DiscreteMode{}}, std::array<Cx, 2>{Cx(M_SQRT1_2), Cx(M_SQRT1_2)});
        const int bus = st.add_bus(Cx(alpha));
        st.cross_kerr(0, bus, theta);
        const double eta = cfg.eta > 0.0 ? cfg.eta : 0.3;
        FockState oracle = expand(st, std::array<int, 1>{cutoff});
        st.loss_channel(bus, eta);
        oracle_beam_splitter(oracle, 1, eta, cutoff);
        checks.push_back(
            {"loss-fidelity",
             1.0 - fock_fidelity(oracle, expand(st, std::array<int, 2>{cutoff, cutoff})), 1e-8});
    }
    {  // homodyne pdf, pointwise
        CoherentBranchState st = CoherentBranchState::register_state(
            {DiscreteMode{}}, std::array<Cx, 2>{Cx(M_SQRT1_2), Cx(M_SQRT1_2)});
        const int bus = st.add_bus(Cx(alpha));
        st.cross_kerr(0, bus, M_PI);  // widely separated branches
        const FockState oracle = expand(st, std::array<int, 1>{cutoff});
        HomodyneSetting hs;
        hs.xi = cfg.xi;
        double worst = 0.0;
        for (double x = -2.0 * alpha - 8.0; x <= 2.0 * alpha + 8.0; x += 0.25)
            worst = std::max(worst, std::abs(homodyne_pdf(st, bus, hs, x) -
                                             oracle_homodyne_pdf(oracle, 1, cfg.xi, x)));
        checks.push_back({"homodyne-pdf", worst, 1e-6});
    }
    {  // photon pmf, pointwise
        CoherentBranchState st = CoherentBranchState::register_state(
            {DiscreteMode{}}, std::array<Cx, 2>{Cx(M_SQRT1_2), Cx(M_SQRT1_2)});
        const int bus = st.add_bus(Cx(alpha));
        st.cross_kerr(0, bus, theta);
        const FockState oracle = expand(st, std::array<int, 1>{cutoff});
        const std::vector<double> pmf = photon_number_pmf(st, bus, PhotonCountSetting{});
        const std::vector<double> opmf = oracle_photon_pmf(oracle, 1);
        double worst = 0.0;
        for (std::size_t n = 0; n < std::min(pmf.size(), opmf.size()); ++n)
            worst = std::max(worst, std::abs(pmf[n] - opmf[n]));
        checks.push_back({"photon-pmf", worst, 1e-6});
    }
    {  // quadrature completeness: int <a|x><x|b> dx = <a|b>
        const Cx a(0.7 * alpha, 0.2), b(-0.4, 0.5 * alpha);
        Cx integral(0.0);
        const double step = 0.005;
        for (double x = -10.0 * alpha - 15.0; x <= 10.0 * alpha + 15.0; x += step)
            integral += std::conj(quadrature_amplitude(x, a, cfg.xi)) *
                        quadrature_amplitude(x, b, cfg.xi) * step;
        checks.push_back(
            {"quadrature-completeness", std::abs(integral - coherent_overlap(a, b)), 1e-8});
    }

    csv << "check,max_error,tolerance,status\n";
    bool allPass = true;
    for (const OracleCheck& c : checks) {
        const bool pass = c.maxError <= c.tolerance;
        allPass = allPass && pass;
        csv << c.name << ',' << fmt(c.maxError) << ',' << fmt(c.tolerance) << ','
            << (pass ? "pass" : "fail") << '\n';
        summary << "oracle-check: " << c.name << " max_error=" << fmt(c.maxError)
                << " tolerance=" << fmt(c.tolerance) << (pass ? " PASS" : " FAIL") << "\n";
    }
    return allPass ? 0 : 1;
}

// --- sweep ----------------------------------------------------------------------

struct SweepPoint {
    double analytic;
    double empirical;
    double stderrValue;
};

SweepPoint sweep_cell(const ExperimentConfig& cfg) {
    if (cfg.inner == "detector") {
        const std::vector<Cx> amps{Cx(0.0), Cx(1.0), Cx(0.0)};
        const QndDetector det(amps, cfg.alpha, cfg.theta, cfg.xi);
        std::uint64_t wrong = 0;
        for (std::uint64_t t = 0; t < cfg.trials; ++t) {
            RngStream rng(cfg.seed, t);
            if (det.run(rng).estimate != 1) ++wrong;
        }
        const double p = static_cast<double>(wrong) / static_cast<double>(cfg.trials);
        return SweepPoint{homodyne_error(cfg.alpha, cfg.theta).totalBound, p,
                          binomial_sigma(p, static_cast<double>(cfg.trials))};
    }
    if (cfg.inner == "source") {
        const HeraldedSource src(cfg.alphaA, 0, cfg.alpha, cfg.theta, cfg.xi);
        std::uint64_t ok = 0;
        for (std::uint64_t t = 0; t < cfg.trials; ++t) {
            RngStream rng(cfg.seed, t);
            if (src.run(rng).heraldN == 1) ++ok;
        }
        const double p = static_cast<double>(ok) / static_cast<double>(cfg.trials);
        return SweepPoint{heralding_prob(cfg.alphaA, 1), p,
                          binomial_sigma(p, static_cast<double>(cfg.trials))};
    }
    if (cfg.inner == "parity-lossy") {
        const std::array<Cx, 4> input{Cx(0.5), Cx(0.5), Cx(0.5), Cx(0.5)};
        CoherentBranchState st =
            CoherentBranchState::register_state({DiscreteMode{}, DiscreteMode{}}, input);
        ForcedParityMeasurement forced;
        forced.photonCount = 0;
        parity_gate_forced(st, 0, 1, gate_config(cfg), forced);
        const std::array<int, 2> modes{0, 1};
        const DensityMatrix rho = st.reduced_density_matrix(modes);
        return SweepPoint{std::exp(-loss_params(cfg.eta, cfg.alpha, cfg.theta).gamma),
                          2.0 * std::abs(rho.entry(0, 3)), 0.0};
    }
    throw std::invalid_argument("invalid value for key 'inner' (detector|source|parity-lossy)");
}

int run_sweep(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& summary) {
    if (cfg.sweeps.empty())
        throw std::invalid_argument("sweep requires at least one axis (key: sweep)");
    if (cfg.sweeps.size() > 2)
        throw std::invalid_argument("sweep supports at most 2 axes (key: sweep)");
    for (const SweepAxis& ax : cfg.sweeps)
        if (ax.values.empty())
            throw std::invalid_argument("empty sweep range (key: sweep)");
    csv << "param1,value1,param2,value2,analytic,empirical,stderr\n";
    const SweepAxis& first = cfg.sweeps[0];
    const bool two = cfg.sweeps.size() == 2;
    std::vector<double> empiricals;
    for (double v1 : first.values) {
        const std::size_t innerCount = two ? cfg.sweeps[1].values.size() : 1;
        for (std::size_t i2 = 0; i2 < innerCount; ++i2) {
            ExperimentConfig cell = cfg;
            apply_key(cell, first.key, fmt(v1));
            if (two) apply_key(cell, cfg.sweeps[1].key, fmt(cfg.sweeps[1].values[i2]));
            const SweepPoint p = sweep_cell(cell);
            empiricals.push_back(p.empirical);
            csv << first.key << ',' << fmt(v1) << ',';
            if (two)
                csv << cfg.sweeps[1].key << ',' << fmt(cfg.sweeps[1].values[i2]) << ',';
            else
                csv << ",,";
            csv << fmt(p.analytic) << ',' << fmt(p.empirical) << ',' << fmt(p.stderrValue)
                << '\n';
        }
    }
    summary << "sweep: inner=" << cfg.inner << " cells=" << empiricals.size() << "\n";
    return 0;
}

}  // namespace

ExperimentKind experiment_from_name(const std::string& name) {
    if (name == "detector") return ExperimentKind::Detector;
    if (name == "source") return ExperimentKind::Source;
    if (name == "parity") return ExperimentKind::Parity;
    if (name == "parity-lossy") return ExperimentKind::ParityLossy;
    if (name == "cnot") return ExperimentKind::Cnot;
    if (name == "bellmeas") return ExperimentKind::BellMeas;
    if (name == "fusion") return ExperimentKind::Fusion;
    if (name == "oracle-check") return ExperimentKind::OracleCheck;
    if (name == "sweep") return ExperimentKind::Sweep;
    throw std::invalid_argument("unknown experiment '" + name + "' (key: experiment)");
}

std::string experiment_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Detector: return "detector";
        case ExperimentKind::Source: return "source";
        case ExperimentKind::Parity: return "parity";
        case ExperimentKind::ParityLossy: return "parity-lossy";
        case ExperimentKind::Cnot: return "cnot";
        case ExperimentKind::BellMeas: return "bellmeas";
        case ExperimentKind::Fusion: return "fusion";
        case ExperimentKind::OracleCheck: return "oracle-check";
        case ExperimentKind::Sweep: return "sweep";
    }
    return "unknown";
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.trials < 1) throw std::invalid_argument("trials must be >= 1 (key: trials)");
    if (!(cfg.alpha > 0.0)) throw std::invalid_argument("alpha must be > 0 (key: alpha)");
    if (!std::isfinite(cfg.theta)) throw std::invalid_argument("theta must be finite (key: theta)");
    if (!(cfg.eta >= 0.0 && cfg.eta <= 1.0))
        throw std::invalid_argument("eta must be in [0, 1] (key: eta)");
    if (!(cfg.alphaA >= 0.0 && cfg.alphaA <= 2.0))
        throw std::invalid_argument("alpha-a must be in [0, 2] (key: alpha-a)");
    if (cfg.measurement != "photon" && cfg.measurement != "homodyne")
        throw std::invalid_argument("measurement must be photon|homodyne (key: measurement)");
    if (cfg.experiment == ExperimentKind::Parity && cfg.input != "balanced" &&
        cfg.input != "odd")
        throw std::invalid_argument("input must be balanced|odd (key: input)");
    if (cfg.experiment == ExperimentKind::BellMeas && cfg.input != "bell" &&
        cfg.input != "random" && cfg.input != "balanced")
        throw std::invalid_argument("input must be bell|random (key: input)");
}

std::vector<std::pair<std::string, std::string>> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "' (key: config)");
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config file line is not 'key = value': " + line);
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

SweepAxis parse_sweep_axis(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("sweep axis must be key=v1,v2,... (key: sweep)");
    SweepAxis ax;
    ax.key = spec.substr(0, eq);
    std::stringstream ss(spec.substr(eq + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size())
            throw std::invalid_argument("bad sweep value '" + tok + "' (key: sweep)");
        ax.values.push_back(v);
    }
    return ax;
}

void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    auto as_double = [&](const char* k) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(value, &pos);
            if (pos != value.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw std::invalid_argument(std::string("bad numeric value for key '") + k + "'");
        }
    };
    auto as_u64 = [&](const char* k) {
        try {
            std::size_t pos = 0;
            const unsigned long long v = std::stoull(value, &pos);
            if (pos != value.size()) throw std::invalid_argument("");
            return static_cast<std::uint64_t>(v);
        } catch (...) {
            throw std::invalid_argument(std::string("bad integer value for key '") + k + "'");
        }
    };
    if (key == "experiment") cfg.experiment = experiment_from_name(value);
    else if (key == "alpha") cfg.alpha = as_double("alpha");
    else if (key == "theta") cfg.theta = as_double("theta");
    else if (key == "eta") cfg.eta = as_double("eta");
    else if (key == "alpha-a" || key == "alpha_a") cfg.alphaA = as_double("alpha-a");
    else if (key == "xi") cfg.xi = as_double("xi");
    else if (key == "trials") cfg.trials = as_u64("trials");
    else if (key == "seed") cfg.seed = as_u64("seed");
    else if (key == "measurement") cfg.measurement = value;
    else if (key == "input") cfg.input = value;
    else if (key == "inner") cfg.inner = value;
    else if (key == "out") cfg.out = value;
    else if (key == "sweep") cfg.sweeps.push_back(parse_sweep_axis(value));
    else throw std::invalid_argument("unknown configuration key '" + key + "'");
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& csv, std::ostream& summary) {
    validate(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    int rc = 0;
    switch (cfg.experiment) {
        case ExperimentKind::Detector: rc = run_detector(cfg, csv, summary); break;
        case ExperimentKind::Source: rc = run_source(cfg, csv, summary); break;
        case ExperimentKind::Parity: rc = run_parity(cfg, csv, summary); break;
        case ExperimentKind::ParityLossy: rc = run_parity_lossy(cfg, csv, summary); break;
        case ExperimentKind::Cnot: rc = run_cnot(cfg, csv, summary); break;
        case ExperimentKind::BellMeas: rc = run_bellmeas(cfg, csv, summary); break;
        case ExperimentKind::Fusion: rc = run_fusion(cfg, csv, summary); break;
        case ExperimentKind::OracleCheck: rc = run_oracle_check(cfg, csv, summary); break;
        case ExperimentKind::Sweep: rc = run_sweep(cfg, csv, summary); break;
    }
    // Timing goes to the summary only; the CSV stays byte-deterministic.
    summary << "runtime_seconds="
            << fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count())
            << "\n";
    return rc;
}

}  // namespace kerrbus
