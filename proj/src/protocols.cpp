#include "kerrbus/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kerrbus {

namespace {

Mat2 mat2_mul(const Mat2& a, const Mat2& b) {
    Mat2 c{};
    for (int r = 0; r < 2; ++r)
        for (int k = 0; k < 2; ++k)
            for (int col = 0; col < 2; ++col) c[r][col] += a[r][k] * b[k][col];
    return c;
}

Mat2 conjugate_by_hadamard(const Mat2& u) {
    const Mat2 h = hadamard();
    return mat2_mul(h, mat2_mul(u, h));
}

void require_qubit_pair(const CoherentBranchState& st, int a, int b) {
    if (a == b) throw std::invalid_argument("parity gate: qubitA == qubitB");
    if (st.discrete_mode(a).kind != DiscreteKind::Qubit ||
        st.discrete_mode(b).kind != DiscreteKind::Qubit)
        throw std::invalid_argument("parity gate: both modes must be qubits");
}

void apply_correction(CoherentBranchState& st, FeedForwardRecord& rec, int mode, Mat2 u,
                      CorrectionReason reason, bool conjugateDiagonal) {
    if (conjugateDiagonal) u = conjugate_by_hadamard(u);
    st.apply_register_unitary(mode, u);
    rec.entries.push_back(FeedForwardEntry{mode, u, reason});
}

int force_photon_count(const ParityGateConfig& cfg, Parity parity) {
    if (parity == Parity::Even) return 0;
    return std::max(1, static_cast<int>(std::llround(cfg.mean_odd_photons())));
}

}  // namespace

void FeedForwardRecord::apply(CoherentBranchState& state) const {
    for (const FeedForwardEntry& e : entries) state.apply_register_unitary(e.targetMode, e.unitary);
}

void FeedForwardRecord::apply_inverse(CoherentBranchState& state) const {
    for (auto it = entries.rbegin(); it != entries.rend(); ++it)
        state.apply_register_unitary(it->targetMode, mat2_dagger(it->unitary));
}

ParityGateConfig ErrorModelParams::applied_to(ParityGateConfig base) const {
    if (!(eta >= 0.0 && eta <= 1.0))
        throw std::invalid_argument("ErrorModelParams: eta outside [0, 1]");
    base.eta = eta;
    if (alpha) {
        if (!(*alpha > 0.0)) throw std::invalid_argument("ErrorModelParams: alpha must be > 0");
        base.alpha = *alpha;
    }
    if (theta) {
        if (!std::isfinite(*theta))
            throw std::invalid_argument("ErrorModelParams: theta must be finite");
        base.theta = *theta;
    }
    return base;
}

double ParityGateConfig::transmission() const { return std::sqrt(std::max(0.0, 1.0 - eta * eta)); }

double ParityGateConfig::mean_odd_photons() const {
    const double s = std::sin(0.5 * theta);
    return 4.0 * (1.0 - eta * eta) * alpha * alpha * s * s;
}

double ParityGateConfig::separation() const {
    const double s = std::sin(0.5 * theta);
    if (measurement == Measurement::PhotonCount) return mean_odd_photons();
    return 4.0 * transmission() * alpha * s * s;  // 2 tau alpha (1 - cos theta), in sigma units
}

namespace {

ParityOutcome run_parity_gate(CoherentBranchState& st, int qubitA, int qubitB,
                              const ParityGateConfig& cfg, RngStream* rng,
                              const ForcedParityMeasurement* forced) {
    require_qubit_pair(st, qubitA, qubitB);
    if (!(cfg.alpha > 0.0)) throw std::invalid_argument("parity gate: alpha must be > 0");
    if (!(cfg.eta >= 0.0 && cfg.eta <= 1.0))
        throw std::invalid_argument("parity gate: eta outside [0, 1]");

    const bool diagonal = cfg.basis == ParityGateConfig::Basis::Diagonal;
    const double tau = cfg.transmission();
    const double alphaBar = tau * cfg.alpha;
    const double sinTheta = std::sin(cfg.theta);

    if (diagonal) {
        st.apply_register_unitary(qubitA, hadamard());
        st.apply_register_unitary(qubitB, hadamard());
    }

    const int bus = st.add_bus(Cx(cfg.alpha));
    st.cross_kerr_on_value(qubitA, 0, bus, cfg.theta);  // H component of A
    if (cfg.eta > 0.0) st.loss_channel(bus, cfg.eta);   // channel between the sites
    st.cross_kerr_on_value(qubitB, 1, bus, cfg.theta);  // V component of B
    st.bus_phase(bus, -cfg.theta);

    ParityOutcome out;
    out.degraded = cfg.separation() < cfg.minSeparation;

    double phiMeasurement = 0.0;
    if (cfg.measurement == ParityGateConfig::Measurement::PhotonCount) {
        st.displace(bus, Cx(-alphaBar));
        if (forced) {
            const int n = forced->photonCount.value();
            out.record.kind = MeasurementOutcome::Kind::PhotonCount;
            out.record.photonCount = n;
            out.record.probability = condition_photon_number(st, bus, n);
        } else {
            out.record = photon_number_measure(st, bus, cfg.photon, *rng);
        }
        const int n = out.record.photonCount;
        out.parity = n == 0 ? Parity::Even
                            : (n < cfg.photon.indeterminateThreshold ? Parity::Indeterminate
                                                                     : Parity::Odd);
        phiMeasurement = phi_correction(n, cfg.theta).feedForward;
    } else {
        HomodyneSetting hs = cfg.homodyne;
        hs.xi = 0.0;
        double x;
        if (forced) {
            x = forced->quadrature.value();
            out.record.kind = MeasurementOutcome::Kind::Quadrature;
            out.record.quadrature = x;
            out.record.probability = homodyne_condition(st, bus, hs.xi, x);
        } else {
            out.record = homodyne_sample(st, bus, hs, *rng);
            x = out.record.quadrature;
        }
        const double evenMean = 2.0 * alphaBar;
        const double oddMean = 2.0 * alphaBar * std::cos(cfg.theta);
        const std::array<double, 2> peaks{oddMean, evenMean};
        out.parity = classify_peaks(x, peaks) == 1 ? Parity::Even : Parity::Odd;
        phiMeasurement = alphaBar * sinTheta * (x - alphaBar * std::cos(cfg.theta));
    }

    if (out.parity != Parity::Indeterminate) {
        // The gate's declared output is the classified parity eigenspace; the
        // discarded cross-parity tail has mass <= e^{-mean odd count}, which
        // is exactly the misclassification probability the analytics module
        // reports. If the classified span is empty (a misclassification of a
        // pure opposite-parity input), the back-acted state is kept as is.
        const bool keepEqual = out.parity == Parity::Even;
        double keptMass = 0.0;
        for (const Branch& br : st.branches())
            if ((br.reg[qubitA] == br.reg[qubitB]) == keepEqual)
                keptMass += std::norm(br.amplitude);
        if (keptMass > 1e-12) {
            std::vector<Cx> zeroed;
            zeroed.reserve(st.branch_count());
            for (const Branch& br : st.branches())
                zeroed.push_back(((br.reg[qubitA] == br.reg[qubitB]) == keepEqual) ? Cx(1.0)
                                                                                   : Cx(0.0));
            st.weight_branches(zeroed);
            st.prune();
            st.normalize();
        }
    }

    if (diagonal) {
        st.apply_register_unitary(qubitA, hadamard());
        st.apply_register_unitary(qubitB, hadamard());
    }

    if (out.parity != Parity::Indeterminate) {
        if (out.parity == Parity::Odd && cfg.applyFeedForward && phiMeasurement != 0.0)
            apply_correction(st, out.corrections, qubitA,
                             phase_diag(-phiMeasurement, phiMeasurement),
                             CorrectionReason::PhiCorrection, diagonal);
        if (out.parity == Parity::Odd && cfg.applyStaticPhaseCorrection &&
            cfg.measurement == ParityGateConfig::Measurement::PhotonCount) {
            // D(-tau alpha) puts e^{+i Im(beta alpha*)} = e^{+i tau^2 a^2 sin t}
            // on the HV branch and the conjugate on VH.
            const double phiStatic = alphaBar * alphaBar * sinTheta;
            apply_correction(st, out.corrections, qubitA, phase_diag(-phiStatic, phiStatic),
                             CorrectionReason::StaticDisplacementPhase, diagonal);
        }
        if (cfg.eta > 0.0 && cfg.applyStaticPhaseCorrection) {
            const double phiLoss = 0.5 * cfg.eta * cfg.eta * cfg.alpha * cfg.alpha * sinTheta;
            apply_correction(st, out.corrections, qubitA, phase_diag(-phiLoss, phiLoss),
                             CorrectionReason::LossyPhaseCorrection, diagonal);
        }
    }
    st.prune();
    return out;
}

}  // namespace

ParityOutcome parity_gate(CoherentBranchState& state, int qubitA, int qubitB,
                          const ParityGateConfig& cfg, RngStream& rng) {
    return run_parity_gate(state, qubitA, qubitB, cfg, &rng, nullptr);
}

ParityOutcome parity_gate_forced(CoherentBranchState& state, int qubitA, int qubitB,
                                 const ParityGateConfig& cfg,
                                 const ForcedParityMeasurement& forced) {
    if (cfg.measurement == ParityGateConfig::Measurement::PhotonCount && !forced.photonCount)
        throw std::invalid_argument("parity_gate_forced: photonCount required");
    if (cfg.measurement == ParityGateConfig::Measurement::HomodyneX0 && !forced.quadrature)
        throw std::invalid_argument("parity_gate_forced: quadrature required");
    return run_parity_gate(state, qubitA, qubitB, cfg, nullptr, &forced);
}

// --- QND detector -----------------------------------------------------------

QndDetector::QndDetector(std::vector<Cx> signalAmplitudes, double alpha, double theta, double xi,
                         HomodyneSetting setting)
    : xi_(xi) {
    if (signalAmplitudes.size() < 2)
        throw std::invalid_argument("QndDetector: need at least two signal levels");
    double norm = 0.0;
    for (const Cx& c : signalAmplitudes) norm += std::norm(c);
    if (!(norm > 0.0)) throw std::invalid_argument("QndDetector: zero signal state");
    for (Cx& c : signalAmplitudes) c /= std::sqrt(norm);

    const int dim = static_cast<int>(signalAmplitudes.size());
    postKerr_ = CoherentBranchState::register_state({DiscreteMode{DiscreteKind::Fock, dim}},
                                                    signalAmplitudes);
    busMode_ = postKerr_.add_bus(Cx(alpha));
    postKerr_.cross_kerr(0, busMode_, theta);

    peakByN_.resize(dim);
    for (int n = 0; n < dim; ++n)
        peakByN_[n] = 2.0 * (Cx(alpha) * std::polar(1.0, n * theta + xi)).real();
    const auto [lo, hi] = std::minmax_element(peakByN_.begin(), peakByN_.end());
    degenerate_ = (*hi - *lo) < 1e-9;
    if (!degenerate_) {
        std::vector<int> order(dim);
        for (int n = 0; n < dim; ++n) order[n] = n;
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return peakByN_[a] < peakByN_[b]; });
        for (int i : order) {
            if (!sortedPeaks_.empty() && peakByN_[i] - sortedPeaks_.back() < 1e-9)
                throw std::invalid_argument(
                    "QndDetector: peak means are partially degenerate (n theta too large?)");
            sortedPeaks_.push_back(peakByN_[i]);
            peakToN_.push_back(i);
        }
    }
    setting.xi = xi;
    sampler_.emplace(postKerr_, busMode_, setting);

    priorCdf_.resize(dim);
    double acc = 0.0;
    for (int n = 0; n < dim; ++n) {
        acc += std::norm(signalAmplitudes[n]);
        priorCdf_[n] = acc;
    }
}

DetectorResult QndDetector::run(RngStream& rng) const {
    DetectorResult res;
    const double x = sampler_->sample(rng);
    res.record.kind = MeasurementOutcome::Kind::Quadrature;
    res.record.quadrature = x;
    if (degenerate_) {
        // No information in the probe: blind guess from the priors.
        const double u = rng.uniform01() * priorCdf_.back();
        res.estimate = static_cast<int>(
            std::lower_bound(priorCdf_.begin(), priorCdf_.end(), u) - priorCdf_.begin());
        res.estimate = std::min(res.estimate, static_cast<int>(priorCdf_.size()) - 1);
    } else {
        res.estimate = peakToN_[classify_peaks(x, sortedPeaks_)];
    }
    res.conditioned = postKerr_;
    res.record.probability = homodyne_condition(res.conditioned, busMode_, xi_, x);
    return res;
}

DetectorResult qnd_photon_detect(std::span<const Cx> signalAmplitudes, double alpha, double theta,
                                 double xi, RngStream& rng) {
    QndDetector det(std::vector<Cx>(signalAmplitudes.begin(), signalAmplitudes.end()), alpha,
                    theta, xi);
    return det.run(rng);
}

// --- heralded source ---------------------------------------------------------

HeraldedSource::HeraldedSource(double alphaA, int signalCutoff, double alpha, double theta,
                               double xi, HomodyneSetting setting) {
    if (!(alphaA >= 0.0 && alphaA <= 2.0))
        throw std::invalid_argument("HeraldedSource: alphaA must be in [0, 2]");
    const double mean = alphaA * alphaA;
    auto leak_beyond = [&](int c) {
        double mass = 0.0, term = std::exp(-mean);
        for (int n = 0; n <= c; ++n) {
            mass += term;
            term *= mean / (n + 1.0);
        }
        return 1.0 - mass;
    };
    if (signalCutoff <= 0) {
        signalCutoff = 4;
        while (leak_beyond(signalCutoff) >= 1e-6) ++signalCutoff;
    } else if (leak_beyond(signalCutoff) >= 1e-6) {
        throw std::invalid_argument("HeraldedSource: signal cutoff leaks more than 1e-6");
    }
    cutoff_ = signalCutoff;
    std::vector<Cx> amps(cutoff_ + 1);
    for (int n = 0; n <= cutoff_; ++n) amps[n] = coherent_fock_amplitude(Cx(alphaA), n);
    detector_.emplace(std::move(amps), alpha, theta, xi, setting);
}

HeraldResult HeraldedSource::run(RngStream& rng) const {
    DetectorResult det = detector_->run(rng);
    HeraldResult out;
    out.heraldN = det.estimate;
    out.conditioned = std::move(det.conditioned);
    return out;
}

HeraldResult prepare_heralded_photon(double alphaA, int signalCutoff, double alpha, double theta,
                                     RngStream& rng) {
    HeraldedSource src(alphaA, signalCutoff, alpha, theta);
    return src.run(rng);
}

// --- protocols ----------------------------------------------------------------

BellPairResult make_bell_pair(const ParityGateConfig& cfg, RngStream& rng) {
    const double half = 0.5;
    const std::array<Cx, 4> amps{Cx(half), Cx(half), Cx(half), Cx(half)};
    BellPairResult res;
    res.state = CoherentBranchState::register_state({DiscreteMode{}, DiscreteMode{}}, amps);
    res.outcome = parity_gate(res.state, 0, 1, cfg, rng);
    if (res.outcome.parity == Parity::Indeterminate) return res;
    if (res.outcome.parity == Parity::Odd)
        apply_correction(res.state, res.outcome.corrections, 1, pauli_x(),
                         CorrectionReason::BitFlip, false);
    res.success = true;
    return res;
}

CnotResult cnot(CoherentBranchState& state, int control, int target,
                const ParityGateConfig& cfg, RngStream& rng, const CnotOptions& options) {
    if (control == target) throw std::invalid_argument("cnot: control == target");
    CnotResult res;
    const double r = M_SQRT1_2;
    const int a = state.add_qubit(Cx(r), Cx(r));
    const int b = state.add_qubit(Cx(r), Cx(r));

    ParityGateConfig comp = cfg;
    comp.basis = ParityGateConfig::Basis::Computational;
    ParityGateConfig diag = cfg;
    diag.basis = ParityGateConfig::Basis::Diagonal;

    auto run_gate = [&](int qa, int qb, const ParityGateConfig& gateCfg,
                        const std::optional<Parity>& force) {
        if (force) {
            ForcedParityMeasurement f;
            if (gateCfg.measurement == ParityGateConfig::Measurement::PhotonCount)
                f.photonCount = force_photon_count(gateCfg, *force);
            else
                f.quadrature = *force == Parity::Even
                                   ? 2.0 * gateCfg.transmission() * gateCfg.alpha
                                   : 2.0 * gateCfg.transmission() * gateCfg.alpha *
                                         std::cos(gateCfg.theta);
            return parity_gate_forced(state, qa, qb, gateCfg, f);
        }
        return parity_gate(state, qa, qb, gateCfg, rng);
    };

    // Ancilla Bell pair from a parity gate on |+>|+>.
    const ParityOutcome bellGen = run_gate(a, b, comp, options.forceBellGen);
    res.bellGenParity = bellGen.parity;
    if (bellGen.parity == Parity::Indeterminate) return res;
    if (bellGen.parity == Parity::Odd)
        apply_correction(state, res.corrections, b, pauli_x(), CorrectionReason::BitFlip, false);

    // Parity gate between control and ancilla a.
    const ParityOutcome g1 = run_gate(control, a, comp, options.forceParity1);
    res.parity1 = g1.parity;
    if (g1.parity == Parity::Indeterminate) return res;
    if (g1.parity == Parity::Odd && options.applyProtocolCorrections)
        apply_correction(state, res.corrections, b, pauli_x(), CorrectionReason::BitFlip, false);

    // Measure a in the {D, Dbar} basis.
    state.apply_register_unitary(a, hadamard());
    if (options.forceAMeasurement)
        condition_discrete(state, a, *options.forceAMeasurement);
    else
        res.aMeasurement = measure_discrete(state, a, rng).value;
    if (options.forceAMeasurement) res.aMeasurement = *options.forceAMeasurement;
    if (res.aMeasurement == 1 && options.applyProtocolCorrections)
        apply_correction(state, res.corrections, b, pauli_z(), CorrectionReason::SignFlip, false);

    // Diagonal-basis parity gate between target and ancilla b.
    const ParityOutcome g2 = run_gate(target, b, diag, options.forceParity2);
    res.parity2 = g2.parity;
    if (g2.parity == Parity::Indeterminate) return res;
    if (g2.parity == Parity::Odd && options.applyProtocolCorrections) {
        // Bit flip in the rotated basis (swaps D and Dbar) plus the sign flip
        // on the control's V amplitude.
        apply_correction(state, res.corrections, b, pauli_z(), CorrectionReason::BitFlip, false);
        apply_correction(state, res.corrections, control, pauli_z(), CorrectionReason::SignFlip,
                         false);
    }

    // Measure b in the computational basis.
    if (options.forceBMeasurement) {
        condition_discrete(state, b, *options.forceBMeasurement);
        res.bMeasurement = *options.forceBMeasurement;
    } else {
        res.bMeasurement = measure_discrete(state, b, rng).value;
    }
    if (res.bMeasurement == 1 && options.applyProtocolCorrections)
        apply_correction(state, res.corrections, target, pauli_x(), CorrectionReason::BitFlip,
                         false);

    state.remove_discrete_mode(b);
    state.remove_discrete_mode(a);
    res.success = true;
    return res;
}

std::array<Cx, 4> bell_state_vector(BellIndex index) {
    const double r = M_SQRT1_2;
    switch (index) {
        case BellIndex::PhiPlus: return {Cx(r), Cx(0), Cx(0), Cx(r)};
        case BellIndex::PhiMinus: return {Cx(r), Cx(0), Cx(0), Cx(-r)};
        case BellIndex::PsiPlus: return {Cx(0), Cx(r), Cx(r), Cx(0)};
        case BellIndex::PsiMinus: return {Cx(0), Cx(r), Cx(-r), Cx(0)};
    }
    throw std::logic_error("bell_state_vector: bad index");
}

BellMeasurementResult bell_measurement(CoherentBranchState& state, int qubitA, int qubitB,
                                       const ParityGateConfig& cfg, RngStream& rng) {
    BellMeasurementResult res;
    ParityGateConfig comp = cfg;
    comp.basis = ParityGateConfig::Basis::Computational;
    ParityGateConfig diag = cfg;
    diag.basis = ParityGateConfig::Basis::Diagonal;

    res.gate1 = parity_gate(state, qubitA, qubitB, comp, rng);
    res.parity1 = res.gate1.parity;
    if (res.parity1 == Parity::Indeterminate) return res;
    res.gate2 = parity_gate(state, qubitA, qubitB, diag, rng);
    res.parity2 = res.gate2.parity;
    if (res.parity2 == Parity::Indeterminate) return res;

    if (res.parity1 == Parity::Even)
        res.index = res.parity2 == Parity::Even ? BellIndex::PhiPlus : BellIndex::PhiMinus;
    else
        res.index = res.parity2 == Parity::Even ? BellIndex::PsiPlus : BellIndex::PsiMinus;
    res.success = true;
    return res;
}

FusionResult fuse_clusters(CoherentBranchState& state, int qubitA, int qubitB,
                           const ParityGateConfig& cfg, RngStream& rng) {
    FusionResult res;
    ParityGateConfig comp = cfg;
    comp.basis = ParityGateConfig::Basis::Computational;
    res.outcome = parity_gate(state, qubitA, qubitB, comp, rng);
    if (res.outcome.parity == Parity::Indeterminate) return res;
    if (res.outcome.parity == Parity::Odd)
        apply_correction(state, res.outcome.corrections, qubitB, pauli_x(),
                         CorrectionReason::BitFlip, false);
    res.fused = true;
    return res;
}

}  // namespace kerrbus
