#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kerrbus/fock_oracle.hpp"
#include "kerrbus/measurement.hpp"
#include "test_util.hpp"

using namespace kerrbus;

TEST_CASE("expand: vacuum, Poisson tail and overlap consistency") {
    CoherentBranchState vac;
    vac.add_bus(Cx(0.0));
    const FockState fvac = expand(vac, std::array<int, 1>{8});
    CHECK(std::abs(fvac.amplitudes()[0] - Cx(1.0)) < 1e-15);
    CHECK(std::abs(fvac.norm_squared() - 1.0) < 1e-15);

    CoherentBranchState one;
    one.add_bus(Cx(1.0));
    const FockState fone = expand(one, std::array<int, 1>{30});
    CHECK(std::abs(fone.norm_squared() - 1.0) < 1e-12);

    // overlap of two expanded coherent states matches the closed form
    CoherentBranchState a, b;
    a.add_bus(Cx(1.2, -0.7));
    b.add_bus(Cx(-0.5, 0.8));
    const FockState fa = expand(a, std::array<int, 1>{44});
    const FockState fb = expand(b, std::array<int, 1>{44});
    CHECK(std::abs(fock_inner(fa, fb) - coherent_overlap(Cx(1.2, -0.7), Cx(-0.5, 0.8))) < 1e-10);

    CoherentBranchState big;
    big.add_bus(Cx(4.0));
    CHECK_THROWS_AS(expand(big, std::array<int, 1>{30}), std::invalid_argument);
}

TEST_CASE("displacement operator: inverse pair, unitarity, coherent action") {
    const int dim = 42;
    const Cx beta(0.8, -0.45);
    const Eigen::MatrixXcd d = displacement_matrix(dim, beta);
    const Eigen::MatrixXcd dInv = displacement_matrix(dim, -beta);
    const Eigen::MatrixXcd prod = d * dInv;
    // cutoff-interior block
    double worst = 0.0;
    for (int r = 0; r < 20; ++r)
        for (int c = 0; c < 20; ++c)
            worst = std::max(worst, std::abs(prod(r, c) - (r == c ? Cx(1) : Cx(0))));
    CHECK(worst < 1e-9);

    // D(beta)|0> = |beta>
    Eigen::VectorXcd vac = Eigen::VectorXcd::Zero(dim);
    vac(0) = 1.0;
    const Eigen::VectorXcd disp = d * vac;
    for (int n = 0; n < 30; ++n)
        CHECK(std::abs(disp(n) - coherent_fock_amplitude(beta, n)) < 1e-11);
}

TEST_CASE("displacement phase convention: D(b)|a> = e^{i Im(b a*)}|a+b>") {
    // Distinguishable only on superpositions; this is the sign the branch
    // representation must reproduce. On the +theta branch of the parity gate
    // it yields e^{+i a^2 sin theta}, the conjugate of the published form.
    const double alpha = 1.4, theta = 0.5;
    const int cutoff = 48;
    CoherentBranchState st = CoherentBranchState::register_state(
        {DiscreteMode{}}, std::array<Cx, 2>{Cx(M_SQRT1_2), Cx(M_SQRT1_2)});
    const int bus = st.add_bus(Cx(alpha));
    st.cross_kerr(0, bus, theta);  // |0>|a> + |1>|a e^{i t}>
    FockState oracle = expand(st, std::array<int, 1>{cutoff});
    oracle_displace(oracle, 1, Cx(-alpha));

    st.displace(bus, Cx(-alpha));
    CHECK(fock_fidelity(oracle, expand(st, std::array<int, 1>{cutoff})) > 1.0 - 1e-9);

    // The conjugate convention e^{-i Im(b a*)} must fail the same comparison.
    CoherentBranchState wrong = CoherentBranchState::register_state(
        {DiscreteMode{}}, std::array<Cx, 2>{Cx(M_SQRT1_2), Cx(M_SQRT1_2)});
    const int wbus = wrong.add_bus(Cx(alpha));
    wrong.cross_kerr(0, wbus, theta);
    std::vector<Cx> factors;
    for (const Branch& br : wrong.branches())
        factors.push_back(std::polar(1.0, -2.0 * std::imag(Cx(-alpha) * std::conj(br.bus[0]))));
    wrong.weight_branches(factors);
    wrong.displace(wbus, Cx(-alpha));
    const double wrongFidelity = fock_fidelity(oracle, expand(wrong, std::array<int, 1>{cutoff}));
    CHECK(wrongFidelity < 0.999);
}

TEST_CASE("oracle cross-Kerr matches the branch result exactly") {
    CoherentBranchState st = CoherentBranchState::register_state(
        {DiscreteMode{DiscreteKind::Fock, 3}}, std::array<Cx, 3>{Cx(0), Cx(1), Cx(0)});
    const int bus = st.add_bus(Cx(2.0));
    FockState oracle = expand(st, std::array<int, 1>{40});
    st.cross_kerr(0, bus, 0.31);
    oracle_cross_kerr(oracle, 0, 1, 0.31);
    CHECK(fock_fidelity(oracle, expand(st, std::array<int, 1>{40})) > 1.0 - 1e-10);
}

TEST_CASE("beam splitter: coherent-state identity and unitarity") {
    const double alpha = 1.8, eta = 0.55;
    CoherentBranchState st;
    st.add_bus(Cx(alpha));
    FockState fock = expand(st, std::array<int, 1>{40});
    const double normBefore = fock.norm_squared();
    oracle_beam_splitter(fock, 0, eta, 40);
    CHECK(std::abs(fock.norm_squared() - normBefore) < 1e-9);

    // |alpha>|0> -> |tau alpha>|eta alpha>
    CoherentBranchState target;
    target.add_bus(Cx(std::sqrt(1.0 - eta * eta) * alpha));
    target.add_bus(Cx(eta * alpha));
    const FockState expected = expand(target, std::array<int, 2>{40, 40});
    CHECK(fock_fidelity(fock, expected) > 1.0 - 1e-8);
}

TEST_CASE("loss channel matches the oracle beam splitter on superpositions") {
    const double alpha = 1.5, theta = 0.6, eta = 0.4;
    CoherentBranchState st = CoherentBranchState::register_state(
        {DiscreteMode{}}, std::array<Cx, 2>{Cx(0.6), Cx(0.8)});
    const int bus = st.add_bus(Cx(alpha));
    st.cross_kerr(0, bus, theta);
    FockState oracle = expand(st, std::array<int, 1>{36});
    oracle_beam_splitter(oracle, 1, eta, 36);
    st.loss_channel(bus, eta);
    CHECK(fock_fidelity(oracle, expand(st, std::array<int, 2>{36, 36})) > 1.0 - 1e-8);
}

TEST_CASE("quadrature wavefunctions: completeness and coherent expansion") {
    // sum_n <x|n><n|alpha> must reproduce the closed-form <x|alpha>,
    // including its phase, for several xi.
    for (const double xi : {0.0, M_PI_2, 0.83}) {
        for (const double x : {-2.3, 0.0, 1.7, 4.1}) {
            const Cx alpha(1.1, -0.6);
            const std::vector<Cx> w = quadrature_wavefunctions(60, xi, x);
            Cx acc(0.0);
            for (int n = 0; n < 60; ++n) acc += w[n] * coherent_fock_amplitude(alpha, n);
            CHECK(std::abs(acc - quadrature_amplitude(x, alpha, xi)) < 1e-9);
        }
    }
}

TEST_CASE("oracle homodyne pdf and photon pmf against branch forms") {
    const double alpha = 2.0, theta = 0.9;
    CoherentBranchState st = CoherentBranchState::register_state(
        {DiscreteMode{}}, std::array<Cx, 2>{Cx(M_SQRT1_2), Cx(-M_SQRT1_2)});
    const int bus = st.add_bus(Cx(alpha));
    st.cross_kerr(0, bus, theta);
    const FockState oracle = expand(st, std::array<int, 1>{46});

    HomodyneSetting hs;
    hs.xi = M_PI_2;
    double worstPdf = 0.0;
    for (double x = -9.0; x <= 9.0; x += 0.2)
        worstPdf = std::max(worstPdf, std::abs(homodyne_pdf(st, bus, hs, x) -
                                               oracle_homodyne_pdf(oracle, 1, M_PI_2, x)));
    CHECK(worstPdf < 1e-6);

    const std::vector<double> pmf = photon_number_pmf(st, bus, PhotonCountSetting{});
    const std::vector<double> opmf = oracle_photon_pmf(oracle, 1);
    double worstPmf = 0.0;
    for (std::size_t n = 0; n < std::min(pmf.size(), opmf.size()); ++n)
        worstPmf = std::max(worstPmf, std::abs(pmf[n] - opmf[n]));
    CHECK(worstPmf < 1e-6);
}

TEST_CASE("oracle conditioning utilities") {
    CoherentBranchState st = CoherentBranchState::register_state(
        {DiscreteMode{}}, std::array<Cx, 2>{Cx(0.6), Cx(0.8)});
    const int bus = st.add_bus(Cx(1.2));
    st.cross_kerr(0, bus, 0.5);
    FockState a = expand(st, std::array<int, 1>{36});
    const std::vector<double> pmf = oracle_photon_pmf(a, 1);
    const double mass = oracle_condition_photon(a, 1, 2);
    CHECK(mass == doctest::Approx(pmf[2]).epsilon(1e-10));
    CHECK(a.axis_count() == 1);
    CHECK(std::abs(a.norm_squared() - 1.0) < 1e-12);

    FockState b = expand(st, std::array<int, 1>{36});
    const double density = oracle_condition_quadrature(b, 1, 0.0, 1.3);
    CHECK(density == doctest::Approx(oracle_homodyne_pdf(expand(st, std::array<int, 1>{36}), 1,
                                                         0.0, 1.3))
                         .epsilon(1e-10));
    CHECK(std::abs(b.norm_squared() - 1.0) < 1e-12);
}
