#include <doctest.h>

#include "fhtc/gl_dynamics.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace fhtc;

TEST_CASE("potential closed forms") {
    GLModel m1 = GLModel::chain(64, 0.2, 1.0);
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(64);
    CHECK(potential(m1, zero) == doctest::Approx(16.0 / 65.0).epsilon(1e-12));
    Eigen::VectorXd yplus = Eigen::VectorXd::Ones(64);
    CHECK(potential(m1, yplus) == doctest::Approx(13.0).epsilon(1e-12));

    GLModel m2 = GLModel::grid(8, 0.5, 1.0);
    Eigen::VectorXd zero2 = Eigen::VectorXd::Zero(64);
    CHECK(potential(m2, zero2) == doctest::Approx(16.0 / 81.0).epsilon(1e-12));
    // y_+ in 2D: only the double-well term vanishes; gradient term is zero too
    Eigen::VectorXd ones2 = Eigen::VectorXd::Ones(64);
    CHECK(potential(m2, ones2) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("omega windows") {
    GLModel m1 = GLModel::chain(64);
    CHECK(m1.omega[15] == 1.0);  // i = 16, 16/64 = 0.25
    CHECK(m1.omega[14] == 0.0);
    CHECK(m1.omega[37] == 1.0);  // i = 38, 38/64 = 0.59375
    CHECK(m1.omega[38] == 0.0);  // i = 39, 39/64 > 0.6

    GLModel m2 = GLModel::grid(8);
    CHECK(m2.omega.sum() == doctest::Approx(25.0));  // i, j in {2..6}
    CHECK(m2.omega[(2 - 1) * 8 + (2 - 1)] == 1.0);
    CHECK(m2.omega[(1 - 1) * 8 + (4 - 1)] == 0.0);
}

TEST_CASE("drift at the origin is the pure control push") {
    for (GLModel m : {GLModel::chain(16), GLModel::grid(4)}) {
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(m.d);
        for (double a : {-1.0, 0.3, 1.0}) {
            Eigen::VectorXd b = drift(m, zero, a);
            CHECK((b - m.control_gain * a * m.omega).norm() <= 1e-14);
        }
    }
}

TEST_CASE("uncontrolled drift vanishes on the interior of y_plus") {
    GLModel m = GLModel::chain(16);
    Eigen::VectorXd yplus = Eigen::VectorXd::Ones(16);
    Eigen::VectorXd b = drift(m, yplus, 0.0);
    for (int i = 1; i < 15; ++i) CHECK(b[i] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(b[0] < 0.0);   // boundary pull toward the Dirichlet condition
    CHECK(b[15] < 0.0);
}

TEST_CASE("analytic drift matches central differences of the potential") {
    std::mt19937_64 rng(77);
    for (GLModel m : {GLModel::chain(64, 0.2, 1.0), GLModel::grid(8, 0.5, 1.0)}) {
        for (int k = 0; k < 100; ++k) {
            Eigen::VectorXd x = oracles::random_point(m.d, -2, 2, rng);
            Eigen::VectorXd b = drift(m, x, 0.0);
            double eps = 1e-5;
            for (int i = 0; i < m.d; i += 7) {
                Eigen::VectorXd xp = x, xm = x;
                xp[i] += eps;
                xm[i] -= eps;
                double fd = -(potential(m, xp) - potential(m, xm)) / (2 * eps);
                CHECK(b[i] == doctest::Approx(fd).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("frozen dynamics: no noise, no drift") {
    GLModel m = GLModel::chain(8);
    m.potential_kind = PotentialKind::none;
    m.noise = false;
    CostSpec cost;
    Eigen::VectorXd x0 = Eigen::VectorXd::Constant(8, 0.7);
    std::mt19937_64 rng = rng_stream(1, 0);
    StepResult r = simulate(m, cost, x0, 0.0, 0.1, 10, rng);
    CHECK((r.x_next - x0).norm() == 0.0);
    CHECK(r.cost == doctest::Approx(running_cost(m, x0, 0.0, cost) * 0.1).epsilon(1e-14));
}

TEST_CASE("OU surrogate matches the analytic one-step variance") {
    GLModel m = GLModel::chain(4);
    m.potential_kind = PotentialKind::quadratic;
    CostSpec cost;
    double dt = 0.1;
    int paths = 20000;
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(4);
    double sum2 = 0.0;
    long n = 0;
    for (int p = 0; p < paths; ++p) {
        std::mt19937_64 rng = rng_stream(42, p);
        StepResult r = simulate(m, cost, x0, 0.0, dt, 20, rng);
        sum2 += r.x_next.squaredNorm();
        n += 4;
    }
    double var = sum2 / n;
    double want = (1.0 - std::exp(-2.0 * dt)) / m.beta;
    double stderr3 = 3.0 * want * std::sqrt(2.0 / n);
    CHECK(std::abs(var - want) <= stderr3 + 7e-4);  // 7e-4 Euler-Maruyama bias at tau = dt/20
}

TEST_CASE("y_plus is metastable over one block at d = 64") {
    GLModel m = GLModel::chain(64, 0.2, 1.0);
    CostSpec cost;
    Eigen::VectorXd yplus = Eigen::VectorXd::Ones(64);
    double mean_disp = 0.0;
    int paths = 1000;
    for (int p = 0; p < paths; ++p) {
        std::mt19937_64 rng = rng_stream(7, p);
        StepResult r = simulate(m, cost, yplus, 0.0, 0.1, 20, rng);
        mean_disp += (r.x_next - yplus).squaredNorm() / 64.0;
        CHECK(r.cost >= 0.0);
    }
    mean_disp /= paths;
    // pilot run with seed 7 gives ~0.09; the spec bound is 0.2
    CHECK(mean_disp < 0.2);
}

TEST_CASE("fixed seeds reproduce trajectories bit-exactly") {
    GLModel m = GLModel::chain(16);
    CostSpec cost;
    Eigen::VectorXd x0 = Eigen::VectorXd::Constant(16, -0.3);
    std::mt19937_64 r1 = rng_stream(99, 5), r2 = rng_stream(99, 5);
    StepResult a = simulate(m, cost, x0, 0.4, 0.1, 20, r1);
    StepResult b = simulate(m, cost, x0, 0.4, 0.1, 20, r2);
    CHECK((a.x_next - b.x_next).norm() == 0.0);
    CHECK(a.cost == b.cost);

    std::mt19937_64 r3 = rng_stream(99, 6);
    StepResult c = simulate(m, cost, x0, 0.4, 0.1, 20, r3);
    CHECK((a.x_next - c.x_next).norm() > 0.0);
}

TEST_CASE("halving the substep changes the path mean by less than the MC error") {
    GLModel m = GLModel::chain(16, 0.2, 1.0);
    CostSpec cost;
    Eigen::VectorXd x0 = Eigen::VectorXd::Constant(16, 0.5);
    int paths = 1000;
    auto mean_state = [&](int substeps, std::uint64_t seed, Eigen::VectorXd& mean,
                          double& sig) {
        mean = Eigen::VectorXd::Zero(16);
        double s2 = 0;
        for (int p = 0; p < paths; ++p) {
            std::mt19937_64 rng = rng_stream(seed, p);
            StepResult r = simulate(m, cost, x0, -0.2, 0.1, substeps, rng);
            mean += r.x_next;
            s2 += r.x_next.squaredNorm();
        }
        mean /= paths;
        sig = std::sqrt(std::max(0.0, s2 / (paths * 16.0) - mean.squaredNorm() / 16.0));
    };
    Eigen::VectorXd m1, m2;
    double s1, s2;
    mean_state(20, 11, m1, s1);
    mean_state(40, 12, m2, s2);
    double stderr_mean = s1 / std::sqrt(static_cast<double>(paths));
    CHECK((m1 - m2).cwiseAbs().maxCoeff() <= 4.0 * stderr_mean);
}

TEST_CASE("simulate rejects bad arguments and reports blow-ups") {
    GLModel m = GLModel::chain(4);
    CostSpec cost;
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(4);
    std::mt19937_64 rng = rng_stream(1, 1);
    CHECK_THROWS_AS(simulate(m, cost, x0, 0.0, -0.1, 10, rng), std::invalid_argument);
    CHECK_THROWS_AS(simulate(m, cost, x0, 0.0, 0.1, 0, rng), std::invalid_argument);

    // a wildly unstable configuration blows up and is reported
    GLModel bad = GLModel::chain(4, 1e8, 1.0);
    bad.noise = false;
    Eigen::VectorXd far = Eigen::VectorXd::Constant(4, 1.9);
    CHECK_THROWS_AS(simulate(bad, cost, far, 0.0, 1.0, 60, rng), std::runtime_error);
}
