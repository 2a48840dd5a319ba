#include <cmath>

#include "doctest.h"

#include "den/plf.hpp"
#include "helpers.hpp"

using namespace den;

TEST_CASE("plf_init uniform keypoints and identity ramp") {
    Plf plf = plf_init(5, -1.0, 3.0);
    CHECK(plf.keypoints == Vec{-1.0, 0.0, 1.0, 2.0, 3.0});
    CHECK(plf.values == Vec{0.0, 0.25, 0.5, 0.75, 1.0});
    CHECK_THROWS_AS(plf_init(1, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(plf_init(3, 2.0, 2.0), std::invalid_argument);
}

TEST_CASE("plf_forward frozen interpolation value") {
    Plf plf;
    plf.keypoints = {0.0, 0.5, 1.0};
    plf.values = {1.0, 3.0, 2.0};
    CHECK(plf_forward(plf, 0.75) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("plf_forward clamps outside the domain") {
    Plf plf;
    plf.keypoints = {0.0, 1.0};
    plf.values = {-2.0, 4.0};
    CHECK(plf_forward(plf, -10.0) == -2.0);
    CHECK(plf_forward(plf, 10.0) == 4.0);
}

TEST_CASE("plf_forward is exact at keypoints") {
    Plf plf;
    plf.keypoints = {0.0, 0.3, 0.7, 1.0};
    plf.values = {0.1, -0.4, 0.9, 0.2};
    for (std::size_t l = 0; l < plf.keypoints.size(); ++l)
        CHECK(plf_forward(plf, plf.keypoints[l]) == plf.values[l]);
}

TEST_CASE("an input on an interior keypoint belongs to the left segment") {
    Plf plf;
    plf.keypoints = {0.0, 1.0, 2.0};
    plf.values = {0.0, 1.0, 0.0};
    Vec dvalues(3, 0.0);
    double dx = plf_backward(plf, 1.0, 1.0, dvalues);
    // Left segment has slope +1 and puts all weight on the middle value.
    CHECK(dx == doctest::Approx(1.0));
    CHECK(dvalues == Vec{0.0, 1.0, 0.0});
}

TEST_CASE("plf_backward matches finite differences") {
    Plf plf;
    plf.keypoints = {-1.0, -0.25, 0.4, 1.3};
    plf.values = {0.2, -0.6, 1.1, 0.8};
    for (double x : {-2.0, -0.5, 0.0, 0.7, 1.2, 5.0}) {
        Vec dvalues(4, 0.0);
        double dx = plf_backward(plf, x, 1.0, dvalues);

        auto out_at_values = [&](const Vec& v) {
            Plf probe = plf;
            probe.values = v;
            return plf_forward(probe, x);
        };
        Vec fd = den::test::fd_gradient(out_at_values, plf.values);
        CHECK(den::test::max_grad_err(dvalues, fd) < 1e-6);

        auto out_at_x = [&](const Vec& xv) { return plf_forward(plf, xv[0]); };
        Vec fd_x = den::test::fd_gradient(out_at_x, Vec{x});
        CHECK(std::abs(dx - fd_x[0]) < 1e-6);
    }
}

TEST_CASE("monotone projection pools adjacent violators") {
    Plf plf;
    plf.keypoints = {0.0, 1.0};
    plf.values = {1.0, 0.0};
    plf_project_monotone(plf);
    CHECK(plf.values == Vec{0.5, 0.5});

    plf.keypoints = {0.0, 1.0, 2.0, 3.0};
    plf.values = {1.0, 3.0, 2.0, 4.0};
    plf_project_monotone(plf);
    CHECK(plf.values == Vec{1.0, 2.5, 2.5, 4.0});

    plf.values = {1.0, 2.0, 3.0, 4.0};
    plf_project_monotone(plf);
    CHECK(plf.values == Vec{1.0, 2.0, 3.0, 4.0});
}

TEST_CASE("fit_keypoints_from_support spans the data") {
    Vec keypoints = fit_keypoints_from_support({3.0, -1.0, 2.0, 0.5}, 3);
    CHECK(keypoints == Vec{-1.0, 1.0, 3.0});
    CHECK_THROWS_AS(fit_keypoints_from_support({}, 3), std::invalid_argument);
}

TEST_CASE("constant columns are widened by half on both sides") {
    Vec keypoints = fit_keypoints_from_support({2.0, 2.0, 2.0}, 3);
    CHECK(keypoints == Vec{1.5, 2.0, 2.5});
}

TEST_CASE("fit_bank builds one calibration per column") {
    Matrix X(3, 2);
    X.data = {0.0, 5.0, 1.0, 5.0, 2.0, 5.0};
    PlfBank bank = fit_bank(X, 4);
    REQUIRE(bank.width() == 2);
    CHECK(bank.columns[0].keypoints.front() == 0.0);
    CHECK(bank.columns[0].keypoints.back() == 2.0);
    CHECK(bank.columns[1].keypoints.front() == 4.5);
    CHECK(bank.columns[1].keypoints.back() == 5.5);
    CHECK(bank.param_count() == 8);

    Matrix Z = bank_forward(bank, X);
    // Identity-ramp values over fitted keypoints act as min-max scaling.
    CHECK(Z(0, 0) == doctest::Approx(0.0));
    CHECK(Z(1, 0) == doctest::Approx(0.5));
    CHECK(Z(2, 0) == doctest::Approx(1.0));
}

TEST_CASE("refit keeps values but moves keypoints") {
    Matrix X(2, 1);
    X.data = {0.0, 1.0};
    PlfBank bank = fit_bank(X, 3);
    bank.columns[0].values = {0.3, 0.6, 0.9};
    Matrix X2(2, 1);
    X2.data = {10.0, 20.0};
    refit_bank_keypoints(bank, X2);
    CHECK(bank.columns[0].keypoints == Vec{10.0, 15.0, 20.0});
    CHECK(bank.columns[0].values == Vec{0.3, 0.6, 0.9});
}

TEST_CASE("bank_backward matches finite differences") {
    Matrix X(3, 2);
    X.data = {0.1, 0.9, 0.4, 0.2, 0.8, 0.6};
    PlfBank bank = fit_bank(X, 4);
    bank.columns[0].values = {0.1, 0.8, 0.3, 1.2};
    bank.columns[1].values = {-0.2, 0.5, 0.9, 0.4};

    auto loss_at = [&](const Vec& flat) {
        PlfBank probe = bank;
        unflatten(probe, flat);
        Matrix Z = bank_forward(probe, X);
        double total = 0.0;
        for (double z : Z.data) total += z * z;
        return total;
    };

    Matrix Z = bank_forward(bank, X);
    Matrix dZ(Z.rows, Z.cols);
    for (std::size_t k = 0; k < Z.data.size(); ++k) dZ.data[k] = 2.0 * Z.data[k];
    BankGrads grads = zero_grads(bank);
    bank_backward(bank, X, dZ, grads);

    Vec fd = den::test::fd_gradient(loss_at, flatten(bank));
    CHECK(den::test::max_grad_err(flatten(grads), fd) < 1e-6);
}
