#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "ocp/numerics.hpp"

using namespace ocp;
using Complex = std::complex<double>;

TEST_CASE("LogValue round trips and algebra", "[numerics]") {
    CHECK(LogValue::zero().is_zero());
    CHECK(LogValue::one().to_double() == 1.0);
    CHECK(LogValue::from_double(0.0).is_zero());

    const double xs[] = {3.5, -2.25, 1e-12, -7e8, 0.125};
    for (double a : xs)
        for (double b : xs) {
            LogValue la = LogValue::from_double(a), lb = LogValue::from_double(b);
            CHECK((la * lb).to_double() == Catch::Approx(a * b).epsilon(1e-14));
            CHECK((la + lb).to_double() == Catch::Approx(a + b).margin(1e-14 * (std::abs(a) + std::abs(b))));
            CHECK((la - lb).to_double() == Catch::Approx(a - b).margin(1e-14 * (std::abs(a) + std::abs(b))));
        }

    // exact cancellation collapses to zero
    LogValue v = LogValue::from_double(4.0);
    CHECK((v - v).is_zero());
    CHECK(v.negated().to_double() == -4.0);
    CHECK(v.negated().abs().to_double() == 4.0);
}

TEST_CASE("LogValue survives scales beyond double range", "[numerics]") {
    // X = e^{1000}, Y = e^{980}: (X + Y) - X == Y in the log domain
    LogValue x = LogValue::from_log(1000.0, +1);
    LogValue y = LogValue::from_log(980.0, +1);
    LogValue d = (x + y) - x;
    CHECK(d.sign == +1);
    CHECK(d.log_mag == Catch::Approx(980.0).margin(1e-6));
}

TEST_CASE("wrap_phase lands in (-pi, pi]", "[numerics]") {
    CHECK(wrap_phase(0.0) == 0.0);
    CHECK(wrap_phase(M_PI) == Catch::Approx(M_PI));
    CHECK(wrap_phase(-M_PI) == Catch::Approx(M_PI));
    CHECK(wrap_phase(3.0 * M_PI) == Catch::Approx(M_PI));
    CHECK(wrap_phase(7.5) == Catch::Approx(7.5 - 2.0 * M_PI).margin(1e-15));
}

TEST_CASE("PhaseValue multiplication and conjugation", "[numerics]") {
    Complex a(1.5, -2.0), b(-0.25, 0.75);
    PhaseValue pa = PhaseValue::from_complex(a), pb = PhaseValue::from_complex(b);
    Complex prod = (pa * pb).to_complex();
    CHECK(prod.real() == Catch::Approx((a * b).real()).epsilon(1e-13));
    CHECK(prod.imag() == Catch::Approx((a * b).imag()).epsilon(1e-13));
    Complex cj = pa.conj().to_complex();
    CHECK(cj.real() == Catch::Approx(std::conj(a).real()));
    CHECK(cj.imag() == Catch::Approx(std::conj(a).imag()));
    CHECK(pa.magnitude().to_double() == Catch::Approx(std::abs(a)));
    CHECK((pa * PhaseValue::zero()).is_zero());
}

TEST_CASE("log_gamma matches factorial and half-integer values", "[numerics]") {
    CHECK(log_gamma(1.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(log_gamma(5.0) == Catch::Approx(std::log(24.0)).epsilon(1e-14));
    CHECK(log_gamma(0.5) == Catch::Approx(0.5 * std::log(M_PI)).epsilon(1e-14));
    CHECK_THROWS_AS(log_gamma(0.0), Error);
    CHECK_THROWS_AS(log_gamma(-1.0), Error);
}

TEST_CASE("log_factorial_ratio values and additivity", "[numerics]") {
    CHECK(log_factorial_ratio(5, 0) == 0.0);
    CHECK(log_factorial_ratio(5, 3) == Catch::Approx(std::log(6.0 * 7.0 * 8.0)).epsilon(1e-14));
    // log((n+m1+m2)!/n!) = log((n+m1)!/n!) + log((n+m1+m2)!/(n+m1)!)
    for (long long n : {1LL, 17LL, 500LL})
        for (long long m1 : {2LL, 9LL})
            for (long long m2 : {3LL, 11LL})
                CHECK(log_factorial_ratio(n, m1 + m2) ==
                      Catch::Approx(log_factorial_ratio(n, m1) + log_factorial_ratio(n + m1, m2))
                          .epsilon(1e-13));
    CHECK_THROWS_AS(log_factorial_ratio(-1, 2), Error);
}

TEST_CASE("zeta'(-1) against the Glaisher-Kinkelin asymptotic sum", "[numerics]") {
    // ln A = lim [ sum_{k<=n} k ln k - (n^2/2 + n/2 + 1/12) ln n + n^2/4 ]
    // with Euler-Maclaurin corrections -1/(720 n^2) + 1/(5040 n^4).
    const double n = 200.0;
    double s = 0.0;
    for (int k = 2; k <= 200; ++k) s += k * std::log(double(k));
    double ln_a = s - (n * n / 2.0 + n / 2.0 + 1.0 / 12.0) * std::log(n) + n * n / 4.0 +
                  1.0 / (720.0 * n * n) - 1.0 / (5040.0 * std::pow(n, 4));
    CHECK(zeta_prime_minus_one() == Catch::Approx(1.0 / 12.0 - ln_a).margin(1e-12));
}

TEST_CASE("jellium constant relates the two area conventions", "[numerics]") {
    CHECK(jellium_constant_beta2() ==
          Catch::Approx(0.5 * std::log(2.0 * M_PI) - 1.0 + std::log(M_PI)).margin(1e-15));
}

TEST_CASE("det_lu on known matrices", "[numerics]") {
    std::vector<Complex> a = {{2, 0}, {1, 0}, {1, 0}, {3, 0}};
    CHECK(det_lu(a, 2).real() == Catch::Approx(5.0));
    std::vector<Complex> rot = {{0, 1}, {0, 0}, {0, 0}, {0, -1}};
    CHECK(det_lu(rot, 2).real() == Catch::Approx(1.0));
    std::vector<Complex> sing = {{1, 0}, {2, 0}, {2, 0}, {4, 0}};
    CHECK(std::abs(det_lu(sing, 2)) < 1e-14);
}

TEST_CASE("hermitian_logdet on closed-form matrices", "[numerics]") {
    std::vector<Complex> id(9, 0.0);
    id[0] = id[4] = id[8] = 1.0;
    LogValue d = hermitian_logdet(id, 3);
    CHECK(d.sign == +1);
    CHECK(d.log_mag == Catch::Approx(0.0).margin(1e-14));

    std::vector<Complex> diag = {{2, 0}, {0, 0}, {0, 0}, {3, 0}};
    CHECK(hermitian_logdet(diag, 2).log_mag == Catch::Approx(std::log(6.0)).epsilon(1e-14));

    // [[1, q], [conj q, 1]] with |q| = e^{-8}: det = 1 - e^{-16}
    Complex q = std::polar(std::exp(-8.0), 0.7);
    std::vector<Complex> corr = {{1, 0}, q, std::conj(q), {1, 0}};
    CHECK(hermitian_logdet(corr, 2).log_mag ==
          Catch::Approx(std::log1p(-std::exp(-16.0))).margin(1e-18));
}

TEST_CASE("hermitian_logdet sign handling and guards", "[numerics]") {
    std::vector<Complex> neg = {{-2, 0}};
    LogValue d = hermitian_logdet(neg, 1);
    CHECK(d.sign == -1);
    CHECK(d.log_mag == Catch::Approx(std::log(2.0)));

    // indefinite 2x2: diag(1, -3)
    std::vector<Complex> ind = {{1, 0}, {0, 0}, {0, 0}, {-3, 0}};
    d = hermitian_logdet(ind, 2);
    CHECK(d.sign == -1);
    CHECK(d.log_mag == Catch::Approx(std::log(3.0)).epsilon(1e-14));

    std::vector<Complex> zero(4, 0.0);
    CHECK(hermitian_logdet(zero, 2).is_zero());

    std::vector<Complex> nh = {{1, 0}, {1, 0}, {2, 0}, {1, 0}};
    CHECK_THROWS_AS(hermitian_logdet(nh, 2), NotHermitianError);
    CHECK_THROWS_AS(hermitian_logdet(std::vector<Complex>(3, 0.0), 2), Error);
}

TEST_CASE("hermitian_logdet agrees with LU on random Gram matrices", "[numerics][property]") {
    std::uint64_t state = 42;
    auto next = [&]() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return double((z ^ (z >> 31)) >> 11) * 0x1.0p-53;
    };
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 5;
        std::vector<Complex> b(n * n);
        for (auto& v : b) v = Complex(2.0 * next() - 1.0, 2.0 * next() - 1.0);
        std::vector<Complex> a(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k)
                    a[i * n + j] += b[i * n + k] * std::conj(b[j * n + k]);
        double lu = std::log(std::abs(det_lu(a, n)));
        LogValue d = hermitian_logdet(a, n);
        CHECK(d.sign == +1);
        CHECK(d.log_mag == Catch::Approx(lu).margin(1e-10));
    }
}

TEST_CASE("hermitian_logdet under extreme diagonal scaling", "[numerics][property]") {
    // log det(D A D) = log det(A) + 2 sum log d_i, exact for any PSD A.
    const std::size_t n = 4;
    std::vector<Complex> a = {
        {4, 0},    {1, 0.5},  {0.2, -0.1}, {0.3, 0},  {1, -0.5}, {3, 0},
        {0.4, 0.2}, {0.1, 0}, {0.2, 0.1},  {0.4, -0.2}, {5, 0},  {0.6, 0.3},
        {0.3, 0},  {0.1, 0},  {0.6, -0.3}, {6, 0}};
    const double base = hermitian_logdet(a, n).log_mag;
    const double dlog[n] = {-150.0, -60.0, 0.0, 40.0};
    std::vector<Complex> scaled(n * n);
    double shift = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        shift += 2.0 * dlog[i];
        for (std::size_t j = 0; j < n; ++j)
            scaled[i * n + j] = a[i * n + j] * std::exp(dlog[i] + dlog[j]);
    }
    LogValue d = hermitian_logdet(scaled, n);
    CHECK(d.sign == +1);
    CHECK(d.log_mag == Catch::Approx(base + shift).margin(1e-9));
}
