#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "phyauth/klms.hpp"
#include "phyauth/rng.hpp"

using namespace phyauth;

namespace {

NormalizedSample make_sample(std::vector<double> f, double label) {
    NormalizedSample s;
    s.features = std::move(f);
    s.label = label;
    return s;
}

std::vector<NormalizedSample> random_stream(Rng& rng, std::size_t count, std::size_t dims) {
    std::vector<NormalizedSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<double> f(dims);
        for (double& v : f) v = rng.uniform(-1.0, 1.0);
        out.push_back(make_sample(std::move(f), rng.bernoulli(0.5) ? 1.0 : 0.0));
    }
    return out;
}

// Independent brute-force evaluation of the kernel expansion, term by term.
double brute_force_predict(const std::vector<std::vector<double>>& dict,
                           const std::vector<double>& alpha, const std::vector<double>& q,
                           double sigma) {
    double sum = 0.0;
    for (std::size_t i = 0; i < dict.size(); ++i) {
        double d2 = 0.0;
        for (std::size_t n = 0; n < q.size(); ++n)
            d2 += (dict[i][n] - q[n]) * (dict[i][n] - q[n]);
        sum += alpha[i] * std::exp(-d2 / (2.0 * sigma * sigma));
    }
    return sum;
}

} // namespace

TEST_CASE("empty model predicts 0 everywhere") {
    const ModelState m(0.1, KernelParams{0.5});
    CHECK(m.predict({0.3, -0.2}) == 0.0);
    CHECK(m.predict({}) == 0.0);
}

TEST_CASE("single stored input equal to the query returns its coefficient") {
    ModelState m(0.1, KernelParams{0.5});
    m.step(make_sample({0.2, -0.4}, 1.0)); // coefficient 0.1 * 1
    CHECK(m.predict({0.2, -0.4}) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("prediction with three stored inputs matches term-by-term evaluation") {
    const double sigma = 0.7;
    ModelState m(0.25, KernelParams{sigma});
    m.step(make_sample({0.1, 0.2}, 1.0));
    m.step(make_sample({-0.3, 0.5}, 0.0));
    m.step(make_sample({0.6, -0.6}, 1.0));
    Rng rng(31);
    for (int i = 0; i < 25; ++i) {
        const std::vector<double> q{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        CHECK(m.predict(q) ==
              doctest::Approx(brute_force_predict(m.dictionary(), m.coefficients(), q, sigma))
                  .epsilon(1e-14));
    }
}

TEST_CASE("first step on label 1 gives error 1 and coefficient mu") {
    ModelState m(0.1, KernelParams{1.0});
    const auto out = m.step(make_sample({0.0, 0.0}, 1.0));
    CHECK(out.prediction == 0.0);
    CHECK(out.prediction_error == 1.0);
    CHECK(m.coefficients() == std::vector<double>{0.1});
    CHECK(m.iteration() == 1);
}

TEST_CASE("second identical sample sees the geometric residual") {
    ModelState m(0.1, KernelParams{1.0});
    m.step(make_sample({0.5}, 1.0));
    const auto out = m.step(make_sample({0.5}, 1.0));
    // kernel(x, x) = 1 so prediction is 0.1 and the error 0.9.
    CHECK(out.prediction == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(out.prediction_error == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(m.coefficients()[1] == doctest::Approx(0.09).epsilon(1e-15));
}

TEST_CASE("far-away zero-label sample contributes almost nothing") {
    ModelState m(0.1, KernelParams{0.05});
    m.step(make_sample({-1.0, -1.0}, 1.0));
    const auto out = m.step(make_sample({1.0, 1.0}, 0.0));
    CHECK(std::abs(out.prediction) < 1e-100);
    CHECK(std::abs(out.prediction_error) < 1e-100);
    CHECK(std::abs(m.coefficients()[1]) < 1e-100);
}

TEST_CASE("step rejects non-finite input and mismatched dimensions") {
    ModelState m(0.1, KernelParams{1.0});
    m.step(make_sample({0.1, 0.1}, 1.0));
    CHECK_THROWS_AS(m.step(make_sample({0.1}, 1.0)), DimensionError);
    CHECK_THROWS_AS(m.step(make_sample({0.1, NAN}, 1.0)), DataError);
    CHECK_THROWS_AS(m.step(make_sample({0.1, 0.2}, INFINITY)), DataError);
}

TEST_CASE("safety mode rejects step sizes outside the stability bound") {
    ModelState m(2.0, KernelParams{1.0}, /*safety=*/true);
    CHECK_THROWS_AS(m.step(make_sample({0.0}, 1.0)), StepSizeError);
    ModelState loose(2.0, KernelParams{1.0}, /*safety=*/false);
    CHECK_NOTHROW(loose.step(make_sample({0.0}, 1.0)));
    ModelState ok(0.999, KernelParams{1.0}, /*safety=*/true);
    CHECK_NOTHROW(ok.step(make_sample({0.0}, 1.0)));
}

TEST_CASE("step size bound is exactly 1 for the Gaussian kernel") {
    Rng rng(41);
    const auto stream = random_stream(rng, 57, 3);
    std::vector<std::vector<double>> feats;
    for (const auto& s : stream) feats.push_back(s.features);
    CHECK(step_size_upper_bound(feats, KernelParams{0.37}) == 1.0);
    CHECK(step_size_upper_bound({{0.2, 0.4}}, KernelParams{1.0}) == 1.0);
}

TEST_CASE("general bound form handles non-unit self-similarities") {
    // A kernel with kappa(x, x) = 2 everywhere would cap the step size at 0.5.
    CHECK(step_size_upper_bound_from_self_similarities({2.0, 2.0, 2.0}) ==
          doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(step_size_upper_bound_from_self_similarities({}), InsufficientDataError);
    CHECK_THROWS_AS(step_size_upper_bound({}, KernelParams{1.0}), InsufficientDataError);
}

TEST_CASE("train folds step over the stream in order") {
    Rng rng(43);
    const auto stream = random_stream(rng, 40, 2);
    const auto r = train(stream, 0.2, KernelParams{0.8});
    CHECK(r.model.dictionary().size() == stream.size());
    CHECK(r.error_trace.size() == stream.size());
    CHECK(r.model.iteration() == static_cast<long>(stream.size()));
}

TEST_CASE("repeated identical samples decay geometrically") {
    const double mu = 0.1;
    std::vector<NormalizedSample> stream(30, make_sample({0.3, -0.3}, 1.0));
    const auto r = train(stream, mu, KernelParams{1.0});
    for (std::size_t l = 0; l < stream.size(); ++l)
        CHECK(r.error_trace[l] ==
              doctest::Approx(std::pow(1.0 - mu, static_cast<double>(l))).epsilon(1e-12));
}

TEST_CASE("step size 2 diverges on repeated alternating labels") {
    // Hand-iterating the update at a single point with labels 1,0,1,0,...
    // gives e[1]=1, e[2]=-2, e[3]=3, ...: |e[l]| = l without bound.
    std::vector<NormalizedSample> stream;
    for (int i = 0; i < 120; ++i) stream.push_back(make_sample({0.1}, i % 2 == 0 ? 1.0 : 0.0));
    const auto r = train(stream, 2.0, KernelParams{1.0}, /*safety=*/false);
    for (std::size_t l = 0; l < r.error_trace.size(); ++l)
        CHECK(std::abs(r.error_trace[l]) ==
              doctest::Approx(static_cast<double>(l + 1)).epsilon(1e-9));
}

TEST_CASE("coefficients are exactly mu times the error trace") {
    Rng rng(47);
    const auto stream = random_stream(rng, 200, 3);
    const double mu = 0.15;
    const auto r = train(stream, mu, KernelParams{0.5});
    for (std::size_t l = 0; l < stream.size(); ++l)
        CHECK(r.model.coefficients()[l] == mu * r.error_trace[l]);
}

TEST_CASE("incremental predictions match batch recomputation within 1e-12") {
    Rng rng(53);
    const auto stream = random_stream(rng, 150, 3);
    const double mu = 0.3, sigma = 0.6;
    ModelState m(mu, KernelParams{sigma});
    for (const auto& s : stream) {
        const auto out = m.step(s);
        // Recompute the pre-step prediction from scratch over the prefix.
        std::vector<std::vector<double>> dict(m.dictionary().begin(), m.dictionary().end() - 1);
        std::vector<double> alpha(m.coefficients().begin(), m.coefficients().end() - 1);
        const double batch = brute_force_predict(dict, alpha, s.features, sigma);
        CHECK(out.prediction == doctest::Approx(batch).epsilon(1e-12));
    }
}

TEST_CASE("one step shifts every prediction by mu * error * kernel") {
    Rng rng(59);
    auto stream = random_stream(rng, 60, 2);
    const double mu = 0.2, sigma = 0.7;
    ModelState m(mu, KernelParams{sigma});
    std::vector<std::vector<double>> queries;
    for (int i = 0; i < 20; ++i)
        queries.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    for (const auto& s : stream) {
        std::vector<double> before(queries.size());
        for (std::size_t q = 0; q < queries.size(); ++q) before[q] = m.predict(queries[q]);
        const auto out = m.step(s);
        for (std::size_t q = 0; q < queries.size(); ++q) {
            const double delta = mu * out.prediction_error *
                                 gaussian_kernel(s.features, queries[q], m.kernel());
            CHECK(m.predict(queries[q]) - before[q] == doctest::Approx(delta).epsilon(1e-12));
        }
    }
}

TEST_CASE("squared-error cost in the coefficients has nonnegative curvature") {
    // J(alpha) = sum_k (y_k - sum_i alpha_i kappa(x_i, x_k))^2 with the
    // dictionary fixed; check the second difference along random directions.
    Rng rng(61);
    const auto stream = random_stream(rng, 25, 2);
    const double sigma = 0.5;
    const auto r = train(stream, 0.2, KernelParams{sigma});
    const auto& dict = r.model.dictionary();

    auto cost = [&](const std::vector<double>& alpha) {
        double j = 0.0;
        for (const auto& s : stream) {
            const double f = brute_force_predict(dict, alpha, s.features, sigma);
            j += (s.label - f) * (s.label - f);
        }
        return j;
    };

    const std::vector<double> alpha0 = r.model.coefficients();
    for (int d = 0; d < 10; ++d) {
        std::vector<double> dir(alpha0.size());
        for (double& v : dir) v = rng.uniform(-1.0, 1.0);
        const double t = 0.05;
        std::vector<double> plus = alpha0, minus = alpha0;
        for (std::size_t i = 0; i < alpha0.size(); ++i) {
            plus[i] += t * dir[i];
            minus[i] -= t * dir[i];
        }
        CHECK(cost(plus) + cost(minus) - 2.0 * cost(alpha0) >= -1e-9);
    }
}

TEST_CASE("steady-state detector on a decaying curve with a floor") {
    // Geometric decay onto a floor settles; pure geometric decay does not.
    std::vector<double> settling, decaying;
    for (int l = 0; l < 200; ++l) {
        settling.push_back(std::pow(0.81, l) + 0.01);
        decaying.push_back(std::pow(0.81, l));
    }
    const auto s = iterations_to_steady_state(settling);
    REQUIRE(s.has_value());
    CHECK(*s > 20);
    CHECK(*s <= 60);
    // Without the floor the trailing mean keeps changing by a constant ratio
    // larger than the 5% detector threshold.
    CHECK(!iterations_to_steady_state(decaying).has_value());
}

TEST_CASE("ensemble curve with one run equals the squared single trace") {
    Rng rng(67);
    const auto stream = random_stream(rng, 30, 2);
    auto factory = [&stream](std::uint64_t) { return stream; };
    const auto curve =
        ensemble_mse_curve(factory, 0.2, WidthConfig::value(0.5), /*seed=*/1, /*runs=*/1);
    const auto r = train(stream, 0.2, KernelParams{0.5});
    REQUIRE(curve.size() == r.error_trace.size());
    for (std::size_t l = 0; l < curve.size(); ++l)
        CHECK(curve[l] == doctest::Approx(r.error_trace[l] * r.error_trace[l]).epsilon(1e-15));
}

TEST_CASE("noiseless repeated point yields the squared geometric curve") {
    const double mu = 0.1;
    std::vector<NormalizedSample> stream(40, make_sample({0.2}, 1.0));
    auto factory = [&stream](std::uint64_t) { return stream; };
    const auto curve = ensemble_mse_curve(factory, mu, WidthConfig::value(1.0), 1, 5);
    for (std::size_t l = 0; l < curve.size(); ++l)
        CHECK(curve[l] ==
              doctest::Approx(std::pow(1.0 - mu, 2.0 * static_cast<double>(l))).epsilon(1e-10));
}

TEST_CASE("worker exceptions surface from parallel ensembles") {
    auto factory = [](std::uint64_t) {
        return std::vector<NormalizedSample>(10, NormalizedSample{{0.1}, 1.0});
    };
    // Safety mode rejects mu = 2 inside the worker threads; the error must
    // reach the caller rather than killing the process.
    CHECK_THROWS_AS(ensemble_mse_curve(factory, 2.0, WidthConfig::value(1.0), 1, 8, /*jobs=*/4),
                    StepSizeError);
}

TEST_CASE("parallel ensemble matches the sequential curve exactly") {
    Rng seeder(71);
    auto factory = [](std::uint64_t run) {
        Rng rng = Rng::substream(911, run);
        std::vector<NormalizedSample> stream;
        for (int i = 0; i < 50; ++i) {
            stream.push_back(
                make_sample({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}, 1.0));
        }
        return stream;
    };
    const auto seq = ensemble_mse_curve(factory, 0.1, WidthConfig::median(), 7, 12, /*jobs=*/1);
    const auto par = ensemble_mse_curve(factory, 0.1, WidthConfig::median(), 7, 12, /*jobs=*/4);
    CHECK(seq == par);
}

TEST_CASE("model checkpoint round-trips bit-exactly") {
    Rng rng(73);
    const auto stream = random_stream(rng, 25, 3);
    const auto r = train(stream, 0.17, KernelParams{0.43});
    const auto path = std::filesystem::temp_directory_path() / "phyauth_ckpt_test.txt";
    save_model(r.model, path.string());
    const ModelState loaded = load_model(path.string());
    CHECK(loaded.kernel().width == r.model.kernel().width);
    CHECK(loaded.step_size() == r.model.step_size());
    CHECK(loaded.dictionary() == r.model.dictionary());
    CHECK(loaded.coefficients() == r.model.coefficients());
    Rng qrng(79);
    for (int i = 0; i < 10; ++i) {
        std::vector<double> q{qrng.uniform(-1, 1), qrng.uniform(-1, 1), qrng.uniform(-1, 1)};
        CHECK(loaded.predict(q) == r.model.predict(q));
    }
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_model(path.string()), ParameterError);
}
