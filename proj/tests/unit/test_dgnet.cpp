#include "test_support.hpp"

#include "lld/dgnet.hpp"
#include "lld/hash.hpp"
#include "lld/model.hpp"

using namespace lld;

TEST_CASE("zero output head gives the sigmoid midpoint") {
    auto nets = Networks::create(ModelConfig{8, true}, 3);
    torch::NoGradGuard ng;
    auto y = torch::rand({2, 3, 32, 32});
    auto x = torch::rand({2, 3, 32, 32});
    auto out = generate_low_light(x, encode_degradation(y, nets.encoder), nets.dgnet);
    CHECK(out.sizes() == x.sizes());
    CHECK(testing::max_abs(out, torch::full_like(out, 0.5)) == 0.0);
}

TEST_CASE("generator is deterministic and bounded") {
    auto nets = Networks::create(ModelConfig{4, true}, 9, false);
    torch::NoGradGuard ng;
    auto y = torch::rand({1, 3, 32, 32});
    auto x = torch::rand({1, 3, 32, 32}) * 4.0 - 2.0;
    auto rep = encode_degradation(y, nets.encoder);
    auto a = generate_low_light(x, rep, nets.dgnet);
    auto b = generate_low_light(x, rep, nets.dgnet);
    CHECK(testing::bit_identical(a, b));
    CHECK(a.min().item<double>() >= 0.0);
    CHECK(a.max().item<double>() <= 1.0);
    CHECK(a.std().item<double>() > 0.0);
}

TEST_CASE("generator rejects mismatched scales") {
    auto nets = Networks::create(ModelConfig{4, false}, 1);
    torch::NoGradGuard ng;
    auto rep = encode_degradation(torch::rand({1, 3, 32, 32}), nets.encoder);
    CHECK_THROWS_AS(generate_low_light(torch::rand({1, 3, 16, 16}), rep, nets.dgnet), std::invalid_argument);
    CHECK_THROWS_AS(generate_low_light(torch::rand({1, 3, 32, 16}), rep, nets.dgnet), std::invalid_argument);
}

TEST_CASE("l1_loss examples") {
    auto a = torch::rand({3, 4, 4});
    CHECK(lld::l1_loss(a, a).item<double>() == 0.0);
    CHECK(lld::l1_loss(torch::zeros({3, 4, 4}), torch::ones({3, 4, 4})).item<double>() == 1.0);
    CHECK(lld::l1_loss(torch::tensor({0.0, 0.5}), torch::tensor({0.25, 0.25})).item<double>() ==
          doctest::Approx(0.25));
    CHECK_THROWS_AS(lld::l1_loss(torch::zeros({3}), torch::zeros({4})), std::invalid_argument);
}

TEST_CASE("l1_loss properties") {
    for (int k = 0; k < 20; ++k) {
        auto a = torch::randn({2, 3, 5, 5}, torch::kFloat64);
        auto b = torch::randn({2, 3, 5, 5}, torch::kFloat64);
        const double ab = lld::l1_loss(a, b).item<double>();
        CHECK(ab == lld::l1_loss(b, a).item<double>());
        CHECK(ab > 0.0);
        CHECK(lld::l1_loss(a, a.clone()).item<double>() == 0.0);
    }
}

TEST_CASE("L1 of the generator matches finite differences") {
    auto [n32, n64] = oracle::toy_networks(13);
    auto x64 = torch::rand({2, 3, 16, 16}, torch::kFloat64);
    auto y64 = torch::rand({2, 3, 16, 16}, torch::kFloat64);
    auto x32 = x64.to(torch::kFloat32), y32 = y64.to(torch::kFloat32);
    auto loss = [&](Networks& n) {
        const bool d = n.dtype() == torch::kFloat64;
        auto rep = encode_degradation(d ? y64 : y32, n.encoder);
        return lld::l1_loss(generate_low_light(d ? x64 : x32, rep, n.dgnet), d ? y64 : y32);
    };
    auto samples = oracle::gradient_check(
        n32, n64, loss, [](const std::string& n) { return n.rfind("encoder.", 0) == 0 || n.rfind("dgnet.", 0) == 0; },
        6, 17);
    for (auto& s : samples) {
        INFO(s.name << "[" << s.index << "] fd=" << s.numeric << " a64=" << s.analytic64 << " a32=" << s.analytic32);
        CHECK(s.rel64() < 1e-5);
        CHECK(s.rel32() < 1e-3);
    }
}
