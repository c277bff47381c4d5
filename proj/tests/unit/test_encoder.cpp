#include "test_support.hpp"

#include "lld/encoder.hpp"
#include "lld/hash.hpp"
#include "lld/model.hpp"
#include "lld/random.hpp"

using namespace lld;

namespace {

DegradationEncoder make_encoder(int64_t w, uint64_t seed) {
    DegradationEncoder enc(w);
    auto gen = make_generator(seed);
    kaiming_init(*enc, gen);
    return enc;
}

}  // namespace

TEST_CASE("encoder scale contract at 128 and 64") {
    auto enc = make_encoder(32, 1);
    torch::NoGradGuard ng;
    auto rep = encode_degradation(torch::rand({1, 3, 128, 128}), enc);
    REQUIRE(rep.maps.size() == 4);
    const std::array<int64_t, 4> ch{16, 32, 64, 128};
    for (int l = 0; l < 4; ++l) {
        CHECK(rep.maps[l].size(1) == ch[l]);
        CHECK(rep.maps[l].size(2) == (128 >> l));
        CHECK(rep.maps[l].size(3) == (128 >> l));
    }
    auto rep64 = encode_degradation(torch::rand({2, 3, 64, 64}), enc);
    for (int l = 0; l < 4; ++l) {
        CHECK(rep64.maps[l].size(0) == 2);
        CHECK(rep64.maps[l].size(2) == (64 >> l));
        CHECK(rep64.maps[l].size(3) == (64 >> l));
        CHECK(torch::isfinite(rep64.maps[l]).all().item<bool>());
    }
}

TEST_CASE("encoder shape property over sizes") {
    auto enc = make_encoder(8, 2);
    torch::NoGradGuard ng;
    std::mt19937_64 rng(4);
    const int64_t sizes[] = {64, 96, 128};
    for (int k = 0; k < 6; ++k) {
        const int64_t h = sizes[rng() % 3], w = sizes[rng() % 3];
        auto rep = encode_degradation(torch::rand({1, 3, h, w}), enc);
        for (int l = 0; l < 4; ++l) {
            REQUIRE(rep.maps[l].size(2) == (h >> l));
            REQUIRE(rep.maps[l].size(3) == (w >> l));
        }
    }
}

TEST_CASE("encoder is deterministic") {
    auto a = make_encoder(8, 7);
    auto b = make_encoder(8, 7);
    CHECK(hash_parameters(*a) == hash_parameters(*b));
    auto y = torch::rand({1, 3, 64, 64});
    torch::NoGradGuard ng;
    auto r1 = encode_degradation(y, a);
    auto r2 = encode_degradation(y, a);
    auto r3 = encode_degradation(y, b);
    for (int l = 0; l < 4; ++l) {
        CHECK(testing::bit_identical(r1.maps[l], r2.maps[l]));
        CHECK(testing::bit_identical(r1.maps[l], r3.maps[l]));
    }
}

TEST_CASE("encoder parameter names and count") {
    auto enc = make_encoder(4, 0);
    auto named = prefixed("encoder.", *enc);
    std::set<std::string> names;
    int64_t count = 0;
    for (auto& [n, p] : named) {
        names.insert(n);
        count += p.numel();
    }
    for (int i = 1; i <= 4; ++i) {
        CHECK(names.count("encoder.stage" + std::to_string(i) + ".weight"));
        CHECK(names.count("encoder.stage" + std::to_string(i) + ".bias"));
        CHECK(names.count("encoder.proj" + std::to_string(i) + ".weight"));
        CHECK(names.count("encoder.proj" + std::to_string(i) + ".bias"));
    }
    // stages: 3->4->8->16->32 (3x3), projections to 2,4,8,16 (1x1)
    const int64_t expected = (3 * 4 * 9 + 4) + (4 * 8 * 9 + 8) + (8 * 16 * 9 + 16) + (16 * 32 * 9 + 32) +
                             (4 * 2 + 2) + (8 * 4 + 4) + (16 * 8 + 8) + (32 * 16 + 16);
    CHECK(count == expected);
}

TEST_CASE("encoder input validation") {
    auto enc = make_encoder(4, 0);
    CHECK_THROWS_AS(encode_degradation(torch::rand({1, 3, 60, 64}), enc), std::invalid_argument);
    CHECK_THROWS_AS(encode_degradation(torch::rand({1, 3, 64, 68}), enc), std::invalid_argument);
    CHECK_THROWS_AS(encode_degradation(torch::rand({1, 4, 64, 64}), enc), std::invalid_argument);
    {
        torch::NoGradGuard ng;
        enc->parameters()[0].view(-1)[0] = std::numeric_limits<float>::quiet_NaN();
    }
    CHECK_THROWS_AS(encode_degradation(torch::rand({1, 3, 64, 64}), enc), std::invalid_argument);
    CHECK_THROWS_AS(freeze(enc), std::invalid_argument);
}

TEST_CASE("freeze is idempotent and disables gradients") {
    auto enc = make_encoder(4, 3);
    const auto before = hash_parameters(*enc);
    freeze(enc);
    CHECK(enc->frozen());
    for (auto& p : enc->parameters()) {
        CHECK_FALSE(p.requires_grad());
    }
    freeze(freeze(enc));
    CHECK(enc->frozen());
    CHECK(hash_parameters(*enc) == before);
    auto rep = encode_degradation(torch::rand({1, 3, 16, 16}), enc);
    CHECK_FALSE(rep.maps[0].requires_grad());
}

TEST_CASE("encoder gradient flow matches finite differences") {
    auto [n32, n64] = oracle::toy_networks(21);
    auto y64 = torch::rand({2, 3, 16, 16}, torch::kFloat64);
    auto y32 = y64.to(torch::kFloat32);
    auto loss = [&](Networks& n) {
        auto y = n.dtype() == torch::kFloat64 ? y64 : y32;
        auto rep = encode_degradation(y, n.encoder);
        torch::Tensor s = torch::zeros({}, y.options());
        for (auto& m : rep.maps) s = s + m.sum();
        return s;
    };
    auto samples = oracle::gradient_check(
        n32, n64, loss, [](const std::string& n) { return n.rfind("encoder.", 0) == 0; }, 10, 5);
    for (auto& s : samples) {
        INFO(s.name << "[" << s.index << "] fd=" << s.numeric << " a64=" << s.analytic64 << " a32=" << s.analytic32);
        CHECK(s.rel64() < 1e-5);
        CHECK(s.rel32() < 1e-3);
    }
}
