#include "support/testing.hpp"

#include <cmath>

#include "sketchout/blocks.hpp"
#include "support/oracles.hpp"

using namespace sketchout;

namespace {

void randomize(torch::nn::Module& m, double scale) {
  torch::NoGradGuard no_grad;
  for (auto& p : m.parameters()) p.copy_(torch::randn_like(p) * scale);
}

void zero(torch::nn::Module& m) {
  torch::NoGradGuard no_grad;
  for (auto& p : m.parameters()) p.zero_();
}

// act(conv_f(x)) * sigmoid(conv_g(x)) computed with the nested-loop oracle.
torch::Tensor gated_oracle(GatedConv2d& g, const torch::Tensor& x) {
  const auto& spec = g->spec();
  auto [pt, pb] = oracle::same_padding(x.size(2), spec.kernel[0], spec.stride[0]);
  auto [pl, pr] = oracle::same_padding(x.size(3), spec.kernel[1], spec.stride[1]);
  auto f = oracle::naive_conv2d(x, g->feature->weight, g->feature->bias, spec.stride[0],
                                spec.stride[1], pt, pb, pl, pr);
  auto s = oracle::naive_conv2d(x, g->gate->weight, g->gate->bias, spec.stride[0],
                                spec.stride[1], pt, pb, pl, pr);
  auto fa = f.accessor<double, 4>();
  auto sa = s.accessor<double, 4>();
  for (int64_t a = 0; a < f.size(0); ++a)
    for (int64_t b = 0; b < f.size(1); ++b)
      for (int64_t c = 0; c < f.size(2); ++c)
        for (int64_t d = 0; d < f.size(3); ++d) {
          fa[a][b][c][d] = oracle::elu(fa[a][b][c][d]) * oracle::sigmoid(sa[a][b][c][d]);
        }
  return f;
}

}  // namespace

TEST_CASE("gated conv with zero parameters outputs zero") {
  GatedConv2d g(ConvSpec(3, 5, 3, 2));
  zero(*g);
  auto y = g->forward(torch::randn({2, 3, 9, 9}));
  CHECK(y.sizes() == torch::IntArrayRef({2, 5, 5, 5}));
  CHECK(y.abs().max().item<double>() == 0.0);
}

TEST_CASE("1x1 gated conv scalar case") {
  GatedConv2d g(ConvSpec(1, 1, 1, 1));
  {
    torch::NoGradGuard no_grad;
    g->feature->weight.fill_(1.0);
    g->feature->bias.zero_();
    g->gate->weight.zero_();
    g->gate->bias.fill_(10.0);
  }
  g->to(torch::kDouble);
  auto y = g->forward(torch::full({1, 1, 1, 1}, 2.0, torch::kDouble)).item<double>();
  CHECK(y == doctest::Approx(2.0 * oracle::sigmoid(10.0)).epsilon(1e-12));
  CHECK(y == doctest::Approx(1.99991).epsilon(1e-5));
}

TEST_CASE("gated conv matches the nested-loop oracle") {
  for (auto [k, s, h, w] : std::vector<std::array<int64_t, 4>>{
           {3, 1, 7, 6}, {3, 2, 9, 8}, {4, 2, 10, 7}, {1, 2, 5, 5}, {5, 2, 11, 12}}) {
    GatedConv2d g(ConvSpec(3, 4, k, s));
    g->to(torch::kDouble);
    randomize(*g, 0.3);
    auto x = torch::randn({2, 3, h, w}, torch::kDouble);
    auto y = g->forward(x);
    auto ref = gated_oracle(g, x);
    REQUIRE(y.sizes() == ref.sizes());
    CHECK((y - ref).abs().max().item<double>() < 1e-5);
  }
}

TEST_CASE("asymmetric stride (1,2) halves only the width") {
  GatedConv2d g(ConvSpec(2, 3, {4, 4}, {1, 2}, Activation::kElu));
  auto y = g->forward(torch::randn({1, 2, 4, 4}));
  CHECK(y.sizes() == torch::IntArrayRef({1, 3, 4, 2}));
}

TEST_CASE("gated conv rejects a channel mismatch") {
  GatedConv2d g(ConvSpec(3, 4, 3));
  CHECK_THROWS_AS(g->forward(torch::zeros({1, 2, 8, 8})), std::invalid_argument);
}

TEST_CASE("gated deconv doubles spatial dims") {
  GatedDeconv2d d(8, 4);
  auto y = d->forward(torch::randn({1, 8, 4, 8}));
  CHECK(y.sizes() == torch::IntArrayRef({1, 4, 8, 16}));
  zero(*d);
  CHECK(d->forward(torch::randn({1, 8, 4, 8})).abs().max().item<double>() == 0.0);
}

TEST_CASE("gated deconv equals nearest upsample then the oracle conv") {
  GatedDeconv2d d(3, 2);
  d->to(torch::kDouble);
  randomize(*d, 0.3);
  auto x = torch::randn({1, 3, 3, 5}, torch::kDouble);
  auto up = x.repeat_interleave(2, 2).repeat_interleave(2, 3);
  auto ref = gated_oracle(d->conv, up);
  CHECK((d->forward(x) - ref).abs().max().item<double>() < 1e-5);
}

TEST_CASE("resblock with zero inner parameters is the identity") {
  GatedResBlock r(16);
  zero(*r);
  auto x = torch::randn({2, 16, 6, 6});
  CHECK(torch::equal(r->forward(x), x));
}

TEST_CASE("resblock equals the composition of its three gated convs plus x") {
  GatedResBlock r(8);
  r->to(torch::kDouble);
  randomize(*r, 0.3);
  auto x = torch::randn({1, 8, 5, 5}, torch::kDouble);
  auto ref = x + gated_oracle(r->expand, gated_oracle(r->spatial, gated_oracle(r->reduce, x)));
  CHECK((r->forward(x) - ref).abs().max().item<double>() < 1e-5);
  CHECK(r->forward(torch::randn({1, 8, 16, 16}, torch::kDouble)).sizes() ==
        torch::IntArrayRef({1, 8, 16, 16}));
}

TEST_CASE("blocks stay finite over 100 random parameter draws") {
  GatedConv2d g(ConvSpec(4, 4, 3, 2));
  GatedResBlock r(4);
  auto x = torch::randn({1, 4, 8, 8});
  for (int i = 0; i < 100; ++i) {
    randomize(*g, 1.0);
    randomize(*r, 1.0);
    CHECK(torch::isfinite(r->forward(g->forward(x))).all().item<bool>());
  }
}

TEST_CASE("block gradients match central differences") {
  auto rng = make_rng(3, {});
  for (int instance = 0; instance < 5; ++instance) {
    GatedConv2d g(ConvSpec(2, 3, 3, 2));
    GatedResBlock r(4);
    g->to(torch::kDouble);
    r->to(torch::kDouble);
    randomize(*g, 0.5);
    randomize(*r, 0.5);
    auto xg = torch::randn({1, 2, 5, 6}, torch::kDouble).requires_grad_(true);
    auto xr = torch::randn({1, 4, 4, 4}, torch::kDouble).requires_grad_(true);
    auto wg = torch::randn({1, 3, 3, 3}, torch::kDouble);
    auto wr = torch::randn({1, 4, 4, 4}, torch::kDouble);
    auto rg = oracle::check_gradients([&] { return (g->forward(xg) * wg).sum(); },
                                      {xg, g->feature->weight, g->gate->weight}, 4, rng);
    auto rr = oracle::check_gradients([&] { return (r->forward(xr) * wr).sum(); },
                                      {xr, r->reduce->gate->weight, r->spatial->feature->weight},
                                      4, rng);
    CHECK(rg.max_rel_error < 1e-4);
    CHECK(rr.max_rel_error < 1e-4);
  }
}

TEST_CASE("init is seed-determined and truncated at two standard deviations") {
  GatedResBlock a(32), b(32);
  init_parameters(*a, 9, 0.02);
  init_parameters(*b, 9, 0.02);
  auto pa = a->parameters();
  auto pb = b->parameters();
  for (size_t i = 0; i < pa.size(); ++i) CHECK(torch::equal(pa[i], pb[i]));
  CHECK(a->reduce->feature->weight.abs().max().item<double>() <= 0.04);
  CHECK(a->reduce->feature->bias.abs().max().item<double>() == 0.0);
}
