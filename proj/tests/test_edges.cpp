#include "support/testing.hpp"

#include <cmath>

#include "sketchout/edges.hpp"
#include "sketchout/raster.hpp"
#include "support/oracles.hpp"

using namespace sketchout;

namespace {

// 4x4 grey step: left two columns at -1, right two at +1 (all channels).
torch::Tensor step_image() {
  auto img = torch::full({1, 3, 4, 4}, -1.0, torch::kDouble);
  img.narrow(3, 2, 2).fill_(1.0);
  return img;
}

}  // namespace

TEST_CASE("constant image has no edges") {
  SobelEdgeDetector det;
  auto e = det.detect(torch::full({2, 3, 16, 16}, 0.3, torch::kDouble));
  CHECK(e.abs().max().item<double>() == 0.0);
  CHECK(extract_sketch(torch::full({3, 16, 16}, -0.7), det).sum().item<double>() == 0.0);
}

TEST_CASE("4x4 step response matches the hand-convolved Sobel values") {
  // Luma of the step is 0 / 1 after mapping [-1,1] -> [0,1]. With
  // replicate padding the horizontal Sobel sum at columns 1 and 2 is
  // (1+2+1)*1 = 4, vertical 0, so m^2 = 16/32 = 0.5; columns 0 and 3 see
  // no change.
  SobelEdgeDetector det(0.15);
  auto e = det.detect(step_image());
  const double on = 1.0 - std::exp(-0.5 / (0.15 * 0.15));
  for (int i = 0; i < 4; ++i) {
    CHECK(e[0][0][i][0].item<double>() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(e[0][0][i][1].item<double>() == doctest::Approx(on).epsilon(1e-12));
    CHECK(e[0][0][i][2].item<double>() == doctest::Approx(on).epsilon(1e-12));
    CHECK(e[0][0][i][3].item<double>() == doctest::Approx(0.0).epsilon(1e-12));
  }
  auto s = extract_sketch(step_image().squeeze(0), det);
  CHECK(s.sum().item<double>() == 8.0);
}

TEST_CASE("edge output lies in [0,1] and the detector is deterministic") {
  SobelEdgeDetector det;
  auto x = torch::rand({2, 3, 20, 24}) * 2 - 1;
  auto a = det.detect(x);
  CHECK(a.min().item<double>() >= 0.0);
  CHECK(a.max().item<double>() <= 1.0);
  CHECK(torch::equal(a, det.detect(x)));
  CHECK(is_binary(extract_sketch(x, det)));
}

TEST_CASE("edge map gradient matches central differences") {
  SobelEdgeDetector det;
  auto rng = make_rng(11, {});
  for (int instance = 0; instance < 5; ++instance) {
    auto x = (torch::rand({1, 3, 8, 8}, torch::kDouble) * 0.4 - 0.2).requires_grad_(true);
    auto r = oracle::check_gradients([&] { return det.detect(x).sum(); }, {x}, 6, rng);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("detector parameters are not trainable") {
  SobelEdgeDetector det;
  for (const auto& p : det.parameters()) CHECK_FALSE(p.requires_grad());
  auto x = torch::rand({1, 3, 8, 8}).requires_grad_(true);
  det.detect(x).sum().backward();
  for (const auto& p : det.parameters()) CHECK_FALSE(p.grad().defined());
}

TEST_CASE("edge detector factory") {
  CHECK(make_edge_detector("sobel")->kind() == EdgeDetectorKind::kSobelSurrogate);
  CHECK_THROWS_AS(make_edge_detector("canny"), std::invalid_argument);
  CHECK_THROWS(make_edge_detector("script:/nonexistent/model.pt"));
}
