#include <torch/torch.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "tsr/error.hpp"
#include "tsr/nn/axis_branch.hpp"
#include "tsr/nn/backbone.hpp"
#include "tsr/nn/cell_merge.hpp"
#include "tsr/nn/decoder.hpp"
#include "tsr/nn/model.hpp"

using namespace tsr;
using namespace tsr::nn;

namespace {

ModelOptions small_options() {
  ModelOptions o;
  o.backbone_width = 8;
  o.p2_channels = 16;
  o.high_res_channels = 32;
  o.heads = 4;
  o.ffn_dim = 64;
  o.merge_dim = 32;
  o.groups = 4;
  return o;
}

double max_abs_diff(const torch::Tensor& a, const torch::Tensor& b) { return (a - b).abs().max().item<double>(); }

// Bilinear sample at feature coordinates following torchvision's RoIAlign:
// zero outside [-1, extent], clamped to the border inside it.
double bilinear(const torch::Tensor& map, double y, double x) {
  const int64_t h = map.size(0), w = map.size(1);
  if (y < -1.0 || y > static_cast<double>(h) || x < -1.0 || x > static_cast<double>(w)) return 0.0;
  y = std::max(y, 0.0);
  x = std::max(x, 0.0);
  int64_t y0 = static_cast<int64_t>(y), x0 = static_cast<int64_t>(x), y1, x1;
  if (y0 >= h - 1) {
    y0 = y1 = h - 1;
    y = static_cast<double>(y0);
  } else {
    y1 = y0 + 1;
  }
  if (x0 >= w - 1) {
    x0 = x1 = w - 1;
    x = static_cast<double>(x0);
  } else {
    x1 = x0 + 1;
  }
  const double ly = y - static_cast<double>(y0), lx = x - static_cast<double>(x0);
  auto at = [&](int64_t r, int64_t c) { return map[r][c].item<double>(); };
  return (1 - ly) * (1 - lx) * at(y0, x0) + (1 - ly) * lx * at(y0, x1) + ly * (1 - lx) * at(y1, x0) +
         ly * lx * at(y1, x1);
}

double roi_align_loop(const torch::Tensor& map, const Rect& box, double stride, int out, int sampling, int by,
                      int bx) {
  const double x0 = box.x0 / stride - 0.5, y0 = box.y0 / stride - 0.5;
  const double bw = std::max(box.width(), 1.0) / stride / out, bh = std::max(box.height(), 1.0) / stride / out;
  double sum = 0.0;
  for (int iy = 0; iy < sampling; ++iy) {
    for (int ix = 0; ix < sampling; ++ix) {
      const double y = y0 + by * bh + (iy + 0.5) * bh / sampling;
      const double x = x0 + bx * bw + (ix + 0.5) * bw / sampling;
      sum += bilinear(map, y, x);
    }
  }
  return sum / (sampling * sampling);
}

}  // namespace

TEST_CASE("backbone shape contract") {
  torch::manual_seed(0);
  Backbone net(ModelOptions{});
  net->eval();
  torch::NoGradGuard guard;
  CHECK(net->forward(torch::zeros({1, 3, 256, 512})).sizes() == torch::IntArrayRef({1, 64, 64, 128}));
  CHECK(net->forward(torch::zeros({1, 3, 64, 64})).sizes() == torch::IntArrayRef({1, 64, 16, 16}));
  CHECK_THROWS_AS(net->forward(torch::zeros({1, 3, 64, 48})), ShapeError);
  CHECK_THROWS_AS(net->forward(torch::zeros({1, 1, 64, 64})), ShapeError);

  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> m(1, 6);
  Backbone small(small_options());
  for (int trial = 0; trial < 6; ++trial) {
    const int h = 32 * m(rng), w = 32 * m(rng);
    const auto p2 = small->forward(torch::randn({1, 3, h, w}));
    REQUIRE(p2.sizes() == torch::IntArrayRef({1, 16, h / 4, w / 4}));
  }
}

TEST_CASE("backbone is deterministic in inference mode") {
  torch::manual_seed(0);
  Backbone net(small_options());
  net->eval();
  torch::NoGradGuard guard;
  const auto x = torch::randn({1, 3, 64, 96});
  CHECK(torch::equal(net->forward(x), net->forward(x)));
}

TEST_CASE("backbone gradient matches central differences") {
  torch::manual_seed(3);
  Backbone net(small_options());
  net->to(torch::kFloat64);
  const auto x = torch::randn({1, 3, 32, 64}, torch::kFloat64);
  const auto w = torch::randn({1, 16, 8, 16}, torch::kFloat64);
  auto objective = [&](const torch::Tensor& in) { return (net->forward(in) * w).sum(); };

  auto xg = x.clone().requires_grad_(true);
  objective(xg).backward();
  const auto grad = xg.grad();
  torch::NoGradGuard guard;
  const double h = 1e-6;
  for (auto [c, y, xx] : {std::array<int64_t, 3>{0, 5, 7}, {1, 16, 33}, {2, 31, 63}, {0, 0, 0}}) {
    auto plus = x.clone(), minus = x.clone();
    plus[0][c][y][xx] += h;
    minus[0][c][y][xx] -= h;
    const double fd = (objective(plus).item<double>() - objective(minus).item<double>()) / (2 * h);
    const double ad = grad[0][c][y][xx].item<double>();
    CHECK(std::abs(fd - ad) <= 1e-3 * std::max(std::abs(fd), 1e-6));
  }
}

TEST_CASE("axis enhancement shapes") {
  torch::manual_seed(0);
  AxisBranch branch(ModelOptions{});
  torch::NoGradGuard guard;
  const auto p2 = torch::randn({1, 64, 64, 128});
  const auto e = branch->enhance(p2);
  CHECK(e.sizes() == torch::IntArrayRef({1, 64, 64, 16}));
  const auto e_col = branch->enhance(p2.transpose(2, 3));
  CHECK(e_col.sizes() == torch::IntArrayRef({1, 64, 128, 8}));
  CHECK_THROWS_AS(branch->enhance(torch::zeros({1, 64, 16, 4})), ShapeError);

  const auto high = branch->project_high_res(e, 256, 512);
  CHECK(high.sizes() == torch::IntArrayRef({1, 256, 256, 512}));
  CHECK(sample_prior_features(high, 15).sizes() == torch::IntArrayRef({256, 15, 256}));
}

TEST_CASE("SCNN propagation") {
  SUBCASE("two-slice toy with an identity kernel") {
    Scnn scnn(1, true);
    torch::NoGradGuard guard;
    scnn->conv()->weight.zero_();
    scnn->conv()->weight[0][0][4][0] = 1.0;
    scnn->conv()->bias.zero_();
    const auto x = torch::tensor({1.0f, 0.0f}).reshape({1, 1, 1, 2});
    const auto y = scnn->forward(x);
    CHECK(y[0][0][0][0].item<float>() == 1.0f);
    CHECK(y[0][0][0][1].item<float>() == 1.0f);
  }
  SUBCASE("zero kernels are the identity") {
    Scnn fwd(4, true), bwd(4, false);
    torch::NoGradGuard guard;
    for (auto* s : {&fwd, &bwd}) {
      (*s)->conv()->weight.zero_();
      (*s)->conv()->bias.zero_();
    }
    const auto x = torch::randn({1, 4, 6, 5});
    CHECK(torch::equal(bwd->forward(fwd->forward(x)), x));
  }
  SUBCASE("zero input gives zero output") {
    Scnn s(4, false);
    torch::NoGradGuard guard;
    s->conv()->bias.zero_();
    CHECK(s->forward(torch::zeros({1, 4, 6, 5})).abs().max().item<float>() == 0.0f);
  }
}

TEST_CASE("interp_matrix matches bilinear interpolation") {
  for (auto [out, in] : {std::pair<int64_t, int64_t>{16, 2}, {256, 64}, {37, 5}, {8, 8}, {3, 7}}) {
    const auto m = interp_matrix(out, in, torch::kFloat64);
    const auto eye = torch::eye(in, torch::kFloat64).reshape({in, 1, 1, in});
    const auto ref = torch::nn::functional::interpolate(
        eye, torch::nn::functional::InterpolateFuncOptions()
                 .size(std::vector<int64_t>{1, out})
                 .mode(torch::kBilinear)
                 .align_corners(false));  // (in, 1, 1, out): column i holds weights of input i
    REQUIRE(max_abs_diff(m, ref.reshape({in, out}).t()) < 1e-12);
  }
}

TEST_CASE("constant features project to constant high-resolution maps") {
  torch::manual_seed(0);
  AxisBranch branch(small_options());
  torch::NoGradGuard guard;
  const auto e = torch::full({1, 16, 16, 4}, 0.7);
  const auto high = branch->project_high_res(e, 64, 128);
  const auto per_channel = high.amax({2, 3}) - high.amin({2, 3});
  CHECK(per_channel.abs().max().item<float>() < 1e-5f);
  CHECK(high.size(2) / e.size(2) == 4);
  CHECK(high.size(3) / e.size(3) == 32);
}

TEST_CASE("sampled branch outputs equal the dense high-resolution map") {
  torch::manual_seed(4);
  AxisBranch branch(small_options());
  branch->to(torch::kFloat64);
  torch::NoGradGuard guard;
  for (auto [f, x] : {std::pair<int64_t, int64_t>{64, 128}, {96, 64}, {32, 224}}) {
    const auto p2 = torch::randn({1, 16, f / 4, x / 4}, torch::kFloat64);
    const auto out = branch->forward(p2, f, x);
    const auto high = branch->project_high_res(branch->enhance(p2), f, x);
    REQUIRE(out.prior_position == x / 4);
    REQUIRE(max_abs_diff(out.memory.dense(), sample_prior_features(high, 15)) < 1e-10);
    const auto prior = high[0].select(2, out.prior_position).t();  // (F, C')
    REQUIRE(max_abs_diff(out.prior_column, prior) < 1e-10);
    REQUIRE(max_abs_diff(out.ref_logits, branch->ref_head()->forward(prior).squeeze(1)) < 1e-10);
    REQUIRE(out.aux_logits.sizes() == torch::IntArrayRef({f, x}));
  }
}

TEST_CASE("reference logits ignore features away from the prior line") {
  torch::manual_seed(5);
  AxisBranch branch(small_options());
  torch::NoGradGuard guard;
  const auto p2 = torch::randn({1, 16, 16, 32});
  const auto a = branch->forward(p2, 64, 128);
  const auto high = branch->project_high_res(branch->enhance(p2), 64, 128);
  auto perturbed = torch::full_like(high, 9.0);
  perturbed.select(3, a.prior_position).copy_(high.select(3, a.prior_position));
  const auto prior = perturbed[0].select(2, a.prior_position).t();
  CHECK(max_abs_diff(branch->ref_head()->forward(prior).squeeze(1), a.ref_logits) < 1e-5);
}

TEST_CASE("factored cross-attention equals dense attention over C_axis") {
  torch::manual_seed(6);
  auto opt = small_options();
  AxisBranch branch(opt);
  SeparatorDecoder decoder(opt);
  branch->to(torch::kFloat64);
  decoder->to(torch::kFloat64);
  torch::NoGradGuard guard;
  const auto out = branch->forward(torch::randn({1, 16, 16, 32}, torch::kFloat64), 64, 128);
  const auto [q, pos] = make_queries(out, {3, 17, 40, 63}, 128);
  const auto factored = decoder->forward(q, pos, out.memory, true);
  const auto dense = decoder->forward(q, pos, out.memory, false);
  CHECK(max_abs_diff(factored.class_logits, dense.class_logits) < 1e-10);
  CHECK(max_abs_diff(factored.coords, dense.coords) < 1e-10);
}

TEST_CASE("decoder shapes, range and empty queries") {
  torch::manual_seed(7);
  auto opt = small_options();
  AxisBranch branch(opt);
  SeparatorDecoder decoder(opt);
  torch::NoGradGuard guard;
  const auto out = branch->forward(torch::randn({1, 16, 16, 32}), 64, 128);
  const auto [q, pos] = make_queries(out, {1, 2, 3, 4, 5}, 128);
  const auto d = decoder->forward(q, pos, out.memory);
  CHECK(d.class_logits.sizes() == torch::IntArrayRef({5}));
  CHECK(d.coords.sizes() == torch::IntArrayRef({5, 45}));
  CHECK(d.coords.min().item<float>() >= 0.0f);
  CHECK(d.coords.max().item<float>() <= 1.0f);
  const auto empty = decoder->forward(q.slice(0, 0, 0), pos.slice(0, 0, 0), out.memory);
  CHECK(empty.class_logits.numel() == 0);
  CHECK(empty.coords.sizes() == torch::IntArrayRef({0, 45}));
}

TEST_CASE("decoder is permutation equivariant in the queries") {
  torch::manual_seed(8);
  auto opt = small_options();
  AxisBranch branch(opt);
  SeparatorDecoder decoder(opt);
  branch->to(torch::kFloat64);
  decoder->to(torch::kFloat64);
  torch::NoGradGuard guard;
  const auto out = branch->forward(torch::randn({1, 16, 16, 32}, torch::kFloat64), 64, 128);
  const std::vector<int64_t> idx{5, 12, 30, 44, 60};
  const std::vector<int64_t> perm{3, 0, 4, 1, 2};
  std::vector<int64_t> shuffled;
  for (auto p : perm) shuffled.push_back(idx[static_cast<std::size_t>(p)]);
  const auto [q1, p1] = make_queries(out, idx, 128);
  const auto [q2, p2] = make_queries(out, shuffled, 128);
  const auto a = decoder->forward(q1, p1, out.memory);
  const auto b = decoder->forward(q2, p2, out.memory);
  const auto order = torch::tensor(perm);
  CHECK(max_abs_diff(a.class_logits.index_select(0, order), b.class_logits) < 1e-10);
  CHECK(max_abs_diff(a.coords.index_select(0, order), b.coords) < 1e-10);
}

TEST_CASE("fresh classification heads start at the focal prior") {
  SeparatorDecoder decoder(ModelOptions{});
  AxisBranch branch(ModelOptions{});
  const double expected = -std::log(99.0);
  CHECK(branch->ref_head()->bias.item<double>() == doctest::Approx(expected));
}

TEST_CASE("roi_align matches a loop oracle") {
  torch::manual_seed(9);
  const auto map = torch::randn({1, 3, 12, 16}, torch::kFloat64);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ux(0.0, 63.0), uy(0.0, 47.0), ext(0.0, 30.0);
  std::vector<Rect> boxes;
  for (int i = 0; i < 12; ++i) {
    const double x0 = ux(rng), y0 = uy(rng);
    boxes.push_back({x0, y0, std::min(64.0, x0 + ext(rng)), std::min(48.0, y0 + ext(rng))});
  }
  boxes.push_back({10, 10, 10, 10});  // degenerate
  const auto pooled = roi_align(map, boxes, 4.0, 7, 2);
  REQUIRE(pooled.sizes() == torch::IntArrayRef({13, 3, 7, 7}));
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    for (int c = 0; c < 3; ++c) {
      for (int by = 0; by < 7; ++by) {
        for (int bx = 0; bx < 7; ++bx) {
          const double expected = roi_align_loop(map[0][c], boxes[b], 4.0, 7, 2, by, bx);
          REQUIRE(pooled[static_cast<int64_t>(b)][c][by][bx].item<double>() == doctest::Approx(expected).epsilon(1e-9));
        }
      }
    }
  }
}

TEST_CASE("roi_align of constants and identical boxes") {
  const auto constant = torch::full({1, 2, 8, 8}, 3.5);
  const auto pooled = roi_align(constant, {{0, 0, 31, 31}, {5, 7, 9, 20}, {5, 7, 9, 20}}, 4.0, 7, 2);
  CHECK((pooled - 3.5).abs().max().item<float>() < 1e-6f);
  const auto random = roi_align(torch::randn({1, 2, 8, 8}), {{5, 7, 9, 20}, {5, 7, 9, 20}}, 4.0, 7, 2);
  CHECK(torch::equal(random[0], random[1]));
}

TEST_CASE("grid block pooling branches") {
  const auto x = torch::tensor({1.0f, 5.0f, 3.0f, 2.0f}).reshape({1, 1, 2, 2});
  CHECK(torch::equal(GridBlockImpl::row_max(x), torch::tensor({5.0f, 5.0f, 3.0f, 3.0f}).reshape({1, 1, 2, 2})));
  CHECK(torch::equal(GridBlockImpl::col_max(x), torch::tensor({3.0f, 5.0f, 3.0f, 5.0f}).reshape({1, 1, 2, 2})));
  const auto single = torch::randn({1, 4, 1, 1});
  CHECK(torch::equal(GridBlockImpl::row_max(single), single));
  CHECK(torch::equal(GridBlockImpl::col_max(single), single));
}

TEST_CASE("cell merger shapes and pair counts") {
  torch::manual_seed(10);
  ModelOptions opt;
  CellMerger merger(opt);
  torch::NoGradGuard guard;
  const ImageSize size{96, 128};
  const auto p2 = torch::randn({1, 64, 24, 32});
  auto grid_of = [&](int rows, int cols) {
    std::vector<Separator> r, c;
    const auto xs = canonical_positions(size.width, 15);
    const auto ys = canonical_positions(size.height, 15);
    for (int i = 1; i < rows; ++i) {
      const double y = size.height * i / static_cast<double>(rows);
      r.push_back(straight_separator(Axis::Row, xs, y - 2, y, y + 2));
    }
    for (int j = 1; j < cols; ++j) {
      const double x = size.width * j / static_cast<double>(cols);
      c.push_back(straight_separator(Axis::Column, ys, x - 2, x, x + 2));
    }
    return build_grid(r, c, size);
  };
  const auto g33 = grid_of(3, 3);
  const auto cells = merger->cell_features(p2, g33);
  CHECK(cells.sizes() == torch::IntArrayRef({3, 3, 512}));
  const auto enhanced = merger->enhance(cells);
  CHECK(enhanced.sizes() == torch::IntArrayRef({3, 3, 512}));
  CHECK(merger->pair_logits(enhanced, g33).numel() == 12);
  CHECK(merger->forward(p2, grid_of(2, 2)).numel() == 4);
  CHECK(merger->forward(p2, grid_of(1, 1)).numel() == 0);
  const auto probs = torch::sigmoid(merger->forward(p2, grid_of(4, 2)));
  CHECK(probs.numel() == 10);
  CHECK(probs.min().item<float>() > 0.0f);
  CHECK(probs.max().item<float>() < 1.0f);
  CHECK(pair_spatial_features(g33).sizes() == torch::IntArrayRef({12, 18}));
}

TEST_CASE("model splits both axes in image orientation") {
  torch::manual_seed(11);
  TsrModel model(small_options());
  torch::NoGradGuard guard;
  const ImageSize size{64, 96};
  const auto p2 = model->features(torch::randn({1, 3, 64, 96}));
  const auto row = model->split(p2, Axis::Row, size);
  const auto col = model->split(p2, Axis::Column, size);
  CHECK(row.ref_scores.size() == 64);
  CHECK(col.ref_scores.size() == 96);
  CHECK(row.aux_logits.sizes() == torch::IntArrayRef({64, 96}));
  CHECK(col.aux_logits.sizes() == torch::IntArrayRef({64, 96}));
  CHECK(row.branch.prior_position == 24);
  CHECK(col.branch.prior_position == 16);
  const auto d = model->decode(col, Axis::Column, size, {4, 50});
  CHECK(d.coords.sizes() == torch::IntArrayRef({2, 45}));
  CHECK(model->decode(row, Axis::Row, size, {}).coords.size(0) == 0);
}
