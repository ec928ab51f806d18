// Acceptance suite: one PASS/FAIL line per criterion A1..A8. Exit status is
// nonzero when any selected criterion fails.
#include <torch/torch.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "tsr/annotation_io.hpp"
#include "tsr/error.hpp"
#include "tsr/evaluate.hpp"
#include "tsr/grid.hpp"
#include "tsr/matching.hpp"
#include "tsr/metrics.hpp"
#include "tsr/nn/losses.hpp"
#include "tsr/nn/recognizer.hpp"
#include "tsr/nn/train.hpp"
#include "tsr/separators.hpp"
#include "tsr/synth.hpp"
#include "tsr_source_hash.hpp"

namespace fs = std::filesystem;
using namespace tsr;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

struct Verdict {
  bool pass = true;
  std::string summary;
  std::vector<std::string> info;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      info.push_back("failed: " + what);
    }
  }
};

void print(const std::string& id, const Verdict& v) {
  std::printf("%s %s  %s\n", id.c_str(), v.pass ? "PASS" : "FAIL", v.summary.c_str());
  for (const auto& line : v.info) std::printf("    %s\n", line.c_str());
  std::fflush(stdout);
}

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Same offset on all three lines keeps top <= center <= bottom.
void bend(Separator& s, double amp, double wavelength, double phase) {
  for (auto* line : {&s.top, &s.center, &s.bottom})
    for (std::size_t i = 0; i < line->size(); ++i)
      line->values[i] += amp * std::sin(2 * std::numbers::pi * line->positions[i] / wavelength + phase);
}

// ---------------------------------------------------------------- A1

Verdict a1_matching() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  const int instances = 1000;
  int agree = 0;
  double max_dev = 0.0;
  for (int trial = 0; trial < instances; ++trial) {
    const int width = uniform_int(rng, 64, 400);
    const double height = uniform(rng, 64, 400);
    const auto xs = canonical_positions(width, 15);
    const double ref_pos = uniform_int(rng, 0, width - 1);
    std::vector<Separator> gts;
    for (int g = uniform_int(rng, 0, 7); g > 0; --g) {
      const double c = uniform(rng, 0, height);
      Separator s = straight_separator(Axis::Row, xs, c - uniform(rng, 0.5, 12), c, c + uniform(rng, 0.5, 12));
      bend(s, uniform(rng, 0, 6), uniform(rng, 100, 800), uniform(rng, 0, 6.3));
      gts.push_back(std::move(s));
    }
    std::vector<double> refs;
    for (int q = uniform_int(rng, 0, 7); q > 0; --q) {
      if (!gts.empty() && uniform(rng, 0, 1) < 0.6) {
        const auto& s = gts[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(gts.size()) - 1))];
        refs.push_back(uniform(rng, polyline_eval(s.top, ref_pos), polyline_eval(s.bottom, ref_pos)));
      } else {
        refs.push_back(uniform(rng, 0, height));
      }
    }
    bool ok = true;
    for (const bool banded : {true, false}) {
      const auto a = match_references(refs, gts, ref_pos, banded ? MatchStrategy::PriorEnhanced : MatchStrategy::Unconstrained);
      const auto o = oracle::brute_force_match(refs, gts, ref_pos, banded);
      double sum = 0.0;
      for (double c : a.costs) sum += c;
      const double dev = std::fabs(sum - o.cost);
      max_dev = std::max(max_dev, dev);
      std::set<int> used;
      for (const auto& [q, g] : a.pairs) used.insert(g);
      ok = ok && static_cast<int>(a.pairs.size()) == o.matched && dev <= 1e-9 * std::max(1.0, o.cost) &&
           used.size() == a.pairs.size() &&
           a.unmatched_queries.size() + a.pairs.size() == refs.size() &&
           a.unmatched_gts.size() + a.pairs.size() == gts.size();
    }
    agree += ok;
  }
  Verdict v;
  const double secs = since(t0);
  v.require(agree == instances, "every instance agrees with brute force");
  v.require(secs < 10.0, "runs in under 10 s");
  v.summary = fmt("matching equals brute-force assignment on %d/%d instances, both cost rules (max cost gap %.1e, %.2f s)",
                  agree, instances, max_dev, secs);
  return v;
}

// ---------------------------------------------------------------- A2

torch::Tensor dvec(const std::vector<double>& v) { return torch::tensor(v, torch::kFloat64); }

double focal_reference(const std::vector<double>& p, const std::vector<double>& t, double n_sep) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    sum += t[i] == 1.0 ? std::pow(1 - p[i], 2) * std::log(p[i])
                       : std::pow(1 - t[i], 4) * std::pow(p[i], 2) * std::log(1 - p[i]);
  return n_sep > 0 ? -sum / n_sep : 0.0;
}

double heatmap_reference(double i, double c, double w) {
  if (std::fabs(i - c) > w / 2) return 0.0;
  const double var = w * w / (2 * std::log(10.0));
  return std::exp(-(i - c) * (i - c) / (2 * var));
}

double line_reference(const std::vector<double>& p, const std::vector<std::vector<double>>& coords,
                      const std::vector<std::vector<double>>& targets, const std::vector<std::pair<int, int>>& pairs) {
  std::vector<char> matched(p.size(), 0);
  double sum = 0.0;
  for (const auto& [q, g] : pairs) {
    matched[static_cast<std::size_t>(q)] = 1;
    const auto& c = coords[static_cast<std::size_t>(q)];
    const auto& t = targets[static_cast<std::size_t>(g)];
    double l1 = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) l1 += std::fabs(c[k] - t[k]);
    sum += l1 / static_cast<double>(c.size());
  }
  for (std::size_t q = 0; q < p.size(); ++q)
    sum -= matched[q] ? std::pow(1 - p[q], 2) * std::log(p[q]) : p[q] * p[q] * std::log(1 - p[q]);
  return sum;
}

double bce(double p, double y) { return -(y * std::log(p) + (1 - y) * std::log(1 - p)); }

double ohem_reference(const std::vector<double>& p, const std::vector<double>& y, int per_class) {
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < p.size(); ++i) (y[i] == 1.0 ? pos : neg).push_back(bce(p[i], y[i]));
  std::sort(pos.rbegin(), pos.rend());
  std::sort(neg.rbegin(), neg.rend());
  double sum = 0.0;
  int n = 0;
  for (const auto* v : {&pos, &neg})
    for (std::size_t i = 0; i < v->size() && i < static_cast<std::size_t>(per_class); ++i, ++n) sum += (*v)[i];
  return n ? sum / n : 0.0;
}

// Largest relative gap between autodiff and central differences.
double gradient_gap(const torch::Tensor& x, const std::function<torch::Tensor(const torch::Tensor&)>& f) {
  auto xg = x.clone().requires_grad_(true);
  f(xg).backward();
  const auto grad = xg.grad().reshape({-1});
  torch::NoGradGuard guard;
  const double h = 1e-6;
  const auto flat = x.reshape({-1});
  double worst = 0.0;
  for (int64_t i = 0; i < flat.numel(); ++i) {
    auto plus = flat.clone(), minus = flat.clone();
    plus[i] += h;
    minus[i] -= h;
    const double fd = (f(plus.reshape(x.sizes())).item<double>() - f(minus.reshape(x.sizes())).item<double>()) / (2 * h);
    worst = std::max(worst, std::fabs(fd - grad[i].item<double>()) / std::max(std::fabs(fd), 1e-4));
  }
  return worst;
}

Verdict a2_losses() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  torch::manual_seed(202);
  const nn::LossOptions opt;
  double value_gap = 0.0;
  auto track = [&](double got, double want) { value_gap = std::max(value_gap, std::fabs(got - want)); };

  // Heatmap focal loss and its heatmap targets.
  for (int trial = 0; trial < 200; ++trial) {
    const int n = uniform_int(rng, 1, 40);
    std::vector<double> p(static_cast<std::size_t>(n)), t(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      p[static_cast<std::size_t>(i)] = uniform(rng, 0.01, 0.99);
      const double r = uniform(rng, 0, 1);
      t[static_cast<std::size_t>(i)] = r < 0.2 ? 1.0 : (r < 0.6 ? uniform(rng, 0, 1) : 0.0);
    }
    const int n_sep = uniform_int(rng, 0, 4);
    track(nn::ref_point_loss(dvec(p), dvec(t), n_sep, opt).item<double>(), focal_reference(p, t, n_sep));

    const double c = uniform(rng, 0, 100), w = uniform(rng, 1, 30), i = uniform(rng, c - w, c + w);
    track(heatmap_value(i, c, w), heatmap_reference(i, c, w));
  }

  // Set-prediction line loss.
  for (int trial = 0; trial < 100; ++trial) {
    const int q = uniform_int(rng, 0, 6), g = uniform_int(rng, 0, 6), k3 = 45;
    std::vector<double> p;
    std::vector<std::vector<double>> coords(static_cast<std::size_t>(q)), targets(static_cast<std::size_t>(g));
    for (auto& row : coords)
      for (int k = 0; k < k3; ++k) row.push_back(uniform(rng, 0, 1));
    for (auto& row : targets)
      for (int k = 0; k < k3; ++k) row.push_back(uniform(rng, 0, 1));
    for (int i = 0; i < q; ++i) p.push_back(uniform(rng, 0.02, 0.98));
    std::vector<int> perm(static_cast<std::size_t>(g));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Assignment a;
    for (int i = 0; i < std::min(q, g); ++i)
      if (uniform(rng, 0, 1) < 0.7) a.pairs.push_back({i, perm[static_cast<std::size_t>(i)]});
    auto to_tensor = [k3](const std::vector<std::vector<double>>& rows) {
      auto t = torch::zeros({static_cast<int64_t>(rows.size()), k3}, torch::kFloat64);
      for (std::size_t r = 0; r < rows.size(); ++r) t[static_cast<int64_t>(r)] = dvec(rows[r]);
      return t;
    };
    track(nn::line_loss(dvec(p), to_tensor(coords), to_tensor(targets), a, opt).item<double>(),
          line_reference(p, coords, targets, a.pairs));
  }

  // Auxiliary segmentation loss on sampled pixels.
  bool sampling_ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = uniform_int(rng, 100, 5000);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n));
    const double frac = uniform(rng, 0, 1);
    int positives = 0;
    for (auto& m : mask) positives += (m = uniform(rng, 0, 1) < frac);
    std::vector<double> p(mask.size());
    for (auto& x : p) x = uniform(rng, 0.02, 0.98);
    const std::uint64_t seed = rng();
    const auto idx = nn::sample_pixels(mask, opt.pixels_per_class, opt.pixels_per_class, seed);
    int got_pos = 0;
    double sum = 0.0;
    for (auto i : idx) {
      const auto u = static_cast<std::size_t>(i);
      got_pos += mask[u];
      sum += bce(p[u], mask[u]);
    }
    sampling_ok = sampling_ok && std::set<int64_t>(idx.begin(), idx.end()).size() == idx.size() &&
                  got_pos == std::min(positives, opt.pixels_per_class) &&
                  static_cast<int>(idx.size()) - got_pos == std::min(n - positives, opt.pixels_per_class);
    track(nn::aux_seg_loss(dvec(p), mask, seed, opt).item<double>(), idx.empty() ? 0.0 : sum / static_cast<double>(idx.size()));
  }

  // OHEM merge loss.
  for (int trial = 0; trial < 100; ++trial) {
    const int n = uniform_int(rng, 0, 300);
    std::vector<double> p, y;
    for (int i = 0; i < n; ++i) {
      p.push_back(uniform(rng, 0.02, 0.98));
      y.push_back(uniform(rng, 0, 1) < 0.3 ? 1.0 : 0.0);
    }
    track(nn::merge_loss_ohem(dvec(p), dvec(y), opt).item<double>(), ohem_reference(p, y, opt.ohem_pairs));
  }

  // Weighted total.
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> c(7);
    for (auto& x : c) x = uniform(rng, 0, 5);
    const double lambda = uniform(rng, 0, 1);
    auto s = [&](int i) { return torch::full({}, c[static_cast<std::size_t>(i)], torch::kFloat64); };
    const nn::LossBundle b{s(0), s(1), s(2), s(3), s(4), s(5), s(6)};
    track(b.total(lambda).item<double>(), lambda * (c[0] + c[1]) + c[2] + c[3] + c[4] + c[5] + c[6]);
  }

  // Worked values, compared at their printed precision.
  const double w_focal = nn::ref_point_loss(dvec({0.5}), dvec({1.0}), 1, opt).item<double>();
  const double w_heat = heatmap_value(8, 12, 8);
  auto one = [] { return torch::ones({}, torch::kFloat64); };
  const double w_total = nn::LossBundle{one(), one(), one(), one(), one(), one(), one()}.total(0.2).item<double>();
  const double w_neg = nn::ref_point_loss(dvec({0.1}), dvec({w_heat}), 1, opt).item<double>();

  // Gradients.
  double grad_gap = 0.0;
  const auto pr = torch::rand({12}, torch::kFloat64) * 0.8 + 0.1;
  const auto tr = dvec({1, 0.3, 0, 0, 1, 0.56, 0, 0.1, 0, 1, 0, 0});
  grad_gap = std::max(grad_gap, gradient_gap(pr, [&](const torch::Tensor& x) { return nn::ref_point_loss(x, tr, 3, opt); }));
  const auto coords = torch::rand({3, 45}, torch::kFloat64);
  const auto targets = torch::rand({2, 45}, torch::kFloat64);
  Assignment a;
  a.pairs = {{0, 1}, {2, 0}};
  const auto cls = dvec({0.3, 0.6, 0.8});
  grad_gap = std::max(grad_gap, gradient_gap(cls, [&](const torch::Tensor& x) { return nn::line_loss(x, coords, targets, a, opt); }));
  grad_gap = std::max(grad_gap, gradient_gap(coords, [&](const torch::Tensor& x) { return nn::line_loss(cls, x, targets, a, opt); }));
  std::vector<std::uint8_t> mask(40, 0);
  for (std::size_t i = 0; i < 40; i += 3) mask[i] = 1;
  nn::LossOptions small = opt;
  small.pixels_per_class = 8;
  small.ohem_pairs = 3;
  grad_gap = std::max(grad_gap, gradient_gap(torch::rand({40}, torch::kFloat64) * 0.8 + 0.1,
                                             [&](const torch::Tensor& x) { return nn::aux_seg_loss(x, mask, 5, small); }));
  const auto labels = dvec({1, 0, 0, 1, 1, 0, 0, 1, 0, 0});
  grad_gap = std::max(grad_gap, gradient_gap(torch::rand({10}, torch::kFloat64) * 0.8 + 0.1,
                                             [&](const torch::Tensor& x) { return nn::merge_loss_ohem(x, labels, small); }));
  const auto comps = torch::rand({7}, torch::kFloat64);
  grad_gap = std::max(grad_gap, gradient_gap(comps, [](const torch::Tensor& x) {
                        return nn::LossBundle{x[0], x[1], x[2], x[3], x[4], x[5], x[6]}.total(0.2);
                      }));

  Verdict v;
  const double secs = since(t0);
  v.require(value_gap <= 1e-6, "loss values within 1e-6 of straight-line evaluation");
  v.require(sampling_ok, "pixel sampler draws min(n, 1024) distinct pixels per class");
  v.require(std::fabs(w_focal - 0.1733) <= 5e-5, "positive focal example 0.1733");
  v.require(std::fabs(w_heat - 0.5623) <= 5e-5, "heatmap example 10^(-1/4) = 0.5623");
  v.require(std::fabs(w_total - 5.4) <= 1e-6, "weighted total example 5.4");
  v.require(grad_gap <= 1e-3, "autodiff within rel. 1e-3 of central differences");
  v.require(secs < 60.0, "runs in under 1 min");
  v.summary = fmt("loss values match straight-line evaluation (max gap %.1e), gradients match finite differences "
                  "(max rel. gap %.1e, %.1f s)", value_gap, grad_gap, secs);
  v.info.push_back(fmt("worked values: focal %.6f, heatmap %.6f, total %.6f", w_focal, w_heat, w_total));
  v.info.push_back(fmt("negative-pixel example (1 - 0.5623)^4 * 0.1^2 * -ln 0.9 evaluates to %.4e, not 3.78e-5", w_neg));
  return v;
}

// ---------------------------------------------------------------- A3

double quad_area(const Point& a, const Point& b, const Point& c, const Point& d) {
  const Point p[4] = {a, b, c, d};
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += p[i].x * p[(i + 1) % 4].y - p[(i + 1) % 4].x * p[i].y;
  return s / 2;
}

Verdict a3_grid() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  int grids_ok = 0, fallbacks = 0;
  double worst_area = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const ImageSize size{uniform_int(rng, 64, 400), uniform_int(rng, 64, 400)};
    const int nr = uniform_int(rng, 0, 9), nc = uniform_int(rng, 0, 9);
    auto make = [&](Axis axis, int count) {
      const int extent = axis == Axis::Row ? size.height : size.width;
      const int along = axis == Axis::Row ? size.width : size.height;
      const double gap = (extent - 1.0) / (count + 1);
      std::vector<Separator> out;
      for (int i = 0; i < count; ++i) {
        const double c = (i + 1) * gap + uniform(rng, -0.15, 0.15) * gap;
        const double half = uniform(rng, 0, 0.1) * gap;
        Separator s = straight_separator(axis, canonical_positions(along, 15), c - half, c, c + half);
        if (uniform(rng, 0, 1) < 0.6) bend(s, uniform(rng, 0, 0.15) * gap, uniform(rng, 0.5, 3) * along, uniform(rng, 0, 6.3));
        out.push_back(std::move(s));
      }
      return out;
    };
    const auto rows = make(Axis::Row, nr);
    const auto cols = make(Axis::Column, nc);
    bool ok = true;
    try {
      const auto g = build_grid(rows, cols, size);
      fallbacks += g.fallback_corners();
      ok = g.rows() == nr + 1 && g.cols() == nc + 1 && g.cells().size() == static_cast<std::size_t>((nr + 1) * (nc + 1));
      double area = 0.0;
      for (int i = 0; i <= g.rows() && ok; ++i)
        for (int j = 0; j <= g.cols(); ++j) {
          if (j < g.cols()) ok = ok && g.corner(i, j).x < g.corner(i, j + 1).x;
          if (i < g.rows()) ok = ok && g.corner(i, j).y < g.corner(i + 1, j).y;
        }
      for (int i = 0; i < g.rows() && ok; ++i)
        for (int j = 0; j < g.cols(); ++j) {
          const double q = quad_area(g.corner(i, j), g.corner(i, j + 1), g.corner(i + 1, j + 1), g.corner(i + 1, j));
          ok = ok && q > 0;
          area += q;
        }
      const double full = (size.width - 1.0) * (size.height - 1.0);
      worst_area = std::max(worst_area, std::fabs(area - full) / full);
      ok = ok && std::fabs(area - full) <= 1e-9 * full;
    } catch (const GridInconsistency&) {
      ok = false;
    }
    grids_ok += ok;
  }

  int round_trips = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto table = generate_table(random_spec(seed, 0.5, 0.5, {192, 256}));
    const auto ann = annotation_from_json(annotation_to_json(table.annotation));
    const auto targets = derive_targets(ann, ann.image_size);
    const auto g = build_grid(ann.row_separators, ann.col_separators, ann.image_size);
    const auto pairs = adjacent_pairs(g.rows(), g.cols());
    std::vector<CellPair> merges;
    for (std::size_t k = 0; k < pairs.size(); ++k)
      if (targets.merge_labels[k]) merges.push_back(pairs[k]);
    const auto cells = resolve_spans(g, merges);
    bool ok = cells.size() == table.annotation.cells.size();
    for (std::size_t k = 0; ok && k < cells.size(); ++k) ok = cells[k].same_extent(table.annotation.cells[k]);
    round_trips += ok;
  }

  Verdict v;
  const double secs = since(t0);
  v.require(grids_ok == 500, "grid invariants on every random separator set");
  v.require(round_trips == 500, "ground-truth round trip on every annotation");
  v.require(secs < 60.0, "runs in under 1 min");
  v.summary = fmt("grid invariants hold on %d/500 random separator sets, ground-truth round trip on %d/500 tables (%.1f s)",
                  grids_ok, round_trips, secs);
  v.info.push_back(fmt("max relative tiling area gap %.1e, fallback corners %d", worst_area, fallbacks));
  return v;
}

// ---------------------------------------------------------------- A7

CellBox cell(int r0, int r1, int c0, int c1) {
  CellBox c{r0, r1, c0, c1, {}, {}};
  c.bbox = {c0 * 10.0, r0 * 10.0, (c1 + 1) * 10.0, (r1 + 1) * 10.0};
  return c;
}

Verdict a7_metrics() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(707);
  int agree = 0;
  const int trees = 1000;
  for (int trial = 0; trial < trees; ++trial) {
    const auto a = oracle::random_tree(rng, uniform_int(rng, 1, 6));
    const auto b = oracle::random_tree(rng, uniform_int(rng, 1, 6));
    agree += tree_edit_distance(a, b) == oracle::exhaustive_tree_distance(a, b);
  }

  StructureTree three, two, bare, one_row;
  const int r3 = three.add_child(0, StructureTree::Kind::Row);
  for (int i = 0; i < 3; ++i) three.add_child(r3, StructureTree::Kind::Cell);
  const int r2 = two.add_child(0, StructureTree::Kind::Row);
  for (int i = 0; i < 2; ++i) two.add_child(r2, StructureTree::Kind::Cell);
  one_row.add_child(0, StructureTree::Kind::Row);
  const double t08 = teds_struct(three, two), t05 = teds_struct(bare, one_row);

  const std::vector<CellBox> gt{cell(0, 0, 0, 0), cell(0, 0, 1, 1), cell(1, 1, 0, 0), cell(1, 1, 1, 1)};
  auto gap = gt;
  gap[1].col_end = 2;
  gap[3].col_start = gap[3].col_end = 2;
  auto shifted = gt;
  for (auto& c : shifted) c.bbox = {c.bbox.x0 + 200, c.bbox.y0, c.bbox.x1 + 200, c.bbox.y1};
  const auto same = adjacency_prf(gt, gt);
  const auto missing = adjacency_prf(gap, gt);
  const auto off = adjacency_prf(shifted, gt);
  const auto empty = adjacency_prf(std::vector<CellBox>{}, std::vector<CellBox>{});
  const auto ignored = adjacency_prf(gt, gt, 0.6, {false, false, false, true});

  Verdict v;
  const double secs = since(t0);
  v.require(agree == trees, "tree edit distance equals exhaustive search");
  v.require(t08 == 0.8 && t05 == 0.5, "TEDS-Struct hand cases 0.8 and 0.5");
  v.require(same.precision == 1.0 && same.recall == 1.0 && same.f1 == 1.0, "identical tables score 1");
  v.require(missing.precision == 1.0 && missing.recall == 0.75 && missing.f1 == 6.0 / 7.0, "one missing relation: P 1, R 3/4");
  v.require(off.f1 == 0.0 && empty.f1 == 1.0, "disjoint tables score 0, empty tables 1");
  v.require(ignored.gt_relations == 2 && ignored.f1 == 1.0, "relations of empty cells are dropped");
  v.require(secs < 60.0, "runs in under 1 min");
  v.summary = fmt("tree edit distance equals exhaustive search on %d/%d tree pairs (<= 6 nodes); TEDS 0.8/0.5 and "
                  "adjacency hand cases exact (%.1f s)", agree, trees, secs);
  return v;
}

// ---------------------------------------------------------------- A8

Verdict a8_peaks() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(808);
  int agree = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = uniform_int(rng, 0, 800);
    const int mode = trial % 4;
    std::vector<double> s(static_cast<std::size_t>(n));
    for (auto& x : s) {
      x = uniform(rng, 0, 1);
      if (mode == 1) x = std::floor(x * 8) / 8;  // plateaus and ties
      if (mode == 2) x *= 0.1;                   // straddles the threshold
    }
    agree += detect_peaks(s) == oracle::brute_force_peaks(s);
  }
  Verdict v;
  const double secs = since(t0);
  v.require(agree == 1000, "every score vector agrees");
  v.require(secs < 10.0, "runs in under 10 s");
  v.summary = fmt("peak detection equals brute-force window-7 maxima + top-100 + 0.05 threshold on %d/1000 vectors (%.2f s)",
                  agree, secs);
  return v;
}

// ---------------------------------------------------------------- training runs

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

std::string cached_key(const fs::path& dir) {
  const auto path = dir / "key.txt";
  return fs::exists(path) ? read_text(path) : std::string{};
}

/// Writes the tables once per (description, sources); later calls reuse them.
void ensure_dataset(const fs::path& dir, const std::string& description,
                    const std::function<void(DatasetWriter&)>& fill) {
  const std::string key = description + "\nsource = " + kTsrSourceHash + "\n";
  if (cached_key(dir) == key) return;
  fs::remove_all(dir);
  DatasetWriter writer(dir, {192, 256}, 0);
  fill(writer);
  writer.finish();
  write_text(dir / "key.txt", key);
}

struct TrainedRun {
  fs::path checkpoint;
  nn::CheckpointMeta meta;
  double train_seconds = 0.0;
  bool reused = false;
};

/// Trains `cfg` into dir/model.pt unless a run with the same config text and
/// core sources already finished there.
TrainedRun trained(const fs::path& dir, Config cfg) {
  cfg.set("train.out_dir", quoted((dir / "run").string()));
  const std::string key = cfg.to_text() + "source = " + kTsrSourceHash + "\n";
  TrainedRun run;
  run.checkpoint = dir / "model.pt";
  run.reused = fs::exists(run.checkpoint) && cached_key(dir) == key;
  if (!run.reused) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::fprintf(stderr, "training %s\n", dir.string().c_str());
    const auto result = nn::train_staged(nn::TrainConfig::from_config(cfg), [](const nn::EpochRecord& r) {
      std::fprintf(stderr, "  stage %d epoch %3d  total %.4f  %.1fs\n", r.stage, r.epoch, r.total, r.seconds);
    });
    fs::copy_file(result.checkpoint, run.checkpoint, fs::copy_options::overwrite_existing);
    write_text(dir / "key.txt", key);
  }
  run.meta = nn::load_checkpoint(run.checkpoint).meta;
  for (const auto& r : run.meta.history) run.train_seconds += r.seconds;
  return run;
}

nn::Recognizer recognizer_for(const TrainedRun& run) {
  auto loaded = nn::load_checkpoint(run.checkpoint);
  return nn::Recognizer(loaded.model, nn::InferOptions::from_config(loaded.meta.config));
}

std::string run_note(const TrainedRun& run) {
  return fmt("%s checkpoint %s, %d epochs, %.0f s of training", run.reused ? "cached" : "fresh",
             run.checkpoint.string().c_str(), static_cast<int>(run.meta.history.size()), run.train_seconds);
}

// ---------------------------------------------------------------- A4

/// Eight fixed tables: alternating rulings, spans on three, curved on three.
std::vector<TableSpec> overfit_specs() {
  std::vector<TableSpec> specs;
  for (int i = 0; i < 8; ++i) {
    TableSpec s;
    s.seed = 4000 + static_cast<std::uint64_t>(i);
    s.n_rows = i == 0 ? 3 : 3 + i % 4;
    s.n_cols = i == 0 ? 3 : 3 + (i * 3) % 4;
    s.bordered = i % 2 == 0;
    s.empty_prob = i == 0 ? 0.0 : 0.1;
    if (i == 2 || i == 3 || i == 6) s.span_prob = 0.3;
    if (i == 4 || i == 5 || i == 6) {
      s.warp.amp_y = 5.0;
      s.warp.amp_x = 2.0;
      s.warp.wavelength = 500.0;
      s.warp.phase = 0.7 * i;
      s.warp.rotation_deg = 0.8;
    }
    specs.push_back(s);
  }
  return specs;
}

bool has_span(const TableAnnotation& a) {
  return std::any_of(a.cells.begin(), a.cells.end(),
                     [](const CellBox& c) { return c.row_end > c.row_start || c.col_end > c.col_start; });
}

bool is_curved(const TableAnnotation& a) {
  for (const auto* seps : {&a.row_separators, &a.col_separators})
    for (const auto& s : *seps) {
      const auto [lo, hi] = std::minmax_element(s.center.values.begin(), s.center.values.end());
      if (*hi - *lo > 1.0) return true;
    }
  return false;
}

/// Mean |predicted - gt| center offset over the gt sample positions, pairing
/// each gt separator with the prediction closest on its reference line.
double center_error(const TableResult& pred, const TableAnnotation& gt, int& paired) {
  double sum = 0.0;
  int count = 0;
  for (const Axis axis : {Axis::Row, Axis::Column}) {
    const auto& preds = axis == Axis::Row ? pred.row_separators : pred.col_separators;
    const int along = axis == Axis::Row ? gt.image_size.width : gt.image_size.height;
    const double ref = reference_position(along);
    for (const auto& s : gt.separators(axis)) {
      const Separator* best = nullptr;
      for (const auto& p : preds)
        if (!best || std::fabs(polyline_eval(p.center, ref) - polyline_eval(s.center, ref)) <
                         std::fabs(polyline_eval(best->center, ref) - polyline_eval(s.center, ref)))
          best = &p;
      if (!best) continue;
      ++paired;
      for (std::size_t i = 0; i < s.center.size(); ++i) {
        sum += std::fabs(polyline_eval(best->center, s.center.positions[i]) - s.center.values[i]);
        ++count;
      }
    }
  }
  return count ? sum / count : 0.0;
}

Verdict a4_overfit(const fs::path& work) {
  const auto specs = overfit_specs();
  std::vector<GeneratedTable> tables;
  for (const auto& s : specs) tables.push_back(generate_table(s));
  int bordered = 0, spans = 0, curved = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    bordered += specs[i].bordered;
    spans += has_span(tables[i].annotation);
    curved += is_curved(tables[i].annotation);
  }
  const fs::path data = work / "a4_data";
  ensure_dataset(data, "overfit tables v1", [&](DatasetWriter& w) {
    for (const auto& t : tables) w.add(t, "train");
  });

  const Config cfg = Config::parse(
      "data.dir = " + quoted(data.string()) + "\n"
      "train.split = \"train\"\n"
      "train.stages = 3\n"
      "train.stage_epochs = 20\n"
      "train.batch_size = 8\n"
      "train.epoch_repeats = 16\n"
      "train.rescale_shorter = [192]\n"
      "train.seed = 1\n"
      "infer.side = 256\n");
  const auto run = trained(work / "a4_run", cfg);
  auto recognizer = recognizer_for(run);
  const Dataset dataset(data);
  const auto report = nn::evaluate_model(recognizer, dataset, dataset.ids("train"), {}, work / "a4_pred");

  double err_sum = 0.0;
  int paired = 0, gt_seps = 0;
  bool grid3x3 = false;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const auto result = recognizer.recognize(tables[i].image);
    int n = 0;
    const double e = center_error(result, tables[i].annotation, n);
    err_sum += e * n;
    paired += n;
    gt_seps += static_cast<int>(tables[i].annotation.row_separators.size() + tables[i].annotation.col_separators.size());
    if (i == 0) {
      grid3x3 = result.cells.size() == 9;
      for (std::size_t k = 0; grid3x3 && k < 9; ++k) grid3x3 = result.cells[k].same_extent(tables[0].annotation.cells[k]);
    }
  }
  const double center_px = paired ? err_sum / paired : 0.0;

  // Moving average (window 3) of the epoch totals within each stage.
  std::map<int, std::vector<double>> per_stage;
  for (const auto& r : run.meta.history) per_stage[r.stage].push_back(r.total);
  std::string monotone;
  bool monotone_ok = per_stage.size() == 3;
  for (const auto& [stage, totals] : per_stage) {
    auto ma = [&](std::size_t end) {
      const std::size_t begin = end >= 3 ? end - 3 : 0;
      double s = 0.0;
      for (std::size_t k = begin; k < end; ++k) s += totals[k];
      return s / static_cast<double>(end - begin);
    };
    const double first = ma(std::min<std::size_t>(3, totals.size())), last = ma(totals.size());
    monotone_ok = monotone_ok && last <= 0.5 * first;
    monotone += fmt(" stage %d %.3f -> %.3f;", stage, first, last);
  }

  Verdict v;
  v.require(bordered == 4 && spans >= 2 && curved >= 2, "suite composition (4 bordered, >= 2 spanning, >= 2 curved)");
  v.require(report.aggregate.f1 >= 0.99, "adjacency F1 >= 0.99");
  v.require(report.mean_teds_struct >= 0.99, "TEDS-Struct >= 0.99");
  v.require(run.train_seconds <= 4 * 3600.0, "training within 4 h on CPU");
  v.summary = fmt("overfit on 8 tables: adjacency F1 %.4f, TEDS-Struct %.4f (need >= 0.99 each)", report.aggregate.f1,
                  report.mean_teds_struct);
  v.info.push_back(fmt("suite: %d bordered, %d with spans, %d curved", bordered, spans, curved));
  v.info.push_back(run_note(run));
  v.info.push_back(fmt("separator center error %.2f px over %d/%d gt separators (target < 2 px): %s", center_px, paired,
                       gt_seps, center_px < 2.0 ? "ok" : "not met"));
  v.info.push_back(fmt("3x3 bordered table -> 9 cells with gt grid coordinates: %s", grid3x3 ? "ok" : "not met"));
  v.info.push_back(fmt("stage loss halving (moving average):%s %s", monotone.c_str(), monotone_ok ? "ok" : "not met"));
  return v;
}

// ---------------------------------------------------------------- A5, A6

constexpr int kTrainTables = 2000;
constexpr int kTestTables = 200;

fs::path generalization_data(const fs::path& work) {
  const fs::path data = work / "a5_data";
  ensure_dataset(data, fmt("random tables v1: %d train + %d test, seed base 500000", kTrainTables, kTestTables),
                 [](DatasetWriter& w) {
                   for (int i = 0; i < kTrainTables + kTestTables; ++i) {
                     const auto seed = 500000 + static_cast<std::uint64_t>(i);
                     w.add(generate_table(random_spec(seed, 0.3, 0.5, {192, 256})), i < kTrainTables ? "train" : "test");
                   }
                 });
  return data;
}

std::string desk_config(const fs::path& data) {
  return "data.dir = " + quoted(data.string()) + "\n"
         "train.split = \"train\"\n"
         "train.batch_size = 8\n"
         "train.rescale_shorter = [160, 192, 224]\n"
         "train.seed = 1\n"
         "infer.side = 256\n";
}

EvalReport evaluate_test(const TrainedRun& run, const fs::path& data, const fs::path& pred_dir) {
  auto recognizer = recognizer_for(run);
  const Dataset dataset(data);
  return nn::evaluate_model(recognizer, dataset, dataset.ids("test"), {}, pred_dir);
}

Verdict a5_generalization(const fs::path& work) {
  const auto data = generalization_data(work);
  const auto run = trained(work / "a5_run", Config::parse(desk_config(data) +
                                                         "train.stages = 3\n"
                                                         "train.stage_epochs = 6\n"
                                                         "train.poly_reset_per_stage = true\n"));
  const auto report = evaluate_test(run, data, work / "a5_pred");
  Verdict v;
  v.require(report.aggregate.f1 >= 0.90, "adjacency F1 >= 0.90");
  v.require(report.mean_teds_struct >= 0.92, "TEDS-Struct >= 0.92");
  v.summary = fmt("%d train / %d held-out tables: adjacency F1 %.4f (need >= 0.90), TEDS-Struct %.4f (need >= 0.92)",
                  kTrainTables, kTestTables, report.aggregate.f1, report.mean_teds_struct);
  v.info.push_back(fmt("precision %.4f, recall %.4f", report.aggregate.precision, report.aggregate.recall));
  v.info.push_back(run_note(run));
  return v;
}

Verdict a6_matching_ablation(const fs::path& work) {
  const auto data = generalization_data(work);
  const std::string split_only = desk_config(data) + "train.stages = 2\ninfer.merge = false\n";
  const auto prior = trained(work / "a6_prior_half",
                             Config::parse(split_only + "train.stage_epochs = 2\ntrain.match = \"prior\"\n"));
  const auto plain = trained(work / "a6_unconstrained_full",
                             Config::parse(split_only + "train.stage_epochs = 4\ntrain.match = \"unconstrained\"\n"));
  const auto rp = evaluate_test(prior, data, work / "a6_prior_pred");
  const auto ru = evaluate_test(plain, data, work / "a6_unconstrained_pred");
  Verdict v;
  v.require(rp.aggregate.f1 >= ru.aggregate.f1, "prior-enhanced at half the epochs >= unconstrained at full epochs");
  v.summary = fmt("split module only: prior-enhanced matching, 2 epochs/stage F1 %.4f vs unconstrained, 4 epochs/stage F1 %.4f",
                  rp.aggregate.f1, ru.aggregate.f1);
  v.info.push_back("prior-enhanced: " + run_note(prior));
  v.info.push_back("unconstrained: " + run_note(plain));
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria A1..A8"};
  std::string only = "A1,A2,A3,A4,A5,A6,A7,A8";
  std::string work = "acceptance_work";
  app.add_option("--only", only, "Comma-separated criteria to run");
  app.add_option("--work", work, "Directory for datasets, checkpoints and predictions of the training criteria");
  CLI11_PARSE(app, argc, argv);
  work = fs::absolute(work).lexically_normal().string();

  const std::map<std::string, std::function<Verdict()>> criteria{
      {"A1", a1_matching},
      {"A2", a2_losses},
      {"A3", a3_grid},
      {"A4", [&] { return a4_overfit(work); }},
      {"A5", [&] { return a5_generalization(work); }},
      {"A6", [&] { return a6_matching_ablation(work); }},
      {"A7", a7_metrics},
      {"A8", a8_peaks},
  };

  int failures = 0;
  std::stringstream list(only);
  std::string id;
  while (std::getline(list, id, ',')) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::fprintf(stderr, "unknown criterion '%s'\n", id.c_str());
      return 1;
    }
    Verdict v;
    try {
      v = it->second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.summary = std::string("error: ") + e.what();
    }
    failures += !v.pass;
    print(id, v);
  }
  return failures ? 1 : 0;
}
