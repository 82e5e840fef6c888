#include "gms3dqa/sampler.hpp"

#include <string>

#include "gms3dqa/error.hpp"
#include "gms3dqa/simd/kernels.hpp"

namespace gms {

void GridSpec::validate() const {
  if (grid < 3) throw Error(Errc::InvalidConfig, "grid L must be >= 3");
  if (patch_px < 1) throw Error(Errc::InvalidConfig, "patch_px must be >= 1");
  if (num_views < 1 || num_views > kNumViews) throw Error(Errc::InvalidConfig, "num_views must be in 1..6");
  if (!(blank_threshold >= 0.0 && blank_threshold < 1.0)) {
    throw Error(Errc::InvalidConfig, "blank_threshold must be in [0, 1)");
  }
}

void GridSpec::validate_against(int resolution) const {
  validate();
  if (qmm_side() > resolution) {
    throw Error(Errc::ConfigMismatch, "grid " + std::to_string(grid) + " x patch " + std::to_string(patch_px) + " = " +
                                          std::to_string(qmm_side()) + " exceeds projection resolution " +
                                          std::to_string(resolution));
  }
}

int grid_boundary(int i, int extent, int grid) {
  return static_cast<int>(static_cast<long long>(i) * extent / grid);
}

std::vector<Cell> build_view_grid(const Mask& mask, int view, int grid) {
  const auto& k = simd::kernels();
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(grid) * grid);
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      Cell c;
      c.view = view;
      c.row = i;
      c.col = j;
      c.rect = {grid_boundary(i, mask.height, grid), grid_boundary(i + 1, mask.height, grid),
                grid_boundary(j, mask.width, grid), grid_boundary(j + 1, mask.width, grid)};
      std::size_t covered = 0;
      for (int r = c.rect.row0; r < c.rect.row1; ++r) {
        covered += k.count_nonzero(mask.data.data() + static_cast<std::size_t>(r) * mask.width + c.rect.col0,
                                   static_cast<std::size_t>(c.rect.width()));
      }
      const double area = static_cast<double>(c.rect.width()) * c.rect.height();
      c.coverage = area > 0 ? static_cast<double>(covered) / area : 0.0;
      cells.push_back(c);
    }
  }
  return cells;
}

std::array<std::vector<Cell>, kNumViews> build_grid(const ProjectionSet& ps, const GridSpec& gs) {
  gs.validate_against(ps.resolution());
  std::array<std::vector<Cell>, kNumViews> grids;
  for (int k = 1; k <= kNumViews; ++k) grids[k - 1] = build_view_grid(ps.masks[k - 1], k, gs.grid);
  return grids;
}

MiniPatch sample_minipatch(const Cell& cell, const RgbImage& image, int patch_px, Rng& rng) {
  if (cell.rect.height() < patch_px || cell.rect.width() < patch_px) {
    throw Error(Errc::CellTooSmall, "cell " + std::to_string(cell.rect.width()) + "x" +
                                        std::to_string(cell.rect.height()) + " smaller than patch " +
                                        std::to_string(patch_px));
  }
  MiniPatch mp;
  mp.offset_row = static_cast<int>(rng.between(0, cell.rect.height() - patch_px));
  mp.offset_col = static_cast<int>(rng.between(0, cell.rect.width() - patch_px));
  mp.pixels = RgbImage(patch_px, patch_px);
  copy_block(image, cell.rect.row0 + mp.offset_row, cell.rect.col0 + mp.offset_col, patch_px, patch_px, mp.pixels, 0,
             0);
  return mp;
}

namespace {

struct ViewSource {
  int view;                  // 1-based
  const std::vector<Cell>* cells;
  const RgbImage* image;
  std::vector<int> order;    // shuffled non-blank cell indices
  std::size_t next = 0;

  std::size_t available() const { return order.size() - next; }
};

struct Pick {
  std::size_t source;  // index into the ViewSource list
  int cell;
  bool reused;
};

/// Core of both the spliced QMM and the per-view maps. `sources` are the
/// participating views in order; the last one supplies the remainder.
Qmm splice(std::vector<ViewSource>& sources, const GridSpec& gs, int quota, int remainder, Rgb background,
           std::uint64_t seed) {
  const std::size_t n = sources.size();
  for (auto& s : sources) {
    for (int c = 0; c < static_cast<int>(s.cells->size()); ++c) {
      if ((*s.cells)[c].coverage >= gs.blank_threshold && (*s.cells)[c].coverage > 0.0) s.order.push_back(c);
    }
    Rng rng(derive_seed(seed, "view/" + std::to_string(s.view)));
    rng.shuffle(std::span<int>(s.order));
  }

  std::vector<Pick> picks;
  std::vector<int> deficit(n, 0);
  auto take = [&](std::size_t v, int count) {
    int got = 0;
    while (got < count && sources[v].available() > 0) {
      picks.push_back({v, sources[v].order[sources[v].next++], false});
      ++got;
    }
    return got;
  };
  for (std::size_t v = 0; v < n; ++v) deficit[v] = quota - take(v, quota);
  deficit[n - 1] += remainder - take(n - 1, remainder);

  // Shortfall of view v is drawn round-robin from v+1, v+2, ... (wrapping).
  int unfilled = 0;
  for (std::size_t v = 0; v < n; ++v) {
    std::size_t cursor = (v + 1) % n;
    for (int unit = 0; unit < deficit[v]; ++unit) {
      bool found = false;
      for (std::size_t step = 0; step < n; ++step) {
        std::size_t cand = (cursor + step) % n;
        if (sources[cand].available() > 0) {
          take(cand, 1);
          cursor = (cand + 1) % n;
          found = true;
          break;
        }
      }
      if (!found) ++unfilled;
    }
  }

  const int slots = gs.slots();
  Qmm qmm;
  qmm.grid = gs.grid;
  qmm.patch_px = gs.patch_px;
  qmm.image = RgbImage(gs.qmm_side(), gs.qmm_side(), background);
  qmm.provenance.assign(static_cast<std::size_t>(slots), SlotSource{});

  if (unfilled > 0) {
    // Every non-blank cell is in use; draw again from them with replacement.
    std::vector<std::pair<std::size_t, int>> pool;
    for (std::size_t v = 0; v < n; ++v) {
      for (int c : sources[v].order) pool.emplace_back(v, c);
    }
    if (pool.empty()) {
      for (auto& s : qmm.provenance) s.blank_fill = true;
      return qmm;
    }
    Rng fill(derive_seed(seed, "fill"));
    for (int u = 0; u < unfilled; ++u) {
      auto [v, c] = pool[fill.below(pool.size())];
      picks.push_back({v, c, true});
    }
  }

  std::vector<Rng> offset_rngs;
  offset_rngs.reserve(n);
  for (const auto& s : sources) offset_rngs.emplace_back(derive_seed(seed, "offset/" + std::to_string(s.view)));

  std::vector<int> layout(static_cast<std::size_t>(slots));
  for (int s = 0; s < slots; ++s) layout[s] = s;
  Rng layout_rng(derive_seed(seed, "layout"));
  layout_rng.shuffle(std::span<int>(layout));

  for (std::size_t i = 0; i < picks.size(); ++i) {
    const auto& pick = picks[i];
    const ViewSource& src = sources[pick.source];
    const Cell& cell = (*src.cells)[pick.cell];
    MiniPatch mp = sample_minipatch(cell, *src.image, gs.patch_px, offset_rngs[pick.source]);
    const int slot = layout[i];
    copy_block(mp.pixels, 0, 0, gs.patch_px, gs.patch_px, qmm.image, (slot / gs.grid) * gs.patch_px,
               (slot % gs.grid) * gs.patch_px);
    auto& prov = qmm.provenance[slot];
    prov.reused = pick.reused;
    prov.view = src.view;
    prov.row = cell.row;
    prov.col = cell.col;
    prov.offset_row = mp.offset_row;
    prov.offset_col = mp.offset_col;
    prov.coverage = cell.coverage;
  }
  return qmm;
}

}  // namespace

Qmm assemble_qmm(const ProjectionSet& ps, const GridSpec& gs) {
  const auto grids = build_grid(ps, gs);
  std::vector<ViewSource> sources;
  bool any = false;
  for (int k = 1; k <= gs.num_views; ++k) {
    sources.push_back({k, &grids[k - 1], &ps.images[k - 1], {}, 0});
    for (const auto& c : grids[k - 1]) any = any || (c.coverage >= gs.blank_threshold && c.coverage > 0.0);
  }
  if (!any) throw Error(Errc::AllViewsBlank, "no non-blank cell in any of the " + std::to_string(gs.num_views) + " views");
  return splice(sources, gs, gs.quota(), gs.remainder(), ps.background, gs.seed);
}

std::array<Qmm, kNumViews> assemble_per_view_maps(const ProjectionSet& ps, const GridSpec& gs) {
  const auto grids = build_grid(ps, gs);
  std::array<Qmm, kNumViews> maps;
  for (int k = 1; k <= kNumViews; ++k) {
    std::vector<ViewSource> sources{{k, &grids[k - 1], &ps.images[k - 1], {}, 0}};
    maps[k - 1] = splice(sources, gs, gs.slots(), 0, ps.background, derive_seed(gs.seed, "map/" + std::to_string(k)));
  }
  return maps;
}

}  // namespace gms
