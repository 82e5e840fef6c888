#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gms3dqa/image.hpp"
#include "gms3dqa/projector.hpp"
#include "gms3dqa/rng.hpp"

namespace gms {

struct GridSpec {
  int grid = 7;        // L: cells per side
  int patch_px = 32;   // mini-patch side in pixels
  int num_views = 6;   // projections used, n
  std::uint64_t seed = 0;
  double blank_threshold = 0.05;  // coverage below this marks a cell blank

  int qmm_side() const { return grid * patch_px; }
  int slots() const { return grid * grid; }
  /// Per-view quota floor(L^2 / n).
  int quota() const { return slots() / num_views; }
  /// Slots left after every view took its quota; drawn from view n.
  int remainder() const { return slots() - num_views * quota(); }

  void validate() const;
  /// Also checks L * patch_px against the projection resolution.
  void validate_against(int resolution) const;
};

struct PixelRect {
  int row0, row1;  // [row0, row1)
  int col0, col1;  // [col0, col1)

  int height() const { return row1 - row0; }
  int width() const { return col1 - col0; }
};

struct Cell {
  int view = 1;  // 1-based
  int row = 0;
  int col = 0;
  PixelRect rect{};
  double coverage = 0.0;
};

/// Cell boundary floor(i * extent / L).
int grid_boundary(int i, int extent, int grid);

/// L^2 cells of one view in row-major order.
std::vector<Cell> build_view_grid(const Mask& mask, int view, int grid);

/// For each of the six views, the L^2 cells with coverage.
std::array<std::vector<Cell>, kNumViews> build_grid(const ProjectionSet& ps, const GridSpec& gs);

struct MiniPatch {
  RgbImage pixels;
  int offset_row = 0;  // relative to the cell rect
  int offset_col = 0;
};

/// Copies a uniformly placed patch_px x patch_px window of the cell.
MiniPatch sample_minipatch(const Cell& cell, const RgbImage& image, int patch_px, Rng& rng);

struct SlotSource {
  bool blank_fill = false;
  /// The cell was drawn again after every non-blank cell had been used.
  bool reused = false;
  int view = 0;
  int row = 0;
  int col = 0;
  int offset_row = 0;  // window origin relative to the cell rect
  int offset_col = 0;
  double coverage = 0.0;
};

struct Qmm {
  RgbImage image;
  int grid = 0;
  int patch_px = 0;
  /// Slot s sits at block (s / grid, s % grid).
  std::vector<SlotSource> provenance;
};

/// MP-GMS: per-view quotas of non-blank cells, remainder from view n,
/// shortfalls redistributed round-robin, seeded slot permutation.
Qmm assemble_qmm(const ProjectionSet& ps, const GridSpec& gs);

/// One map per view, all L^2 slots from that view alone. A view with no
/// non-blank cell yields a background map whose slots are all BlankFill.
std::array<Qmm, kNumViews> assemble_per_view_maps(const ProjectionSet& ps, const GridSpec& gs);

}  // namespace gms
