#include "slfv/grid.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace slfv {

namespace {

constexpr std::uint64_t kAllOnes = ~0ULL;

// Mask selecting bits [lo & 63, hi & 63] of one word.
std::uint64_t span_mask(std::int64_t lo, std::int64_t hi) {
  const std::uint64_t left = kAllOnes << (lo & 63);
  const std::uint64_t right = kAllOnes >> (63 - (hi & 63));
  return left & right;
}

}  // namespace

OccupancyGrid::OccupancyGrid(const DomainGeometry& geom)
    : OccupancyGrid(geom, true) {}

OccupancyGrid OccupancyGrid::unoccupied(const DomainGeometry& geom) {
  return OccupancyGrid(geom, false);
}

OccupancyGrid::OccupancyGrid(const DomainGeometry& geom, bool fill_left)
    : geom_(geom) {
  geom_.validate();
  cols_ = geom_.cols();
  rows_ = geom_.rows();
  words_per_row_ = (cols_ + 63) / 64;
  bits_.assign(static_cast<std::size_t>(rows_ * words_per_row_), 0);
  frontier_.assign(static_cast<std::size_t>(rows_), -1);
  if (fill_left) {
    const std::int64_t border = geom_.border_col();
    for (std::int64_t j = 0; j < rows_; ++j) {
      row_fill(j, 0, border);
      frontier_[static_cast<std::size_t>(j)] = border;
    }
  }
}

bool OccupancyGrid::occupied(std::int64_t i, std::int64_t j) const {
  if (i < 0 || i >= cols_ || j < 0 || j >= rows_)
    throw std::out_of_range("lattice index out of range");
  const auto word = static_cast<std::size_t>(j * words_per_row_ + (i >> 6));
  return (bits_[word] >> (i & 63)) & 1ULL;
}

std::uint64_t OccupancyGrid::occupied_count() const {
  std::uint64_t n = 0;
  for (const std::uint64_t w : bits_) n += static_cast<std::uint64_t>(std::popcount(w));
  return n;
}

void OccupancyGrid::set_cell(std::int64_t i, std::int64_t j) {
  if (i < 0 || i >= cols_ || j < 0 || j >= rows_)
    throw std::out_of_range("lattice index out of range");
  bits_[static_cast<std::size_t>(j * words_per_row_ + (i >> 6))] |= 1ULL << (i & 63);
  advance_frontier(j);
}

bool OccupancyGrid::rasterize(const ReproductionEvent& ev, FillRect& rect) const {
  // Event centers are lattice sites by construction; recover their indices.
  const auto ic = static_cast<std::int64_t>(std::llround((ev.cx + geom_.m) / geom_.delta));
  const auto jc = static_cast<std::int64_t>(
      std::llround((ev.cy + geom_.m + geom_.H / 2) / geom_.delta));
  // Whole columns within the closed half-extent; the 1e-9 slack keeps sites
  // whose distance equals the half-extent exactly up to roundoff.
  const auto half_w = static_cast<std::int64_t>(
      std::floor(ev.w / (2 * geom_.delta) + 1e-9));
  const auto half_h = static_cast<std::int64_t>(
      std::floor(ev.h / (2 * geom_.delta) + 1e-9));
  rect.i_lo = std::max<std::int64_t>(ic - half_w, 0);
  rect.i_hi = std::min<std::int64_t>(ic + half_w, cols_ - 1);
  rect.j_lo = std::max<std::int64_t>(jc - half_h, 0);
  rect.j_hi = std::min<std::int64_t>(jc + half_h, rows_ - 1);
  return rect.i_lo <= rect.i_hi && rect.j_lo <= rect.j_hi;
}

bool OccupancyGrid::row_any(std::int64_t j, std::int64_t i_lo, std::int64_t i_hi) const {
  const std::size_t base = static_cast<std::size_t>(j * words_per_row_);
  const std::int64_t w0 = i_lo >> 6, w1 = i_hi >> 6;
  if (w0 == w1) return bits_[base + static_cast<std::size_t>(w0)] & span_mask(i_lo, i_hi);
  if (bits_[base + static_cast<std::size_t>(w0)] & span_mask(i_lo, i_lo | 63)) return true;
  for (std::int64_t w = w0 + 1; w < w1; ++w)
    if (bits_[base + static_cast<std::size_t>(w)]) return true;
  return bits_[base + static_cast<std::size_t>(w1)] & span_mask(i_hi & ~63, i_hi);
}

void OccupancyGrid::row_fill(std::int64_t j, std::int64_t i_lo, std::int64_t i_hi) {
  const std::size_t base = static_cast<std::size_t>(j * words_per_row_);
  const std::int64_t w0 = i_lo >> 6, w1 = i_hi >> 6;
  if (w0 == w1) {
    bits_[base + static_cast<std::size_t>(w0)] |= span_mask(i_lo, i_hi);
    return;
  }
  bits_[base + static_cast<std::size_t>(w0)] |= span_mask(i_lo, i_lo | 63);
  for (std::int64_t w = w0 + 1; w < w1; ++w) bits_[base + static_cast<std::size_t>(w)] = kAllOnes;
  bits_[base + static_cast<std::size_t>(w1)] |= span_mask(i_hi & ~63, i_hi);
}

void OccupancyGrid::advance_frontier(std::int64_t j) {
  std::int64_t f = frontier_[static_cast<std::size_t>(j)];
  const std::size_t base = static_cast<std::size_t>(j * words_per_row_);
  while (f + 1 < cols_) {
    const std::int64_t i = f + 1;
    if (!((bits_[base + static_cast<std::size_t>(i >> 6)] >> (i & 63)) & 1ULL)) break;
    ++f;
  }
  frontier_[static_cast<std::size_t>(j)] = f;
}

bool OccupancyGrid::apply_event(const ReproductionEvent& ev, FillRect* rect_out) {
  if (ev.t < t_now_) throw std::invalid_argument("events must arrive in time order");
  t_now_ = ev.t;
  FillRect rect;
  if (!rasterize(ev, rect)) return false;  // entirely outside the lattice

  // Pass 1 over rows, frontier only: detect a guaranteed intersection and
  // whether the whole rectangle sits inside saturated prefixes.
  bool saturated = true;
  bool hit = false;
  for (std::int64_t j = rect.j_lo; j <= rect.j_hi; ++j) {
    const std::int64_t f = frontier_[static_cast<std::size_t>(j)];
    if (f < rect.i_hi) saturated = false;
    if (f >= rect.i_lo) hit = true;
    if (hit && !saturated) break;
  }
  if (saturated) {
    // Reproduction inside the fully occupied bulk: state unchanged.
    if (rect_out) *rect_out = rect;
    return true;
  }
  if (!hit) {
    for (std::int64_t j = rect.j_lo; j <= rect.j_hi && !hit; ++j)
      hit = row_any(j, rect.i_lo, rect.i_hi);
    if (!hit) return false;
  }

  for (std::int64_t j = rect.j_lo; j <= rect.j_hi; ++j) {
    row_fill(j, rect.i_lo, rect.i_hi);
    auto& f = frontier_[static_cast<std::size_t>(j)];
    if (rect.i_lo <= f + 1 && rect.i_hi > f) f = rect.i_hi;
  }
  if (rect.i_hi == cols_ - 1) barrier_ = true;
  if (rect_out) *rect_out = rect;
  return true;
}

SimulationResult run_until_barrier(OccupancyGrid& grid, EventStream& stream,
                                   const std::vector<Recorder*>& recorders,
                                   std::uint64_t max_events) {
  SimulationResult res;
  while (!grid.barrier_reached()) {
    if (res.events_applied + res.events_ignored >= max_events)
      throw EventCapExceeded(max_events, grid.now(), res.events_applied,
                             res.events_ignored);
    const ReproductionEvent ev = stream.next();
    for (Recorder* r : recorders) r->before_event(grid, ev.t);
    FillRect rect;
    if (grid.apply_event(ev, &rect)) {
      ++res.events_applied;
      for (Recorder* r : recorders) r->after_fill(grid, rect, ev.t);
    } else {
      ++res.events_ignored;
    }
  }
  res.barrier_time = grid.now();
  return res;
}

void write_pgm(const OccupancyGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const std::int64_t nc = grid.geom().cols(), nr = grid.geom().rows();
  out << "P5\n" << nc << " " << nr << "\n255\n";
  std::vector<unsigned char> line(static_cast<std::size_t>(nc));
  for (std::int64_t j = nr - 1; j >= 0; --j) {  // top row of the image = largest y
    for (std::int64_t i = 0; i < nc; ++i)
      line[static_cast<std::size_t>(i)] = grid.occupied(i, j) ? 255 : 0;
    out.write(reinterpret_cast<const char*>(line.data()),
              static_cast<std::streamsize>(line.size()));
  }
}

}  // namespace slfv
