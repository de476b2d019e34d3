#pragma once
// Boolean occupancy lattice for the infinity-parent SLFV growth process and
// the event loop driving it to the right edge of the window.
//
// State starts as the left half-plane (x <= 0). A reproduction event whose
// rectangle contains at least one occupied site fills the whole rectangle;
// otherwise it leaves the state untouched. Occupancy is monotone, which the
// implementation exploits: each row keeps the end of its fully-occupied
// prefix so events landing deep in the bulk are recognized without scanning.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "slfv/events.hpp"

namespace slfv {

// Inclusive lattice index bounds of a filled rectangle (already clipped).
struct FillRect {
  std::int64_t i_lo = 0, i_hi = 0;
  std::int64_t j_lo = 0, j_hi = 0;
};

class OccupancyGrid {
 public:
  // Standard initial condition: every site with x <= 0 occupied.
  explicit OccupancyGrid(const DomainGeometry& geom);

  // Fully empty lattice; intended for tests that build custom states with
  // set_cell before replaying events.
  static OccupancyGrid unoccupied(const DomainGeometry& geom);

  const DomainGeometry& geom() const { return geom_; }
  double now() const { return t_now_; }
  bool barrier_reached() const { return barrier_; }

  bool occupied(std::int64_t i, std::int64_t j) const;
  std::uint64_t occupied_count() const;

  // Marks one site occupied (test support; keeps internal invariants).
  void set_cell(std::int64_t i, std::int64_t j);

  // Rectangle of lattice indices covered by the event, clipped to the
  // lattice. Closed intervals; half-extents are resolved to whole columns
  // with a delta*1e-9 guard so exact multiples of delta never drop a site.
  // Returns false if the clipped rectangle is empty.
  bool rasterize(const ReproductionEvent& ev, FillRect& rect) const;

  // Processes one event: advances the clock, fills the rectangle if it
  // intersects the occupied set. Returns true iff reproduction happened
  // (even when every site was already occupied). rect_out, when non-null,
  // receives the clipped rectangle for recorder updates.
  bool apply_event(const ReproductionEvent& ev, FillRect* rect_out = nullptr);

 private:
  OccupancyGrid(const DomainGeometry& geom, bool fill_left);

  bool row_any(std::int64_t j, std::int64_t i_lo, std::int64_t i_hi) const;
  void row_fill(std::int64_t j, std::int64_t i_lo, std::int64_t i_hi);
  void advance_frontier(std::int64_t j);

  DomainGeometry geom_;
  std::int64_t cols_ = 0, rows_ = 0, words_per_row_ = 0;
  std::vector<std::uint64_t> bits_;
  // frontier_[j]: all sites 0..frontier_[j] of row j are occupied (a valid
  // lower bound on the true prefix end; -1 when the row start is empty).
  std::vector<std::int64_t> frontier_;
  double t_now_ = 0.0;
  bool barrier_ = false;
};

// Thrown when a run exceeds its event budget (runaway-run guard).
struct EventCapExceeded : std::runtime_error {
  EventCapExceeded(std::uint64_t cap_, double t_, std::uint64_t applied_,
                   std::uint64_t ignored_)
      : std::runtime_error("event cap of " + std::to_string(cap_) +
                           " exceeded at t=" + std::to_string(t_)),
        cap(cap_),
        t(t_),
        applied(applied_),
        ignored(ignored_) {}
  std::uint64_t cap;
  double t;
  std::uint64_t applied;   // events consumed so far that reproduced
  std::uint64_t ignored;   // events consumed without effect
};

// Observer hooks for the event loop. before_event fires while the grid still
// holds the state prior to the event at t_next (sampling window); after_fill
// fires only for events that reproduced.
class Recorder {
 public:
  virtual ~Recorder() = default;
  virtual void before_event(const OccupancyGrid&, double /*t_next*/) {}
  virtual void after_fill(const OccupancyGrid&, const FillRect&, double /*t*/) {}
};

struct SimulationResult {
  double barrier_time = 0.0;
  std::uint64_t events_applied = 0;  // events that reproduced
  std::uint64_t events_ignored = 0;  // no intersection with the occupied set
};

// Consumes events in time order until some site of the rightmost column is
// occupied. Throws EventCapExceeded once more than max_events were consumed.
SimulationResult run_until_barrier(OccupancyGrid& grid, EventStream& stream,
                                   const std::vector<Recorder*>& recorders,
                                   std::uint64_t max_events);

// Plain portable greymap dump of the occupancy (flag-gated diagnostics).
void write_pgm(const OccupancyGrid& grid, const std::string& path);

}  // namespace slfv
