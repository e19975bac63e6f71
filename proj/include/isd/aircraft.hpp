#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "isd/signal_core.hpp"

namespace isd::aircraft {

/// Inter-frame motion of the target within the image: probability of moving
/// by (drow, dcol). Row 0 is the top of the image, so "up" is drow = -1.
struct PatchEntry {
  int drow = 0;
  int dcol = 0;
  double probability = 0.0;
};

/// (N+1)-state chain over the N = width * height pixels plus the
/// not-visually-apparent (NVA) state, stored last. Pixel i = row * width + col.
struct GridModel {
  std::size_t width = 16;
  std::size_t height = 16;
  std::vector<PatchEntry> patch{{0, 0, 0.5}, {-1, 0, 0.5}};
  /// Probability of leaving NVA per frame, spread equally over the pixels.
  double nva_to_image_total = 0.1;

  std::size_t num_pixels() const noexcept { return width * height; }
  std::size_t num_states() const noexcept { return num_pixels() + 1; }
  std::size_t nva() const noexcept { return num_pixels(); }

  /// Throws InvalidPatch for negative or non-unit patch mass, InvalidArgument
  /// for an empty grid or nva_to_image_total outside [0, 1].
  void validate() const;
};

/// Sparse column-stochastic transition matrix, column j holding
/// P(Z_{k+1} = row | Z_k = j). Patch moves that would leave the image go to
/// NVA; NVA sends nva_to_image_total / N to every pixel and keeps the rest.
class GridTransition {
 public:
  struct Entry {
    std::uint32_t row;
    double probability;
  };

  explicit GridTransition(const GridModel& model);

  std::size_t size() const noexcept { return offsets_.size() - 1; }
  std::span<const Entry> column(std::size_t j) const;
  double column_sum(std::size_t j) const;

  /// A z.
  std::vector<double> predict(std::span<const double> z) const;
  void predict_into(std::span<const double> z, std::span<double> out) const;

  std::vector<std::vector<double>> to_dense() const;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<Entry> entries_;
};

GridTransition build_grid_transition(const GridModel& model);

/// One greyscale frame; intensities are finite and nonnegative.
struct ImageObservation {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;

  void validate() const;
  double at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

/// Diagonal of the unnormalised output matrix: y^i + 1 for pixel i and 1 for
/// NVA, i.e. the pixel likelihood ratio approximated by y + 1.
std::vector<double> unnormalized_output(const ImageObservation& image);

/// Belief over the N + 1 states and zeta = 1 - P(NVA).
struct AircraftStatistic {
  Belief belief;
  double zeta = 0.0;
};

/// HMM filter Z_k = N_k B(y_k) A Z_{k-1} over the grid chain.
class AircraftFilter {
 public:
  AircraftFilter(const GridModel& model, const Belief& initial);

  /// Assimilates one diagonal of output weights; throws DegenerateLikelihood
  /// when the weighted prediction has no mass.
  void step(std::span<const double> output_weights);
  void step(const ImageObservation& image) { step(unnormalized_output(image)); }

  std::size_t k() const noexcept { return k_; }
  std::span<const double> belief() const noexcept { return z_; }
  double zeta() const noexcept;
  double log_normalizer() const noexcept { return log_normalizer_; }
  AircraftStatistic statistic() const;
  const GridTransition& transition() const noexcept { return A_; }

 private:
  GridTransition A_;
  std::vector<double> z_;
  std::vector<double> scratch_;
  double log_normalizer_ = 0.0;
  std::size_t k_ = 0;
};

/// Two-state aggregate (NVA mass, pixel mass), ordered as (e1, e2).
Belief aggregate_belief(std::span<const double> z);

struct EmergenceResult {
  /// zeta_k for k = 0..K (k = 0 is the initial belief).
  std::vector<double> zeta;
  /// log <1, B(y_k) A Z_{k-1}> for k = 1..K.
  std::vector<double> log_normalizer;
  /// First k with zeta_k >= h_c.
  std::optional<std::size_t> alarm_frame;
};

/// Runs the grid filter over y_1..y_K (images[k - 1] = y_k) and thresholds
/// zeta. `initial` defaults to the NVA point mass.
EmergenceResult detect_emergence(std::span<const ImageObservation> images, const GridModel& model,
                                 const std::optional<Belief>& initial, double h_c);

/// Target intensity p and background intensity q. Background pixels are
/// exponential with the given mean; the occupied pixel adds target_offset
/// to an independent background draw.
struct IntensityModel {
  double background_mean = 1.0;
  double target_offset = 4.0;

  void validate() const;
};

enum class Motion {
  chain,   ///< after emergence the track follows the grid chain
  fixed,   ///< after emergence the target stays on its start pixel
};

/// Target is NVA before emergence_frame and appears at (start_row, start_col)
/// at that frame; no emergence when the frame is empty.
struct EmergenceSchedule {
  std::optional<std::size_t> emergence_frame;
  std::size_t start_row = 0;
  std::size_t start_col = 0;
  Motion motion = Motion::chain;
};

struct SyntheticSequence {
  std::vector<ImageObservation> images;  ///< y_1..y_K
  std::vector<std::size_t> track;        ///< Z_0..Z_K, nva() for NVA
};

/// Throws ScheduleOutOfBounds when the start pixel lies outside the grid or
/// emergence is scheduled outside frames 1..K.
SyntheticSequence generate_synthetic_sequence(const GridModel& model, const IntensityModel& intensity,
                                              const EmergenceSchedule& schedule, std::size_t frames,
                                              std::uint64_t seed);

/// Raster stream: uint32 width, height, frame count (little-endian), then
/// width * height * frames float32 little-endian pixels, row-major per frame.
void write_raster(std::ostream& out, std::span<const ImageObservation> images);
std::vector<ImageObservation> read_raster(std::istream& in);

/// CSV: frame,visible,row,col
void write_track_csv(std::ostream& out, const GridModel& model, std::span<const std::size_t> track);

/// CSV: k,zeta,nva_mass,log_normalizer,alarm
void write_zeta_csv(std::ostream& out, const EmergenceResult& result);

}  // namespace isd::aircraft
