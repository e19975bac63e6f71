#include "isd/aircraft.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <string>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "isd/csv.hpp"
#include "isd/errors.hpp"

namespace isd::aircraft {

namespace {

constexpr double kPatchMassTolerance = 1e-12;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw InvalidArgument("raster stream is truncated");
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

std::size_t sample_column(const GridTransition& A, std::size_t from, Rng& rng) {
  boost::random::uniform_01<double> u;
  const double x = u(rng);
  double cum = 0.0;
  const auto col = A.column(from);
  for (const auto& e : col) {
    cum += e.probability;
    if (x < cum) return e.row;
  }
  return col.back().row;
}

}  // namespace

void GridModel::validate() const {
  if (width == 0 || height == 0) throw InvalidArgument("grid must have at least one pixel");
  if (num_pixels() >= std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("grid too large");
  if (!(nva_to_image_total >= 0.0 && nva_to_image_total <= 1.0)) {
    throw InvalidArgument("nva_to_image_total must lie in [0, 1]");
  }
  if (patch.empty()) throw InvalidPatch("transition patch is empty");
  double mass = 0.0;
  for (const auto& e : patch) {
    if (!(e.probability >= 0.0) || !std::isfinite(e.probability)) {
      throw InvalidPatch("patch probabilities must be finite and nonnegative");
    }
    mass += e.probability;
  }
  if (std::abs(mass - 1.0) > kPatchMassTolerance) {
    throw InvalidPatch("patch mass is " + csv::number(mass) + ", not 1");
  }
}

GridTransition::GridTransition(const GridModel& model) {
  model.validate();
  const std::size_t n = model.num_pixels();
  const auto nva = static_cast<std::uint32_t>(model.nva());
  offsets_.reserve(n + 2);
  offsets_.push_back(0);
  for (std::size_t j = 0; j < n; ++j) {
    const auto row = static_cast<long long>(j / model.width);
    const auto col = static_cast<long long>(j % model.width);
    std::map<std::uint32_t, double> targets;
    for (const auto& e : model.patch) {
      if (e.probability == 0.0) continue;
      const long long r = row + e.drow;
      const long long c = col + e.dcol;
      const bool inside = r >= 0 && c >= 0 && r < static_cast<long long>(model.height) &&
                          c < static_cast<long long>(model.width);
      const auto target = inside ? static_cast<std::uint32_t>(r * static_cast<long long>(model.width) + c) : nva;
      targets[target] += e.probability;
    }
    for (const auto& [target, p] : targets) entries_.push_back({target, p});
    offsets_.push_back(entries_.size());
  }
  const double per_pixel = model.nva_to_image_total / static_cast<double>(n);
  if (per_pixel > 0.0) {
    for (std::size_t i = 0; i < n; ++i) entries_.push_back({static_cast<std::uint32_t>(i), per_pixel});
  }
  if (model.nva_to_image_total < 1.0) entries_.push_back({nva, 1.0 - model.nva_to_image_total});
  offsets_.push_back(entries_.size());
}

std::span<const GridTransition::Entry> GridTransition::column(std::size_t j) const {
  return std::span(entries_).subspan(offsets_[j], offsets_[j + 1] - offsets_[j]);
}

double GridTransition::column_sum(std::size_t j) const {
  double s = 0.0;
  for (const auto& e : column(j)) s += e.probability;
  return s;
}

void GridTransition::predict_into(std::span<const double> z, std::span<double> out) const {
  if (z.size() != size() || out.size() != size()) throw InvalidArgument("belief size does not match the grid");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < size(); ++j) {
    const double zj = z[j];
    if (zj == 0.0) continue;
    for (const auto& e : column(j)) out[e.row] += e.probability * zj;
  }
}

std::vector<double> GridTransition::predict(std::span<const double> z) const {
  std::vector<double> out(size());
  predict_into(z, out);
  return out;
}

std::vector<std::vector<double>> GridTransition::to_dense() const {
  std::vector<std::vector<double>> m(size(), std::vector<double>(size(), 0.0));
  for (std::size_t j = 0; j < size(); ++j) {
    for (const auto& e : column(j)) m[e.row][j] += e.probability;
  }
  return m;
}

GridTransition build_grid_transition(const GridModel& model) { return GridTransition(model); }

void ImageObservation::validate() const {
  if (width == 0 || height == 0) throw InvalidArgument("image must have at least one pixel");
  if (pixels.size() != width * height) throw InvalidArgument("pixel count does not match image shape");
  for (double v : pixels) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("pixel intensities must be finite and >= 0");
  }
}

std::vector<double> unnormalized_output(const ImageObservation& image) {
  image.validate();
  std::vector<double> b;
  b.reserve(image.pixels.size() + 1);
  for (double y : image.pixels) b.push_back(y + 1.0);
  b.push_back(1.0);
  return b;
}

AircraftFilter::AircraftFilter(const GridModel& model, const Belief& initial)
    : A_(model), z_(initial.values().begin(), initial.values().end()), scratch_(z_.size()) {
  if (initial.size() != A_.size()) throw InvalidArgument("initial belief size does not match the grid");
}

void AircraftFilter::step(std::span<const double> output_weights) {
  const std::size_t k = k_ + 1;
  if (output_weights.size() != z_.size()) throw InvalidArgument("output weights do not match the grid");
  A_.predict_into(z_, scratch_);
  double s = 0.0;
  for (std::size_t i = 0; i < z_.size(); ++i) {
    scratch_[i] *= output_weights[i];
    s += scratch_[i];
  }
  if (!(s > 0.0) || !std::isfinite(s)) throw DegenerateLikelihood(k);
  for (std::size_t i = 0; i < z_.size(); ++i) z_[i] = scratch_[i] / s;
  log_normalizer_ = std::log(s);
  k_ = k;
}

double AircraftFilter::zeta() const noexcept { return 1.0 - z_.back(); }

AircraftStatistic AircraftFilter::statistic() const { return {Belief(z_), zeta()}; }

Belief aggregate_belief(std::span<const double> z) {
  const double nva = z.back();
  return Belief({nva, 1.0 - nva});
}

EmergenceResult detect_emergence(std::span<const ImageObservation> images, const GridModel& model,
                                 const std::optional<Belief>& initial, double h_c) {
  if (!(h_c >= 0.0 && h_c <= 1.0)) throw InvalidArgument("h_c must lie in [0, 1]");
  model.validate();
  const Belief start = initial ? *initial : Belief::point_mass(model.num_states(), model.nva());
  AircraftFilter filter(model, start);
  EmergenceResult result;
  result.zeta.reserve(images.size() + 1);
  result.log_normalizer.reserve(images.size());
  auto record = [&] {
    result.zeta.push_back(filter.zeta());
    if (!result.alarm_frame && filter.zeta() >= h_c) result.alarm_frame = filter.k();
  };
  record();
  for (const auto& image : images) {
    if (image.width != model.width || image.height != model.height) {
      throw InvalidArgument("image shape does not match the grid");
    }
    filter.step(image);
    result.log_normalizer.push_back(filter.log_normalizer());
    record();
  }
  return result;
}

void IntensityModel::validate() const {
  if (!(background_mean >= 0.0) || !std::isfinite(background_mean)) {
    throw InvalidArgument("background mean must be finite and >= 0");
  }
  if (!(target_offset >= 0.0) || !std::isfinite(target_offset)) {
    throw InvalidArgument("target offset must be finite and >= 0");
  }
}

SyntheticSequence generate_synthetic_sequence(const GridModel& model, const IntensityModel& intensity,
                                              const EmergenceSchedule& schedule, std::size_t frames,
                                              std::uint64_t seed) {
  model.validate();
  intensity.validate();
  if (schedule.emergence_frame) {
    if (*schedule.emergence_frame < 1 || *schedule.emergence_frame > frames) {
      throw ScheduleOutOfBounds("emergence frame must lie in 1.." + std::to_string(frames));
    }
    if (schedule.start_row >= model.height || schedule.start_col >= model.width) {
      throw ScheduleOutOfBounds("start pixel lies outside the image");
    }
  }
  const GridTransition A(model);
  Rng track_rng = make_rng(seed, 0);
  Rng pixel_rng = make_rng(seed, 1);
  const std::size_t nva = model.nva();

  SyntheticSequence seq;
  seq.track.reserve(frames + 1);
  seq.track.push_back(nva);
  for (std::size_t k = 1; k <= frames; ++k) {
    std::size_t z = nva;
    if (schedule.emergence_frame && k >= *schedule.emergence_frame) {
      if (k == *schedule.emergence_frame || schedule.motion == Motion::fixed) {
        z = schedule.start_row * model.width + schedule.start_col;
      } else {
        z = sample_column(A, seq.track.back(), track_rng);
      }
    }
    seq.track.push_back(z);
  }

  auto draw_background = [&]() -> double {
    if (intensity.background_mean == 0.0) return 0.0;
    boost::random::exponential_distribution<double> q(1.0 / intensity.background_mean);
    return q(pixel_rng);
  };
  seq.images.reserve(frames);
  for (std::size_t k = 1; k <= frames; ++k) {
    ImageObservation img{model.width, model.height, std::vector<double>(model.num_pixels())};
    for (auto& v : img.pixels) v = draw_background();
    if (seq.track[k] != nva) img.pixels[seq.track[k]] += intensity.target_offset;
    seq.images.push_back(std::move(img));
  }
  return seq;
}

void write_raster(std::ostream& out, std::span<const ImageObservation> images) {
  const std::size_t w = images.empty() ? 0 : images.front().width;
  const std::size_t h = images.empty() ? 0 : images.front().height;
  put_u32(out, static_cast<std::uint32_t>(w));
  put_u32(out, static_cast<std::uint32_t>(h));
  put_u32(out, static_cast<std::uint32_t>(images.size()));
  for (const auto& img : images) {
    if (img.width != w || img.height != h) throw InvalidArgument("frames differ in shape");
    for (double v : img.pixels) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
}

std::vector<ImageObservation> read_raster(std::istream& in) {
  const std::uint32_t w = get_u32(in);
  const std::uint32_t h = get_u32(in);
  const std::uint32_t n = get_u32(in);
  if (n > 0 && (w == 0 || h == 0)) throw InvalidArgument("raster header has an empty frame shape");
  std::vector<ImageObservation> images;
  images.reserve(n);
  for (std::uint32_t f = 0; f < n; ++f) {
    ImageObservation img{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)};
    for (auto& v : img.pixels) v = static_cast<double>(std::bit_cast<float>(get_u32(in)));
    img.validate();
    images.push_back(std::move(img));
  }
  return images;
}

void write_track_csv(std::ostream& out, const GridModel& model, std::span<const std::size_t> track) {
  csv::header(out, {"frame", "visible", "row", "col"});
  for (std::size_t k = 0; k < track.size(); ++k) {
    if (track[k] == model.nva()) {
      out << k << ",0,,\n";
    } else {
      out << k << ",1," << track[k] / model.width << ',' << track[k] % model.width << '\n';
    }
  }
}

void write_zeta_csv(std::ostream& out, const EmergenceResult& result) {
  csv::header(out, {"k", "zeta", "nva_mass", "log_normalizer", "alarm"});
  for (std::size_t k = 0; k < result.zeta.size(); ++k) {
    out << k << ',' << csv::number(result.zeta[k]) << ',' << csv::number(1.0 - result.zeta[k]) << ',';
    if (k > 0) out << csv::number(result.log_normalizer[k - 1]);
    out << ',' << (result.alarm_frame && *result.alarm_frame == k ? 1 : 0) << '\n';
  }
}

}  // namespace isd::aircraft
