#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedgs/domain.hpp"

namespace fedgs {

enum class AvailabilityMode { IDL, MDF, LDF, YMF, YC, LN, SLN };

std::string availability_mode_name(AvailabilityMode mode);
AvailabilityMode parse_availability_mode(const std::string& name);

// A per-round activity probability for every client. The static per-client
// draws of LN/SLN happen once at construction; everything else is a pure
// formula of the client profile and the round index.
struct AvailabilityModel {
  AvailabilityMode mode = AvailabilityMode::IDL;
  double beta = 0.0;
  std::int64_t period = 40;  // YC, SLN
  int num_y = 1;             // YC: number of label bins
  // Derived from the profiles at construction:
  std::int64_t max_size = 1;
  std::int64_t min_size = 1;
  int max_owned_label = 0;
  std::vector<double> c;  // LN/SLN static draws, indexed by client id
  double c_max = 1.0;
};

// num_y <= 0 selects the default: one bin per class seen across profiles.
AvailabilityModel make_availability_model(AvailabilityMode mode, double beta,
                                          std::int64_t period, int num_y,
                                          std::span<const ClientProfile> profiles,
                                          std::uint64_t availability_seed);

double active_rate(const AvailabilityModel& model, const ClientProfile& client,
                   std::int64_t t);

// Independent Bernoulli per client at its active_rate; the draw for client k
// at round t depends only on (availability_seed, t, k), so the trace is
// identical across samplers, runs, and evaluation order. Ascending ids.
std::vector<int> sample_active_set(const AvailabilityModel& model,
                                   std::span<const ClientProfile> profiles,
                                   std::int64_t t,
                                   std::uint64_t availability_seed);

// CSV trace (round,client_id,active) over rounds [0, T).
void write_availability_trace(const AvailabilityModel& model,
                              std::span<const ClientProfile> profiles,
                              std::int64_t rounds, std::uint64_t availability_seed,
                              const std::string& path);

}  // namespace fedgs
