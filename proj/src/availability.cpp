#include "fedgs/availability.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace fedgs {

std::string availability_mode_name(AvailabilityMode mode) {
  switch (mode) {
    case AvailabilityMode::IDL:
      return "IDL";
    case AvailabilityMode::MDF:
      return "MDF";
    case AvailabilityMode::LDF:
      return "LDF";
    case AvailabilityMode::YMF:
      return "YMF";
    case AvailabilityMode::YC:
      return "YC";
    case AvailabilityMode::LN:
      return "LN";
    case AvailabilityMode::SLN:
      return "SLN";
  }
  return "?";
}

AvailabilityMode parse_availability_mode(const std::string& name) {
  for (AvailabilityMode m :
       {AvailabilityMode::IDL, AvailabilityMode::MDF, AvailabilityMode::LDF,
        AvailabilityMode::YMF, AvailabilityMode::YC, AvailabilityMode::LN,
        AvailabilityMode::SLN}) {
    if (availability_mode_name(m) == name) {
      return m;
    }
  }
  throw ConfigError("unknown availability mode '" + name + "'");
}

AvailabilityModel make_availability_model(AvailabilityMode mode, double beta,
                                          std::int64_t period, int num_y,
                                          std::span<const ClientProfile> profiles,
                                          std::uint64_t availability_seed) {
  if (profiles.empty()) {
    throw InvalidInputError("make_availability_model: no profiles");
  }
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw ConfigError("availability beta must be in [0,1]");
  }
  if (period < 1) {
    throw ConfigError("availability period must be >= 1");
  }
  if ((mode == AvailabilityMode::LN || mode == AvailabilityMode::SLN) &&
      beta == 1.0) {
    throw ConfigError("LN/SLN require beta < 1");
  }

  AvailabilityModel model;
  model.mode = mode;
  model.beta = beta;
  model.period = period;

  model.max_size = profiles[0].num_examples;
  model.min_size = profiles[0].num_examples;
  model.max_owned_label = 0;
  int max_class = 0;
  for (const ClientProfile& p : profiles) {
    if (p.num_examples < 1) {
      throw InvalidInputError("make_availability_model: client with no examples");
    }
    model.max_size = std::max(model.max_size, p.num_examples);
    model.min_size = std::min(model.min_size, p.num_examples);
    max_class = std::max(max_class, static_cast<int>(p.label_counts.size()));
    const std::vector<int> owned = p.labels();
    if ((mode == AvailabilityMode::YMF || mode == AvailabilityMode::YC) &&
        owned.empty()) {
      throw InvalidInputError(
          "make_availability_model: label-dependent mode needs label counts");
    }
    if (!owned.empty()) {
      model.max_owned_label = std::max(model.max_owned_label, owned.back());
    }
  }
  model.num_y = num_y > 0 ? num_y : std::max(max_class, 1);

  if (mode == AvailabilityMode::LN || mode == AvailabilityMode::SLN) {
    const double sigma = std::log(1.0 / (1.0 - beta));
    model.c.resize(profiles.size());
    for (std::size_t k = 0; k < profiles.size(); ++k) {
      Rng rng(derive_seed(availability_seed, tag("static"),
                          static_cast<std::uint64_t>(profiles[k].id)));
      model.c[k] = rng.lognormal(0.0, sigma);
    }
    model.c_max = *std::max_element(model.c.begin(), model.c.end());
  }
  return model;
}

namespace {

double phase_of(std::int64_t t, std::int64_t period) {
  return static_cast<double>(1 + (t % period)) / static_cast<double>(period);
}

}  // namespace

double active_rate(const AvailabilityModel& model, const ClientProfile& client,
                   std::int64_t t) {
  switch (model.mode) {
    case AvailabilityMode::IDL:
      return 1.0;
    case AvailabilityMode::MDF:
      return std::pow(static_cast<double>(client.num_examples), model.beta) /
             std::pow(static_cast<double>(model.max_size), model.beta);
    case AvailabilityMode::LDF:
      return std::pow(static_cast<double>(client.num_examples), -model.beta) /
             std::pow(static_cast<double>(model.min_size), -model.beta);
    case AvailabilityMode::YMF: {
      const std::vector<int> owned = client.labels();
      if (owned.empty()) {
        throw InvalidInputError("active_rate: YMF client owns no labels");
      }
      const double ratio =
          model.max_owned_label > 0
              ? static_cast<double>(owned.front()) / model.max_owned_label
              : 0.0;
      return model.beta * ratio + (1.0 - model.beta);
    }
    case AvailabilityMode::YC: {
      const double phase = phase_of(t, model.period);
      bool hit = false;
      for (int y : client.labels()) {
        const double lo = static_cast<double>(y) / model.num_y;
        const double hi = static_cast<double>(y + 1) / model.num_y;
        if (phase >= lo && phase < hi) {
          hit = true;
          break;
        }
      }
      return model.beta * (hit ? 1.0 : 0.0) + (1.0 - model.beta);
    }
    case AvailabilityMode::LN:
      return model.c[static_cast<std::size_t>(client.id)] / model.c_max;
    case AvailabilityMode::SLN: {
      const double wave =
          0.4 * std::sin(2.0 * 3.14159265358979323846 * phase_of(t, model.period)) +
          0.5;
      return model.c[static_cast<std::size_t>(client.id)] / model.c_max * wave;
    }
  }
  throw InvalidInputError("active_rate: unknown mode");
}

std::vector<int> sample_active_set(const AvailabilityModel& model,
                                   std::span<const ClientProfile> profiles,
                                   std::int64_t t,
                                   std::uint64_t availability_seed) {
  std::vector<int> active;
  for (const ClientProfile& p : profiles) {
    const double rate = active_rate(model, p, t);
    Rng rng(derive_seed(availability_seed, tag("active"),
                        static_cast<std::uint64_t>(t),
                        static_cast<std::uint64_t>(p.id)));
    if (rng.uniform01() < rate) {
      active.push_back(p.id);
    }
  }
  return active;
}

void write_availability_trace(const AvailabilityModel& model,
                              std::span<const ClientProfile> profiles,
                              std::int64_t rounds, std::uint64_t availability_seed,
                              const std::string& path) {
  std::ofstream os(path);
  if (!os) {
    throw IoError("cannot open for writing: " + path);
  }
  os << "round,client_id,active\n";
  for (std::int64_t t = 0; t < rounds; ++t) {
    const std::vector<int> active =
        sample_active_set(model, profiles, t, availability_seed);
    std::size_t pos = 0;
    for (const ClientProfile& p : profiles) {
      const bool on = pos < active.size() && active[pos] == p.id;
      if (on) {
        ++pos;
      }
      os << t << "," << p.id << "," << (on ? 1 : 0) << "\n";
    }
  }
  if (!os) {
    throw IoError("write failed: " + path);
  }
}

}  // namespace fedgs
