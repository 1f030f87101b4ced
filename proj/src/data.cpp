#include "radt/data.hpp"

#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "radt/parallel.hpp"

namespace radt {

std::string to_string(Domain domain) { return domain == Domain::Source ? "source" : "target"; }

Domain domain_from_string(const std::string& name) {
  if (name == "source") return Domain::Source;
  if (name == "target") return Domain::Target;
  throw std::invalid_argument("unknown domain tag '" + name + "'");
}

double Trajectory::total_return() const {
  double total = 0.0;
  for (const auto& step : steps) total += step.reward;
  return total;
}

std::vector<double> returns_to_go(const std::vector<Step>& steps) {
  std::vector<double> rtg(steps.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = steps.size(); i-- > 0;) {
    acc += steps[i].reward;
    rtg[i] = acc;
  }
  return rtg;
}

std::size_t Dataset::count(Domain domain) const {
  std::size_t n = 0;
  for (const auto& traj : trajectories) n += traj.domain == domain ? 1 : 0;
  return n;
}

void validate_shape(const Dataset& ds) {
  for (const auto& traj : ds.trajectories) {
    if (traj.steps.size() != static_cast<std::size_t>(ds.horizon) || traj.rtg.size() != traj.steps.size()) {
      throw ShapeError("dataset: trajectory length differs from horizon");
    }
    for (const auto& step : traj.steps) {
      if (step.state < 0 || step.state >= ds.num_states || step.action < 0 ||
          step.action >= ds.num_actions) {
        throw std::out_of_range("dataset: state or action index out of range");
      }
    }
    if (traj.final_state < 0 || traj.final_state >= ds.num_states) {
      throw std::out_of_range("dataset: final state out of range");
    }
  }
}

Trajectory sample_trajectory(const TabularMdp& mdp, const StationaryPolicy& policy, Rng& rng,
                             Domain domain) {
  Trajectory traj;
  traj.domain = domain;
  traj.steps.reserve(mdp.horizon());
  int s = static_cast<int>(rng.categorical(mdp.initial_dist()));
  for (int t = 0; t < mdp.horizon(); ++t) {
    const int a = static_cast<int>(rng.categorical(policy.row(t, s)));
    traj.steps.push_back({s, a, mdp.r(s, a)});
    s = static_cast<int>(rng.categorical(mdp.row(s, a)));
  }
  traj.final_state = s;
  traj.rtg = returns_to_go(traj.steps);
  return traj;
}

Dataset collect(const TabularMdp& mdp, const StationaryPolicy& policy, std::size_t n,
                std::uint64_t seed, Domain domain, const std::string& policy_id, int jobs) {
  policy.check_shape(mdp);
  if (n == 0) throw std::invalid_argument("collect: n must be at least 1");
  Dataset ds;
  ds.num_states = mdp.num_states();
  ds.num_actions = mdp.num_actions();
  ds.horizon = mdp.horizon();
  ds.mdp_fingerprint = fingerprint(mdp);
  ds.behavior_policy_id = policy_id;
  ds.seed = seed;
  ds.trajectories.resize(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    ds.trajectories[i] = sample_trajectory(mdp, policy, rng, domain);
  });
  return ds;
}

std::vector<SlicedWindow> consistent_return_slices(const Trajectory& traj, std::size_t k,
                                                   bool include_partial) {
  const std::size_t H = traj.steps.size();
  if (k < 1 || k > H) throw std::out_of_range("consistent_return_slices: k must be in [1, H]");
  if (traj.rtg.size() != H) throw ShapeError("consistent_return_slices: rtg length");
  const std::size_t last_start = include_partial ? H - 1 : H - k;
  std::vector<SlicedWindow> windows;
  windows.reserve(last_start + 1);
  for (std::size_t start = 0; start <= last_start; ++start) {
    const std::size_t end = std::min(start + k, H);  // exclusive
    SlicedWindow w;
    w.start = start;
    w.steps.assign(traj.steps.begin() + static_cast<std::ptrdiff_t>(start),
                   traj.steps.begin() + static_cast<std::ptrdiff_t>(end));
    w.rtg.assign(end - start, 0.0);
    w.rtg.back() = traj.rtg[end - 1];
    for (std::size_t i = w.rtg.size() - 1; i-- > 0;) w.rtg[i] = w.steps[i].reward + w.rtg[i + 1];
    windows.push_back(std::move(w));
  }
  return windows;
}

Dataset mix(const Dataset& target_ds, const Dataset& source_ds,
            std::optional<std::uint64_t> shuffle_seed) {
  if (target_ds.num_states != source_ds.num_states || target_ds.num_actions != source_ds.num_actions ||
      target_ds.horizon != source_ds.horizon) {
    throw ShapeError("mix: datasets have different shapes");
  }
  if (source_ds.empty() && !shuffle_seed) return target_ds;
  if (target_ds.empty() && !shuffle_seed) return source_ds;
  Dataset out;
  out.num_states = target_ds.num_states;
  out.num_actions = target_ds.num_actions;
  out.horizon = target_ds.horizon;
  out.mdp_fingerprint = target_ds.mdp_fingerprint + "+" + source_ds.mdp_fingerprint;
  out.behavior_policy_id = target_ds.behavior_policy_id;
  out.seed = target_ds.seed;
  out.trajectories.reserve(target_ds.size() + source_ds.size());
  out.trajectories.insert(out.trajectories.end(), target_ds.trajectories.begin(), target_ds.trajectories.end());
  out.trajectories.insert(out.trajectories.end(), source_ds.trajectories.begin(), source_ds.trajectories.end());
  nlohmann::json info = {{"target_count", target_ds.size()},
                         {"source_count", source_ds.size()},
                         {"target_fingerprint", target_ds.mdp_fingerprint},
                         {"source_fingerprint", source_ds.mdp_fingerprint}};
  if (shuffle_seed) {
    Rng rng(*shuffle_seed);
    rng.shuffle(std::span<Trajectory>(out.trajectories));
    info["shuffle_seed"] = *shuffle_seed;
  }
  out.metadata["mix"] = std::move(info);
  return out;
}

Dataset take(const Dataset& ds, std::size_t n) {
  Dataset out = ds;
  if (n < out.trajectories.size()) out.trajectories.resize(n);
  return out;
}

namespace {

nlohmann::json header_json(const Dataset& ds) {
  return {{"format", "radt-dataset"},
          {"version", kDatasetFormatVersion},
          {"num_states", ds.num_states},
          {"num_actions", ds.num_actions},
          {"horizon", ds.horizon},
          {"mdp_fingerprint", ds.mdp_fingerprint},
          {"behavior_policy_id", ds.behavior_policy_id},
          {"seed", ds.seed},
          {"num_trajectories", ds.size()},
          {"metadata", ds.metadata}};
}

nlohmann::json trajectory_json(const Trajectory& traj) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& step : traj.steps) steps.push_back({step.state, step.action, step.reward});
  return {{"steps", std::move(steps)},
          {"rtg", traj.rtg},
          {"final_state", traj.final_state},
          {"domain_tag", to_string(traj.domain)}};
}

Trajectory trajectory_from_json(const nlohmann::json& doc) {
  Trajectory traj;
  for (const auto& step : doc.at("steps")) {
    if (!step.is_array() || step.size() != 3) throw std::runtime_error("dataset: malformed step");
    traj.steps.push_back({step[0].get<int>(), step[1].get<int>(), step[2].get<double>()});
  }
  traj.rtg = doc.at("rtg").get<std::vector<double>>();
  traj.final_state = doc.at("final_state").get<int>();
  traj.domain = domain_from_string(doc.at("domain_tag").get<std::string>());
  return traj;
}

}  // namespace

std::string dataset_to_jsonl(const Dataset& ds) {
  std::string out = header_json(ds).dump();
  out += '\n';
  for (const auto& traj : ds.trajectories) {
    out += trajectory_json(traj).dump();
    out += '\n';
  }
  return out;
}

Dataset dataset_from_jsonl(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset: missing header line");
  Dataset ds;
  try {
    const auto header = nlohmann::json::parse(line);
    if (header.at("format") != "radt-dataset") throw std::runtime_error("dataset: not a radt dataset");
    if (header.at("version").get<int>() != kDatasetFormatVersion) {
      throw std::runtime_error("dataset: unsupported version");
    }
    ds.num_states = header.at("num_states").get<int>();
    ds.num_actions = header.at("num_actions").get<int>();
    ds.horizon = header.at("horizon").get<int>();
    ds.mdp_fingerprint = header.at("mdp_fingerprint").get<std::string>();
    ds.behavior_policy_id = header.at("behavior_policy_id").get<std::string>();
    ds.seed = header.at("seed").get<std::uint64_t>();
    ds.metadata = header.at("metadata");
    const auto expected = header.at("num_trajectories").get<std::size_t>();
    ds.trajectories.reserve(expected);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      ds.trajectories.push_back(trajectory_from_json(nlohmann::json::parse(line)));
    }
    if (ds.trajectories.size() != expected) {
      throw std::runtime_error("dataset: expected " + std::to_string(expected) + " trajectories, found " +
                               std::to_string(ds.trajectories.size()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("dataset: malformed file: ") + e.what());
  }
  validate_shape(ds);
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << dataset_to_jsonl(ds);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return dataset_from_jsonl(in);
}

std::optional<std::string> check_fingerprint(const Dataset& ds, const TabularMdp& mdp) {
  const auto expected = fingerprint(mdp);
  if (ds.mdp_fingerprint == expected) return std::nullopt;
  return "dataset fingerprint " + ds.mdp_fingerprint + " does not match MDP fingerprint " + expected;
}

}  // namespace radt
