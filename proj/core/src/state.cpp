#include "neurodiff/state.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "neurodiff/error.hpp"

namespace neurodiff {

namespace {

constexpr std::array<char, 8> kStateMagic = {'N', 'D', 'I', 'F', 'F', 'S', 'T', 'A'};
constexpr std::uint8_t kStateVersion = 1;

void write_string(std::ostream& out, std::string_view s) {
  binary_io::write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, std::string_view field) {
  const std::uint32_t n = binary_io::read_u32(in, field);
  if (n > 256) throw FormatError("checkpoint field '" + std::string(field) + "' too long");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (static_cast<std::uint32_t>(in.gcount()) != n)
    throw FormatError("checkpoint truncated while reading field '" + std::string(field) + "'");
  return s;
}

struct Header {
  std::uint64_t epoch = 0;
  std::uint64_t step = 0;
  std::vector<MLP> networks;
};

Header read_header(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != static_cast<std::streamsize>(magic.size()))
    throw FormatError("checkpoint truncated while reading field 'magic'");
  if (magic != kStateMagic) throw FormatError("checkpoint field 'magic' does not identify a solver state file");
  const std::uint8_t version = binary_io::read_u8(in, "version");
  if (version != kStateVersion)
    throw FormatError("checkpoint field 'version' is " + std::to_string(version) + ", expected 1");
  Header h;
  h.epoch = binary_io::read_u64(in, "epoch");
  h.step = binary_io::read_u64(in, "step");
  const std::uint32_t n = binary_io::read_u32(in, "network_count");
  if (n > 1024) throw FormatError("checkpoint field 'network_count' out of range");
  for (std::uint32_t i = 0; i < n; ++i) h.networks.push_back(MLP::read(in));
  return h;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

}  // namespace

std::vector<ParamRange> BundleLayout::all() const {
  std::vector<ParamRange> out = theta_ic;
  out.insert(out.end(), theta_eq.begin(), theta_eq.end());
  return out;
}

void BundleLayout::validate() const {
  const auto params = all();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamRange& p = params[i];
    if (p.name.empty()) throw Error("bundle parameter with empty name");
    if (!std::isfinite(p.lo) || !std::isfinite(p.hi) || !(p.lo <= p.hi))
      throw Error("bundle parameter '" + p.name + "' has an invalid range");
    for (std::size_t j = 0; j < i; ++j)
      if (params[j].name == p.name) throw Error("bundle parameter '" + p.name + "' declared twice");
  }
}

void write_state(const SolverState& state, std::ostream& out) {
  out.write(kStateMagic.data(), kStateMagic.size());
  binary_io::write_u8(out, kStateVersion);
  binary_io::write_u64(out, state.epoch);
  binary_io::write_u64(out, state.step);
  binary_io::write_u32(out, static_cast<std::uint32_t>(state.networks.size()));
  for (const MLP& net : state.networks) net.write(out);
  if (state.optimizer) {
    write_string(out, state.optimizer->name());
    state.optimizer->write(out);
  } else {
    write_string(out, "");
  }
  binary_io::write_u64(out, state.rng.key());
  binary_io::write_u64(out, state.rng.counter());
}

void save_state(const SolverState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open checkpoint '" + path.string() + "' for writing");
  write_state(state, out);
  out.flush();
  if (!out) throw Error("failed writing checkpoint '" + path.string() + "'");
}

void restore_state(SolverState& state, const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  Header h = read_header(in);
  const std::string name = read_string(in, "optimizer");
  if (!name.empty()) {
    if (!state.optimizer || state.optimizer->name() != name)
      throw FormatError("checkpoint optimizer '" + name + "' does not match the solver's optimizer");
    state.optimizer->read(in);
  }
  const std::uint64_t key = binary_io::read_u64(in, "rng.key");
  const std::uint64_t counter = binary_io::read_u64(in, "rng.counter");
  state.epoch = h.epoch;
  state.step = h.step;
  state.networks = std::move(h.networks);
  state.rng = Rng::from_state(key, counter);
}

std::vector<MLP> load_state_networks(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_header(in).networks;
}

}  // namespace neurodiff
