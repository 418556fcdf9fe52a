#include "privae/params.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace privae {

long ParamSet::total_size() const {
  long n = 0;
  for (const Entry& e : entries) n += e.value.size();
  return n;
}

const ad::Mat& ParamSet::at(const std::string& name) const {
  for (const Entry& e : entries) {
    if (e.name == name) return e.value;
  }
  throw std::invalid_argument("ParamSet: unknown tensor '" + name + "'");
}

ad::Mat& ParamSet::at(const std::string& name) {
  for (Entry& e : entries) {
    if (e.name == name) return e.value;
  }
  throw std::invalid_argument("ParamSet: unknown tensor '" + name + "'");
}

GradVec ParamSet::flatten() const {
  GradVec out(total_size());
  long off = 0;
  for (const Entry& e : entries) {
    const ad::Mat& m = e.value;
    for (long i = 0; i < m.rows(); ++i) {
      for (long j = 0; j < m.cols(); ++j) out[off++] = m(i, j);
    }
  }
  return out;
}

void ParamSet::unflatten(const GradVec& flat) {
  if (flat.size() != total_size()) {
    throw std::invalid_argument(
        "ParamSet::unflatten: length mismatch (" + std::to_string(flat.size()) +
        " vs " + std::to_string(total_size()) + ")");
  }
  long off = 0;
  for (Entry& e : entries) {
    ad::Mat& m = e.value;
    for (long i = 0; i < m.rows(); ++i) {
      for (long j = 0; j < m.cols(); ++j) m(i, j) = flat[off++];
    }
  }
}

std::vector<ad::Var> ParamSet::attach(ad::Tape& tape) const {
  std::vector<ad::Var> vars;
  vars.reserve(entries.size());
  for (const Entry& e : entries) vars.push_back(tape.leaf(e.value));
  return vars;
}

GradVec gradient(ad::Tape& tape, ad::Var loss,
                 std::span<const ad::Var> param_vars) {
  tape.backward(loss);
  long total = 0;
  for (const ad::Var v : param_vars) total += tape.value(v).size();
  GradVec out(total);
  long off = 0;
  for (const ad::Var v : param_vars) {
    const ad::Mat g = tape.adjoint(v);
    for (long i = 0; i < g.rows(); ++i) {
      for (long j = 0; j < g.cols(); ++j) out[off++] = g(i, j);
    }
  }
  return out;
}

std::vector<GradVec> per_sample_gradients(const ParamSet& params,
                                          const SampleLossFn& loss_fn,
                                          int batch_size) {
  if (batch_size < 1) {
    throw std::invalid_argument("per_sample_gradients: empty batch");
  }
  std::vector<GradVec> grads;
  grads.reserve(static_cast<std::size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i) {
    ad::Tape tape;
    const std::vector<ad::Var> pvars = params.attach(tape);
    const ad::Var loss = loss_fn(tape, pvars, i);
    grads.push_back(gradient(tape, loss, pvars));
  }
  return grads;
}

// --- checkpoint io ----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'P', 'R', 'I', 'V', 'A', 'E', '0', '1'};

template <typename T>
void write_le(std::ofstream& out, T v) {
  // this build targets little-endian hosts only
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in, const std::string& path, const char* what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw std::runtime_error("checkpoint '" + path + "': truncated while reading " +
                             what + " at byte offset " +
                             std::to_string(static_cast<long>(in.tellg())));
  }
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamSet& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  out.write(kMagic, sizeof(kMagic));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.entries.size()));
  for (const ParamSet::Entry& e : params.entries) {
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    const bool is_vec = e.value.cols() == 1;
    write_le<std::uint32_t>(out, is_vec ? 1u : 2u);
    write_le<std::uint64_t>(out, static_cast<std::uint64_t>(e.value.rows()));
    if (!is_vec) {
      write_le<std::uint64_t>(out, static_cast<std::uint64_t>(e.value.cols()));
    }
    for (long i = 0; i < e.value.rows(); ++i) {
      for (long j = 0; j < e.value.cols(); ++j) {
        write_le<double>(out, e.value(i, j));
      }
    }
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

ParamSet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("checkpoint '" + path +
                             "': bad magic at byte offset 0");
  }
  const auto count = read_le<std::uint32_t>(in, path, "tensor count");
  ParamSet params;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = read_le<std::uint32_t>(in, path, "name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) {
      throw std::runtime_error("checkpoint '" + path +
                               "': truncated while reading name at byte offset " +
                               std::to_string(static_cast<long>(in.tellg())));
    }
    const auto rank = read_le<std::uint32_t>(in, path, "rank");
    if (rank != 1 && rank != 2) {
      throw std::runtime_error("checkpoint '" + path + "': unsupported rank " +
                               std::to_string(rank) + " for tensor '" + name + "'");
    }
    const auto rows = read_le<std::uint64_t>(in, path, "extent");
    const std::uint64_t cols =
        rank == 2 ? read_le<std::uint64_t>(in, path, "extent") : 1;
    ad::Mat m(static_cast<long>(rows), static_cast<long>(cols));
    for (long i = 0; i < m.rows(); ++i) {
      for (long j = 0; j < m.cols(); ++j) {
        m(i, j) = read_le<double>(in, path, "payload");
      }
    }
    params.entries.push_back({std::move(name), std::move(m)});
  }
  return params;
}

}  // namespace privae
