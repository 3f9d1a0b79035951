#include "stpudgat/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

#include "stpudgat/kernels.hpp"

namespace stpudgat {

namespace ker = kernels;

namespace {
std::string shape_str(std::size_t r, std::size_t c) {
  return "(" + std::to_string(r) + "x" + std::to_string(c) + ")";
}
}  // namespace

// ---------------------------------------------------------------- ParamStore

Param* ParamStore::create(const std::string& name, std::size_t rows,
                          std::size_t cols) {
  auto p = std::make_unique<Param>();
  p->name = name;
  p->rows = rows;
  p->cols = cols;
  p->value.assign(rows * cols, 0.0);
  p->grad.assign(rows * cols, 0.0);
  params_.push_back(std::move(p));
  return params_.back().get();
}

Param* ParamStore::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

const Param* ParamStore::find(const std::string& name) const {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

// ---------------------------------------------------------------------- Adam

void Adam::step(ParamStore& store) {
  ++step_count_;
  const double bias1 = 1.0 - std::pow(cfg_.beta1, double(step_count_));
  const double bias2 = 1.0 - std::pow(cfg_.beta2, double(step_count_));
  for (auto& up : store.all()) {
    Param* p = up.get();
    for (double g : p->grad) {
      if (!std::isfinite(g)) {
        throw TrainingError("non-finite gradient in parameter '" + p->name +
                            "'");
      }
    }
    Slot* slot = nullptr;
    for (auto& [name, s] : slots_) {
      if (name == p->name) {
        slot = &s;
        break;
      }
    }
    if (!slot) {
      slots_.emplace_back(p->name, Slot{std::vector<double>(p->size(), 0.0),
                                        std::vector<double>(p->size(), 0.0)});
      slot = &slots_.back().second;
    }
    if (slot->m.size() != p->size()) {
      throw TrainingError("adam: state size mismatch for parameter '" +
                          p->name + "'");
    }
    ker::adam_update(p->value.data(), slot->m.data(), slot->v.data(),
                     p->grad.data(), p->size(), cfg_.learning_rate, cfg_.beta1,
                     cfg_.beta2, cfg_.eps, bias1, bias2);
  }
}

void Adam::import_state(std::vector<std::pair<std::string, Slot>> slots,
                        std::int64_t step_count) {
  step_count_ = step_count;
  slots_ = std::move(slots);
}

// ----------------------------------------------------------------------- Tape

Tape::Id Tape::push(std::size_t rows, std::size_t cols) {
  nodes_.push_back(Node{rows, cols, std::vector<double>(rows * cols, 0.0),
                        {}, nullptr});
  return static_cast<Id>(nodes_.size() - 1);
}

void Tape::check_same_shape(const Node& a, const Node& b, const char* op) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.rows, a.cols) + " vs " +
                     shape_str(b.rows, b.cols));
  }
}

Tape::Id Tape::constant(std::vector<double> values, std::size_t rows,
                        std::size_t cols) {
  if (values.size() != rows * cols) {
    throw ShapeError("constant: " + std::to_string(values.size()) +
                     " values for shape " + shape_str(rows, cols));
  }
  Id id = push(rows, cols);
  node(id).val = std::move(values);
  return id;
}

Tape::Id Tape::leaf(Param& p) {
  Id id = push(p.rows, p.cols);
  node(id).val = p.value;
  Param* pp = &p;
  node(id).backward = [id, pp](Tape& t) {
    const Node& n = t.node(id);
    ker::axpy(1.0, n.grad.data(), pp->grad.data(), n.grad.size());
  };
  return id;
}

Tape::Id Tape::embedding_lookup(Param& table, std::span<const int> indices) {
  const std::size_t dim = table.cols;
  for (int ix : indices) {
    if (ix < 0 || std::size_t(ix) >= table.rows) {
      throw IndexError("embedding_lookup: index " + std::to_string(ix) +
                       " out of range for table '" + table.name + "' with " +
                       std::to_string(table.rows) + " rows");
    }
  }
  Id id = push(indices.size(), dim);
  Node& n = node(id);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    std::memcpy(n.val.data() + r * dim, table.value.data() + indices[r] * dim,
                dim * sizeof(double));
  }
  Param* tp = &table;
  std::vector<int> ix(indices.begin(), indices.end());
  n.backward = [id, tp, ix = std::move(ix), dim](Tape& t) {
    const Node& out = t.node(id);
    for (std::size_t r = 0; r < ix.size(); ++r) {
      ker::axpy(1.0, out.grad.data() + r * dim,
                tp->grad.data() + std::size_t(ix[r]) * dim, dim);
    }
  };
  return id;
}

Tape::Id Tape::matmul(Id a, Id b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.cols != nb.rows) {
    throw ShapeError("matmul: inner dimensions " + shape_str(na.rows, na.cols) +
                     " vs " + shape_str(nb.rows, nb.cols));
  }
  const std::size_t m = na.rows, k = na.cols, n2 = nb.cols;
  Id id = push(m, n2);
  ker::gemm_nn(node(a).val.data(), node(b).val.data(), node(id).val.data(), m,
               k, n2);
  node(id).backward = [id, a, b, m, k, n2](Tape& t) {
    const Node& out = t.node(id);
    Node& ga = t.node(a);
    Node& gb = t.node(b);
    // dA = dC * B^T ; dB = A^T * dC
    ker::gemm_nt(out.grad.data(), gb.val.data(), ga.grad.data(), m, n2, k);
    ker::gemm_tn(ga.val.data(), out.grad.data(), gb.grad.data(), m, k, n2);
  };
  return id;
}

Tape::Id Tape::add(Id a, Id b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  check_same_shape(na, nb, "add");
  Id id = push(na.rows, na.cols);
  ker::add(na.val.data(), nb.val.data(), node(id).val.data(), na.val.size());
  node(id).backward = [id, a, b](Tape& t) {
    const Node& out = t.node(id);
    ker::axpy(1.0, out.grad.data(), t.node(a).grad.data(), out.grad.size());
    ker::axpy(1.0, out.grad.data(), t.node(b).grad.data(), out.grad.size());
  };
  return id;
}

Tape::Id Tape::add_row_bias(Id m, Id bias) {
  const Node& nm = node(m);
  const Node& nb = node(bias);
  if (nb.rows != 1 || nb.cols != nm.cols) {
    throw ShapeError("add_row_bias: matrix " + shape_str(nm.rows, nm.cols) +
                     " vs bias " + shape_str(nb.rows, nb.cols));
  }
  Id id = push(nm.rows, nm.cols);
  Node& out = node(id);
  for (std::size_t r = 0; r < nm.rows; ++r) {
    ker::add(nm.val.data() + r * nm.cols, nb.val.data(),
             out.val.data() + r * nm.cols, nm.cols);
  }
  out.backward = [id, m, bias](Tape& t) {
    const Node& o = t.node(id);
    Node& gm = t.node(m);
    Node& gb = t.node(bias);
    ker::axpy(1.0, o.grad.data(), gm.grad.data(), o.grad.size());
    for (std::size_t r = 0; r < o.rows; ++r) {
      ker::axpy(1.0, o.grad.data() + r * o.cols, gb.grad.data(), o.cols);
    }
  };
  return id;
}

Tape::Id Tape::concat_cols(Id a, Id b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.rows != nb.rows) {
    throw ShapeError("concat_cols: row counts " + shape_str(na.rows, na.cols) +
                     " vs " + shape_str(nb.rows, nb.cols));
  }
  const std::size_t ca = na.cols, cb = nb.cols;
  Id id = push(na.rows, ca + cb);
  Node& out = node(id);
  for (std::size_t r = 0; r < na.rows; ++r) {
    std::memcpy(out.val.data() + r * (ca + cb), na.val.data() + r * ca,
                ca * sizeof(double));
    std::memcpy(out.val.data() + r * (ca + cb) + ca, nb.val.data() + r * cb,
                cb * sizeof(double));
  }
  out.backward = [id, a, b, ca, cb](Tape& t) {
    const Node& o = t.node(id);
    Node& ga = t.node(a);
    Node& gb = t.node(b);
    for (std::size_t r = 0; r < o.rows; ++r) {
      ker::axpy(1.0, o.grad.data() + r * (ca + cb), ga.grad.data() + r * ca,
                ca);
      ker::axpy(1.0, o.grad.data() + r * (ca + cb) + ca,
                gb.grad.data() + r * cb, cb);
    }
  };
  return id;
}

Tape::Id Tape::hadamard(Id a, Id b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  check_same_shape(na, nb, "hadamard");
  Id id = push(na.rows, na.cols);
  ker::mul(na.val.data(), nb.val.data(), node(id).val.data(), na.val.size());
  node(id).backward = [id, a, b](Tape& t) {
    const Node& o = t.node(id);
    Node& ga = t.node(a);
    Node& gb = t.node(b);
    for (std::size_t i = 0; i < o.grad.size(); ++i) {
      ga.grad[i] += o.grad[i] * gb.val[i];
      gb.grad[i] += o.grad[i] * ga.val[i];
    }
  };
  return id;
}

Tape::Id Tape::leaky_relu(Id a, double slope) {
  const Node& na = node(a);
  Id id = push(na.rows, na.cols);
  ker::leaky_relu(na.val.data(), slope, node(id).val.data(), na.val.size());
  node(id).backward = [id, a, slope](Tape& t) {
    const Node& o = t.node(id);
    Node& ga = t.node(a);
    ker::leaky_relu_grad(ga.val.data(), slope, o.grad.data(), ga.grad.data(),
                         o.grad.size());
  };
  return id;
}

Tape::Id Tape::softmax_over_neighbors(Id a) {
  const Node& na = node(a);
  const std::size_t n = na.rows, c = na.cols;
  Id id = push(n, c);
  Node& out = node(id);
  for (std::size_t j = 0; j < c; ++j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, na.val[i * c + j]);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      out.val[i * c + j] = std::exp(na.val[i * c + j] - mx);
      z += out.val[i * c + j];
    }
    for (std::size_t i = 0; i < n; ++i) out.val[i * c + j] /= z;
  }
  out.backward = [id, a, n, c](Tape& t) {
    const Node& o = t.node(id);
    Node& ga = t.node(a);
    for (std::size_t j = 0; j < c; ++j) {
      double dotgs = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        dotgs += o.grad[i * c + j] * o.val[i * c + j];
      for (std::size_t i = 0; i < n; ++i)
        ga.grad[i * c + j] += o.val[i * c + j] * (o.grad[i * c + j] - dotgs);
    }
  };
  return id;
}

Tape::Id Tape::dropout(Id a, double rate, bool train_mode,
                       std::mt19937_64& rng) {
  if (!train_mode || rate <= 0.0) return a;
  if (rate >= 1.0) throw ShapeError("dropout: rate must be < 1");
  const Node& na = node(a);
  Id id = push(na.rows, na.cols);
  Node& out = node(id);
  const double keep = 1.0 - rate;
  std::vector<double> mask(na.val.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = u(rng) < rate ? 0.0 : 1.0 / keep;
  }
  ker::mul(na.val.data(), mask.data(), out.val.data(), mask.size());
  out.backward = [id, a, mask = std::move(mask)](Tape& t) {
    const Node& o = t.node(id);
    Node& ga = t.node(a);
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      ga.grad[i] += o.grad[i] * mask[i];
  };
  return id;
}

Tape::Id Tape::repeat_rows(Id row, std::size_t n) {
  const Node& nr = node(row);
  if (nr.rows != 1) {
    throw ShapeError("repeat_rows: expected a single row, got " +
                     shape_str(nr.rows, nr.cols));
  }
  Id id = push(n, nr.cols);
  Node& out = node(id);
  for (std::size_t r = 0; r < n; ++r) {
    std::memcpy(out.val.data() + r * nr.cols, nr.val.data(),
                nr.cols * sizeof(double));
  }
  out.backward = [id, row](Tape& t) {
    const Node& o = t.node(id);
    Node& gr = t.node(row);
    for (std::size_t r = 0; r < o.rows; ++r) {
      ker::axpy(1.0, o.grad.data() + r * o.cols, gr.grad.data(), o.cols);
    }
  };
  return id;
}

Tape::Id Tape::scale_rows(Id m, Id col) {
  const Node& nm = node(m);
  const Node& nc = node(col);
  if (nc.cols != 1 || nc.rows != nm.rows) {
    throw ShapeError("scale_rows: matrix " + shape_str(nm.rows, nm.cols) +
                     " vs column " + shape_str(nc.rows, nc.cols));
  }
  Id id = push(nm.rows, nm.cols);
  Node& out = node(id);
  for (std::size_t r = 0; r < nm.rows; ++r) {
    ker::scale(nm.val.data() + r * nm.cols, nc.val[r],
               out.val.data() + r * nm.cols, nm.cols);
  }
  out.backward = [id, m, col](Tape& t) {
    const Node& o = t.node(id);
    Node& gm = t.node(m);
    Node& gc = t.node(col);
    for (std::size_t r = 0; r < o.rows; ++r) {
      ker::axpy(gc.val[r], o.grad.data() + r * o.cols,
                gm.grad.data() + r * o.cols, o.cols);
      gc.grad[r] += ker::dot(o.grad.data() + r * o.cols,
                             gm.val.data() + r * o.cols, o.cols);
    }
  };
  return id;
}

Tape::Id Tape::sum_rows(Id m) {
  const Node& nm = node(m);
  Id id = push(1, nm.cols);
  Node& out = node(id);
  for (std::size_t r = 0; r < nm.rows; ++r) {
    ker::axpy(1.0, nm.val.data() + r * nm.cols, out.val.data(), nm.cols);
  }
  out.backward = [id, m](Tape& t) {
    const Node& o = t.node(id);
    Node& gm = t.node(m);
    for (std::size_t r = 0; r < gm.rows; ++r) {
      ker::axpy(1.0, o.grad.data(), gm.grad.data() + r * o.cols, o.cols);
    }
  };
  return id;
}

Tape::Id Tape::mean_over(std::span<const Id> ts) {
  if (ts.empty()) throw ShapeError("mean_over: empty list");
  const Node& first = node(ts[0]);
  for (Id t : ts) check_same_shape(node(t), first, "mean_over");
  Id id = push(first.rows, first.cols);
  Node& out = node(id);
  const double w = 1.0 / double(ts.size());
  for (Id t : ts) {
    ker::axpy(w, node(t).val.data(), out.val.data(), out.val.size());
  }
  std::vector<Id> inputs(ts.begin(), ts.end());
  out.backward = [id, inputs = std::move(inputs), w](Tape& t) {
    const Node& o = t.node(id);
    for (Id in : inputs) {
      ker::axpy(w, o.grad.data(), t.node(in).grad.data(), o.grad.size());
    }
  };
  return id;
}

Tape::Id Tape::cross_entropy(Id logits, int target) {
  const Node& nl = node(logits);
  if (nl.rows != 1) {
    throw ShapeError("cross_entropy: logits must be a single row, got " +
                     shape_str(nl.rows, nl.cols));
  }
  if (target < 0 || std::size_t(target) >= nl.cols) {
    throw IndexError("cross_entropy: target " + std::to_string(target) +
                     " >= class count " + std::to_string(nl.cols));
  }
  std::vector<double> probs = softmax_values(logits);
  Id id = push(1, 1);
  Node& out = node(id);
  out.val[0] = -std::log(std::max(probs[std::size_t(target)],
                                  std::numeric_limits<double>::min()));
  out.backward = [id, logits, target, probs = std::move(probs)](Tape& t) {
    const double g = t.node(id).grad[0];
    Node& gl = t.node(logits);
    for (std::size_t j = 0; j < gl.cols; ++j) {
      gl.grad[j] += g * (probs[j] - (j == std::size_t(target) ? 1.0 : 0.0));
    }
  };
  return id;
}

std::vector<double> Tape::softmax_values(Id logits) const {
  const Node& nl = at(logits);
  std::vector<double> out(nl.val.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : nl.val) mx = std::max(mx, v);
  double z = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(nl.val[i] - mx);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

void Tape::backward(Id output) {
  for (Node& n : nodes_) n.grad.assign(n.val.size(), 0.0);
  Node& out = node(output);
  if (out.val.size() != 1) {
    throw ShapeError("backward: output must be scalar");
  }
  out.grad[0] = 1.0;
  for (Id id = output; id >= 0; --id) {
    Node& n = node(id);
    if (n.backward) n.backward(*this);
  }
}

// ---------------------------------------------------------------------- init

void uniform_init(std::span<double> values, double a, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-a, a);
  for (double& v : values) v = u(rng);
}

void glorot_init(Param& p, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / double(p.rows + p.cols));
  uniform_init(p.value, a, rng);
}

// ---------------------------------------------------------------- checkpoint

namespace {
constexpr std::uint8_t kCheckpointVersion = 1;

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = (v >> (8 * i)) & 0xff;
  os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(buf[i]) << (8 * i);
  return v;
}

void write_doubles(std::ostream& os, std::span<const double> v) {
  // Assumes little-endian host (x86-64 / aarch64 Linux).
  os.write(reinterpret_cast<const char*>(v.data()),
           std::streamsize(v.size() * sizeof(double)));
}

void read_doubles(std::istream& is, std::span<double> v) {
  is.read(reinterpret_cast<char*>(v.data()),
          std::streamsize(v.size() * sizeof(double)));
}

void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), std::streamsize(s.size()));
}

std::string read_string(std::istream& is) {
  std::string s(read_u64(is), '\0');
  is.read(s.data(), std::streamsize(s.size()));
  return s;
}
}  // namespace

void save_checkpoint(std::ostream& os, const ParamStore& store,
                     const Adam* adam) {
  os.put(char(kCheckpointVersion));
  write_u64(os, store.all().size());
  for (const auto& p : store.all()) {
    write_string(os, p->name);
    write_u64(os, p->rows);
    write_u64(os, p->cols);
    write_doubles(os, p->value);
  }
  if (adam) {
    os.put(1);
    write_u64(os, std::uint64_t(adam->step_count()));
    const auto& slots = adam->slots();
    write_u64(os, slots.size());
    for (const auto& [name, slot] : slots) {
      write_string(os, name);
      write_u64(os, slot.m.size());
      write_doubles(os, slot.m);
      write_doubles(os, slot.v);
    }
  } else {
    os.put(0);
  }
}

void load_checkpoint(std::istream& is, ParamStore& store, Adam* adam) {
  const int version = is.get();
  if (version != kCheckpointVersion) {
    throw TrainingError("checkpoint: unsupported version " +
                        std::to_string(version));
  }
  const std::uint64_t count = read_u64(is);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = read_string(is);
    const std::size_t rows = read_u64(is);
    const std::size_t cols = read_u64(is);
    Param* p = store.find(name);
    if (!p) p = store.create(name, rows, cols);
    if (p->rows != rows || p->cols != cols) {
      throw TrainingError("checkpoint: shape mismatch for parameter '" + name +
                          "'");
    }
    read_doubles(is, p->value);
  }
  const int has_adam = is.get();
  if (has_adam == 1) {
    const auto step_count = std::int64_t(read_u64(is));
    const std::uint64_t nslots = read_u64(is);
    std::vector<std::pair<std::string, Adam::Slot>> slots;
    for (std::uint64_t i = 0; i < nslots; ++i) {
      const std::string name = read_string(is);
      Adam::Slot slot;
      slot.m.resize(read_u64(is));
      slot.v.resize(slot.m.size());
      read_doubles(is, slot.m);
      read_doubles(is, slot.v);
      slots.emplace_back(name, std::move(slot));
    }
    if (adam) adam->import_state(std::move(slots), step_count);
  }
  if (!is) throw TrainingError("checkpoint: truncated stream");
}

}  // namespace stpudgat
