#pragma once
// Minimal dense tensor engine: eager forward evaluation, a reverse-mode
// tape, named learnable parameters and an Adam optimizer. Tensors are
// rank-1 or rank-2, row-major, 64-bit.

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stpudgat {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IndexError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One named learnable array. `grad` accumulates across tape backward passes
// until zero_grad().
struct Param {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;  // 1 for vectors
  std::vector<double> value;
  std::vector<double> grad;

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

class ParamStore {
 public:
  Param* create(const std::string& name, std::size_t rows, std::size_t cols);
  Param* find(const std::string& name);
  const Param* find(const std::string& name) const;
  std::span<const std::unique_ptr<Param>> all() const { return params_; }
  void zero_grad();

 private:
  std::vector<std::unique_ptr<Param>> params_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double learning_rate = 1e-3;
};

// Dense Adam over every parameter in a store. Moment slots are created
// lazily, keyed by parameter identity.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // One update from the gradients currently held in the store.
  // Throws TrainingError naming the parameter on a non-finite gradient.
  void step(ParamStore& store);

  void set_learning_rate(double lr) { cfg_.learning_rate = lr; }
  double learning_rate() const { return cfg_.learning_rate; }
  std::int64_t step_count() const { return step_count_; }

  // Checkpoint plumbing (see save_checkpoint / load_checkpoint).
  struct Slot {
    std::vector<double> m, v;
  };
  const std::vector<std::pair<std::string, Slot>>& slots() const {
    return slots_;
  }
  void import_state(std::vector<std::pair<std::string, Slot>> slots,
                    std::int64_t step_count);

 private:
  AdamConfig cfg_;
  std::int64_t step_count_ = 0;
  // Moment slots keyed by parameter name.
  std::vector<std::pair<std::string, Slot>> slots_;
};

// Reverse-mode tape. Values are computed eagerly as ops are recorded;
// backward() walks the records in reverse, accumulating gradients
// additively at fan-out and into Param::grad at the leaves.
class Tape {
 public:
  using Id = std::int32_t;

  struct Node {
    std::size_t rows, cols;
    std::vector<double> val;
    std::vector<double> grad;
    std::function<void(Tape&)> backward;  // null for constants
  };

  // --- inputs ---
  Id constant(std::vector<double> values, std::size_t rows, std::size_t cols);
  Id leaf(Param& p);  // whole parameter; backward adds into p.grad
  // Rows `indices` of `table`, stacked to (indices.size() x table.cols).
  // Backward scatters into table.grad.
  Id embedding_lookup(Param& table, std::span<const int> indices);

  // --- primitives ---
  Id matmul(Id a, Id b);
  Id add(Id a, Id b);                 // same shape
  Id add_row_bias(Id m, Id bias);     // bias (1 x c) added to every row
  Id concat_cols(Id a, Id b);         // along the last axis
  Id hadamard(Id a, Id b);            // same shape
  Id leaky_relu(Id a, double slope);
  // (n x c): each of the c columns normalized independently over the n rows.
  Id softmax_over_neighbors(Id a);
  Id dropout(Id a, double rate, bool train_mode, std::mt19937_64& rng);
  Id repeat_rows(Id row, std::size_t n);  // (1 x c) -> (n x c)
  Id scale_rows(Id m, Id col);            // row i of m times col[i], col is (n x 1)
  Id sum_rows(Id m);                      // (n x c) -> (1 x c)
  Id mean_over(std::span<const Id> ts);   // same-shape average
  // logits (1 x C) vs target class; scalar negative log-likelihood.
  Id cross_entropy(Id logits, int target);
  // Softmax of a (1 x C) node, forward values only (eval path).
  std::vector<double> softmax_values(Id logits) const;

  void backward(Id output);

  const Node& at(Id id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::span<const double> values(Id id) const { return at(id).val; }

 private:
  Node& node(Id id) { return nodes_[static_cast<std::size_t>(id)]; }
  Id push(std::size_t rows, std::size_t cols);
  static void check_same_shape(const Node& a, const Node& b, const char* op);

  // Deque so Node references stay valid while new ops are recorded.
  std::deque<Node> nodes_;
};

// Fills `values` with U(-a, a) draws.
void uniform_init(std::span<double> values, double a, std::mt19937_64& rng);
// Symmetric uniform init with a = sqrt(6 / (fan_in + fan_out)).
void glorot_init(Param& p, std::mt19937_64& rng);

// Checkpoint: version byte, parameter blobs (name, shape, little-endian
// doubles), then the Adam state.
void save_checkpoint(std::ostream& os, const ParamStore& store,
                     const Adam* adam);
void load_checkpoint(std::istream& is, ParamStore& store, Adam* adam);

}  // namespace stpudgat
