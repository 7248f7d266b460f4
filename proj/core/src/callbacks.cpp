#include "neurodiff/callbacks.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>

#include "neurodiff/error.hpp"

namespace neurodiff {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

enum class Kind { always, every_n, after, converged, best, op_and, op_or, op_xor, op_not };

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void replace_all(std::string& s, std::string_view key, const std::string& value) {
  for (std::size_t pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size()))
    s.replace(pos, key.size(), value);
}

}  // namespace

struct Trigger::Node {
  Kind kind = Kind::always;
  std::size_t n = 0;
  double delta = 0.0;
  bool relative = false;
  std::shared_ptr<const Node> left, right;
};

Trigger Trigger::always() { return Trigger(std::make_shared<Node>()); }

Trigger Trigger::every_n_epochs(std::size_t n) {
  if (n == 0) throw Error("every_n_epochs: n must be positive");
  auto node = std::make_shared<Node>();
  node->kind = Kind::every_n;
  node->n = n;
  return Trigger(node);
}

Trigger Trigger::after_epoch(std::size_t epoch) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::after;
  node->n = epoch;
  return Trigger(node);
}

Trigger Trigger::validation_converged(double delta, std::size_t window, bool relative) {
  if (window == 0) throw Error("validation_converged: window must be positive");
  if (!(delta >= 0.0)) throw Error("validation_converged: delta must be non-negative");
  auto node = std::make_shared<Node>();
  node->kind = Kind::converged;
  node->n = window;
  node->delta = delta;
  node->relative = relative;
  return Trigger(node);
}

Trigger Trigger::best_model_updated() {
  auto node = std::make_shared<Node>();
  node->kind = Kind::best;
  return Trigger(node);
}

Trigger operator&(Trigger a, Trigger b) {
  auto node = std::make_shared<Trigger::Node>();
  node->kind = Kind::op_and;
  node->left = std::move(a.node_);
  node->right = std::move(b.node_);
  return Trigger(node);
}

Trigger operator|(Trigger a, Trigger b) {
  auto node = std::make_shared<Trigger::Node>();
  node->kind = Kind::op_or;
  node->left = std::move(a.node_);
  node->right = std::move(b.node_);
  return Trigger(node);
}

Trigger operator^(Trigger a, Trigger b) {
  auto node = std::make_shared<Trigger::Node>();
  node->kind = Kind::op_xor;
  node->left = std::move(a.node_);
  node->right = std::move(b.node_);
  return Trigger(node);
}

Trigger operator~(Trigger a) {
  auto node = std::make_shared<Trigger::Node>();
  node->kind = Kind::op_not;
  node->left = std::move(a.node_);
  return Trigger(node);
}

bool converged(const std::vector<double>& history, double delta, std::size_t window, bool relative) {
  if (history.size() < window + 1) return false;
  for (std::size_t i = history.size() - window; i < history.size(); ++i) {
    double diff = std::abs(history[i] - history[i - 1]);
    if (relative) diff /= std::abs(history[i - 1]);
    if (!(diff < delta)) return false;
  }
  return true;
}

namespace {

bool eval_node(const Trigger::Node& node, const SolverState& state) {
  switch (node.kind) {
    case Kind::always: return true;
    case Kind::every_n: return state.epoch > 0 && state.epoch % node.n == 0;
    case Kind::after: return state.epoch >= node.n;
    case Kind::converged: return converged(state.valid_history, node.delta, node.n, node.relative);
    case Kind::best: return state.best_updated;
    case Kind::op_and: return eval_node(*node.left, state) && eval_node(*node.right, state);
    case Kind::op_or: return eval_node(*node.left, state) || eval_node(*node.right, state);
    case Kind::op_xor: return eval_node(*node.left, state) != eval_node(*node.right, state);
    case Kind::op_not: return !eval_node(*node.left, state);
  }
  return false;
}

std::string describe_node(const Trigger::Node& node) {
  switch (node.kind) {
    case Kind::always: return "always";
    case Kind::every_n: return "every_n_epochs(" + std::to_string(node.n) + ")";
    case Kind::after: return "after_epoch(" + std::to_string(node.n) + ")";
    case Kind::converged:
      return "validation_converged(" + fmt_double(node.delta) + ", " + std::to_string(node.n) +
             (node.relative ? ", relative)" : ")");
    case Kind::best: return "best_model_updated";
    case Kind::op_and: return "(" + describe_node(*node.left) + " & " + describe_node(*node.right) + ")";
    case Kind::op_or: return "(" + describe_node(*node.left) + " | " + describe_node(*node.right) + ")";
    case Kind::op_xor: return "(" + describe_node(*node.left) + " ^ " + describe_node(*node.right) + ")";
    case Kind::op_not: return "~" + describe_node(*node.left);
  }
  return "?";
}

}  // namespace

bool Trigger::evaluate(const SolverState& state) const { return eval_node(*node_, state); }

std::string Trigger::describe() const { return describe_node(*node_); }

std::string format_message(const std::string& text, const SolverState& state) {
  std::string s = text;
  replace_all(s, "{epoch}", std::to_string(state.epoch));
  const double train = state.train_history.empty() ? std::nan("") : state.train_history.back();
  const double valid = state.valid_history.empty() ? std::nan("") : state.valid_history.back();
  replace_all(s, "{train_loss}", fmt_double(train));
  replace_all(s, "{valid_loss}", fmt_double(valid));
  replace_all(s, "{loss_kind}", std::string(to_string(state.loss.kind)));
  replace_all(s, "{lr}", state.optimizer ? fmt_double(state.optimizer->learning_rate()) : "nan");
  return s;
}

void apply(const Action& action, SolverState& state) {
  std::visit(overloaded{
                 [&](const actions::SetLoss& a) { state.loss = a.loss; },
                 [&](const actions::SetLearningRate& a) {
                   if (!state.optimizer) throw Error("set_learning_rate: solver has no optimizer");
                   state.optimizer->set_learning_rate(a.lr);
                 },
                 [&](const actions::EarlyStop&) { state.stop_requested = true; },
                 [&](const actions::SaveCheckpoint& a) {
                   std::string path = a.pattern;
                   replace_all(path, "{epoch}", std::to_string(state.epoch));
                   save_state(state, path);
                 },
                 [&](const actions::LogMessage& a) {
                   std::ostream& out = state.log ? *state.log : std::cerr;
                   out << format_message(a.text, state) << '\n';
                 },
                 [&](const actions::SetBatchSize& a) {
                   if (a.n == 0) throw Error("set_batch_size: n must be positive");
                   if (!state.train_generator) throw Error("set_batch_size: solver has no train generator");
                   state.train_generator = state.train_generator->resized(a.n);
                 },
                 [&](const actions::SetTrainGenerator& a) {
                   if (state.train_generator && a.generator.dim() != state.train_generator->dim())
                     throw Error("set_train_generator: generator has dim " + std::to_string(a.generator.dim()) +
                                 ", solver expects " + std::to_string(state.train_generator->dim()));
                   state.train_generator = a.generator;
                 },
             },
             action);
}

void run_callbacks(std::span<const Callback> callbacks, SolverState& state) {
  std::vector<char> fired(callbacks.size());
  for (std::size_t i = 0; i < callbacks.size(); ++i) fired[i] = callbacks[i].trigger.evaluate(state);
  for (std::size_t i = 0; i < callbacks.size(); ++i) {
    if (!fired[i]) continue;
    for (const Action& a : callbacks[i].actions) apply(a, state);
  }
}

}  // namespace neurodiff
