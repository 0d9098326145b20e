#pragma once

#include "oracles.hpp"
#include "mdkit/nn/autodiff.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <vector>

namespace mdkit::testing {

using nn::Graph;
using nn::Var;

inline VecX flat(const MatX& m) { return Eigen::Map<const VecX>(m.data(), m.size()); }

// Worst relative error between backward() and centered differences of the
// scalar built from graph variables holding `inputs`.
inline double check_inputs(const std::function<Var(Graph&, const std::vector<Var>&)>& build,
                           const std::vector<MatX>& inputs, double h = 1e-5) {
  Graph g;
  std::vector<Var> vars;
  for (const auto& m : inputs) vars.push_back(g.variable(m));
  g.backward(build(g, vars));
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const MatX& gk = g.grad(vars[k].id);
    const VecX analytic = gk.size() ? flat(gk) : VecX::Zero(inputs[k].size());
    auto f = [&](const VecX& x) {
      Graph g2;
      std::vector<Var> v2;
      for (std::size_t j = 0; j < inputs.size(); ++j) {
        v2.push_back(g2.constant(j == k ? MatX(x.reshaped(inputs[k].rows(), inputs[k].cols())) : inputs[j]));
      }
      return build(g2, v2).scalar();
    };
    worst = std::max(worst, relative_error(analytic, numeric_gradient(f, flat(inputs[k]), h)));
  }
  return worst;
}

// Same check for parameters of a store, probing at most `per_param` entries
// of each listed parameter.
inline double check_params(const std::function<Var(Graph&)>& build, nn::ParameterStore& store,
                           const std::vector<int>& ids, int per_param = 12, std::uint64_t seed = 7,
                           double h = 1e-5) {
  Graph g;
  g.backward(build(g));
  nn::Gradients grads(store);
  g.accumulate(grads);
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int id : ids) {
    MatX& value = store.value(id);
    std::vector<Eigen::Index> entries(static_cast<std::size_t>(value.size()));
    for (Eigen::Index i = 0; i < value.size(); ++i) entries[static_cast<std::size_t>(i)] = i;
    std::shuffle(entries.begin(), entries.end(), rng);
    entries.resize(std::min<std::size_t>(entries.size(), static_cast<std::size_t>(per_param)));
    VecX analytic(entries.size()), numeric(entries.size());
    for (std::size_t e = 0; e < entries.size(); ++e) {
      double& x = value.data()[entries[e]];
      const double keep = x;
      x = keep + h;
      Graph gp;
      const double fp = build(gp).scalar();
      x = keep - h;
      Graph gm;
      const double fm = build(gm).scalar();
      x = keep;
      numeric[e] = (fp - fm) / (2.0 * h);
      analytic[e] = grads.values[id].data()[entries[e]];
    }
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}

// Random projection turning a matrix output into a scalar.
inline Var project(Var out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MatX w(out.rows(), out.cols());
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
  return nn::sum(nn::mul(out, out.graph->constant(w)));
}

inline MatX random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  MatX m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

} // namespace mdkit::testing
