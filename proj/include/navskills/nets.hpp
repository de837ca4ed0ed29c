#pragma once

#include <string>
#include <vector>

#include "navskills/rewards.hpp"
#include "navskills/rng.hpp"
#include "navskills/tape.hpp"

namespace navskills {

// Topology: scan -> conv1 -> conv2 -> fc_scan -> concat aux -> fc_merge ->
// heads. aux carries [vel, goal_polar(, skill)(, action for critics)]; the
// concatenation point after the third layer is the architectural contract.
struct NetShape {
  int n_rays = 512;
  int c1f = 32, c1k = 5, c1s = 2;
  int c2f = 16, c2k = 3, c2s = 2;
  int fc_scan = 256;
  int fc_merge = 128;
  int aux_dim = 4;
  int action_dim = 2;

  int l1() const { return (n_rays - c1k) / c1s + 1; }
  int l2() const { return (l1() - c2k) / c2s + 1; }
  int flat() const { return c2f * l2(); }
  bool operator==(const NetShape&) const = default;

  void validate() const {
    if (n_rays < c1k || l1() < c2k || fc_scan < 1 || fc_merge < 1 || aux_dim < 1 ||
        action_dim < 1)
      throw GraphError("NetShape: inconsistent dimensions");
  }
};

// Maps MDP observations onto net inputs. Scan is already normalized; goal
// distance is scaled by the scan range and skill components by the box bound
// so every aux channel is O(1).
struct ObsEncoder {
  double max_range = 6.0;
  double w_max = 0.2;
  bool with_skill = false;

  int aux_dim() const { return 4 + (with_skill ? SkillVector::dim : 0); }

  std::vector<double> aux(double v, double w, double goal_dist, double goal_bearing,
                          const SkillVector* skill = nullptr) const {
    std::vector<double> out{v, w, goal_dist / max_range, goal_bearing};
    if (with_skill) {
      if (skill == nullptr) throw NumericError("ObsEncoder: skill required");
      for (int i = 0; i < SkillVector::dim; ++i) out.push_back((*skill)[i] / w_max);
    }
    return out;
  }
};

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5*log(2*pi)
inline constexpr double kLog2 = 0.69314718055994530942;

namespace detail {

template <typename T>
Tensor<T> he_uniform(int rows, int cols, int fan_in, Rng& rng) {
  Tensor<T> t(rows, cols);
  double bound = std::sqrt(6.0 / fan_in);
  for (auto& x : t.v) x = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template <typename T>
Tensor<T> head_uniform(int rows, int cols, Rng& rng) {
  Tensor<T> t(rows, cols);
  for (auto& x : t.v) x = static_cast<T>(rng.uniform(-3e-3, 3e-3));
  return t;
}

}  // namespace detail

// Shared trunk parameters: conv1 W/b, conv2 W/b, scan fc W/b, merge fc W/b.
template <typename T>
struct TrunkParams {
  std::vector<Tensor<T>> p;  // 8 tensors in the order above

  static TrunkParams init(const NetShape& s, Rng& rng) {
    TrunkParams t;
    t.p.push_back(detail::he_uniform<T>(s.c1f, s.c1k, s.c1k, rng));
    t.p.push_back(Tensor<T>(1, s.c1f, T(0)));
    t.p.push_back(detail::he_uniform<T>(s.c2f, s.c1f * s.c2k, s.c1f * s.c2k, rng));
    t.p.push_back(Tensor<T>(1, s.c2f, T(0)));
    t.p.push_back(detail::he_uniform<T>(s.fc_scan, s.flat(), s.flat(), rng));
    t.p.push_back(Tensor<T>(1, s.fc_scan, T(0)));
    t.p.push_back(detail::he_uniform<T>(s.fc_merge, s.fc_scan + s.aux_dim,
                                        s.fc_scan + s.aux_dim, rng));
    t.p.push_back(Tensor<T>(1, s.fc_merge, T(0)));
    return t;
  }
};

template <typename T>
using TapeVar = typename Tape<T>::Var;

template <typename T>
std::vector<TapeVar<T>> lift_params(Tape<T>& tape, const std::vector<Tensor<T>>& params) {
  std::vector<TapeVar<T>> vars;
  vars.reserve(params.size());
  for (const auto& t : params) vars.push_back(tape.input(t));
  return vars;
}

template <typename T>
void check_finite(const Tape<T>& tape, TapeVar<T> v, const char* where) {
  if (!tape.val(v).all_finite())
    throw NumericError(std::string("forward: non-finite activation at ") + where);
}

// scan: (B, n_rays), aux: (B, aux_dim) -> merged feature (B, fc_merge).
// vars must hold the 8 trunk tensors (first 8 entries).
template <typename T>
TapeVar<T> trunk_forward(Tape<T>& tape, const NetShape& s,
                         const std::vector<TapeVar<T>>& vars, TapeVar<T> scan,
                         TapeVar<T> aux) {
  if (tape.val(scan).cols != s.n_rays) throw GraphError("trunk: scan width mismatch");
  if (tape.val(aux).cols != s.aux_dim) throw GraphError("trunk: aux width mismatch");
  // Finite checks run on pre-activations: relu maps NaN to 0 (comparisons
  // with NaN are false), so a post-relu check would mask bad values.
  auto z1 = tape.conv1d(scan, vars[0], vars[1], 1, s.n_rays, s.c1k, s.c1s);
  check_finite(tape, z1, "conv1");
  auto z2 = tape.conv1d(tape.relu(z1), vars[2], vars[3], s.c1f, s.l1(), s.c2k, s.c2s);
  check_finite(tape, z2, "conv2");
  auto z3 = tape.linear(tape.relu(z2), vars[4], vars[5]);
  check_finite(tape, z3, "fc_scan");
  auto merged = tape.concat_cols({tape.relu(z3), aux});
  auto z4 = tape.linear(merged, vars[6], vars[7]);
  check_finite(tape, z4, "fc_merge");
  return tape.relu(z4);
}

// Actor: trunk + mean head + log-std head. 12 tensors total.
template <typename T>
struct ActorNet {
  NetShape shape;
  std::vector<Tensor<T>> p;

  static ActorNet init(const NetShape& s, Rng& rng) {
    s.validate();
    ActorNet a;
    a.shape = s;
    a.p = TrunkParams<T>::init(s, rng).p;
    a.p.push_back(detail::head_uniform<T>(s.action_dim, s.fc_merge, rng));
    a.p.push_back(Tensor<T>(1, s.action_dim, T(0)));
    a.p.push_back(detail::head_uniform<T>(s.action_dim, s.fc_merge, rng));
    Tensor<T> log_bias(1, s.action_dim, T(-0.5));
    a.p.push_back(log_bias);
    return a;
  }
  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& t : p) n += t.size();
    return n;
  }
};

// Critic: trunk (aux includes the action) + scalar head. 10 tensors.
template <typename T>
struct CriticNet {
  NetShape shape;
  std::vector<Tensor<T>> p;

  static CriticNet init(const NetShape& s, Rng& rng) {
    s.validate();
    CriticNet c;
    c.shape = s;
    c.p = TrunkParams<T>::init(s, rng).p;
    c.p.push_back(detail::head_uniform<T>(1, s.fc_merge, rng));
    c.p.push_back(Tensor<T>(1, 1, T(0)));
    return c;
  }
  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& t : p) n += t.size();
    return n;
  }
};

template <typename T>
struct ActorGraph {
  TapeVar<T> mean;      // (B, A) pre-squash
  TapeVar<T> log_std;   // (B, A) clamped
  TapeVar<T> pre_tanh;  // (B, A) sampled u = mean + std*eps
  TapeVar<T> action;    // (B, A) in [-1,1]
  TapeVar<T> log_prob;  // (B, 1)
};

// Squashed-Gaussian actor forward. eps is the (B, A) standard-normal draw;
// pass all-zeros for the deterministic action tanh(mean).
// log p(a) = sum_dim [ -eps^2/2 - log_std - log(2pi)/2
//                      - 2*(log 2 - u - softplus(-2u)) ].
template <typename T>
ActorGraph<T> actor_forward(Tape<T>& tape, const ActorNet<T>& net,
                            const std::vector<TapeVar<T>>& vars, TapeVar<T> scan,
                            TapeVar<T> aux, TapeVar<T> eps) {
  const NetShape& s = net.shape;
  auto h = trunk_forward(tape, s, vars, scan, aux);
  ActorGraph<T> out;
  out.mean = tape.linear(h, vars[8], vars[9]);
  check_finite(tape, out.mean, "mean_head");
  out.log_std = tape.clamp_(tape.linear(h, vars[10], vars[11]), T(kLogStdMin), T(kLogStdMax));
  check_finite(tape, out.log_std, "log_std_head");
  auto std = tape.exp_(out.log_std);
  out.pre_tanh = tape.add(out.mean, tape.mul(std, eps));
  out.action = tape.tanh_(out.pre_tanh);
  auto gauss = tape.add(tape.scale(tape.square(eps), T(-0.5)),
                        tape.add_const(tape.neg(out.log_std), T(-kHalfLog2Pi)));
  auto sp = tape.softplus(tape.scale(out.pre_tanh, T(-2)));
  auto corr = tape.scale(tape.add_const(tape.add(sp, out.pre_tanh), T(-kLog2)), T(2));
  out.log_prob = tape.sum_cols(tape.add(gauss, corr));
  check_finite(tape, out.log_prob, "log_prob");
  return out;
}

// Q(s, a): action is appended to aux by the caller (aux width = shape.aux_dim).
template <typename T>
TapeVar<T> critic_forward(Tape<T>& tape, const CriticNet<T>& net,
                          const std::vector<TapeVar<T>>& vars, TapeVar<T> scan,
                          TapeVar<T> aux_with_action) {
  auto h = trunk_forward(tape, net.shape, vars, scan, aux_with_action);
  auto q = tape.linear(h, vars[8], vars[9]);
  check_finite(tape, q, "q_head");
  return q;
}

// Convenience single-state inference: returns the tanh-space action.
template <typename T>
std::vector<double> actor_act(const ActorNet<T>& net, const std::vector<double>& scan,
                              const std::vector<double>& aux, Rng* rng) {
  Tape<T> tape;
  Tensor<T> s(1, static_cast<int>(scan.size()));
  for (std::size_t i = 0; i < scan.size(); ++i) s.v[i] = static_cast<T>(scan[i]);
  Tensor<T> a(1, static_cast<int>(aux.size()));
  for (std::size_t i = 0; i < aux.size(); ++i) a.v[i] = static_cast<T>(aux[i]);
  Tensor<T> eps(1, net.shape.action_dim, T(0));
  if (rng != nullptr)
    for (auto& e : eps.v) e = static_cast<T>(rng->normal());
  auto vars = lift_params(tape, net.p);
  auto g = actor_forward(tape, net, vars, tape.input(std::move(s)), tape.input(std::move(a)),
                         tape.input(std::move(eps)));
  const Tensor<T>& act = tape.val(g.action);
  std::vector<double> out(act.v.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(act.v[i]);
  return out;
}

}  // namespace navskills
