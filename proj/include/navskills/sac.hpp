#pragma once

#include <cstring>
#include <sstream>

#include "navskills/adam.hpp"
#include "navskills/checkpoint.hpp"
#include "navskills/nets.hpp"
#include "navskills/replay.hpp"

namespace navskills {

struct SacConfig {
  double lr_actor = 1e-4;
  double lr_critic = 1e-4;
  double lr_alpha = 1e-4;
  double tau = 5e-4;
  double gamma = 0.99;
  double init_alpha = 0.2;
  double target_entropy = 0.0;  // 0 -> defaulted to -action_dim at init
  ObsEncoder obs;
};

struct SacLosses {
  double critic1 = 0.0;
  double critic2 = 0.0;
  double actor = 0.0;
  double alpha = 0.0;  // temperature loss
  double alpha_value = 0.0;
  double mean_q = 0.0;
  double mean_log_prob = 0.0;
};

// Actor, twin critics with targets, and the entropy temperature. Everything
// that sac_update touches lives here so training state can checkpoint whole.
template <typename T = float>
struct SacState {
  SacConfig cfg;
  ActorNet<T> actor;
  CriticNet<T> critic1, critic2;
  CriticNet<T> target1, target2;
  AdamState<T> opt_actor, opt_critic1, opt_critic2;
  double log_alpha = 0.0;
  double alpha_m = 0.0, alpha_v = 0.0;
  long alpha_step = 0;
  long update_count = 0;

  double alpha() const { return std::exp(log_alpha); }

  static SacState init(const NetShape& actor_shape, Rng& rng, SacConfig cfg = {}) {
    SacState s;
    if (cfg.target_entropy == 0.0)
      cfg.target_entropy = -static_cast<double>(actor_shape.action_dim);
    s.cfg = cfg;
    s.cfg.obs.with_skill = actor_shape.aux_dim > 4;
    NetShape critic_shape = actor_shape;
    critic_shape.aux_dim = actor_shape.aux_dim + actor_shape.action_dim;
    s.actor = ActorNet<T>::init(actor_shape, rng);
    s.critic1 = CriticNet<T>::init(critic_shape, rng);
    s.critic2 = CriticNet<T>::init(critic_shape, rng);
    s.target1 = s.critic1;
    s.target2 = s.critic2;
    s.opt_actor = AdamState<T>::init(s.actor.p);
    s.opt_critic1 = AdamState<T>::init(s.critic1.p);
    s.opt_critic2 = AdamState<T>::init(s.critic2.p);
    s.log_alpha = std::log(cfg.init_alpha);
    return s;
  }
};

// target <- (1-tau)*target + tau*online. tau = 1 copies exactly; the
// incremental form is a bitwise no-op when target == online.
template <typename T>
void soft_update_targets(SacState<T>& sac, double tau) {
  if (tau <= 0.0 || tau > 1.0) throw std::invalid_argument("soft_update_targets: bad tau");
  auto blend = [tau](std::vector<Tensor<T>>& target, const std::vector<Tensor<T>>& online) {
    if (tau == 1.0) {
      target = online;
      return;
    }
    for (std::size_t i = 0; i < target.size(); ++i)
      for (std::size_t j = 0; j < target[i].v.size(); ++j)
        target[i].v[j] += static_cast<T>(tau) * (online[i].v[j] - target[i].v[j]);
  };
  blend(sac.target1.p, sac.critic1.p);
  blend(sac.target2.p, sac.critic2.p);
}

namespace detail {

// Batch matrices assembled from transitions: observations for both ends of
// the step plus the stored action.
template <typename T>
struct SacBatch {
  Tensor<T> scan, aux, action;
  Tensor<T> next_scan, next_aux;
  Tensor<T> reward, not_terminal;  // (B,1); timeout is non-terminal (bootstraps)
};

template <typename T>
SacBatch<T> build_batch(const std::vector<const Transition*>& batch, const ObsEncoder& enc,
                        int n_rays, int action_dim) {
  const int B = static_cast<int>(batch.size());
  SacBatch<T> m;
  m.scan = Tensor<T>(B, n_rays);
  m.next_scan = Tensor<T>(B, n_rays);
  m.aux = Tensor<T>(B, enc.aux_dim());
  m.next_aux = Tensor<T>(B, enc.aux_dim());
  m.action = Tensor<T>(B, action_dim);
  m.reward = Tensor<T>(B, 1);
  m.not_terminal = Tensor<T>(B, 1);
  for (int r = 0; r < B; ++r) {
    const Transition& tr = *batch[r];
    if (static_cast<int>(tr.scan.size()) != n_rays ||
        static_cast<int>(tr.next_scan.size()) != n_rays)
      throw ShapeError("sac batch: scan width mismatch");
    if (static_cast<int>(tr.action.size()) != action_dim)
      throw ShapeError("sac batch: action width mismatch");
    for (int c = 0; c < n_rays; ++c) {
      m.scan.at(r, c) = static_cast<T>(tr.scan[c]);
      m.next_scan.at(r, c) = static_cast<T>(tr.next_scan[c]);
    }
    auto [gd, gb] = relative_goal(tr.pose, tr.goal);
    auto [ngd, ngb] = relative_goal(tr.next_pose, tr.goal);
    const SkillVector* sk = tr.has_skill ? &tr.skill : nullptr;
    auto a0 = enc.aux(tr.v, tr.w, gd, gb, sk);
    auto a1 = enc.aux(tr.next_v, tr.next_w, ngd, ngb, sk);
    for (int c = 0; c < enc.aux_dim(); ++c) {
      m.aux.at(r, c) = static_cast<T>(a0[c]);
      m.next_aux.at(r, c) = static_cast<T>(a1[c]);
    }
    for (int c = 0; c < action_dim; ++c) m.action.at(r, c) = static_cast<T>(tr.action[c]);
    m.reward.at(r, 0) = static_cast<T>(tr.reward);
    bool terminal = tr.done == Done::goal || tr.done == Done::collision;
    m.not_terminal.at(r, 0) = terminal ? T(0) : T(1);
  }
  return m;
}

template <typename T>
Tensor<T> normal_tensor(int rows, int cols, Rng& rng) {
  Tensor<T> t(rows, cols);
  for (auto& x : t.v) x = static_cast<T>(rng.normal());
  return t;
}

// Checkpoint scalars are byte-packed (one row of 8 byte values per double)
// so float-dtype checkpoints still round-trip them exactly.
template <typename T>
Tensor<T> pack_doubles(const std::vector<double>& xs) {
  Tensor<T> t(static_cast<int>(xs.size()), 8);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    unsigned char b[8];
    std::memcpy(b, &xs[i], 8);
    for (int j = 0; j < 8; ++j) t.at(static_cast<int>(i), j) = static_cast<T>(b[j]);
  }
  return t;
}

template <typename T>
std::vector<double> unpack_doubles(const Tensor<T>& t) {
  if (t.cols != 8) throw CheckpointError("checkpoint scalars: bad block shape");
  std::vector<double> xs(t.rows);
  for (int i = 0; i < t.rows; ++i) {
    unsigned char b[8];
    for (int j = 0; j < 8; ++j) b[j] = static_cast<unsigned char>(t.at(i, j));
    std::memcpy(&xs[i], b, 8);
  }
  return xs;
}

// y = r + gamma * (1 - terminal) * (min(Q'1, Q'2)(s', a') - alpha * logpi(a'|s'))
// with a' drawn fresh from the current actor (rng feeds the eps draw,
// row-major). No gradients are kept.
template <typename T>
Tensor<T> bellman_targets(const SacState<T>& sac, const SacBatch<T>& m, Rng& rng,
                          double* mean_q_out) {
  const NetShape& as = sac.actor.shape;
  const int B = m.scan.rows;
  const double alpha = std::exp(sac.log_alpha);
  Tape<T> tape;
  auto next_scan = tape.input(m.next_scan);
  auto next_aux = tape.input(m.next_aux);
  auto actor_vars = lift_params(tape, sac.actor.p);
  auto eps = tape.input(normal_tensor<T>(B, as.action_dim, rng));
  auto pi = actor_forward(tape, sac.actor, actor_vars, next_scan, next_aux, eps);
  auto caux = tape.concat_cols({next_aux, pi.action});
  auto t1_vars = lift_params(tape, sac.target1.p);
  auto t2_vars = lift_params(tape, sac.target2.p);
  auto q1 = critic_forward(tape, sac.target1, t1_vars, next_scan, caux);
  auto q2 = critic_forward(tape, sac.target2, t2_vars, next_scan, caux);
  auto qmin = tape.minimum(q1, q2);
  const Tensor<T>& qv = tape.val(qmin);
  const Tensor<T>& lp = tape.val(pi.log_prob);
  Tensor<T> y(B, 1);
  double mean_q = 0.0;
  for (int r = 0; r < B; ++r) {
    double soft = static_cast<double>(qv.at(r, 0)) - alpha * static_cast<double>(lp.at(r, 0));
    double target = static_cast<double>(m.reward.at(r, 0)) +
                    sac.cfg.gamma * static_cast<double>(m.not_terminal.at(r, 0)) * soft;
    y.at(r, 0) = static_cast<T>(target);
    mean_q += static_cast<double>(qv.at(r, 0));
  }
  if (mean_q_out != nullptr) *mean_q_out = mean_q / B;
  return y;
}

}  // namespace detail

// Critic regression targets for a batch, exactly as sac_update uses them.
template <typename T>
std::vector<double> sac_bellman_targets(const SacState<T>& sac,
                                        const std::vector<const Transition*>& batch, Rng& rng) {
  if (batch.empty()) throw ReplayError("sac_bellman_targets: empty batch");
  const NetShape& as = sac.actor.shape;
  auto m = detail::build_batch<T>(batch, sac.cfg.obs, as.n_rays, as.action_dim);
  Tensor<T> y = detail::bellman_targets(sac, m, rng, nullptr);
  std::vector<double> out(y.v.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(y.v[i]);
  return out;
}

// One SAC update on a sampled batch: twin-critic regression to the soft
// Bellman target (fresh next action), actor step against min-Q with entropy
// temperature, closed-form alpha gradient, then a soft target update.
template <typename T>
SacLosses sac_update(SacState<T>& sac, const std::vector<const Transition*>& batch, Rng& rng) {
  if (batch.empty()) throw ReplayError("sac_update: empty batch");
  const NetShape& as = sac.actor.shape;
  auto m = detail::build_batch<T>(batch, sac.cfg.obs, as.n_rays, as.action_dim);
  const int B = m.scan.rows;
  const double alpha = sac.alpha();

  SacLosses out;
  Tensor<T> y = detail::bellman_targets(sac, m, rng, &out.mean_q);

  // --- critic regression ---
  auto critic_step = [&](CriticNet<T>& critic, AdamState<T>& opt) {
    Tape<T> tape;
    auto scan = tape.input(m.scan);
    auto caux = tape.concat_cols({tape.input(m.aux), tape.input(m.action)});
    auto vars = lift_params(tape, critic.p);
    auto q = critic_forward(tape, critic, vars, scan, caux);
    auto loss = tape.mean_all(tape.square(tape.sub(q, tape.input(y))));
    double loss_v = static_cast<double>(tape.val(loss).at(0, 0));
    if (!std::isfinite(loss_v)) {
      std::ostringstream os;
      double mr = 0;
      for (int r = 0; r < B; ++r) mr += static_cast<double>(m.reward.at(r, 0));
      os << "sac_update: non-finite critic loss (batch " << B << ", mean reward " << mr / B
         << ", alpha " << alpha << ")";
      throw NumericError(os.str());
    }
    tape.backward(loss);
    std::vector<Tensor<T>> grads;
    grads.reserve(vars.size());
    for (auto v : vars) grads.push_back(tape.grad(v));
    AdamConfig ac;
    ac.lr = sac.cfg.lr_critic;
    adam_step(critic.p, grads, opt, ac);
    return loss_v;
  };
  out.critic1 = critic_step(sac.critic1, sac.opt_critic1);
  out.critic2 = critic_step(sac.critic2, sac.opt_critic2);

  // --- actor step against the freshly updated critics ---
  double mean_logp = 0.0;
  {
    Tape<T> tape;
    auto scan = tape.input(m.scan);
    auto aux = tape.input(m.aux);
    auto actor_vars = lift_params(tape, sac.actor.p);
    auto eps = tape.input(detail::normal_tensor<T>(B, as.action_dim, rng));
    auto pi = actor_forward(tape, sac.actor, actor_vars, scan, aux, eps);
    auto caux = tape.concat_cols({aux, pi.action});
    auto c1_vars = lift_params(tape, sac.critic1.p);
    auto c2_vars = lift_params(tape, sac.critic2.p);
    auto q1 = critic_forward(tape, sac.critic1, c1_vars, scan, caux);
    auto q2 = critic_forward(tape, sac.critic2, c2_vars, scan, caux);
    auto qmin = tape.minimum(q1, q2);
    auto loss = tape.mean_all(tape.sub(tape.scale(pi.log_prob, static_cast<T>(alpha)), qmin));
    double loss_v = static_cast<double>(tape.val(loss).at(0, 0));
    if (!std::isfinite(loss_v))
      throw NumericError("sac_update: non-finite actor loss (batch " + std::to_string(B) + ")");
    tape.backward(loss);
    std::vector<Tensor<T>> grads;
    grads.reserve(actor_vars.size());
    for (auto v : actor_vars) grads.push_back(tape.grad(v));
    AdamConfig ac;
    ac.lr = sac.cfg.lr_actor;
    adam_step(sac.actor.p, grads, sac.opt_actor, ac);
    out.actor = loss_v;
    const Tensor<T>& lp = tape.val(pi.log_prob);
    for (int r = 0; r < B; ++r) mean_logp += static_cast<double>(lp.at(r, 0));
    mean_logp /= B;
  }
  out.mean_log_prob = mean_logp;

  // --- temperature: loss = -log_alpha * mean(logpi + target_entropy) ---
  {
    double err = mean_logp + sac.cfg.target_entropy;
    out.alpha = -sac.log_alpha * err;
    double g = -err;  // d(loss)/d(log_alpha)
    ++sac.alpha_step;
    AdamConfig ac;
    ac.lr = sac.cfg.lr_alpha;
    sac.alpha_m = ac.beta1 * sac.alpha_m + (1.0 - ac.beta1) * g;
    sac.alpha_v = ac.beta2 * sac.alpha_v + (1.0 - ac.beta2) * g * g;
    double mh = sac.alpha_m / (1.0 - std::pow(ac.beta1, sac.alpha_step));
    double vh = sac.alpha_v / (1.0 - std::pow(ac.beta2, sac.alpha_step));
    sac.log_alpha -= ac.lr * mh / (std::sqrt(vh) + ac.eps);
    out.alpha_value = sac.alpha();
  }

  soft_update_targets(sac, sac.cfg.tau);
  ++sac.update_count;
  return out;
}

// Checkpoint plumbing: flat named-tensor view of the whole SacState.
template <typename T>
NamedTensorList<T> sac_named_tensors(const SacState<T>& sac) {
  NamedTensorList<T> out;
  auto add_net = [&out](const std::string& prefix, const std::vector<Tensor<T>>& p) {
    for (std::size_t i = 0; i < p.size(); ++i)
      out.emplace_back(prefix + std::to_string(i), p[i]);
  };
  add_net("actor/", sac.actor.p);
  add_net("critic1/", sac.critic1.p);
  add_net("critic2/", sac.critic2.p);
  add_net("target1/", sac.target1.p);
  add_net("target2/", sac.target2.p);
  auto add_opt = [&](const std::string& prefix, const AdamState<T>& st) {
    add_net(prefix + "m/", st.m);
    add_net(prefix + "v/", st.v);
  };
  add_opt("opt_actor/", sac.opt_actor);
  add_opt("opt_critic1/", sac.opt_critic1);
  add_opt("opt_critic2/", sac.opt_critic2);
  out.emplace_back("scalars", detail::pack_doubles<T>({
                                  sac.log_alpha,
                                  sac.alpha_m,
                                  sac.alpha_v,
                                  static_cast<double>(sac.alpha_step),
                                  static_cast<double>(sac.update_count),
                                  static_cast<double>(sac.opt_actor.step),
                                  static_cast<double>(sac.opt_critic1.step),
                                  static_cast<double>(sac.opt_critic2.step),
                              }));
  return out;
}

template <typename T>
void sac_load_tensors(SacState<T>& sac, const NamedTensorList<T>& list) {
  std::size_t idx = 0;
  auto take_net = [&](std::vector<Tensor<T>>& p) {
    for (auto& t : p) {
      if (idx >= list.size()) throw CheckpointError("sac load: tensor list too short");
      if (!t.same_shape(list[idx].second))
        throw CheckpointError("sac load: shape mismatch at " + list[idx].first);
      t = list[idx].second;
      ++idx;
    }
  };
  take_net(sac.actor.p);
  take_net(sac.critic1.p);
  take_net(sac.critic2.p);
  take_net(sac.target1.p);
  take_net(sac.target2.p);
  auto take_opt = [&](AdamState<T>& st) {
    take_net(st.m);
    take_net(st.v);
  };
  take_opt(sac.opt_actor);
  take_opt(sac.opt_critic1);
  take_opt(sac.opt_critic2);
  if (idx >= list.size()) throw CheckpointError("sac load: missing scalars");
  auto xs = detail::unpack_doubles(list[idx].second);
  if (xs.size() != 8) throw CheckpointError("sac load: bad scalar count");
  sac.log_alpha = xs[0];
  sac.alpha_m = xs[1];
  sac.alpha_v = xs[2];
  sac.alpha_step = static_cast<long>(xs[3]);
  sac.update_count = static_cast<long>(xs[4]);
  sac.opt_actor.step = static_cast<long>(xs[5]);
  sac.opt_critic1.step = static_cast<long>(xs[6]);
  sac.opt_critic2.step = static_cast<long>(xs[7]);
}

}  // namespace navskills
