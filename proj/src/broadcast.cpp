#include "validus/broadcast.hpp"

namespace validus {

namespace {

Digest content_digest(Context& ctx, const Msg& wire) {
  Msg norm = wire;
  norm.type = MsgType::brb_send;
  Bytes b = norm.bytes_for_signing();
  if (wire.sig) put_bytes(b, wire.sig->bytes);
  return ctx.crypto().hash(b);
}

}  // namespace

void BrbHub::broadcast(Context& ctx, int64_t instance, Msg content) {
  content.type = MsgType::brb_send;
  content.orig = ctx.self();
  content.a = instance;
  ctx.broadcast(content);
}

std::optional<BrbDelivery> BrbHub::on_message(Context& ctx, const Envelope& env) {
  const Msg& m = env.payload;
  if (m.type != MsgType::brb_send && m.type != MsgType::brb_echo && m.type != MsgType::brb_ready)
    return std::nullopt;
  const int32_t n = ctx.sys().n;
  const int32_t t = ctx.sys().t;
  const int32_t echo_quorum = (n + t + 2) / 2;  // ceil((n+t+1)/2)

  auto& st = inst_[{m.orig, m.a}];
  if (st.delivered) return std::nullopt;
  Digest d = content_digest(ctx, m);

  auto remember = [&](const Msg& wire) {
    if (!st.contents.count(d)) st.contents[d] = wire;
  };
  auto relay = [&](MsgType type) {
    Msg out = m;
    out.type = type;
    ctx.broadcast(out);
  };

  switch (m.type) {
    case MsgType::brb_send:
      // only the origin itself may open its instance
      if (env.sender != m.orig) return std::nullopt;
      remember(m);
      if (!st.echoed) {
        st.echoed = true;
        relay(MsgType::brb_echo);
      }
      break;
    case MsgType::brb_echo:
      remember(m);
      st.echoes[d].insert(env.sender);
      if (static_cast<int32_t>(st.echoes[d].size()) >= echo_quorum && !st.readied) {
        st.readied = true;
        relay(MsgType::brb_ready);
      }
      break;
    case MsgType::brb_ready: {
      remember(m);
      st.readies[d].insert(env.sender);
      int32_t count = static_cast<int32_t>(st.readies[d].size());
      if (count >= t + 1 && !st.readied) {
        st.readied = true;
        relay(MsgType::brb_ready);
      }
      if (count >= 2 * t + 1 && !st.delivered) {
        st.delivered = true;
        Msg content = st.contents[d];
        ctx.probe("brb_deliver", m.orig, m.a);
        return BrbDelivery{m.orig, m.a, content};
      }
      break;
    }
    default:
      break;
  }
  return std::nullopt;
}

Tick SlowBroadcaster::gap(int32_t n, Proc i, Tick delta) {
  Tick g = delta;
  for (Proc k = 1; k < i; ++k) g *= n;
  return g;
}

void SlowBroadcaster::start(Context& ctx, Msg content) {
  if (active_) throw std::logic_error("slow broadcast already running");
  active_ = true;
  content_ = std::move(content);
  content_.type = MsgType::slow_cast;
  content_.orig = ctx.self();
  ctx.send(1, content_);
  Tick g = gap(ctx.sys().n, ctx.self(), ctx.net().delta);
  for (Proc j = 2; j <= ctx.sys().n; ++j)
    ctx.set_timer(g * (j - 1), tag_base_ + j);
}

bool SlowBroadcaster::on_timer(Context& ctx, int64_t tag) {
  if (!active_ || tag < tag_base_ + 2 || tag > tag_base_ + ctx.sys().n) return false;
  ctx.send(static_cast<Proc>(tag - tag_base_), content_);
  return true;
}

}  // namespace validus
