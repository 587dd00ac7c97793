#include "validus/message.hpp"

namespace validus {

std::string to_string(MsgType t) {
  switch (t) {
    case MsgType::ping: return "PING";
    case MsgType::brb_send: return "BRB_SEND";
    case MsgType::brb_echo: return "BRB_ECHO";
    case MsgType::brb_ready: return "BRB_READY";
    case MsgType::slow_cast: return "SLOW_CAST";
    case MsgType::proposal: return "PROPOSAL";
    case MsgType::new_view: return "NEW_VIEW";
    case MsgType::propose: return "PROPOSE";
    case MsgType::vote_prepare: return "VOTE_PREPARE";
    case MsgType::precommit: return "PRECOMMIT";
    case MsgType::vote_precommit: return "VOTE_PRECOMMIT";
    case MsgType::commit: return "COMMIT";
    case MsgType::vote_commit: return "VOTE_COMMIT";
    case MsgType::decide_relay: return "DECIDE";
    case MsgType::bv_val: return "BV_VAL";
    case MsgType::bv_coord: return "BV_COORD";
    case MsgType::bv_aux: return "BV_AUX";
    case MsgType::stored: return "STORED";
    case MsgType::confirm: return "CONFIRM";
    case MsgType::add_share: return "ADD_SHARE";
  }
  return "UNKNOWN";
}

void put_tsig(Bytes& b, const ThresholdSig& ts) {
  put_digest(b, ts.digest);
  put_u32(b, static_cast<uint32_t>(ts.parts.size()));
  for (auto& [p, s] : ts.parts) {
    put_i32(b, p);
    put_bytes(b, s.bytes);
  }
}

void put_qc(Bytes& b, const QCData& qc) {
  put_i32(b, qc.phase);
  put_i64(b, qc.view);
  put_digest(b, qc.digest);
  put_tsig(b, qc.tsig);
}

uint32_t Msg::words() const {
  uint32_t w = 0;
  w += static_cast<uint32_t>(pairs.size());
  w += static_cast<uint32_t>(vals.size());
  if (digest) w += 1;
  if (sig) w += 1;
  if (tsig) w += 1;
  w += static_cast<uint32_t>(sigset.size());
  if (qc) w += 2;
  return w == 0 ? 1 : w;
}

Bytes Msg::bytes_for_signing() const {
  Bytes b;
  put_u8(b, static_cast<uint8_t>(type));
  put_i32(b, orig);
  put_i64(b, a);
  put_i64(b, this->b);
  put_u32(b, static_cast<uint32_t>(pairs.size()));
  for (auto& pp : pairs) {
    put_i32(b, pp.process);
    put_i32(b, pp.value);
  }
  put_u32(b, static_cast<uint32_t>(vals.size()));
  for (Value v : vals) put_i32(b, v);
  put_u8(b, digest ? 1 : 0);
  if (digest) put_digest(b, *digest);
  put_u8(b, tsig ? 1 : 0);
  if (tsig) put_tsig(b, *tsig);
  put_u32(b, static_cast<uint32_t>(sigset.size()));
  for (auto& [p, s] : sigset) {
    put_i32(b, p);
    put_bytes(b, s.bytes);
  }
  put_u8(b, qc ? 1 : 0);
  if (qc) put_qc(b, *qc);
  return b;
}

std::string Decision::display() const {
  if (kind == single) return std::to_string(value);
  std::string out;
  for (auto& pp : pairs) {
    if (!out.empty()) out += ";";
    out += "P" + std::to_string(pp.process) + ":" + std::to_string(pp.value);
  }
  return out;
}

}  // namespace validus
