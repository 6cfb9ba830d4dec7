// Copyright 2026 The tierprof Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tierprof/wire.h"

#include <array>

#include "text_util.h"
#include "tierprof/error.h"

namespace tierprof {

namespace {

constexpr std::array<std::string_view, kMsgTypeCount> kNames = {
    "Register",     "RegisterAck",   "Heartbeat",  "CommissionWorkflow", "DecommissionWorkflow",
    "ClientRequest", "ClientReply", "NameLookup", "NameAnswer",         "Shutdown"};

std::string escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '\\') {
      out += "\\\\";
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

std::string unescape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\') {
      out += text[i];
      continue;
    }
    if (++i == text.size()) throw Error(ErrorCode::kProtocol, "dangling escape");
    if (text[i] == 'n') {
      out += '\n';
    } else if (text[i] == '\\') {
      out += '\\';
    } else {
      throw Error(ErrorCode::kProtocol, "bad escape");
    }
  }
  return out;
}

bool valid_key(std::string_view key) {
  return !key.empty() && key.find_first_of("=\n") == std::string_view::npos;
}

}  // namespace

std::string_view to_string(MsgType type) { return kNames[static_cast<std::size_t>(type)]; }

std::optional<MsgType> parse_msg_type(std::string_view text) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == text) return static_cast<MsgType>(i);
  }
  return std::nullopt;
}

Message& Message::set(std::string key, std::string value) {
  for (auto& [k, v] : payload) {
    if (k == key) {
      v = std::move(value);
      return *this;
    }
  }
  payload.emplace_back(std::move(key), std::move(value));
  return *this;
}

const std::string& Message::get(std::string_view key) const {
  static const std::string kEmpty;
  for (const auto& [k, v] : payload) {
    if (k == key) return v;
  }
  return kEmpty;
}

bool Message::has(std::string_view key) const {
  for (const auto& [k, v] : payload) {
    if (k == key) return true;
  }
  return false;
}

std::string encode_body(const Message& m) {
  std::string body;
  body += "msg_type=";
  body += to_string(m.type);
  body += "\nsender=";
  body += escape(m.sender);
  body += "\nseq=";
  body += std::to_string(m.seq);
  body += '\n';
  for (const auto& [key, value] : m.payload) {
    if (!valid_key(key)) throw Error(ErrorCode::kProtocol, "bad payload key '" + key + "'");
    body += "p.";
    body += key;
    body += '=';
    body += escape(value);
    body += '\n';
  }
  if (body.size() > kMaxFrameBytes) throw Error(ErrorCode::kProtocol, "message too large");
  return body;
}

Message decode_body(std::string_view body) {
  if (body.empty() || body.back() != '\n') {
    throw Error(ErrorCode::kProtocol, "body must end with a newline");
  }
  body.remove_suffix(1);
  Message m;
  int field = 0;
  for (std::string_view line : detail::split(body, '\n')) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::kProtocol, "line without '='");
    const std::string_view key = line.substr(0, eq);
    const std::string_view value = line.substr(eq + 1);
    switch (field) {
      case 0: {
        if (key != "msg_type") throw Error(ErrorCode::kProtocol, "expected msg_type");
        const auto type = parse_msg_type(value);
        if (!type) throw Error(ErrorCode::kProtocol, "unknown msg_type '" + std::string(value) + "'");
        m.type = *type;
        break;
      }
      case 1:
        if (key != "sender") throw Error(ErrorCode::kProtocol, "expected sender");
        m.sender = unescape(value);
        break;
      case 2:
        if (key != "seq") throw Error(ErrorCode::kProtocol, "expected seq");
        try {
          m.seq = detail::parse_number<std::uint64_t>(value, "seq");
        } catch (const Error& e) {
          throw Error(ErrorCode::kProtocol, e.what());
        }
        break;
      default:
        if (key.substr(0, 2) != "p." || !valid_key(key.substr(2))) {
          throw Error(ErrorCode::kProtocol, "bad payload line");
        }
        m.payload.emplace_back(std::string(key.substr(2)), unescape(value));
    }
    ++field;
  }
  if (field < 3) throw Error(ErrorCode::kProtocol, "truncated header");
  return m;
}

std::string encode_frame(const Message& message) {
  const std::string body = encode_body(message);
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string frame;
  frame.reserve(4 + body.size());
  frame += static_cast<char>((n >> 24) & 0xff);
  frame += static_cast<char>((n >> 16) & 0xff);
  frame += static_cast<char>((n >> 8) & 0xff);
  frame += static_cast<char>(n & 0xff);
  frame += body;
  return frame;
}

std::optional<Message> FrameDecoder::next() {
  if (buffered() < 4) return std::nullopt;
  const auto* p = reinterpret_cast<const unsigned char*>(buffer_.data() + offset_);
  const std::uint32_t n = (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
                          (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
  if (n > kMaxFrameBytes) throw Error(ErrorCode::kProtocol, "frame exceeds size limit");
  if (buffered() < 4 + std::size_t{n}) return std::nullopt;
  Message m = decode_body(std::string_view(buffer_).substr(offset_ + 4, n));
  offset_ += 4 + n;
  // Compact once the consumed prefix dominates the buffer.
  if (offset_ > 4096 && offset_ * 2 > buffer_.size()) {
    buffer_.erase(0, offset_);
    offset_ = 0;
  }
  return m;
}

}  // namespace tierprof
