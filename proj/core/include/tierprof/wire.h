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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tierprof {

enum class MsgType : std::uint8_t {
  kRegister,
  kRegisterAck,
  kHeartbeat,
  kCommissionWorkflow,
  kDecommissionWorkflow,
  kClientRequest,
  kClientReply,
  kNameLookup,
  kNameAnswer,
  kShutdown,
};

inline constexpr std::size_t kMsgTypeCount = 10;

std::string_view to_string(MsgType type);
std::optional<MsgType> parse_msg_type(std::string_view text);

// `seq` increases strictly per (sender, msg_type); the event loop assigns it.
struct Message {
  MsgType type = MsgType::kHeartbeat;
  std::string sender;
  std::uint64_t seq = 0;
  std::vector<std::pair<std::string, std::string>> payload;

  Message& set(std::string key, std::string value);
  // Empty string when the key is absent.
  const std::string& get(std::string_view key) const;
  bool has(std::string_view key) const;
};

// Frame: 4-byte big-endian body length, then a UTF-8 body of '\n'-terminated
// "key=value" lines in the order msg_type, sender, seq, then one
// "p.<key>=<value>" line per payload entry. Values escape '\\' and '\n' with
// a backslash. Bodies above kMaxFrameBytes are a protocol error.
inline constexpr std::size_t kMaxFrameBytes = 1 << 20;

std::string encode_body(const Message& message);
Message decode_body(std::string_view body);  // throws Error(kProtocol)
std::string encode_frame(const Message& message);

// Incremental decoder for a byte stream holding consecutive frames.
class FrameDecoder {
 public:
  void append(std::string_view bytes) { buffer_.append(bytes); }
  // Next complete message, if any. Throws Error(kProtocol).
  std::optional<Message> next();
  std::size_t buffered() const { return buffer_.size() - offset_; }

 private:
  std::string buffer_;
  std::size_t offset_ = 0;
};

}  // namespace tierprof
