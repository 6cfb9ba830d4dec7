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

#include <gtest/gtest.h>

#include <random>

#include "tierprof/error.h"
#include "tierprof/wire.h"

namespace tierprof {
namespace {

Message sample() {
  Message m;
  m.type = MsgType::kClientRequest;
  m.sender = "client";
  m.seq = 42;
  m.set("workflow", "wm.0.0/1").set("note", "line1\nline2\\end").set("empty", "");
  return m;
}

void expect_same(const Message& a, const Message& b) {
  EXPECT_EQ(a.type, b.type);
  EXPECT_EQ(a.sender, b.sender);
  EXPECT_EQ(a.seq, b.seq);
  EXPECT_EQ(a.payload, b.payload);
}

void expect_protocol_error(std::string_view body) {
  try {
    decode_body(body);
    FAIL() << "accepted: " << body;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProtocol);
  }
}

TEST(Wire, BodyRoundTrip) {
  const Message m = sample();
  expect_same(decode_body(encode_body(m)), m);
  EXPECT_EQ(decode_body(encode_body(m)).get("note"), "line1\nline2\\end");
  EXPECT_EQ(m.get("absent"), "");
  EXPECT_FALSE(m.has("absent"));
  EXPECT_TRUE(m.has("empty"));
}

TEST(Wire, BodyFieldOrderIsFixed) {
  Message m;
  m.type = MsgType::kHeartbeat;
  m.sender = "host.0.0.0";
  m.seq = 7;
  m.set("load", "3");
  EXPECT_EQ(encode_body(m), "msg_type=Heartbeat\nsender=host.0.0.0\nseq=7\np.load=3\n");
}

TEST(Wire, FramesCarryBigEndianLength) {
  const std::string frame = encode_frame(sample());
  const std::string body = encode_body(sample());
  ASSERT_EQ(frame.size(), body.size() + 4);
  const auto len = (static_cast<std::uint32_t>(static_cast<unsigned char>(frame[0])) << 24) |
                   (static_cast<std::uint32_t>(static_cast<unsigned char>(frame[1])) << 16) |
                   (static_cast<std::uint32_t>(static_cast<unsigned char>(frame[2])) << 8) |
                   static_cast<std::uint32_t>(static_cast<unsigned char>(frame[3]));
  EXPECT_EQ(len, body.size());
}

TEST(Wire, RandomMessagesSurviveArbitraryChunking) {
  std::mt19937_64 rng(1);
  const std::string alphabet = "az=\n\\.p 0";
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Message> messages;
    std::string stream;
    for (std::size_t n = 1 + rng() % 5; n > 0; --n) {
      Message m;
      m.type = static_cast<MsgType>(rng() % kMsgTypeCount);
      m.sender = "e" + std::to_string(rng() % 100);
      m.seq = rng();
      for (std::size_t k = rng() % 4; k > 0; --k) {
        std::string value;
        for (std::size_t i = rng() % 10; i > 0; --i) value += alphabet[rng() % alphabet.size()];
        m.set("k" + std::to_string(k), value);
      }
      stream += encode_frame(m);
      messages.push_back(std::move(m));
    }
    FrameDecoder decoder;
    std::vector<Message> got;
    for (std::size_t pos = 0; pos < stream.size();) {
      const std::size_t chunk = 1 + rng() % 17;
      decoder.append(std::string_view(stream).substr(pos, chunk));
      pos += chunk;
      while (auto m = decoder.next()) got.push_back(std::move(*m));
    }
    ASSERT_EQ(got.size(), messages.size());
    for (std::size_t i = 0; i < got.size(); ++i) expect_same(got[i], messages[i]);
    EXPECT_EQ(decoder.buffered(), 0u);
  }
}

TEST(Wire, DecoderWaitsForCompleteFrames) {
  const std::string frame = encode_frame(sample());
  FrameDecoder d;
  d.append(frame.substr(0, 3));
  EXPECT_FALSE(d.next().has_value());
  d.append(frame.substr(3, 10));
  EXPECT_FALSE(d.next().has_value());
  d.append(frame.substr(13));
  EXPECT_TRUE(d.next().has_value());
}

TEST(Wire, OversizedFrameIsRejected) {
  FrameDecoder d;
  const std::uint32_t len = kMaxFrameBytes + 1;
  const char header[4] = {static_cast<char>(len >> 24), static_cast<char>(len >> 16),
                          static_cast<char>(len >> 8), static_cast<char>(len)};
  d.append(std::string_view(header, 4));
  EXPECT_THROW(d.next(), Error);
}

TEST(Wire, MalformedBodiesAreProtocolErrors) {
  expect_protocol_error("");
  expect_protocol_error("msg_type=Bogus\nsender=a\nseq=1\n");
  expect_protocol_error("sender=a\nmsg_type=Heartbeat\nseq=1\n");
  expect_protocol_error("msg_type=Heartbeat\nsender=a\nseq=x\n");
  expect_protocol_error("msg_type=Heartbeat\nsender=a\nseq=1\nq.k=v\n");
  expect_protocol_error("msg_type=Heartbeat\nsender=a\nseq=1\np.k\n");
  expect_protocol_error("msg_type=Heartbeat\nsender=a\nseq=1\np.k=bad\\q\n");
}

TEST(Wire, TypeNamesRoundTrip) {
  for (std::size_t i = 0; i < kMsgTypeCount; ++i) {
    const auto t = static_cast<MsgType>(i);
    EXPECT_EQ(parse_msg_type(to_string(t)), t);
  }
}

}  // namespace
}  // namespace tierprof
