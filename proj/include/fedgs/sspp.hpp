#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedgs/domain.hpp"
#include "fedgs/graph.hpp"

namespace fedgs {

// Three-party scalar product with additive masking: a commodity server hands
// out correlated masks, the two clients exchange masked vectors through the
// server, and the server combines the two shares v_1 + v_2 = A.B. Everything
// runs in-process; the transcript keeps the message structure for audits.

enum class Role { Server, ClientA, ClientB };

std::string role_name(Role role);

struct Message {
  int step = 0;  // protocol step the message belongs to
  Role sender = Role::Server;
  Role receiver = Role::Server;
  std::string name;             // quantity carried, e.g. "R_a", "u"
  std::vector<double> payload;  // single element for scalars
};

struct ProtocolTranscript {
  std::vector<Message> messages;

  const Message& find(const std::string& name, Role sender) const;
};

struct ScalarProductResult {
  double value = 0.0;
  ProtocolTranscript transcript;
};

// Runs the protocol on one vector pair. Mask scale follows the inputs
// (max(1, |A|_inf, |B|_inf)) so cancellation error stays bounded.
ScalarProductResult scalar_product_protocol(std::span<const double> A,
                                            std::span<const double> B,
                                            std::uint64_t protocol_seed);

// Re-derives the result from a transcript alone and checks the mask algebra
// (r_a + r_b = R_a.R_b and v_1 = u - R_a.B_hat + r_a) within tolerance.
// Throws invalid-input when the transcript is inconsistent.
double replay_transcript(const ProtocolTranscript& transcript);

// One message per line, for external audit tooling.
void save_transcript(const ProtocolTranscript& transcript, const std::string& path);
std::string transcript_to_text(const ProtocolTranscript& transcript);

// Pairwise dot products computed through the protocol (sub-seed per pair),
// then normalized exactly like the oracle similarity builder.
SimilarityMatrix build_similarity_via_sspp(std::span<const ClientProfile> profiles,
                                           std::uint64_t protocol_seed);

}  // namespace fedgs
