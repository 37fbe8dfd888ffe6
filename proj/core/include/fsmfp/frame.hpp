#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fsmfp/mac.hpp"

namespace fsmfp {

/// IEEE 802.11 management frame subtypes this toolkit recognizes.
/// Values are the 4-bit subtype codes from the Frame Control field.
enum class FrameSubtype : std::uint8_t {
  AssociationRequest = 0,
  AssociationResponse = 1,
  ReassociationRequest = 2,
  ReassociationResponse = 3,
  ProbeRequest = 4,
  ProbeResponse = 5,
  Beacon = 8,
  Disassociation = 10,
  Authentication = 11,
  Deauthentication = 12,
  Action = 13,
};

std::optional<FrameSubtype> subtype_from_code(unsigned code);
const char* subtype_name(FrameSubtype s);
std::optional<FrameSubtype> subtype_from_name(std::string_view name);

/// True for subtypes whose body carries information elements we materialize
/// (probe/beacon/association family).
bool subtype_carries_ies(FrameSubtype s);

/// Tagged information element (TLV) from a management frame body.
struct InformationElement {
  std::uint8_t tag = 0;
  std::vector<std::uint8_t> body;

  bool operator==(const InformationElement&) const = default;
};

/// One parsed 802.11 management frame. Immutable after construction by
/// convention; safe to hand to parallel consumers.
struct ManagementFrame {
  double timestamp = 0.0;  // seconds, >= 0, relative after sanitize rebasing
  MacAddress src;
  MacAddress dst;
  FrameSubtype subtype = FrameSubtype::ProbeRequest;
  std::uint16_t seq_num = 0;  // 12-bit sequence field, 0..4095
  std::vector<InformationElement> ies;
  std::string capture_id;

  bool operator==(const ManagementFrame&) const = default;
};

}  // namespace fsmfp
