#include "fsmfp/frame.hpp"

namespace fsmfp {

std::optional<FrameSubtype> subtype_from_code(unsigned code) {
  switch (code) {
    case 0: return FrameSubtype::AssociationRequest;
    case 1: return FrameSubtype::AssociationResponse;
    case 2: return FrameSubtype::ReassociationRequest;
    case 3: return FrameSubtype::ReassociationResponse;
    case 4: return FrameSubtype::ProbeRequest;
    case 5: return FrameSubtype::ProbeResponse;
    case 8: return FrameSubtype::Beacon;
    case 10: return FrameSubtype::Disassociation;
    case 11: return FrameSubtype::Authentication;
    case 12: return FrameSubtype::Deauthentication;
    case 13: return FrameSubtype::Action;
    default: return std::nullopt;
  }
}

const char* subtype_name(FrameSubtype s) {
  switch (s) {
    case FrameSubtype::AssociationRequest: return "AssociationRequest";
    case FrameSubtype::AssociationResponse: return "AssociationResponse";
    case FrameSubtype::ReassociationRequest: return "ReassociationRequest";
    case FrameSubtype::ReassociationResponse: return "ReassociationResponse";
    case FrameSubtype::ProbeRequest: return "ProbeRequest";
    case FrameSubtype::ProbeResponse: return "ProbeResponse";
    case FrameSubtype::Beacon: return "Beacon";
    case FrameSubtype::Disassociation: return "Disassociation";
    case FrameSubtype::Authentication: return "Authentication";
    case FrameSubtype::Deauthentication: return "Deauthentication";
    case FrameSubtype::Action: return "Action";
  }
  return "?";
}

std::optional<FrameSubtype> subtype_from_name(std::string_view name) {
  for (unsigned code = 0; code < 16; ++code) {
    if (auto s = subtype_from_code(code)) {
      if (name == subtype_name(*s)) return s;
    }
  }
  return std::nullopt;
}

bool subtype_carries_ies(FrameSubtype s) {
  switch (s) {
    case FrameSubtype::ProbeRequest:
    case FrameSubtype::ProbeResponse:
    case FrameSubtype::Beacon:
    case FrameSubtype::AssociationRequest:
    case FrameSubtype::AssociationResponse:
    case FrameSubtype::ReassociationRequest:
    case FrameSubtype::ReassociationResponse:
      return true;
    default:
      return false;
  }
}

}  // namespace fsmfp
