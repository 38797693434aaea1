#include "nioc/model.hpp"

namespace nioc {

std::string variant_name(Variant v) { return v == Variant::Full ? "full" : "partial"; }

Variant variant_from_name(const std::string& s) {
  if (s == "full") return Variant::Full;
  if (s == "partial") return Variant::Partial;
  throw InvalidArgument("unknown variant '" + s + "' (expected full|partial)");
}

PomdpModel strip_observation(const PomdpModel& mdl) {
  PomdpModel out = mdl;
  out.variant = Variant::Full;
  out.m = 0;
  out.w_dim = 0;
  out.h = nullptr;
  return out;
}

}  // namespace nioc
